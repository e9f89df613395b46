//! Two-dimensional scalar grids and the parameter types that travel with them.

use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

/// A validated `height × width` grid of finite values, stored row-major with
/// row 0 at the top.
#[derive(Clone, PartialEq)]
pub struct Field {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::shape("positive height and width", format!("{height}x{width}")));
        }
        if values.len() != height * width {
            return Err(Error::shape(
                format!("{} values for {height}x{width}", height * width),
                format!("{} values", values.len()),
            ));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index, value });
        }
        Ok(Field {
            height,
            width,
            values,
        })
    }

    /// A field with every cell set to `value`.
    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Field::new(height, width, vec![value; height * width])
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Field::filled(height, width, 0.0)
    }

    /// Builds a field by evaluating `f(row, col)` at every cell.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Field::new(height, width, values)
    }

    /// Internal constructor for values already known to be finite and correctly sized.
    pub(crate) fn from_parts(height: usize, width: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Field {
            height,
            width,
            values,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.width..(row + 1) * self.width]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Applies `f` to every value. Fails if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.height, self.width, self.values.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn ensure_same_shape(&self, other: &Field) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                format!("{}x{}", self.height, self.width),
                format!("{}x{}", other.height, other.width),
            ));
        }
        Ok(())
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.values.len() <= 16 {
            write!(f, "Field {}x{} {:?}", self.height, self.width, self.values)
        } else {
            write!(
                f,
                "Field {}x{} [min {}, max {}]",
                self.height,
                self.width,
                self.min(),
                self.max()
            )
        }
    }
}

/// A per-cell loss weighting in `[offset, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    field: Field,
    offset: f64,
}

impl WeightMap {
    /// Validates that every value lies in `[offset, 1]`.
    pub fn new(field: Field, offset: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&offset) {
            return Err(Error::InvalidParam(format!("offset {offset} outside [0, 1]")));
        }
        if let Some((index, &value)) = field
            .values()
            .iter()
            .enumerate()
            .find(|(_, &v)| v < offset || v > 1.0)
        {
            return Err(Error::RangeError {
                index,
                value,
                lo: offset,
                hi: 1.0,
            });
        }
        Ok(WeightMap { field, offset })
    }

    /// Every cell weighted 1, the weighting under which GMSE is plain MSE.
    pub fn ones(height: usize, width: usize) -> Result<Self> {
        WeightMap::new(Field::filled(height, width, 1.0)?, 1.0)
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn into_field(self) -> Field {
        self.field
    }
}

impl Deref for WeightMap {
    type Target = Field;

    fn deref(&self) -> &Field {
        &self.field
    }
}

/// Blur strength, shaping exponent and floor weight of the weight-map pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmseParams {
    sigma: f64,
    gamma: f64,
    offset: f64,
}

impl GmseParams {
    pub fn new(sigma: f64, gamma: f64, offset: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidSigma(format!("sigma must be positive, got {sigma}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParam(format!("gamma must be positive, got {gamma}")));
        }
        if !(0.0..=1.0).contains(&offset) {
            return Err(Error::InvalidParam(format!("offset must lie in [0, 1], got {offset}")));
        }
        Ok(GmseParams {
            sigma,
            gamma,
            offset,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

impl fmt::Display for GmseParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(sigma={}, gamma={}, offset={})", self.sigma, self.gamma, self.offset)
    }
}
