//! Plain and gradient-weighted mean squared error, their batch forms and
//! their derivatives with respect to the generated field.

use std::fmt;

use crate::error::{Error, Result};
use crate::field::{Field, GmseParams, WeightMap};
use crate::weighting::build_weight_map;

/// A non-negative, finite loss.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LossValue(f64);

impl LossValue {
    fn new(value: f64) -> Self {
        debug_assert!(value.is_finite() && value >= 0.0);
        LossValue(value)
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl From<LossValue> for f64 {
    fn from(v: LossValue) -> f64 {
        v.0
    }
}

impl fmt::Display for LossValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A non-empty sequence of equally shaped fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    fields: Vec<Field>,
}

impl Batch {
    pub fn new(fields: Vec<Field>) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::InvalidParam("batch must contain at least one field".into()))?;
        for f in &fields[1..] {
            first.ensure_same_shape(f)?;
        }
        Ok(Batch { fields })
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> (usize, usize) {
        self.fields[0].shape()
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Field> {
        self.fields.iter()
    }
}

fn weighted_sse(real: &Field, fake: &Field, weights: Option<&Field>) -> f64 {
    let r = real.values();
    let f = fake.values();
    match weights {
        Some(w) => r
            .iter()
            .zip(f)
            .zip(w.values())
            .map(|((a, b), w)| w * (a - b) * (a - b))
            .sum(),
        None => r.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum(),
    }
}

/// Mean of squared residuals over all cells.
pub fn mse(real: &Field, fake: &Field) -> Result<LossValue> {
    real.ensure_same_shape(fake)?;
    Ok(LossValue::new(weighted_sse(real, fake, None) / real.len() as f64))
}

/// Mean of weighted squared residuals over all cells.
pub fn gmse(real: &Field, fake: &Field, weights: &WeightMap) -> Result<LossValue> {
    real.ensure_same_shape(fake)?;
    real.ensure_same_shape(weights)?;
    Ok(LossValue::new(
        weighted_sse(real, fake, Some(weights.field())) / real.len() as f64,
    ))
}

fn ensure_paired(reals: &Batch, fakes: &Batch) -> Result<()> {
    if reals.len() != fakes.len() {
        return Err(Error::shape(
            format!("batch of {}", reals.len()),
            format!("batch of {}", fakes.len()),
        ));
    }
    reals.fields[0].ensure_same_shape(&fakes.fields[0])
}

/// Batch MSE: per-image spatial mean, then mean over the batch.
pub fn mse_batch(reals: &Batch, fakes: &Batch) -> Result<LossValue> {
    ensure_paired(reals, fakes)?;
    let total: f64 = reals
        .iter()
        .zip(fakes.iter())
        .map(|(r, f)| mse(r, f).map(f64::from))
        .sum::<Result<f64>>()?;
    Ok(LossValue::new(total / reals.len() as f64))
}

/// Batch GMSE with one weight map per image, built from that image's
/// reference with `params`.
pub fn gmse_batch(reals: &Batch, fakes: &Batch, params: &GmseParams) -> Result<LossValue> {
    ensure_paired(reals, fakes)?;
    let weights = reals
        .iter()
        .map(|r| build_weight_map(r, params))
        .collect::<Result<Vec<_>>>()?;
    gmse_batch_weighted(reals, fakes, &weights)
}

/// Batch GMSE with precomputed weight maps.
pub fn gmse_batch_weighted(reals: &Batch, fakes: &Batch, weights: &[WeightMap]) -> Result<LossValue> {
    ensure_paired(reals, fakes)?;
    if weights.len() != reals.len() {
        return Err(Error::shape(
            format!("{} weight maps", reals.len()),
            format!("{} weight maps", weights.len()),
        ));
    }
    let total: f64 = reals
        .iter()
        .zip(fakes.iter())
        .zip(weights)
        .map(|((r, f), w)| gmse(r, f, w).map(f64::from))
        .sum::<Result<f64>>()?;
    Ok(LossValue::new(total / reals.len() as f64))
}

fn weighted_gradient(real: &Field, fake: &Field, weights: Option<&Field>) -> Field {
    let scale = -2.0 / real.len() as f64;
    let r = real.values();
    let f = fake.values();
    let values = match weights {
        Some(w) => r
            .iter()
            .zip(f)
            .zip(w.values())
            .map(|((a, b), w)| scale * w * (a - b))
            .collect(),
        None => r.iter().zip(f).map(|(a, b)| scale * (a - b)).collect(),
    };
    Field::from_parts(real.height(), real.width(), values)
}

/// Derivative of [`gmse`] with respect to `fake`, holding the weights fixed.
pub fn gmse_gradient(real: &Field, fake: &Field, weights: &WeightMap) -> Result<Field> {
    real.ensure_same_shape(fake)?;
    real.ensure_same_shape(weights)?;
    Ok(weighted_gradient(real, fake, Some(weights.field())))
}

/// Derivative of [`mse`] with respect to `fake`.
pub fn mse_gradient(real: &Field, fake: &Field) -> Result<Field> {
    real.ensure_same_shape(fake)?;
    Ok(weighted_gradient(real, fake, None))
}
