//! Weight-map construction from a reference field.
//!
//! The pipeline takes the magnitude of the directional first differences of
//! the reference, spreads it with a Gaussian blur, reshapes the contrast with
//! a power law and rescales the result into `[offset, 1]`:
//!
//! ```text
//! |d| -> normalize01 -> blur(sigma) -> ^gamma -> normalize01 -> offset
//! ```
//!
//! Weights depend on the reference only. Nothing here is differentiated.

use crate::error::{Error, Result};
use crate::field::{Field, GmseParams, WeightMap};

/// How samples outside the grid are obtained.
///
/// `Reflect` is used throughout the library. `Periodic` wraps both the
/// directional differences and the blur around the grid edges, which makes
/// the pipeline exactly covariant under cyclic shifts; it exists for
/// testing that property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Reflect,
    Periodic,
}

impl Boundary {
    /// Maps a possibly out-of-range index onto `0..n`.
    ///
    /// Reflection mirrors about the edge cell without repeating it
    /// (`-1 -> 1`, `n -> n - 2`) and repeats as often as needed for kernels
    /// wider than the grid.
    #[inline]
    pub fn index(self, i: isize, n: usize) -> usize {
        let n = n as isize;
        match self {
            Boundary::Periodic => i.rem_euclid(n) as usize,
            Boundary::Reflect => {
                if n == 1 {
                    return 0;
                }
                let period = 2 * (n - 1);
                let m = i.rem_euclid(period);
                (if m < n { m } else { period - m }) as usize
            }
        }
    }
}

/// A normalized, symmetric, odd-length sampled Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel1D {
    taps: Vec<f64>,
    sigma: f64,
}

impl Kernel1D {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn radius(&self) -> usize {
        self.taps.len() / 2
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Kernel length for a blur of standard deviation `sigma`: six times sigma
/// rounded half-up, plus one. Always odd. Sigmas below 0.5 give a single tap.
pub fn kernel_len(sigma: f64) -> usize {
    (sigma + 0.5).floor() as usize * 6 + 1
}

pub fn gaussian_kernel(sigma: f64) -> Result<Kernel1D> {
    check_sigma(sigma)?;
    let radius = (kernel_len(sigma) / 2) as isize;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|x| (-((x * x) as f64) / denom).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    Ok(Kernel1D { taps, sigma })
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSigma(format!("sigma must be positive, got {sigma}")))
    }
}

/// Difference with the left neighbour. Column 0 is zero.
pub fn disparity_x(field: &Field) -> Field {
    disparity_x_with(field, Boundary::Reflect)
}

/// Difference with the upper neighbour. Row 0 is zero.
pub fn disparity_y(field: &Field) -> Field {
    disparity_y_with(field, Boundary::Reflect)
}

fn disparity_x_with(field: &Field, boundary: Boundary) -> Field {
    let (h, w) = field.shape();
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        let row = field.row(r);
        for c in 0..w {
            out[r * w + c] = match (c, boundary) {
                (0, Boundary::Reflect) => 0.0,
                (0, Boundary::Periodic) => row[0] - row[w - 1],
                _ => row[c] - row[c - 1],
            };
        }
    }
    Field::from_parts(h, w, out)
}

fn disparity_y_with(field: &Field, boundary: Boundary) -> Field {
    let (h, w) = field.shape();
    let v = field.values();
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            out[r * w + c] = match (r, boundary) {
                (0, Boundary::Reflect) => 0.0,
                (0, Boundary::Periodic) => v[c] - v[(h - 1) * w + c],
                _ => v[r * w + c] - v[(r - 1) * w + c],
            };
        }
    }
    Field::from_parts(h, w, out)
}

/// Per-cell Euclidean norm of the two directional differences.
pub fn disparity_magnitude(field: &Field) -> Field {
    disparity_magnitude_with(field, Boundary::Reflect)
}

fn disparity_magnitude_with(field: &Field, boundary: Boundary) -> Field {
    let dx = disparity_x_with(field, boundary);
    let dy = disparity_y_with(field, boundary);
    let values = dx
        .values()
        .iter()
        .zip(dy.values())
        .map(|(a, b)| a.hypot(*b))
        .collect();
    Field::from_parts(field.height(), field.width(), values)
}

pub fn gaussian_blur(field: &Field, sigma: f64) -> Result<Field> {
    gaussian_blur_with(field, sigma, Boundary::Reflect)
}

/// Separable Gaussian blur: rows first, then columns.
pub fn gaussian_blur_with(field: &Field, sigma: f64, boundary: Boundary) -> Result<Field> {
    let kernel = gaussian_kernel(sigma)?;
    Ok(convolve_separable(field, &kernel, boundary))
}

fn convolve_separable(field: &Field, kernel: &Kernel1D, boundary: Boundary) -> Field {
    let (h, w) = field.shape();
    let taps = kernel.taps();
    let radius = kernel.radius() as isize;
    let src = field.values();

    let mut horizontal = vec![0.0; h * w];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        for c in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let idx = boundary.index(c as isize + k as isize - radius, w);
                acc += t * row[idx];
            }
            horizontal[r * w + c] = acc;
        }
    }

    let mut out = vec![0.0; h * w];
    for (k, &t) in taps.iter().enumerate() {
        for r in 0..h {
            let src_row = boundary.index(r as isize + k as isize - radius, h);
            let from = &horizontal[src_row * w..(src_row + 1) * w];
            let to = &mut out[r * w..(r + 1) * w];
            for (o, &v) in to.iter_mut().zip(from) {
                *o += t * v;
            }
        }
    }
    Field::from_parts(h, w, out)
}

/// Element-wise power. Inputs must be non-negative.
pub fn gamma_adjust(field: &Field, gamma: f64) -> Result<Field> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParam(format!("gamma must be positive, got {gamma}")));
    }
    if let Some((index, &value)) = field.values().iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(Error::NegativeInput { index, value });
    }
    if gamma == 1.0 {
        return Ok(field.clone());
    }
    field.map(|v| v.powf(gamma))
}

/// Min-max rescale onto `[0, 1]`. A constant field becomes all zeros.
pub fn normalize01(field: &Field) -> Field {
    let (lo, hi) = (field.min(), field.max());
    let values = if hi > lo {
        let span = hi - lo;
        field.values().iter().map(|&v| (v - lo) / span).collect()
    } else {
        vec![0.0; field.len()]
    };
    Field::from_parts(field.height(), field.width(), values)
}

const UNIT_RANGE_SLACK: f64 = 1e-12;

/// Maps `[0, 1]` affinely onto `[offset, 1]`.
pub fn apply_offset(field: &Field, offset: f64) -> Result<WeightMap> {
    if !(0.0..=1.0).contains(&offset) {
        return Err(Error::InvalidParam(format!("offset must lie in [0, 1], got {offset}")));
    }
    if let Some((index, &value)) = field
        .values()
        .iter()
        .enumerate()
        .find(|(_, &v)| !(-UNIT_RANGE_SLACK..=1.0 + UNIT_RANGE_SLACK).contains(&v))
    {
        return Err(Error::RangeError {
            index,
            value,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let scale = 1.0 - offset;
    let values = field
        .values()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * scale + offset).clamp(offset, 1.0))
        .collect();
    WeightMap::new(Field::from_parts(field.height(), field.width(), values), offset)
}

pub fn build_weight_map(reference: &Field, params: &GmseParams) -> Result<WeightMap> {
    build_weight_map_with(reference, params, Boundary::Reflect)
}

pub fn build_weight_map_with(reference: &Field, params: &GmseParams, boundary: Boundary) -> Result<WeightMap> {
    let disparity = normalize01(&disparity_magnitude_with(reference, boundary));
    let blurred = gaussian_blur_with(&disparity, params.sigma(), boundary)?;
    let shaped = gamma_adjust(&blurred, params.gamma())?;
    apply_offset(&normalize01(&shaped), params.offset())
}

/// Rectified difference of two Gaussian blurs, `|blur(small) - blur(large)|`.
///
/// Provided to contrast a conventional band-pass edge measure with
/// [`disparity_magnitude`]; it plays no part in the weight pipeline.
pub fn dog_disparity(field: &Field, sigma_small: f64, sigma_large: f64) -> Result<Field> {
    check_sigma(sigma_small)?;
    check_sigma(sigma_large)?;
    if sigma_small >= sigma_large {
        return Err(Error::InvalidSigma(format!(
            "need sigma_small < sigma_large, got {sigma_small} >= {sigma_large}"
        )));
    }
    let fine = gaussian_blur(field, sigma_small)?;
    let coarse = gaussian_blur(field, sigma_large)?;
    let values = fine
        .values()
        .iter()
        .zip(coarse.values())
        .map(|(a, b)| (a - b).abs())
        .collect();
    Ok(Field::from_parts(field.height(), field.width(), values))
}
