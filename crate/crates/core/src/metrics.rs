//! Structural similarity and loss-curve statistics.

use crate::error::{Error, Result};
use crate::field::Field;

/// Dynamic range and stabilizing constants for SSIM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    dynamic_range: f64,
    k1: f64,
    k2: f64,
}

impl SsimParams {
    pub fn new(dynamic_range: f64, k1: f64, k2: f64) -> Result<Self> {
        for (name, v) in [("dynamic range", dynamic_range), ("k1", k1), ("k2", k2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParam(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(SsimParams { dynamic_range, k1, k2 })
    }

    pub fn dynamic_range(&self) -> f64 {
        self.dynamic_range
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }
}

impl Default for SsimParams {
    /// `L = 1`, `k1 = 0.01`, `k2 = 0.03`.
    fn default() -> Self {
        SsimParams {
            dynamic_range: 1.0,
            k1: 0.01,
            k2: 0.03,
        }
    }
}

/// `(c1, c2) = ((k1 L)^2, (k2 L)^2)`.
pub fn ssim_constants(params: &SsimParams) -> (f64, f64) {
    let c1 = params.k1 * params.dynamic_range;
    let c2 = params.k2 * params.dynamic_range;
    (c1 * c1, c2 * c2)
}

struct Moments {
    mean_x: f64,
    mean_y: f64,
    var_x: f64,
    var_y: f64,
    cov: f64,
}

fn moments(x: impl Iterator<Item = (f64, f64)> + Clone) -> Moments {
    let mut n = 0usize;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (a, b) in x.clone() {
        sx += a;
        sy += b;
        n += 1;
    }
    let n = n as f64;
    let (mean_x, mean_y) = (sx / n, sy / n);
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for (a, b) in x {
        let (da, db) = (a - mean_x, b - mean_y);
        vx += da * da;
        vy += db * db;
        cxy += da * db;
    }
    Moments {
        mean_x,
        mean_y,
        var_x: vx / n,
        var_y: vy / n,
        cov: cxy / n,
    }
}

fn ssim_from_moments(m: &Moments, c1: f64, c2: f64) -> f64 {
    let luminance_num = 2.0 * m.mean_x * m.mean_y + c1;
    let luminance_den = m.mean_x * m.mean_x + m.mean_y * m.mean_y + c1;
    let structure_num = 2.0 * m.cov + c2;
    let structure_den = m.var_x + m.var_y + c2;
    (luminance_num * structure_num) / (luminance_den * structure_den)
}

fn check_pair(x: &Field, y: &Field) -> Result<()> {
    x.ensure_same_shape(y)?;
    if x.len() < 2 {
        return Err(Error::TooSmall(format!("SSIM needs at least 2 cells, got {}", x.len())));
    }
    Ok(())
}

/// SSIM with means, population variances and covariance taken over the
/// whole field as a single window.
pub fn ssim_global(x: &Field, y: &Field, params: &SsimParams) -> Result<f64> {
    check_pair(x, y)?;
    let (c1, c2) = ssim_constants(params);
    let pairs = x.values().iter().copied().zip(y.values().iter().copied());
    Ok(ssim_from_moments(&moments(pairs), c1, c2))
}

/// Side of the square window used by [`ssim_windowed`].
pub const SSIM_WINDOW: usize = 11;

/// Mean SSIM over every fully contained `11 × 11` uniform window (clipped to
/// the field size for smaller fields).
pub fn ssim_windowed(x: &Field, y: &Field, params: &SsimParams) -> Result<f64> {
    check_pair(x, y)?;
    let (c1, c2) = ssim_constants(params);
    let (h, w) = x.shape();
    let (wh, ww) = (SSIM_WINDOW.min(h), SSIM_WINDOW.min(w));
    let (xv, yv) = (x.values(), y.values());
    let mut total = 0.0;
    let mut count = 0usize;
    for top in 0..=h - wh {
        for left in 0..=w - ww {
            let cells = (top..top + wh).flat_map(|r| (left..left + ww).map(move |c| r * w + c));
            let pairs = cells.map(|i| (xv[i], yv[i]));
            total += ssim_from_moments(&moments(pairs), c1, c2);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Per-epoch loss values.
#[derive(Debug, Clone, PartialEq)]
pub struct LossCurve {
    values: Vec<f64>,
}

impl LossCurve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::RangeError {
                index,
                value,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        Ok(LossCurve { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Divides every value by the curve maximum.
pub fn normalize_curve(curve: &LossCurve) -> Result<LossCurve> {
    let max = curve.max();
    if max <= 0.0 {
        return Err(Error::DegenerateCurve);
    }
    Ok(LossCurve {
        values: curve.values.iter().map(|v| v / max).collect(),
    })
}

/// Most negative epoch-to-epoch change of the max-normalized curve.
pub fn max_loss_rate(curve: &LossCurve) -> Result<f64> {
    if curve.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: curve.len(),
        });
    }
    let normalized = normalize_curve(curve)?;
    Ok(normalized
        .values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min))
}
