//! Deterministic wake-like fields indexed by flow speed and angle.
//!
//! Each field is a velocity-magnitude-like map in `[0, 1]`: a uniform
//! freestream scaled by speed, an elliptical body at the centre held at
//! zero, a thin boundary layer around the body and a widening wake behind
//! it that carries smoothed pseudo-turbulent fluctuations. This is not a
//! flow solver. It reproduces the property the weighted losses care about:
//! strong gradients confined to a small part of an otherwise flat field.

use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::io::{read_field, write_atomic, write_field, FieldFormat};
use crate::rng::{derive_seed, SeedStream};
use crate::weighting::gaussian_blur;

pub const SPEED_RANGE: (f64, f64) = (0.1, 5.0);
pub const ANGLE_RANGE: (f64, f64) = (0.0, 60.0);
pub const MIN_SIDE: usize = 16;

// body semi-axes in normalized [-1, 1] coordinates
const BODY_A: f64 = 0.24;
const BODY_B: f64 = 0.09;
const BOUNDARY_LAYER: f64 = 0.12;
const FREESTREAM: f64 = 0.9;
const WAKE_SPREAD: f64 = 0.22;
const WAKE_DEFICIT: f64 = 0.75;
const TURBULENCE: f64 = 0.35;
const EDDY_SIGMA: f64 = 1.2;

/// Flow speed in m/s and incidence angle in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowCondition {
    speed: f64,
    angle: f64,
}

impl FlowCondition {
    pub fn new(speed: f64, angle: f64) -> Result<Self> {
        // index 0 is speed, 1 is angle
        for (index, value, (lo, hi)) in [(0, speed, SPEED_RANGE), (1, angle, ANGLE_RANGE)] {
            if !(lo..=hi).contains(&value) {
                return Err(Error::RangeError { index, value, lo, hi });
            }
        }
        Ok(FlowCondition { speed, angle })
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// `(speed / 5, angle / 60)`, the network input encoding.
    pub fn normalized(&self) -> [f64; 2] {
        [self.speed / SPEED_RANGE.1, self.angle / ANGLE_RANGE.1]
    }
}

pub fn make_wake_field(height: usize, width: usize, condition: FlowCondition, seed: u64) -> Result<Field> {
    if height < MIN_SIDE || width < MIN_SIDE {
        return Err(Error::TooSmall(format!(
            "synthetic fields need at least {MIN_SIDE}x{MIN_SIDE}, got {height}x{width}"
        )));
    }
    let level = condition.speed / SPEED_RANGE.1;
    let theta = condition.angle.to_radians();
    let (sin_t, cos_t) = theta.sin_cos();
    // half-width of the body seen across the flow direction
    let cross_half = ((BODY_A * sin_t).powi(2) + (BODY_B * cos_t).powi(2)).sqrt();

    let mut noise_stream = SeedStream::new(seed);
    let noise: Vec<f64> = (0..height * width).map(|_| noise_stream.normal()).collect();
    let eddies = gaussian_blur(&Field::from_parts(height, width, noise), EDDY_SIGMA)?;
    let eddy_scale = {
        let m = eddies.mean();
        let var = eddies.values().iter().map(|v| (v - m) * (v - m)).sum::<f64>() / eddies.len() as f64;
        1.0 / var.sqrt().max(1e-12)
    };

    let mut values = Vec::with_capacity(height * width);
    for r in 0..height {
        let y = (r as f64 + 0.5) / height as f64 * 2.0 - 1.0;
        for c in 0..width {
            let x = (c as f64 + 0.5) / width as f64 * 2.0 - 1.0;
            let radial = ((x / BODY_A).powi(2) + (y / BODY_B).powi(2)).sqrt();
            if radial <= 1.0 {
                values.push(0.0);
                continue;
            }
            // boundary layer: zero at the surface, freestream a few body-thicknesses away
            let gap = (radial - 1.0) * BODY_B;
            let boundary = 1.0 - (-gap / (BOUNDARY_LAYER * BODY_B)).exp();

            // rotated coordinates: `along` points downstream, `across` normal to the flow
            let along = x * cos_t + y * sin_t;
            let across = -x * sin_t + y * cos_t;
            let envelope = if along > 0.0 {
                let half = cross_half + WAKE_SPREAD * along;
                let onset = 1.0 - (-along / BODY_A * 3.0).exp();
                onset * (-(across * across) / (2.0 * half * half)).exp() * cross_half / half
            } else {
                0.0
            };
            let eddy = eddies.values()[r * width + c] * eddy_scale;
            let speed = FREESTREAM * level * boundary * (1.0 - WAKE_DEFICIT * envelope)
                + TURBULENCE * level * envelope * eddy;
            values.push(speed.clamp(0.0, 1.0));
        }
    }
    Field::new(height, width, values)
}

/// One generated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DataItem {
    pub condition: FlowCondition,
    pub field: Field,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    items: Vec<DataItem>,
    seed: u64,
    height: usize,
    width: usize,
}

/// Seed and condition of item `index` in a dataset generated from `seed`.
pub fn item_spec(seed: u64, index: usize) -> (FlowCondition, u64) {
    let item_seed = derive_seed(seed, index as u64);
    let mut stream = SeedStream::new(item_seed ^ 0xC0FF_EE00_D15E_A5E5);
    let speed = stream.uniform(SPEED_RANGE.0, SPEED_RANGE.1);
    let angle = stream.uniform(ANGLE_RANGE.0, ANGLE_RANGE.1);
    (
        FlowCondition::new(speed, angle).expect("sampled inside the ranges"),
        item_seed,
    )
}

pub fn make_dataset(n: usize, height: usize, width: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidParam("dataset needs at least one item".into()));
    }
    let items = (0..n)
        .into_par_iter()
        .map(|i| {
            let (condition, item_seed) = item_spec(seed, i);
            make_wake_field(height, width, condition, item_seed).map(|field| DataItem {
                condition,
                field,
                seed: item_seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        items,
        seed,
        height,
        width,
    })
}

impl Dataset {
    pub fn from_items(items: Vec<DataItem>, seed: u64) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::InvalidParam("dataset needs at least one item".into()))?;
        let (height, width) = first.field.shape();
        for item in &items {
            first.field.ensure_same_shape(&item.field)?;
        }
        Ok(Dataset {
            items,
            seed,
            height,
            width,
        })
    }

    pub fn items(&self) -> &[DataItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Deterministic split: the last `round(n * validation_fraction)` items
    /// (at least one when `n >= 2`) form the validation set.
    pub fn split(&self, validation_fraction: f64) -> Result<(Vec<usize>, Vec<usize>)> {
        if !(0.0..1.0).contains(&validation_fraction) {
            return Err(Error::Config(format!(
                "validation fraction must lie in [0, 1), got {validation_fraction}"
            )));
        }
        let n = self.items.len();
        let mut n_val = (n as f64 * validation_fraction).round() as usize;
        if validation_fraction > 0.0 && n >= 2 {
            n_val = n_val.max(1);
        }
        let n_val = n_val.min(n - 1);
        let cut = n - n_val;
        Ok(((0..cut).collect(), (cut..n).collect()))
    }

    /// Writes `field_NNNNN.f32bin` files plus `manifest.csv` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifest = String::from("index,speed,angle,filename,item_seed\n");
        for (i, item) in self.items.iter().enumerate() {
            let name = format!("field_{i:05}.f32bin");
            write_field(&item.field, dir.join(&name), FieldFormat::F32Bin)?;
            manifest.push_str(&format!(
                "{i},{},{},{name},{}\n",
                item.condition.speed, item.condition.angle, item.seed
            ));
        }
        write_atomic(dir.join("manifest.csv"), manifest.as_bytes())
    }

    /// Reads a directory produced by [`Dataset::write_dir`]. Field values
    /// come back at `f32` precision.
    pub fn read_dir(dir: impl AsRef<Path>, seed: u64) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join("manifest.csv");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut items = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Format {
                path: path.clone(),
                location: format!("line {}", i + 1),
                message: msg.to_string(),
            };
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(bad("expected 5 columns"));
            }
            let speed: f64 = cols[1].parse().map_err(|_| bad("bad speed"))?;
            let angle: f64 = cols[2].parse().map_err(|_| bad("bad angle"))?;
            let item_seed: u64 = cols[4].parse().map_err(|_| bad("bad item seed"))?;
            let condition = FlowCondition::new(speed, angle).map_err(|e| bad(&e.to_string()))?;
            let field = read_field(dir.join(cols[3]), FieldFormat::F32Bin)?;
            items.push(DataItem {
                condition,
                field,
                seed: item_seed,
            });
        }
        if items.is_empty() {
            return Err(Error::Format {
                path,
                location: "line 2".into(),
                message: "manifest lists no items".into(),
            });
        }
        Dataset::from_items(items, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cond(speed: f64, angle: f64) -> FlowCondition {
        FlowCondition::new(speed, angle).unwrap()
    }

    #[test]
    fn deterministic() {
        let a = make_wake_field(32, 48, cond(2.5, 20.0), 9).unwrap();
        let b = make_wake_field(32, 48, cond(2.5, 20.0), 9).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn faster_flow_has_higher_mean() {
        let slow = make_wake_field(64, 64, cond(0.1, 30.0), 4).unwrap();
        let fast = make_wake_field(64, 64, cond(5.0, 30.0), 4).unwrap();
        assert!(fast.mean() > slow.mean());
    }

    #[test]
    fn body_is_zero_and_values_bounded() {
        let f = make_wake_field(64, 64, cond(4.0, 45.0), 1).unwrap();
        assert_eq!(f.get(32, 32), 0.0);
        assert_eq!(f.get(31, 31), 0.0);
        assert!(f.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(FlowCondition::new(0.05, 10.0), Err(Error::RangeError { index: 0, .. })));
        assert!(FlowCondition::new(1.0, 61.0).is_err());
        assert!(make_wake_field(8, 64, cond(1.0, 0.0), 0).is_err());
    }

    #[test]
    fn dataset_conditions_in_range() {
        let d = make_dataset(50, 16, 16, 42).unwrap();
        for item in d.items() {
            assert!((0.1..=5.0).contains(&item.condition.speed()));
            assert!((0.0..=60.0).contains(&item.condition.angle()));
        }
        assert!(make_dataset(0, 16, 16, 42).is_err());
    }

    #[test]
    fn split_shapes() {
        let d = make_dataset(10, 16, 16, 1).unwrap();
        let (train, val) = d.split(0.2).unwrap();
        assert_eq!(train, (0..8).collect::<Vec<_>>());
        assert_eq!(val, vec![8, 9]);
        let one = make_dataset(1, 16, 16, 1).unwrap();
        assert_eq!(one.split(0.2).unwrap(), (vec![0], vec![]));
    }

    #[test]
    fn directory_round_trip() {
        let d = make_dataset(3, 16, 20, 5).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        d.write_dir(tmp.path()).unwrap();
        let back = Dataset::read_dir(tmp.path(), 5).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in d.items().iter().zip(back.items()) {
            assert_eq!(a.condition, b.condition);
            assert_eq!(a.seed, b.seed);
            for (x, y) in a.field.values().iter().zip(b.field.values()) {
                assert_eq!(*x as f32, *y as f32);
            }
        }
    }
}
