//! Direct gradient descent on the cells of a candidate field.
//!
//! With no network in the way, every cell is its own parameter, so this
//! isolates what the loss weighting does to the optimization path.

use crate::error::{Error, Result};
use crate::field::{Field, WeightMap};
use crate::loss::{gmse, gmse_gradient, mse, mse_gradient};
use crate::metrics::{ssim_global, LossCurve, SsimParams};
use crate::rng::SeedStream;
use crate::weighting::build_weight_map;

use super::train::LossKind;

/// How the raw loss gradient is turned into a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepScaling {
    /// `x -= step_size * grad`.
    #[default]
    Plain,
    /// Divides weighted gradients by the mean weight, so the average
    /// per-cell step matches unweighted MSE and the weighting only
    /// redistributes it. Identical to `Plain` for MSE.
    MeanWeight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PixelDescent {
    pub loss: LossKind,
    pub steps: usize,
    pub step_size: f64,
    pub scaling: StepScaling,
}

/// Per-step records of a descent run. Entry `k` is measured before step `k`;
/// the final entry is measured after the last step.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentTrace {
    pub loss: LossCurve,
    pub ssim: Vec<f64>,
    pub candidate: Field,
}

impl PixelDescent {
    pub fn new(loss: LossKind, steps: usize, step_size: f64) -> Self {
        PixelDescent {
            loss,
            steps,
            step_size,
            scaling: StepScaling::Plain,
        }
    }

    /// Starts from uniform noise in `[0, 1)` drawn from `seed`.
    pub fn run(&self, reference: &Field, seed: u64) -> Result<DescentTrace> {
        let mut rng = SeedStream::new(seed);
        let (h, w) = reference.shape();
        let initial = Field::from_fn(h, w, |_, _| rng.next_f64())?;
        self.run_from(reference, initial)
    }

    pub fn run_from(&self, reference: &Field, initial: Field) -> Result<DescentTrace> {
        if self.steps == 0 {
            return Err(Error::Config("pixel descent needs at least one step".into()));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {}", self.step_size)));
        }
        reference.ensure_same_shape(&initial)?;
        let schedule = self.loss.schedule();
        let ssim_params = SsimParams::default();

        let mut stage = None;
        let mut weights: Option<WeightMap> = None;
        let mut candidate = initial;
        let mut losses = Vec::with_capacity(self.steps + 1);
        let mut ssim = Vec::with_capacity(self.steps + 1);

        for step in 0..=self.steps {
            if let Some(s) = &schedule {
                let idx = s.stage_index(step);
                if stage != Some(idx) {
                    weights = Some(build_weight_map(reference, &s.resolve(step))?);
                    stage = Some(idx);
                }
            }
            let loss = match &weights {
                Some(wm) => gmse(reference, &candidate, wm)?,
                None => mse(reference, &candidate)?,
            };
            losses.push(loss.get());
            ssim.push(ssim_global(reference, &candidate, &ssim_params)?);
            if step == self.steps {
                break;
            }
            let (grad, scale) = match &weights {
                Some(wm) => {
                    let scale = match self.scaling {
                        StepScaling::Plain => 1.0,
                        StepScaling::MeanWeight => 1.0 / wm.mean(),
                    };
                    (gmse_gradient(reference, &candidate, wm)?, scale)
                }
                None => (mse_gradient(reference, &candidate)?, 1.0),
            };
            let step_size = self.step_size * scale;
            let next: Vec<f64> = candidate
                .values()
                .iter()
                .zip(grad.values())
                .map(|(x, g)| (x - step_size * g).clamp(0.0, 1.0))
                .collect();
            candidate = Field::new(reference.height(), reference.width(), next)?;
        }
        Ok(DescentTrace {
            loss: LossCurve::new(losses)?,
            ssim,
            candidate,
        })
    }
}

/// Plain descent from seeded noise; returns the loss and SSIM trajectories.
pub fn pixel_descent(
    reference: &Field,
    loss: &LossKind,
    steps: usize,
    step_size: f64,
    seed: u64,
) -> Result<(LossCurve, Vec<f64>)> {
    let trace = PixelDescent::new(loss.clone(), steps, step_size).run(reference, seed)?;
    Ok((trace.loss, trace.ssim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::paper_gmse_baseline;

    fn reference() -> Field {
        Field::from_fn(16, 16, |r, c| if r + c > 14 { 0.9 } else { 0.2 + 0.01 * r as f64 }).unwrap()
    }

    #[test]
    fn starting_at_reference_stays_there() {
        let r = reference();
        for loss in [LossKind::Mse, LossKind::Gmse(paper_gmse_baseline())] {
            let t = PixelDescent::new(loss, 5, 0.5).run_from(&r, r.clone()).unwrap();
            assert!(t.loss.values().iter().all(|&l| l == 0.0));
            assert_eq!(t.candidate, r);
        }
    }

    #[test]
    fn trajectory_lengths() {
        let (loss, ssim) = pixel_descent(&reference(), &LossKind::Mse, 7, 0.5, 1).unwrap();
        assert_eq!(loss.len(), 8);
        assert_eq!(ssim.len(), 8);
    }

    #[test]
    fn rejects_bad_arguments() {
        let r = reference();
        assert!(PixelDescent::new(LossKind::Mse, 0, 0.5).run(&r, 0).is_err());
        assert!(PixelDescent::new(LossKind::Mse, 3, 0.0).run(&r, 0).is_err());
    }

    #[test]
    fn mean_weight_scaling_is_neutral_for_mse() {
        let r = reference();
        let mut d = PixelDescent::new(LossKind::Mse, 20, 5.0);
        let plain = d.run(&r, 2).unwrap();
        d.scaling = StepScaling::MeanWeight;
        assert_eq!(plain, d.run(&r, 2).unwrap());
    }
}
