//! Gradient-weighted mean squared error (GMSE) for field-valued data.
//!
//! GMSE scales each cell's squared error by a weight derived from the local
//! gradient magnitude of the reference field, so that the small,
//! gradient-rich regions of a mostly flat field dominate the loss. The crate
//! provides the weight-map pipeline, the losses and their gradients, SSIM,
//! epoch schedules for the dynamic variant (DGMSE), a synthetic wake-field
//! generator, and a small training harness comparing the losses.

pub mod error;
pub mod field;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod rng;
pub mod schedule;
pub mod synthetic;
pub mod trainkit;
pub mod weighting;

pub use error::{Error, Result};
pub use field::{Field, GmseParams, WeightMap};
pub use io::{read_field, write_field, FieldFormat};
pub use loss::{gmse, gmse_batch, gmse_gradient, mse, mse_gradient, Batch, LossValue};
pub use metrics::{max_loss_rate, normalize_curve, ssim_global, ssim_windowed, LossCurve, SsimParams};
pub use schedule::{paper_dgmse, paper_gmse_baseline, Schedule};
pub use synthetic::{make_dataset, make_wake_field, Dataset, FlowCondition};
pub use weighting::build_weight_map;
pub use trainkit::{compare, train, LossKind, TrainConfig, TrainLog};
