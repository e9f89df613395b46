//! Desk-scale optimization harnesses: direct pixel descent, and a small
//! conditional generator trained by backpropagation and Adam.

pub mod adam;
pub mod net;
pub mod pixel;
pub mod plot;
pub mod train;

pub use adam::{adam_step, Adam, AdamHyper, AdamState};
pub use net::{net_backward, net_forward, GeneratorNet, ParamGrads};
pub use pixel::{pixel_descent, DescentTrace, PixelDescent, StepScaling};
pub use train::{compare, train, ComparisonReport, LossKind, ReportRow, TrainConfig, TrainLog};

impl train::ComparisonReport {
    /// Line chart of the max-normalized loss curves.
    pub fn to_svg(&self) -> String {
        let labels: Vec<String> = self.rows.iter().map(|r| r.label.clone()).collect();
        plot::loss_curves_svg(&labels, &self.curves)
    }
}
