//! Supervised generator training under MSE, GMSE or a GMSE schedule.

use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Field, GmseParams, WeightMap};
use crate::loss::{gmse, gmse_gradient, mse, mse_gradient};
use crate::metrics::{max_loss_rate, normalize_curve, ssim_global, LossCurve, SsimParams};
use crate::rng::derive_seed;
use crate::schedule::{paper_dgmse, paper_gmse_baseline, Schedule};
use crate::synthetic::Dataset;
use crate::weighting::{build_weight_map, normalize01};

use super::adam::{Adam, AdamHyper};
use super::net::GeneratorNet;

/// Which loss drives training.
#[derive(Debug, Clone, PartialEq)]
pub enum LossKind {
    Mse,
    Gmse(GmseParams),
    Dgmse(Schedule),
}

impl LossKind {
    /// GMSE with the `(10, 1.0, 0.2)` baseline parameters.
    pub fn gmse_baseline() -> Self {
        LossKind::Gmse(paper_gmse_baseline())
    }

    /// GMSE following the built-in dynamic schedule.
    pub fn dgmse_default() -> Self {
        LossKind::Dgmse(paper_dgmse())
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Gmse(_) => "gmse",
            LossKind::Dgmse(_) => "dgmse",
        }
    }

    /// Weight-map schedule, or `None` for unweighted MSE.
    pub fn schedule(&self) -> Option<Schedule> {
        match self {
            LossKind::Mse => None,
            LossKind::Gmse(p) => Some(Schedule::constant(*p)),
            LossKind::Dgmse(s) => Some(s.clone()),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Mse => write!(f, "mse"),
            LossKind::Gmse(p) => write!(f, "gmse{p}"),
            LossKind::Dgmse(s) => {
                write!(f, "dgmse[")?;
                for (i, (start, p)) in s.stages().iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{start}:{p}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Epochs at which generator snapshots are scored by default.
pub const DEFAULT_CHECKPOINTS: [usize; 7] = [1, 5, 10, 20, 50, 100, 300];
/// Epoch columns of the comparison table.
pub const REPORT_CHECKPOINTS: [usize; 5] = [1, 5, 20, 100, 300];

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub label: String,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub loss: LossKind,
    pub seed: u64,
    /// 1-based epochs after which validation SSIM is recorded.
    pub ssim_checkpoints: Vec<usize>,
    pub hidden: Vec<usize>,
    pub leaky_slope: f64,
    pub validation_fraction: f64,
    /// Worker threads. Results are identical for every value.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::new(LossKind::Mse, 100, 0)
    }
}

impl TrainConfig {
    /// Batch 20, learning rate 2e-5, `2 → 64 → 256 → h·w` with slope 0.2,
    /// 20% validation, checkpoints from [`DEFAULT_CHECKPOINTS`] up to `epochs`.
    pub fn new(loss: LossKind, epochs: usize, seed: u64) -> Self {
        TrainConfig {
            label: loss.name().to_string(),
            epochs,
            batch_size: 20,
            lr: 2e-5,
            loss,
            seed,
            ssim_checkpoints: default_checkpoints(epochs),
            hidden: GeneratorNet::default_hidden(),
            leaky_slope: 0.2,
            validation_fraction: 0.2,
            threads: 1,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if let Some(&bad) = self.ssim_checkpoints.iter().find(|&&e| e == 0 || e > self.epochs) {
            return Err(Error::Config(format!(
                "SSIM checkpoint {bad} outside [1, {}]",
                self.epochs
            )));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config(format!(
                "validation fraction must lie in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn default_checkpoints(epochs: usize) -> Vec<usize> {
    DEFAULT_CHECKPOINTS.iter().copied().filter(|&e| e <= epochs).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    pub config: TrainConfig,
    /// Batch-averaged training loss per epoch.
    pub loss: LossCurve,
    /// `(epoch, mean validation SSIM)` at each checkpoint, ascending.
    pub ssim: Vec<(usize, f64)>,
    pub epoch_seconds: Vec<f64>,
}

impl TrainLog {
    pub fn ssim_at(&self, epoch: usize) -> Option<f64> {
        self.ssim.iter().find(|(e, _)| *e == epoch).map(|(_, s)| *s)
    }

    pub fn max_loss_rate(&self) -> Result<f64> {
        max_loss_rate(&self.loss)
    }

    /// `epoch,loss,ssim` rows, 1-based epochs, SSIM blank between checkpoints.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss,ssim\n");
        for (i, loss) in self.loss.values().iter().enumerate() {
            let epoch = i + 1;
            match self.ssim_at(epoch) {
                Some(s) => out.push_str(&format!("{epoch},{loss},{s}\n")),
                None => out.push_str(&format!("{epoch},{loss},\n")),
            }
        }
        out
    }
}

/// Mean global SSIM between generated and reference fields, each min-max
/// normalized to `[0, 1]` first.
pub fn validation_ssim(net: &GeneratorNet, dataset: &Dataset, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::Config("no items to score".into()));
    }
    let items = dataset.items();
    let inputs: Vec<[f64; 2]> = indices.iter().map(|&i| items[i].condition.normalized()).collect();
    let cache = net.forward_batch(&inputs);
    let (h, w) = net.output_shape();
    let params = SsimParams::default();
    let mut total = 0.0;
    for (k, &i) in indices.iter().enumerate() {
        let generated = Field::from_parts(h, w, cache.outputs()[k * h * w..(k + 1) * h * w].to_vec());
        total += ssim_global(&normalize01(&generated), &normalize01(&items[i].field), &params)?;
    }
    Ok(total / indices.len() as f64)
}

fn weight_maps(dataset: &Dataset, indices: &[usize], params: &GmseParams) -> Result<Vec<WeightMap>> {
    indices
        .par_iter()
        .map(|&i| build_weight_map(&dataset.items()[i].field, params))
        .collect()
}

/// Trains a freshly initialized generator on `dataset`.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainLog> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| train_inner(dataset, config))
}

fn train_inner(dataset: &Dataset, config: &TrainConfig) -> Result<TrainLog> {
    let (h, w) = dataset.shape();
    let cells = h * w;
    let (train_idx, val_idx) = dataset.split(config.validation_fraction)?;
    let score_idx = if val_idx.is_empty() { &train_idx } else { &val_idx };

    let mut net = GeneratorNet::init(&config.hidden, h, w, config.leaky_slope, derive_seed(config.seed, 0))?;
    let mut adam = Adam::new(net.num_params(), AdamHyper::with_lr(config.lr));
    let schedule = config.loss.schedule();
    let checkpoints: BTreeSet<usize> = config.ssim_checkpoints.iter().copied().collect();

    // weight maps for the train split, rebuilt only when the schedule stage changes
    let mut cached_stage: Option<usize> = None;
    let mut weights: Vec<WeightMap> = Vec::new();

    let items = dataset.items();
    let mut losses = Vec::with_capacity(config.epochs);
    let mut ssim = Vec::new();
    let mut epoch_seconds = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let started = Instant::now();
        if let Some(s) = &schedule {
            let stage = s.stage_index(epoch);
            if cached_stage != Some(stage) {
                weights = weight_maps(dataset, &train_idx, &s.resolve(epoch))?;
                cached_stage = Some(stage);
            }
        }

        let order = crate::rng::SeedStream::new(derive_seed(config.seed, 1 + epoch as u64)).permutation(train_idx.len());
        let mut batch_losses = Vec::new();
        for chunk in order.chunks(config.batch_size) {
            let inputs: Vec<[f64; 2]> = chunk
                .iter()
                .map(|&k| items[train_idx[k]].condition.normalized())
                .collect();
            let cache = net.forward_batch(&inputs);
            let outputs = cache.outputs();
            let scale = 1.0 / chunk.len() as f64;

            let per_item: Vec<(f64, Vec<f64>)> = chunk
                .par_iter()
                .enumerate()
                .map(|(s, &k)| {
                    let real = &items[train_idx[k]].field;
                    let fake = Field::from_parts(h, w, outputs[s * cells..(s + 1) * cells].to_vec());
                    let (loss, grad) = match &schedule {
                        None => (mse(real, &fake)?, mse_gradient(real, &fake)?),
                        Some(_) => (gmse(real, &fake, &weights[k])?, gmse_gradient(real, &fake, &weights[k])?),
                    };
                    Ok((loss.get(), grad.into_values()))
                })
                .collect::<Result<_>>()?;

            let mut batch_loss = 0.0;
            let mut output_grad = Vec::with_capacity(chunk.len() * cells);
            for (loss, grad) in per_item {
                batch_loss += loss;
                output_grad.extend(grad.into_iter().map(|g| g * scale));
            }
            batch_losses.push(batch_loss * scale);

            let grads = net.backward_batch(&cache, &output_grad);
            adam.step(net.params_mut(), grads.as_slice())?;
        }
        if net.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Config(format!("training diverged at epoch {}", epoch + 1)));
        }
        losses.push(batch_losses.iter().sum::<f64>() / batch_losses.len() as f64);
        if checkpoints.contains(&(epoch + 1)) {
            ssim.push((epoch + 1, validation_ssim(&net, dataset, score_idx)?));
        }
        epoch_seconds.push(started.elapsed().as_secs_f64());
    }

    Ok(TrainLog {
        config: config.clone(),
        loss: LossCurve::new(losses)?,
        ssim,
        epoch_seconds,
    })
}

/// One row of a [`ComparisonReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub loss: String,
    /// SSIM at each of the report's checkpoint columns.
    pub ssim: Vec<f64>,
    pub max_loss_rate: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub columns: Vec<usize>,
    pub rows: Vec<ReportRow>,
    /// Max-normalized loss curves, one per row.
    pub curves: Vec<LossCurve>,
    pub logs: Vec<TrainLog>,
}

impl ComparisonReport {
    pub fn from_logs(logs: Vec<TrainLog>) -> Result<Self> {
        let epochs = logs
            .first()
            .map(|l| l.config.epochs)
            .ok_or_else(|| Error::Config("nothing to compare".into()))?;
        let columns: Vec<usize> = REPORT_CHECKPOINTS.iter().copied().filter(|&e| e <= epochs).collect();
        let mut rows = Vec::with_capacity(logs.len());
        let mut curves = Vec::with_capacity(logs.len());
        for log in &logs {
            let ssim = columns
                .iter()
                .map(|&e| {
                    log.ssim_at(e)
                        .ok_or_else(|| Error::Config(format!("run {:?} has no SSIM at epoch {e}", log.config.label)))
                })
                .collect::<Result<Vec<_>>>()?;
            let rate = if log.loss.len() >= 2 { log.max_loss_rate()? } else { 0.0 };
            rows.push(ReportRow {
                label: log.config.label.clone(),
                loss: log.config.loss.to_string(),
                ssim,
                max_loss_rate: rate,
                final_loss: *log.loss.values().last().unwrap(),
            });
            curves.push(normalize_curve(&log.loss)?);
        }
        Ok(ComparisonReport {
            columns,
            rows,
            curves,
            logs,
        })
    }

    /// `run,loss,ssim@E...,max_loss_rate,final_loss`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("run,loss");
        for c in &self.columns {
            out.push_str(&format!(",ssim@{c}"));
        }
        out.push_str(",max_loss_rate,final_loss\n");
        for row in &self.rows {
            out.push_str(&format!("{},\"{}\"", row.label, row.loss));
            for s in &row.ssim {
                out.push_str(&format!(",{s}"));
            }
            out.push_str(&format!(",{},{}\n", row.max_loss_rate, row.final_loss));
        }
        out
    }

    /// `epoch,<label>...` with max-normalized loss values.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("epoch");
        for row in &self.rows {
            out.push_str(&format!(",{}", row.label));
        }
        out.push('\n');
        let len = self.curves.iter().map(|c| c.len()).max().unwrap_or(0);
        for e in 0..len {
            out.push_str(&(e + 1).to_string());
            for c in &self.curves {
                match c.values().get(e) {
                    Some(v) => out.push_str(&format!(",{v}")),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Trains every config on the same dataset and tabulates the results.
pub fn compare(dataset: &Dataset, configs: &[TrainConfig]) -> Result<ComparisonReport> {
    let first = configs
        .first()
        .ok_or_else(|| Error::Config("nothing to compare".into()))?;
    for c in configs {
        if c.seed != first.seed || c.epochs != first.epochs {
            return Err(Error::Config(format!(
                "runs must share seed and epochs: {:?} has seed {} / {} epochs, {:?} has {} / {}",
                first.label, first.seed, first.epochs, c.label, c.seed, c.epochs
            )));
        }
    }
    let logs = configs
        .iter()
        .map(|c| {
            let mut c = c.clone();
            let wanted: BTreeSet<usize> = c
                .ssim_checkpoints
                .iter()
                .copied()
                .chain(REPORT_CHECKPOINTS.iter().copied().filter(|&e| e <= c.epochs))
                .collect();
            c.ssim_checkpoints = wanted.into_iter().collect();
            train(dataset, &c)
        })
        .collect::<Result<Vec<_>>>()?;
    ComparisonReport::from_logs(logs)
}
