//! Epoch-indexed weight-map parameter schedules.
//!
//! Epochs are 0-indexed. A stage starting at epoch `s` is in effect on
//! `[s, next_start)`; the last stage never ends.
//!
//! Text form, one stage per line, `#` starts a comment:
//!
//! ```text
//! # start_epoch sigma gamma offset
//! 0  30 0.20 0.1
//! 1  20 0.40 0.1
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::GmseParams;

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    stages: Vec<(usize, GmseParams)>,
}

impl Schedule {
    pub fn new(stages: Vec<(usize, GmseParams)>) -> Result<Self> {
        match stages.first() {
            None => return Err(Error::Config("schedule has no stages".into())),
            Some((0, _)) => {}
            Some((s, _)) => return Err(Error::Config(format!("first stage must start at epoch 0, not {s}"))),
        }
        if let Some(w) = stages.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config(format!(
                "stage start epochs must increase strictly ({} then {})",
                w[0].0, w[1].0
            )));
        }
        Ok(Schedule { stages })
    }

    /// A single-stage schedule holding `params` forever.
    pub fn constant(params: GmseParams) -> Self {
        Schedule {
            stages: vec![(0, params)],
        }
    }

    pub fn stages(&self) -> &[(usize, GmseParams)] {
        &self.stages
    }

    /// Parameters of the last stage starting at or before `epoch`.
    pub fn resolve(&self, epoch: usize) -> GmseParams {
        let idx = self.stages.partition_point(|(start, _)| *start <= epoch);
        self.stages[idx - 1].1
    }

    /// Index of the stage in effect at `epoch`.
    pub fn stage_index(&self, epoch: usize) -> usize {
        self.stages.partition_point(|(start, _)| *start <= epoch) - 1
    }
}

/// The dynamic schedule: broad, low-floor weighting for the first epoch,
/// tightening over the first twenty.
pub fn paper_dgmse() -> Schedule {
    let p = |s, g, o| GmseParams::new(s, g, o).expect("valid built-in parameters");
    Schedule::new(vec![
        (0, p(30.0, 0.20, 0.1)),
        (1, p(20.0, 0.40, 0.1)),
        (5, p(20.0, 0.40, 0.2)),
        (20, p(25.0, 0.40, 0.2)),
    ])
    .expect("valid built-in schedule")
}

/// Fixed baseline parameters `(sigma, gamma, offset) = (10, 1.0, 0.2)`.
pub fn paper_gmse_baseline() -> GmseParams {
    GmseParams::new(10.0, 1.0, 0.2).expect("valid built-in parameters")
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut stages = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Config(format!("schedule line {}: {msg}", i + 1));
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 4 {
                return Err(bad(format!("expected 4 columns, found {}", tokens.len())));
            }
            let start: usize = tokens[0]
                .parse()
                .map_err(|_| bad(format!("bad start epoch {:?}", tokens[0])))?;
            let mut nums = [0.0; 3];
            for (slot, tok) in nums.iter_mut().zip(&tokens[1..]) {
                *slot = tok.parse().map_err(|_| bad(format!("not a number: {tok:?}")))?;
            }
            let params = GmseParams::new(nums[0], nums[1], nums[2]).map_err(|e| bad(e.to_string()))?;
            stages.push((start, params));
        }
        Schedule::new(stages)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# start_epoch sigma gamma offset")?;
        for (start, p) in &self.stages {
            writeln!(f, "{start} {} {} {}", p.sigma(), p.gamma(), p.offset())?;
        }
        Ok(())
    }
}
