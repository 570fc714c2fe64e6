//! Replacing failed resampling iterations by a single per-cell value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MeasureSpec, Orientation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputationKind {
    /// Mean of the remaining iterations below the failure threshold, random value above.
    Threshold20,
    /// Mean pulled toward the random value in proportion to the failure rate.
    Weighted,
    /// Random-prediction value whenever any iteration failed.
    RandomPrediction,
    /// Mean of the non-failed iterations.
    MeanNonfailed,
}

impl ImputationKind {
    pub const ALL: [ImputationKind; 4] = [
        ImputationKind::Threshold20,
        ImputationKind::Weighted,
        ImputationKind::RandomPrediction,
        ImputationKind::MeanNonfailed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ImputationKind::Threshold20 => "threshold20",
            ImputationKind::Weighted => "weighted",
            ImputationKind::RandomPrediction => "random_prediction",
            ImputationKind::MeanNonfailed => "mean_nonfailed",
        }
    }
}

impl FromStr for ImputationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ImputationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                format!("unknown imputation `{s}` (expected threshold20, weighted, random_prediction or mean_nonfailed)")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImputationStrategy {
    pub kind: ImputationKind,
    /// Failure proportion at or above which `threshold20` gives up on the mean.
    pub threshold: f64,
}

pub const DEFAULT_THRESHOLD: f64 = 0.2;

impl ImputationStrategy {
    pub fn new(kind: ImputationKind) -> Self {
        ImputationStrategy {
            kind,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn with_threshold(kind: ImputationKind, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::structural(format!(
                "imputation threshold must lie in (0, 1], got {threshold}"
            )));
        }
        Ok(ImputationStrategy { kind, threshold })
    }
}

impl fmt::Display for ImputationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.as_str())
    }
}

/// Share of failed iterations in a cell.
pub fn failure_proportion(cell: &[Option<f64>]) -> Result<f64> {
    if cell.is_empty() {
        return Err(Error::structural("cell has no iteration slots"));
    }
    let failed = cell.iter().filter(|v| v.is_none()).count();
    Ok(failed as f64 / cell.len() as f64)
}

/// Mean of the present slots in input order, `None` if every slot failed.
pub fn present_mean(cell: &[Option<f64>]) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in cell.iter().flatten() {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Collapse one (data set, method, measure) cell to a single performance value.
///
/// A cell without failures always yields its plain mean.
pub fn impute_cell(cell: &[Option<f64>], measure: &MeasureSpec, strategy: &ImputationStrategy) -> Result<f64> {
    let r = failure_proportion(cell)?;
    let random = measure.random_value;
    let Some(mean) = present_mean(cell) else {
        return Ok(random);
    };
    if r == 0.0 {
        return Ok(mean);
    }
    let value = match strategy.kind {
        ImputationKind::MeanNonfailed => mean,
        ImputationKind::RandomPrediction => random,
        ImputationKind::Threshold20 => {
            if r < strategy.threshold {
                mean
            } else {
                random
            }
        }
        ImputationKind::Weighted => match measure.orientation {
            Orientation::LowerBetter => random - (random - mean).max(0.0) * (1.0 - r),
            Orientation::HigherBetter => random + (mean - random).max(0.0) * (1.0 - r),
        },
    };
    Ok(value)
}
