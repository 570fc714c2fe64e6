//! Collapsing an L×M matrix of per-data-set performances into one method ranking.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Better, MeasureSpec, Ranking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationKind {
    Mean,
    Median,
    MeanRank,
    /// Number of wins, ties broken by the number of near-wins.
    Best005,
}

impl AggregationKind {
    pub const ALL: [AggregationKind; 4] = [
        AggregationKind::Mean,
        AggregationKind::Median,
        AggregationKind::MeanRank,
        AggregationKind::Best005,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AggregationKind::Mean => "mean",
            AggregationKind::Median => "median",
            AggregationKind::MeanRank => "mean_rank",
            AggregationKind::Best005 => "best005",
        }
    }
}

impl FromStr for AggregationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        AggregationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown aggregation `{s}` (expected mean, median, mean_rank or best005)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationStrategy {
    pub kind: AggregationKind,
    /// Relative distance to the row best that still counts as a near-win (best005 only).
    pub environment: f64,
}

pub const DEFAULT_ENVIRONMENT: f64 = 0.05;

impl AggregationStrategy {
    pub fn new(kind: AggregationKind) -> Self {
        AggregationStrategy {
            kind,
            environment: DEFAULT_ENVIRONMENT,
        }
    }

    pub fn with_environment(kind: AggregationKind, environment: f64) -> Result<Self> {
        if !(environment > 0.0 && environment.is_finite()) {
            return Err(Error::structural(format!(
                "best005 environment must be positive, got {environment}"
            )));
        }
        Ok(AggregationStrategy { kind, environment })
    }
}

impl fmt::Display for AggregationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.as_str())
    }
}

/// Imputed performances, one row per data set and one column per method.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfMatrix {
    values: Vec<f64>,
    datasets: Vec<String>,
    methods: Vec<String>,
    measure: MeasureSpec,
}

impl PerfMatrix {
    pub fn new(datasets: Vec<String>, methods: Vec<String>, measure: MeasureSpec, values: Vec<f64>) -> Result<Self> {
        if datasets.is_empty() {
            return Err(Error::structural("performance matrix has no data sets"));
        }
        if methods.len() < 2 {
            return Err(Error::structural("performance matrix needs at least 2 methods"));
        }
        if values.len() != datasets.len() * methods.len() {
            return Err(Error::structural(format!(
                "expected {}x{} values, got {}",
                datasets.len(),
                methods.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::structural(format!(
                "non-finite performance for ({}, {})",
                datasets[i / methods.len()],
                methods[i % methods.len()]
            )));
        }
        Ok(PerfMatrix {
            values,
            datasets,
            methods,
            measure,
        })
    }

    pub fn n_datasets(&self) -> usize {
        self.datasets.len()
    }

    pub fn n_methods(&self) -> usize {
        self.methods.len()
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    pub fn measure(&self) -> &MeasureSpec {
        &self.measure
    }

    pub fn row(&self, l: usize) -> &[f64] {
        let m = self.methods.len();
        &self.values[l * m..(l + 1) * m]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.datasets.len()).map(|l| self.row(l)[j]).collect()
    }
}

/// Mid-ranks of `scores`; the best score gets rank 1, ties share the average rank.
pub fn rank_from_scores(scores: &[f64], better: Better) -> Result<Vec<f64>> {
    if scores.len() < 2 {
        return Err(Error::structural("ranking needs at least 2 scores"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::structural("non-finite score"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let o = scores[a].total_cmp(&scores[b]);
        match better {
            Better::Smaller => o,
            Better::Larger => o.reverse(),
        }
    });
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // positions i..j share ranks i+1..=j
        let mid = (i + 1 + j) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = mid;
        }
        i = j;
    }
    Ok(ranks)
}

/// Ranking together with each method's aggregated score, oriented so that
/// larger `goodness` is better. Goodness values are only comparable between
/// outcomes that share measure and aggregation kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregated {
    pub ranking: Ranking,
    pub goodness: Vec<f64>,
}

// Sorting first makes the sum independent of data-set order.
fn stable_mean(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn row_best(row: &[f64], measure: &MeasureSpec) -> f64 {
    row.iter()
        .copied()
        .reduce(|a, b| if measure.is_better(b, a) { b } else { a })
        .expect("non-empty row")
}

fn within_environment(value: f64, best: f64, environment: f64) -> bool {
    if best == 0.0 {
        value == 0.0
    } else {
        (value - best).abs() / best.abs() < environment
    }
}

pub fn aggregate(matrix: &PerfMatrix, strategy: &AggregationStrategy) -> Result<Ranking> {
    aggregate_scored(matrix, strategy).map(|a| a.ranking)
}

pub fn aggregate_scored(matrix: &PerfMatrix, strategy: &AggregationStrategy) -> Result<Aggregated> {
    let m = matrix.n_methods();
    let measure_better = Better::from(matrix.measure.orientation);
    let orient = |v: f64| match measure_better {
        Better::Smaller => -v,
        Better::Larger => v,
    };

    let (ranks, goodness) = match strategy.kind {
        AggregationKind::Mean | AggregationKind::Median => {
            let scores: Vec<f64> = (0..m)
                .map(|j| {
                    let mut col = matrix.column(j);
                    if strategy.kind == AggregationKind::Mean {
                        stable_mean(&mut col)
                    } else {
                        median(&mut col)
                    }
                })
                .collect();
            let ranks = rank_from_scores(&scores, measure_better)?;
            (ranks, scores.into_iter().map(orient).collect())
        }
        AggregationKind::MeanRank => {
            let mut per_method = vec![Vec::with_capacity(matrix.n_datasets()); m];
            for l in 0..matrix.n_datasets() {
                let r = rank_from_scores(matrix.row(l), measure_better)?;
                for (j, rank) in r.into_iter().enumerate() {
                    per_method[j].push(rank);
                }
            }
            let scores: Vec<f64> = per_method.iter_mut().map(|c| stable_mean(c)).collect();
            let ranks = rank_from_scores(&scores, Better::Smaller)?;
            (ranks, scores.into_iter().map(|s| -s).collect())
        }
        AggregationKind::Best005 => {
            let mut wins = vec![0usize; m];
            let mut near = vec![0usize; m];
            for l in 0..matrix.n_datasets() {
                let row = matrix.row(l);
                let best = row_best(row, &matrix.measure);
                for (j, &v) in row.iter().enumerate() {
                    if v == best {
                        wins[j] += 1;
                    }
                    if within_environment(v, best, strategy.environment) {
                        near[j] += 1;
                    }
                }
            }
            // near ≤ L, so base L+1 encodes the lexicographic order exactly
            let base = (matrix.n_datasets() + 1) as f64;
            let scores: Vec<f64> = wins
                .iter()
                .zip(&near)
                .map(|(&w, &n)| w as f64 * base + n as f64)
                .collect();
            let ranks = rank_from_scores(&scores, Better::Larger)?;
            (ranks, scores)
        }
    };
    Ok(Aggregated {
        ranking: Ranking {
            methods: matrix.methods.clone(),
            ranks,
        },
        goodness,
    })
}
