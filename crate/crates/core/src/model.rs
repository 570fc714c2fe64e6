//! Benchmark results, measures and data-set metadata.
//!
//! Everything in here is immutable once built and carries ids rather than
//! positions, so that rankings and coordinates can be joined back to
//! methods and data sets across modules.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    LowerBetter,
    HigherBetter,
}

/// Direction in which a score is preferable, used when turning scores into ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Better {
    Smaller,
    Larger,
}

impl From<Orientation> for Better {
    fn from(o: Orientation) -> Self {
        match o {
            Orientation::LowerBetter => Better::Smaller,
            Orientation::HigherBetter => Better::Larger,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub id: String,
    pub orientation: Orientation,
    /// Value a random prediction attains.
    pub random_value: f64,
    /// Value a perfect prediction attains.
    pub best_value: f64,
}

impl MeasureSpec {
    /// Integrated Brier score: 0 is perfect, 0.25 is random prediction.
    pub fn ibrier() -> Self {
        MeasureSpec {
            id: "ibrier".into(),
            orientation: Orientation::LowerBetter,
            random_value: 0.25,
            best_value: 0.0,
        }
    }

    /// Concordance index: 1 is perfect, 0.5 is random prediction.
    pub fn cindex() -> Self {
        MeasureSpec {
            id: "cindex".into(),
            orientation: Orientation::HigherBetter,
            random_value: 0.5,
            best_value: 1.0,
        }
    }

    /// True if `a` is strictly better than `b` under this measure.
    pub fn is_better(&self, a: f64, b: f64) -> bool {
        match self.orientation {
            Orientation::LowerBetter => a < b,
            Orientation::HigherBetter => a > b,
        }
    }

    fn check(&self) -> Option<String> {
        if !self.random_value.is_finite() || !self.best_value.is_finite() {
            return Some(format!("measure `{}`: non-finite reference value", self.id));
        }
        let ok = match self.orientation {
            Orientation::LowerBetter => self.best_value < self.random_value,
            Orientation::HigherBetter => self.best_value > self.random_value,
        };
        (!ok).then(|| {
            format!(
                "measure `{}`: best value {} is not better than random value {}",
                self.id, self.best_value, self.random_value
            )
        })
    }
}

/// Data-set characteristic usable for subgroup construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Characteristic {
    Clin,
    N,
    NEff,
    P,
}

impl Characteristic {
    pub const ALL: [Characteristic; 4] = [
        Characteristic::Clin,
        Characteristic::N,
        Characteristic::NEff,
        Characteristic::P,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Characteristic::Clin => "clin",
            Characteristic::N => "n",
            Characteristic::NEff => "n_eff",
            Characteristic::P => "p",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub id: String,
    /// Number of clinical variables.
    pub clin: u64,
    /// Number of observations.
    pub n: u64,
    /// Number of effective cases (observations with an event).
    pub n_eff: u64,
    /// Number of variables.
    pub p: u64,
}

impl DatasetMeta {
    pub fn characteristic(&self, c: Characteristic) -> u64 {
        match c {
            Characteristic::Clin => self.clin,
            Characteristic::N => self.n,
            Characteristic::NEff => self.n_eff,
            Characteristic::P => self.p,
        }
    }
}

/// One resampling-iteration slot; `None` marks a failed iteration.
pub type Cell = Vec<Option<f64>>;

/// Iteration-level performance values for every (data set, method, measure).
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceTensor {
    datasets: Vec<DatasetMeta>,
    methods: Vec<String>,
    measures: Vec<MeasureSpec>,
    // dense, indexed [dataset][method][measure]; an empty vec means "never set"
    cells: Vec<Cell>,
}

impl PerformanceTensor {
    pub fn new(datasets: Vec<DatasetMeta>, methods: Vec<String>, measures: Vec<MeasureSpec>) -> Self {
        let n = datasets.len() * methods.len() * measures.len();
        PerformanceTensor {
            datasets,
            methods,
            measures,
            cells: vec![Vec::new(); n],
        }
    }

    pub fn datasets(&self) -> &[DatasetMeta] {
        &self.datasets
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn measures(&self) -> &[MeasureSpec] {
        &self.measures
    }

    pub fn dataset_index(&self, id: &str) -> Option<usize> {
        self.datasets.iter().position(|d| d.id == id)
    }

    pub fn method_index(&self, id: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == id)
    }

    pub fn measure_index(&self, id: &str) -> Option<usize> {
        self.measures.iter().position(|m| m.id == id)
    }

    pub fn measure(&self, id: &str) -> Result<&MeasureSpec> {
        self.measures
            .iter()
            .find(|m| m.id == id)
            .ok_or_else(|| Error::UnknownId {
                kind: "measure",
                id: id.to_string(),
            })
    }

    fn offset(&self, d: usize, m: usize, s: usize) -> usize {
        (d * self.methods.len() + m) * self.measures.len() + s
    }

    pub fn cell(&self, dataset: usize, method: usize, measure: usize) -> &[Option<f64>] {
        &self.cells[self.offset(dataset, method, measure)]
    }

    pub fn set_cell(&mut self, dataset: &str, method: &str, measure: &str, values: Cell) -> Result<()> {
        let d = self.dataset_index(dataset).ok_or_else(|| Error::UnknownId {
            kind: "dataset",
            id: dataset.to_string(),
        })?;
        let m = self.method_index(method).ok_or_else(|| Error::UnknownId {
            kind: "method",
            id: method.to_string(),
        })?;
        let s = self.measure_index(measure).ok_or_else(|| Error::UnknownId {
            kind: "measure",
            id: measure.to_string(),
        })?;
        let off = self.offset(d, m, s);
        self.cells[off] = values;
        Ok(())
    }

    /// Copy of this tensor restricted to the given data sets (in the given order).
    pub fn restrict_datasets(&self, ids: &[&str]) -> Result<PerformanceTensor> {
        let mut out = PerformanceTensor::new(Vec::new(), self.methods.clone(), self.measures.clone());
        for id in ids {
            let d = self.dataset_index(id).ok_or_else(|| Error::UnknownId {
                kind: "dataset",
                id: id.to_string(),
            })?;
            out.datasets.push(self.datasets[d].clone());
            for m in 0..self.methods.len() {
                for s in 0..self.measures.len() {
                    out.cells.push(self.cell(d, m, s).to_vec());
                }
            }
        }
        Ok(out)
    }
}

/// One broken invariant, naming the offending field or cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

fn duplicates<'a>(ids: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    let mut dup = Vec::new();
    for id in ids {
        if !seen.insert(id) && !dup.contains(&id) {
            dup.push(id);
        }
    }
    dup
}

/// Check every structural invariant of a tensor. An empty result means the
/// tensor is fit for every downstream operation.
pub fn validate_tensor(t: &PerformanceTensor) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |location: String, message: String| out.push(Violation { location, message });

    for id in duplicates(t.datasets.iter().map(|d| d.id.as_str())) {
        push(format!("dataset {id}"), "duplicate dataset id".into());
    }
    for id in duplicates(t.methods.iter().map(String::as_str)) {
        push(format!("method {id}"), "duplicate method id".into());
    }
    for id in duplicates(t.measures.iter().map(|m| m.id.as_str())) {
        push(format!("measure {id}"), "duplicate measure id".into());
    }
    for m in &t.measures {
        if let Some(msg) = m.check() {
            push(format!("measure {}", m.id), msg);
        }
    }
    for d in &t.datasets {
        if d.n == 0 {
            push(format!("dataset {}", d.id), "n must be positive".into());
        }
        if d.p == 0 {
            push(format!("dataset {}", d.id), "p must be positive".into());
        }
        if d.n_eff > d.n {
            push(
                format!("dataset {}", d.id),
                format!("n_eff exceeds n ({} > {})", d.n_eff, d.n),
            );
        }
    }
    if t.methods.len() < 2 {
        push("methods".into(), format!("need at least 2 methods, got {}", t.methods.len()));
    }

    for (di, d) in t.datasets.iter().enumerate() {
        for (mi, method) in t.methods.iter().enumerate() {
            let mut counts: Vec<(usize, &str)> = Vec::new();
            for (si, measure) in t.measures.iter().enumerate() {
                let cell = t.cell(di, mi, si);
                let loc = format!("cell ({}, {}, {})", d.id, method, measure.id);
                if cell.is_empty() {
                    push(loc, "no iteration slots".into());
                    continue;
                }
                counts.push((cell.len(), measure.id.as_str()));
                for (it, v) in cell.iter().enumerate() {
                    let Some(v) = v else { continue };
                    if !v.is_finite() {
                        push(loc.clone(), format!("iteration {it}: non-finite value"));
                    } else if measure.orientation == Orientation::LowerBetter
                        && measure.best_value == 0.0
                        && *v < 0.0
                    {
                        push(loc.clone(), format!("iteration {it}: negative value {v}"));
                    }
                }
            }
            if let Some(&(first, first_measure)) = counts.first() {
                for &(n, measure) in &counts[1..] {
                    if n != first {
                        push(
                            format!("pair ({}, {})", d.id, method),
                            format!(
                                "iteration count mismatch: {first} for {first_measure}, {n} for {measure}"
                            ),
                        );
                    }
                }
            }
        }
    }
    out
}

/// A method ranking: mid-ranks in `[1, M]`, rank 1 is best.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub methods: Vec<String>,
    pub ranks: Vec<f64>,
}

impl Ranking {
    pub fn get(&self, method: &str) -> Option<f64> {
        self.methods
            .iter()
            .position(|m| m == method)
            .map(|i| self.ranks[i])
    }

    /// Sum of ranks equals M(M+1)/2 and every rank lies in [1, M] on the half-integer grid.
    pub fn is_valid_midrank(&self) -> bool {
        let m = self.ranks.len() as f64;
        let sum: f64 = self.ranks.iter().sum();
        self.methods.len() == self.ranks.len()
            && (sum - m * (m + 1.0) / 2.0).abs() < 1e-9
            && self
                .ranks
                .iter()
                .all(|&r| (1.0..=m).contains(&r) && (2.0 * r).fract() == 0.0)
    }
}
