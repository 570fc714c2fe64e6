//! The option grid: every combination of data-set filter, measure,
//! imputation and aggregation, evaluated to a method ranking.
//!
//! Universes are enumerated with filters outermost, then measures,
//! imputations and aggregations; row `i` of a [`RankingTable`] always joins
//! with row `i` of an unfolding fitted on that table.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::{aggregate_scored, Aggregated, AggregationStrategy, PerfMatrix};
use crate::error::{Error, Result};
use crate::imputation::{impute_cell, ImputationStrategy};
use crate::model::{Characteristic, DatasetMeta, PerformanceTensor, Ranking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Below,
    AtOrAbove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetFilter {
    All,
    MedianSplit { characteristic: Characteristic, side: Side },
}

impl DatasetFilter {
    /// `all` plus both sides of a median split on every characteristic.
    pub fn standard_set() -> Vec<DatasetFilter> {
        let mut out = vec![DatasetFilter::All];
        for characteristic in Characteristic::ALL {
            for side in [Side::Below, Side::AtOrAbove] {
                out.push(DatasetFilter::MedianSplit { characteristic, side });
            }
        }
        out
    }
}

impl fmt::Display for DatasetFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetFilter::All => f.write_str("all"),
            DatasetFilter::MedianSplit { characteristic, side } => {
                let side = match side {
                    Side::Below => "below",
                    Side::AtOrAbove => "at_or_above",
                };
                write!(f, "{}_{}", characteristic.as_str(), side)
            }
        }
    }
}

impl FromStr for DatasetFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        DatasetFilter::standard_set()
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| {
                format!("unknown data-set filter `{s}` (expected all or <clin|n|n_eff|p>_<below|at_or_above>)")
            })
    }
}

fn median_u64(values: &mut [u64]) -> f64 {
    values.sort_unstable();
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] as f64 + values[n / 2] as f64) / 2.0
    }
}

/// Data sets selected by `filter`, in input order. The median is taken over
/// the full input list, so the two sides of a split partition it.
pub fn apply_filter(datasets: &[DatasetMeta], filter: &DatasetFilter) -> Vec<DatasetMeta> {
    match *filter {
        DatasetFilter::All => datasets.to_vec(),
        DatasetFilter::MedianSplit { characteristic, side } => {
            if datasets.is_empty() {
                return Vec::new();
            }
            let mut values: Vec<u64> = datasets.iter().map(|d| d.characteristic(characteristic)).collect();
            let med = median_u64(&mut values);
            datasets
                .iter()
                .filter(|d| {
                    let v = d.characteristic(characteristic) as f64;
                    match side {
                        Side::Below => v < med,
                        Side::AtOrAbove => v >= med,
                    }
                })
                .cloned()
                .collect()
        }
    }
}

/// One of the four design/analysis choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Datasets,
    Measure,
    Imputation,
    Aggregation,
}

impl Choice {
    pub const ALL: [Choice; 4] = [Choice::Datasets, Choice::Measure, Choice::Imputation, Choice::Aggregation];

    pub fn as_str(self) -> &'static str {
        match self {
            Choice::Datasets => "datasets",
            Choice::Measure => "measure",
            Choice::Imputation => "imputation",
            Choice::Aggregation => "aggregation",
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Choice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Choice::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown choice `{s}` (expected datasets, measure, imputation or aggregation)"))
    }
}

/// One complete assignment of the four choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Universe {
    pub filter: DatasetFilter,
    pub measure: String,
    pub imputation: ImputationStrategy,
    pub aggregation: AggregationStrategy,
}

impl Universe {
    /// Stable textual key, e.g. `datasets=all;measure=ibrier;imputation=threshold20;aggregation=mean`.
    pub fn key(&self) -> String {
        format!(
            "datasets={};measure={};imputation={};aggregation={}",
            self.filter, self.measure, self.imputation, self.aggregation
        )
    }

    /// Label of the option this universe takes for `choice`.
    pub fn option_label(&self, choice: Choice) -> String {
        match choice {
            Choice::Datasets => self.filter.to_string(),
            Choice::Measure => self.measure.clone(),
            Choice::Imputation => self.imputation.to_string(),
            Choice::Aggregation => self.aggregation.to_string(),
        }
    }

    /// Copy of this universe taking option `index` of `config`'s list for `choice`.
    pub fn with_option(&self, config: &MultiverseConfig, choice: Choice, index: usize) -> Universe {
        let mut u = self.clone();
        match choice {
            Choice::Datasets => u.filter = config.filters[index],
            Choice::Measure => u.measure = config.measures[index].clone(),
            Choice::Imputation => u.imputation = config.imputations[index],
            Choice::Aggregation => u.aggregation = config.aggregations[index],
        }
        u
    }

    /// True if both universes agree on every choice except possibly `choice`.
    pub fn same_context(&self, other: &Universe, choice: Choice) -> bool {
        Choice::ALL
            .into_iter()
            .filter(|&c| c != choice)
            .all(|c| self.option_label(c) == other.option_label(c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiverseConfig {
    pub filters: Vec<DatasetFilter>,
    pub measures: Vec<String>,
    pub imputations: Vec<ImputationStrategy>,
    pub aggregations: Vec<AggregationStrategy>,
    pub defaults: Universe,
    pub stepwise_order: [Choice; 4],
}

impl MultiverseConfig {
    pub fn n_options(&self, choice: Choice) -> usize {
        match choice {
            Choice::Datasets => self.filters.len(),
            Choice::Measure => self.measures.len(),
            Choice::Imputation => self.imputations.len(),
            Choice::Aggregation => self.aggregations.len(),
        }
    }

    pub fn option_label(&self, choice: Choice, index: usize) -> String {
        match choice {
            Choice::Datasets => self.filters[index].to_string(),
            Choice::Measure => self.measures[index].clone(),
            Choice::Imputation => self.imputations[index].to_string(),
            Choice::Aggregation => self.aggregations[index].to_string(),
        }
    }

    /// Position of `u`'s option for `choice` in this config's option list.
    pub fn option_index(&self, u: &Universe, choice: Choice) -> Option<usize> {
        match choice {
            Choice::Datasets => self.filters.iter().position(|f| *f == u.filter),
            Choice::Measure => self.measures.iter().position(|m| *m == u.measure),
            Choice::Imputation => self.imputations.iter().position(|i| *i == u.imputation),
            Choice::Aggregation => self.aggregations.iter().position(|a| *a == u.aggregation),
        }
    }

    pub fn grid_size(&self) -> usize {
        Choice::ALL.iter().map(|&c| self.n_options(c)).product()
    }

    pub fn validate(&self) -> Result<()> {
        for c in Choice::ALL {
            if self.n_options(c) == 0 {
                return Err(Error::config(format!("multiverse.{}", plural(c)), "option list is empty"));
            }
            if self.option_index(&self.defaults, c).is_none() {
                return Err(Error::config(
                    format!("multiverse.defaults.{c}"),
                    format!(
                        "default `{}` is not among the {} options",
                        self.defaults.option_label(c),
                        c
                    ),
                ));
            }
        }
        let mut seen = HashSet::new();
        if !self.stepwise_order.iter().all(|c| seen.insert(*c)) {
            return Err(Error::config(
                "multiverse.stepwise_order",
                "must be a permutation of datasets, measure, imputation, aggregation",
            ));
        }
        Ok(())
    }
}

fn plural(c: Choice) -> &'static str {
    match c {
        Choice::Datasets => "filters",
        Choice::Measure => "measures",
        Choice::Imputation => "imputations",
        Choice::Aggregation => "aggregations",
    }
}

/// Full Cartesian product of the option lists in documented order.
pub fn enumerate_universes(config: &MultiverseConfig) -> Vec<Universe> {
    let mut out = Vec::with_capacity(config.grid_size());
    for filter in &config.filters {
        for measure in &config.measures {
            for imputation in &config.imputations {
                for aggregation in &config.aggregations {
                    out.push(Universe {
                        filter: *filter,
                        measure: measure.clone(),
                        imputation: *imputation,
                        aggregation: *aggregation,
                    });
                }
            }
        }
    }
    out
}

/// Impute every (data set, method) cell of `measure` on the given data sets and aggregate.
pub fn evaluate_on_datasets(
    tensor: &PerformanceTensor,
    datasets: &[usize],
    measure: &str,
    imputation: &ImputationStrategy,
    aggregation: &AggregationStrategy,
) -> Result<Aggregated> {
    if datasets.is_empty() {
        return Err(Error::structural("no data sets left after filtering"));
    }
    let s = tensor.measure_index(measure).ok_or_else(|| Error::UnknownId {
        kind: "measure",
        id: measure.to_string(),
    })?;
    let spec = &tensor.measures()[s];
    let n_methods = tensor.methods().len();
    let mut values = Vec::with_capacity(datasets.len() * n_methods);
    for &d in datasets {
        for m in 0..n_methods {
            values.push(impute_cell(tensor.cell(d, m, s), spec, imputation)?);
        }
    }
    let matrix = PerfMatrix::new(
        datasets.iter().map(|&d| tensor.datasets()[d].id.clone()).collect(),
        tensor.methods().to_vec(),
        spec.clone(),
        values,
    )?;
    aggregate_scored(&matrix, aggregation)
}

fn filtered_indices(tensor: &PerformanceTensor, filter: &DatasetFilter) -> Vec<usize> {
    apply_filter(tensor.datasets(), filter)
        .iter()
        .map(|d| tensor.dataset_index(&d.id).expect("filter returns input data sets"))
        .collect()
}

pub fn evaluate_universe_scored(tensor: &PerformanceTensor, u: &Universe) -> Result<Aggregated> {
    let idx = filtered_indices(tensor, &u.filter);
    evaluate_on_datasets(tensor, &idx, &u.measure, &u.imputation, &u.aggregation)
}

pub fn evaluate_universe(tensor: &PerformanceTensor, u: &Universe) -> Result<Ranking> {
    evaluate_universe_scored(tensor, u).map(|a| a.ranking)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub universe: Universe,
    pub ranks: Vec<f64>,
}

/// K universes × M methods of ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingTable {
    pub methods: Vec<String>,
    pub rows: Vec<TableRow>,
    /// Universes that could not be evaluated, with the reason.
    pub warnings: Vec<String>,
}

impl RankingTable {
    pub fn empty(methods: Vec<String>) -> Self {
        RankingTable {
            methods,
            rows: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ranking(&self, i: usize) -> Ranking {
        Ranking {
            methods: self.methods.clone(),
            ranks: self.rows[i].ranks.clone(),
        }
    }

    pub fn row_index(&self, u: &Universe) -> Option<usize> {
        self.rows.iter().position(|r| r.universe == *u)
    }

    /// Rank matrix in row order, suitable as unfolding input.
    pub fn rank_rows(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.ranks.clone()).collect()
    }
}

/// Evaluate every universe of the grid. Rows come out in enumeration order
/// regardless of how the work is scheduled; universes that fail (typically an
/// empty data-set selection) are dropped and reported in `warnings`.
pub fn run_multiverse(tensor: &PerformanceTensor, config: &MultiverseConfig) -> Result<RankingTable> {
    config.validate()?;
    let universes = enumerate_universes(config);
    let results: Vec<(Universe, Result<Ranking>)> = universes
        .into_par_iter()
        .map(|u| {
            let r = evaluate_universe(tensor, &u);
            (u, r)
        })
        .collect();
    let mut table = RankingTable::empty(tensor.methods().to_vec());
    for (universe, r) in results {
        match r {
            Ok(ranking) => table.rows.push(TableRow {
                universe,
                ranks: ranking.ranks,
            }),
            Err(e) => table.warnings.push(format!("{}: {e}", universe.key())),
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankHistogram {
    pub method: String,
    /// (rank, number of universes) in increasing rank order.
    pub counts: Vec<(f64, usize)>,
    pub min: f64,
    pub max: f64,
}

pub fn rank_distribution(table: &RankingTable) -> Result<Vec<RankHistogram>> {
    if table.is_empty() {
        return Err(Error::structural("rank distribution of an empty table"));
    }
    Ok(table
        .methods
        .iter()
        .enumerate()
        .map(|(j, method)| {
            // ranks are half-integers, so twice the rank is an exact key
            let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
            for row in &table.rows {
                *counts.entry((row.ranks[j] * 2.0) as u64).or_default() += 1;
            }
            let counts: Vec<(f64, usize)> = counts.into_iter().map(|(k, n)| (k as f64 / 2.0, n)).collect();
            RankHistogram {
                method: method.clone(),
                min: counts.first().map(|c| c.0).unwrap_or(f64::NAN),
                max: counts.last().map(|c| c.0).unwrap_or(f64::NAN),
                counts,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepwiseStep {
    pub choice: Choice,
    pub option: String,
    pub rank: f64,
    /// Target's aggregated score in the chosen universe, larger is better.
    pub score: f64,
    /// Whether this step strictly improved the rank.
    pub improved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub method: String,
    pub default_rank: f64,
    pub default_score: f64,
    pub steps: Vec<StepwiseStep>,
    pub final_rank: f64,
    pub final_universe: String,
}

/// Greedy per-choice search for the options that give `target` its best rank.
///
/// Choices are visited in `config.stepwise_order`. Within a step an option
/// replaces the incumbent only if it yields a strictly smaller rank, or an
/// equal rank with a strictly better score when scores are on the same scale
/// (same measure and aggregation kind). Options whose evaluation fails are skipped.
pub fn stepwise_optimize(tensor: &PerformanceTensor, config: &MultiverseConfig, target: &str) -> Result<Trajectory> {
    config.validate()?;
    let t = tensor.method_index(target).ok_or_else(|| Error::UnknownId {
        kind: "method",
        id: target.to_string(),
    })?;
    let mut state = config.defaults.clone();
    let start = evaluate_universe_scored(tensor, &state)?;
    let mut rank = start.ranking.ranks[t];
    let mut score = start.goodness[t];
    let mut trajectory = Trajectory {
        method: target.to_string(),
        default_rank: rank,
        default_score: score,
        steps: Vec::with_capacity(4),
        final_rank: rank,
        final_universe: String::new(),
    };

    for &choice in &config.stepwise_order {
        let incumbent = config.option_index(&state, choice).expect("validated config");
        let scores_comparable = matches!(choice, Choice::Datasets | Choice::Imputation);
        let (mut best_idx, mut best_rank, mut best_score) = (incumbent, rank, score);
        for idx in 0..config.n_options(choice) {
            if idx == incumbent {
                continue;
            }
            let candidate = state.with_option(config, choice, idx);
            let Ok(eval) = evaluate_universe_scored(tensor, &candidate) else {
                continue;
            };
            let (r, s) = (eval.ranking.ranks[t], eval.goodness[t]);
            if r < best_rank || (r == best_rank && scores_comparable && s > best_score) {
                (best_idx, best_rank, best_score) = (idx, r, s);
            }
        }
        let improved = best_rank < rank;
        state = state.with_option(config, choice, best_idx);
        rank = best_rank;
        score = best_score;
        trajectory.steps.push(StepwiseStep {
            choice,
            option: config.option_label(choice, best_idx),
            rank,
            score,
            improved,
        });
    }
    trajectory.final_rank = rank;
    trajectory.final_universe = state.key();
    Ok(trajectory)
}

/// Seed that reproduces the 774 distinct groups for 18 data sets and 50 permutations.
pub const DEFAULT_SAMPLING_SEED: u64 = 126;

/// Random prefix groups of data sets.
///
/// Permutation `i` is drawn from ChaCha8 stream `i` of `seed`; its prefixes of
/// length 1..L-1 are collected, duplicates (as unordered sets) removed keeping
/// the first occurrence, and the full set appended last. Each group lists
/// data-set ids in input order.
pub fn sample_prefix_groups(dataset_ids: &[String], n_perms: usize, seed: u64) -> Result<Vec<Vec<String>>> {
    if n_perms == 0 {
        return Err(Error::structural("need at least one permutation"));
    }
    let l = dataset_ids.len();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n_perms {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut perm: Vec<usize> = (0..l).collect();
        perm.shuffle(&mut rng);
        for len in 1..l {
            let mut g = perm[..len].to_vec();
            g.sort_unstable();
            if seen.insert(g.clone()) {
                groups.push(g);
            }
        }
    }
    groups.push((0..l).collect());
    Ok(groups
        .into_iter()
        .map(|g| g.into_iter().map(|i| dataset_ids[i].clone()).collect())
        .collect())
}

/// Rank the methods on each data-set group with the default measure, imputation and aggregation.
pub fn evaluate_groups(
    tensor: &PerformanceTensor,
    groups: &[Vec<String>],
    defaults: &Universe,
) -> Result<Vec<Ranking>> {
    groups
        .par_iter()
        .map(|g| {
            let idx = g
                .iter()
                .map(|id| {
                    tensor.dataset_index(id).ok_or_else(|| Error::UnknownId {
                        kind: "dataset",
                        id: id.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            evaluate_on_datasets(tensor, &idx, &defaults.measure, &defaults.imputation, &defaults.aggregation)
                .map(|a| a.ranking)
        })
        .collect()
}
