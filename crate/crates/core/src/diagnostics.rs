//! Goodness-of-fit and choice-impact diagnostics for an unfolding solution.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiverse::{Choice, MultiverseConfig, RankingTable};
use crate::unfolding::{self, UnfoldOptions, UnfoldingSolution};

/// Smallest number of permutations for which a p-value of 0.05 is attainable.
pub const MIN_PERMUTATIONS: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationScheme {
    /// Shuffle each row independently; row marginals are kept.
    #[default]
    WithinRow,
    /// Shuffle all cells of the table together.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTest {
    pub p_value: f64,
    pub n_perm: usize,
    pub seed: u64,
    pub scheme: PermutationScheme,
    /// Penalized stress of the fit on the unpermuted table.
    pub observed: f64,
    /// Penalized stress of each permuted refit, in permutation order.
    pub permuted: Vec<f64>,
}

/// Table `delta` shuffled by permutation `index` of `seed`.
pub fn permute_table(delta: &[Vec<f64>], scheme: PermutationScheme, seed: u64, index: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    match scheme {
        PermutationScheme::WithinRow => delta
            .iter()
            .map(|row| {
                let mut row = row.clone();
                row.shuffle(&mut rng);
                row
            })
            .collect(),
        PermutationScheme::Global => {
            let mut cells: Vec<f64> = delta.iter().flatten().copied().collect();
            cells.shuffle(&mut rng);
            let mut it = cells.into_iter();
            delta.iter().map(|row| it.by_ref().take(row.len()).collect()).collect()
        }
    }
}

/// Monte Carlo goodness-of-fit test of the unfolding model.
///
/// The observed table and every permuted table are fitted with the same
/// `options`, so a reduced start budget applies to both sides of the
/// comparison. `p = (1 + #{permuted ≤ observed}) / (n_perm + 1)`.
pub fn permutation_test(
    delta: &[Vec<f64>],
    options: &UnfoldOptions,
    n_perm: usize,
    seed: u64,
    scheme: PermutationScheme,
) -> Result<PermutationTest> {
    if n_perm < MIN_PERMUTATIONS {
        return Err(Error::config(
            "diagnostics.permutations",
            format!("need at least {MIN_PERMUTATIONS} permutations, got {n_perm}"),
        ));
    }
    let observed = unfolding::fit(delta, options)?.stress_penalized;
    let permuted = (0..n_perm)
        .into_par_iter()
        .map(|i| {
            let shuffled = permute_table(delta, scheme, seed, i);
            unfolding::fit(&shuffled, options).map(|s| s.stress_penalized)
        })
        .collect::<Result<Vec<f64>>>()?;
    let hits = permuted.iter().filter(|&&s| s <= observed).count();
    Ok(PermutationTest {
        p_value: (1 + hits) as f64 / (n_perm + 1) as f64,
        n_perm,
        seed,
        scheme,
        observed,
        permuted,
    })
}

fn shares(parts: Vec<f64>) -> Vec<f64> {
    let total: f64 = parts.iter().sum();
    if total > 0.0 {
        parts.iter().map(|v| 100.0 * v / total).collect()
    } else {
        vec![100.0 / parts.len() as f64; parts.len()]
    }
}

/// Percentage share of the weighted squared residual `Σ w(d̂ − d)²` carried by
/// each row and by each column. A perfect fit gives uniform shares.
pub fn stress_per_point(
    solution: &UnfoldingSolution,
    delta: &[Vec<f64>],
    weights: Option<&[Vec<f64>]>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = solution.disparities.len();
    let m = solution.z2.len();
    let same_shape = |t: &[Vec<f64>]| t.len() == k && t.iter().all(|r| r.len() == m);
    if k == 0 || m == 0 || !same_shape(delta) || !same_shape(&solution.distances) || !same_shape(&solution.disparities)
    {
        return Err(Error::structural("solution and dissimilarity table disagree in shape"));
    }
    if let Some(w) = weights {
        if !same_shape(w) {
            return Err(Error::structural("weights do not match the dissimilarity table"));
        }
    }
    let mut rows = vec![0.0; k];
    let mut cols = vec![0.0; m];
    for r in 0..k {
        for c in 0..m {
            let w = weights.map_or(1.0, |w| w[r][c]);
            let e = w * (solution.disparities[r][c] - solution.distances[r][c]).powi(2);
            rows[r] += e;
            cols[c] += e;
        }
    }
    Ok((shares(rows), shares(cols)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreePoint {
    pub dim: usize,
    pub stress_penalized: f64,
    pub stress_normalized: f64,
    pub stress_raw: f64,
}

/// Relative rise of penalized stress between consecutive dimensions above
/// which a scree warning is issued.
pub const SCREE_TOLERANCE: f64 = 0.05;

/// Independent fits at each requested dimension, all with the seed and start
/// budget of `options`. Returns the points in `dims` order and warnings for
/// every increase of more than [`SCREE_TOLERANCE`] from a lower dimension.
pub fn scree(delta: &[Vec<f64>], options: &UnfoldOptions, dims: &[usize]) -> Result<(Vec<ScreePoint>, Vec<String>)> {
    let points = dims
        .par_iter()
        .map(|&dim| {
            let opts = UnfoldOptions {
                dim,
                ..options.clone()
            };
            unfolding::fit(delta, &opts).map(|s| ScreePoint {
                dim,
                stress_penalized: s.stress_penalized,
                stress_normalized: s.stress_normalized,
                stress_raw: s.stress_raw,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sorted: Vec<&ScreePoint> = points.iter().collect();
    sorted.sort_by_key(|p| p.dim);
    let warnings = sorted
        .windows(2)
        .filter(|w| w[1].stress_penalized > w[0].stress_penalized * (1.0 + SCREE_TOLERANCE) + 1e-12)
        .map(|w| {
            format!(
                "penalized stress rises from {:.6} at dim {} to {:.6} at dim {}; consider more starts",
                w[0].stress_penalized, w[0].dim, w[1].stress_penalized, w[1].dim
            )
        })
        .collect();
    Ok((points, warnings))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefaultDistance {
    pub choice: Choice,
    pub alternative: String,
    /// Key of the universe holding the default option for `choice`.
    pub context: String,
    pub distance: f64,
}

/// Euclidean distance between the ideal points of rows `a` and `b`.
pub fn ideal_distance(solution: &UnfoldingSolution, a: usize, b: usize) -> f64 {
    solution.z1[a]
        .iter()
        .zip(&solution.z1[b])
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Distances between universes that differ in exactly one choice, where one
/// side takes the default option for that choice.
///
/// Every universe holding the default option for a choice serves as a
/// context; each alternative option for that choice present in the table
/// contributes one distance. Output is ordered by context row, then choice,
/// then option order.
pub fn default_option_distances(
    solution: &UnfoldingSolution,
    table: &RankingTable,
    config: &MultiverseConfig,
) -> Result<Vec<DefaultDistance>> {
    if solution.z1.len() != table.len() {
        return Err(Error::structural(format!(
            "solution has {} ideal points but the table has {} rows",
            solution.z1.len(),
            table.len()
        )));
    }
    if table.row_index(&config.defaults).is_none() {
        return Err(Error::structural(format!(
            "default universe `{}` is not in the ranking table",
            config.defaults.key()
        )));
    }
    let mut out = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        for choice in Choice::ALL {
            let Some(default_idx) = config.option_index(&config.defaults, choice) else {
                continue;
            };
            if config.option_index(&row.universe, choice) != Some(default_idx) {
                continue;
            }
            for alt in (0..config.n_options(choice)).filter(|&a| a != default_idx) {
                let other = row.universe.with_option(config, choice, alt);
                if let Some(j) = table.row_index(&other) {
                    out.push(DefaultDistance {
                        choice,
                        alternative: config.option_label(choice, alt),
                        context: row.universe.key(),
                        distance: ideal_distance(solution, i, j),
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointShare {
    pub id: String,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub permutation: Option<PermutationTest>,
    /// Stress share per universe, in percent.
    pub spp_rows: Vec<PointShare>,
    /// Stress share per method, in percent.
    pub spp_cols: Vec<PointShare>,
    pub scree: Vec<ScreePoint>,
    pub scree_warnings: Vec<String>,
    pub default_distances: Vec<DefaultDistance>,
}
