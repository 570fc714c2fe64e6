//! Penalized ordinal multidimensional unfolding of a K×M ranking table.
//!
//! Rows (universes) become ideal points, columns (methods) become object
//! points, and the ranks themselves are the dissimilarities: a small
//! distance from an ideal point to an object point means a good rank.

mod isotonic;
mod smacof;
mod stress;

use std::ops::Range;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use isotonic::{monotone_regress, TieRule};
pub use smacof::smacof_step;
pub use stress::{penalized_stress, row_penalized_stress};

use isotonic::MonotoneOrder;
use smacof::Layout;
use stress::Objective;

/// How dissimilarities are turned into disparities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// Any weakly increasing function of the ranks.
    #[default]
    Ordinal,
    /// Disparities proportional to the input; meant for testing recovery.
    Identity,
}

/// Scope over which the monotone transform is shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditionality {
    /// One transform per row.
    #[default]
    Row,
    /// A single transform for the whole table.
    Unconditional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnfoldOptions {
    pub dim: usize,
    pub max_iter: usize,
    pub eps: f64,
    pub penalty_lambda: f64,
    pub penalty_omega: f64,
    pub n_starts: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
    pub tie_rule: TieRule,
    pub transform: Transform,
    pub conditionality: Conditionality,
}

impl Default for UnfoldOptions {
    fn default() -> Self {
        UnfoldOptions {
            dim: 2,
            max_iter: 10_000,
            eps: 1e-6,
            penalty_lambda: 0.5,
            penalty_omega: 1.0,
            n_starts: 10,
            seed: 0,
            weights: None,
            tie_rule: TieRule::Primary,
            transform: Transform::Ordinal,
            conditionality: Conditionality::Row,
        }
    }
}

impl UnfoldOptions {
    /// Range checks that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(format!("unfolding.{field}"), msg));
        if self.dim == 0 {
            return bad("dim", "must be a positive integer".into());
        }
        if self.max_iter == 0 {
            return bad("max_iter", "must be a positive integer".into());
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps", format!("must be a positive real, got {}", self.eps));
        }
        if !(self.penalty_lambda > 0.0 && self.penalty_lambda <= 1.0) {
            return bad("penalty_lambda", format!("must lie in (0, 1], got {}", self.penalty_lambda));
        }
        if !(self.penalty_omega >= 0.0 && self.penalty_omega.is_finite()) {
            return bad("penalty_omega", format!("must be non-negative, got {}", self.penalty_omega));
        }
        if self.n_starts == 0 {
            return bad("n_starts", "must be a positive integer".into());
        }
        Ok(())
    }
}

/// One step of a row's monotone transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub rank: f64,
    pub disparity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldingSolution {
    /// Ideal points, one per row of the input.
    pub z1: Vec<Vec<f64>>,
    /// Object points, one per column.
    pub z2: Vec<Vec<f64>>,
    pub disparities: Vec<Vec<f64>>,
    pub distances: Vec<Vec<f64>>,
    pub stress_penalized: f64,
    /// `Σ w·(d̂ − d)²` at the returned scale, where every transform group
    /// has `Σ w·d̂² = Σ w`.
    pub stress_raw: f64,
    /// Raw stress divided by `Σ w·d̂²`, averaged over transform groups.
    pub stress_normalized: f64,
    /// Per row, the distinct (rank, disparity) pairs in increasing order.
    pub transform: Vec<Vec<Breakpoint>>,
    pub iterations: usize,
    pub converged: bool,
    /// Index of the start that produced this solution.
    pub start: usize,
    /// Penalized stress before the first and after every iteration.
    pub history: Vec<f64>,
}

struct Problem<'a> {
    opts: &'a UnfoldOptions,
    layout: Layout,
    objective: Objective,
    delta: Vec<f64>,
    orders: Vec<MonotoneOrder>,
}

impl<'a> Problem<'a> {
    fn new(delta: &[Vec<f64>], opts: &'a UnfoldOptions) -> Result<Self> {
        opts.validate()?;
        let (k, m, flat) = stress::flatten(delta, "dissimilarity table")?;
        if k < 2 || m < 2 {
            return Err(Error::structural(format!(
                "unfolding needs at least 2 rows and 2 columns, got {k}×{m}"
            )));
        }
        if opts.dim > m {
            return Err(Error::structural(format!(
                "dimension {} exceeds the number of columns {m}",
                opts.dim
            )));
        }
        if let Some(v) = flat.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::structural(format!("dissimilarities must be finite and non-negative, got {v}")));
        }
        let w = stress::flat_weights(opts.weights.as_deref(), k, m)?;
        let by_row = opts.conditionality == Conditionality::Row && opts.transform == Transform::Ordinal;
        let ranges: Vec<Range<usize>> = if by_row {
            (0..k).map(|r| r * m..(r + 1) * m).collect()
        } else {
            vec![0..k * m]
        };
        let varies = |r: &Range<usize>| flat[r.clone()].iter().any(|&v| v != flat[r.start]);
        let penalized = ranges.iter().map(varies).collect();
        let orders = ranges.iter().map(|r| MonotoneOrder::new(&flat[r.clone()])).collect();
        if !w.iter().any(|&v| v > 0.0) {
            return Err(Error::Degenerate("all weights are zero".into()));
        }
        let objective = Objective::new(w, ranges, penalized, opts.penalty_lambda, opts.penalty_omega);
        let layout = Layout::new(k, m, opts.dim);
        Ok(Problem {
            opts,
            layout,
            objective,
            delta: flat,
            orders,
        })
    }

    fn sigma(&self, g: &[f64], d: &[f64]) -> f64 {
        match self.objective.value(g, d) {
            Ok(v) if v.is_finite() => v,
            _ => f64::INFINITY,
        }
    }

    /// Monotone fit of `y` per transform group, clipped at zero. Groups
    /// whose fit vanishes keep `fallback`.
    fn project(&self, y: &[f64], w: &[f64], fallback: &[f64], out: &mut [f64]) {
        let mut fit = Vec::new();
        for (gr, order) in self.objective.groups.iter().zip(&self.orders) {
            let r = gr.range.clone();
            fit.resize(r.len(), 0.0);
            order.fit(&y[r.clone()], &w[r.clone()], self.opts.tie_rule, &mut fit);
            fit.iter_mut().for_each(|v| *v = v.max(0.0));
            if fit.iter().any(|&v| v > 0.0) {
                out[r].copy_from_slice(&fit);
            } else {
                out[r.clone()].copy_from_slice(&fallback[r]);
            }
        }
    }

    /// Give every group the multiple that minimizes its normalized stress.
    fn rescale(&self, g: &mut [f64], d: &[f64]) {
        let w = &self.objective.w;
        for gr in &self.objective.groups {
            let r = gr.range.clone();
            let dd: f64 = r.clone().map(|i| w[i] * d[i] * d[i]).sum();
            let gd: f64 = r.clone().map(|i| w[i] * g[i] * d[i]).sum();
            if gd > 0.0 && dd > 0.0 {
                let c = dd / gd;
                g[r].iter_mut().for_each(|v| *v *= c);
            }
        }
    }

    /// Weights under which raw stress equals the summed group-normalized
    /// stress for the current disparities.
    fn majorization_weights(&self, g: &[f64]) -> Vec<f64> {
        let w = &self.objective.w;
        let mut out = w.clone();
        for gr in &self.objective.groups {
            let r = gr.range.clone();
            let ss: f64 = r.clone().map(|i| w[i] * g[i] * g[i]).sum();
            if ss > 0.0 {
                out[r].iter_mut().for_each(|v| *v /= ss);
            }
        }
        out
    }

    /// Scale disparities and configuration together so that `Σ w·d̂² = Σ w`.
    fn normalize(&self, g: &mut [f64], x: &mut [f64], d: &mut [f64]) {
        let w = &self.objective.w;
        let wsum: f64 = w.iter().sum();
        let gg: f64 = g.iter().zip(w).map(|(g, w)| w * g * g).sum();
        if gg > 0.0 {
            let c = (wsum / gg).sqrt();
            g.iter_mut().chain(x.iter_mut()).chain(d.iter_mut()).for_each(|v| *v *= c);
        }
    }

    /// Best of a Kruskal step and a projected gradient step; kept only if
    /// penalized stress does not rise.
    fn update_disparities(&self, g: &mut Vec<f64>, d: &[f64], current: f64, eta: &mut Option<f64>) -> f64 {
        let w = &self.objective.w;
        let n = g.len();
        let mut best = (current, None::<Vec<f64>>);

        let mut kruskal = vec![0.0; n];
        self.project(d, w, g, &mut kruskal);
        self.rescale(&mut kruskal, d);
        let s = self.sigma(&kruskal, d);
        if s <= best.0 {
            best = (s, Some(kruskal));
        }

        let mut grad = vec![0.0; n];
        let ok = self.objective.gradient(g, d, &mut grad).is_ok();
        let gnorm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        if ok && gnorm > 0.0 && gnorm.is_finite() {
            let unit = vec![1.0; n];
            let size = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut step = eta.map_or(0.1 * size / gnorm, |e| 2.0 * e);
            let mut y = vec![0.0; n];
            let mut cand = vec![0.0; n];
            for _ in 0..40 {
                for i in 0..n {
                    y[i] = g[i] - step * grad[i];
                }
                self.project(&y, &unit, g, &mut cand);
                self.rescale(&mut cand, d);
                let s = self.sigma(&cand, d);
                if s < current {
                    if s <= best.0 {
                        best = (s, Some(cand));
                    }
                    break;
                }
                step *= 0.5;
            }
            *eta = Some(step);
        }

        match best {
            (s, Some(next)) => {
                *g = next;
                s
            }
            (_, None) => current,
        }
    }

    fn classical_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let (k, m, p) = (self.layout.k, self.layout.m, self.layout.p);
        let mut b = DMatrix::from_fn(k, m, |r, c| -0.5 * self.delta[r * m + c].powi(2));
        let total = b.mean();
        let row_means: Vec<f64> = (0..k).map(|r| b.row(r).mean()).collect();
        let col_means: Vec<f64> = (0..m).map(|c| b.column(c).mean()).collect();
        for r in 0..k {
            for c in 0..m {
                b[(r, c)] += total - row_means[r] - col_means[c];
            }
        }
        let svd = b.svd(true, true);
        let u = svd.u.expect("requested U");
        let vt = svd.v_t.expect("requested V^T");
        let s = &svd.singular_values;
        let mut comps: Vec<usize> = (0..s.len()).collect();
        comps.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
        let smax = comps.first().map_or(0.0, |&i| s[i]);
        let mut x = vec![0.0; (k + m) * p];
        for t in 0..p {
            let comp = comps.get(t).copied().filter(|&i| s[i] > 1e-10 * smax && smax > 0.0);
            match comp {
                Some(i) => {
                    let root = s[i].sqrt();
                    let skew: f64 = (0..k).map(|r| u[(r, i)].powi(3)).sum::<f64>()
                        + (0..m).map(|c| vt[(i, c)].powi(3)).sum::<f64>();
                    let sign = if skew < 0.0 { -1.0 } else { 1.0 };
                    for r in 0..k {
                        x[r * p + t] = sign * root * u[(r, i)];
                    }
                    for c in 0..m {
                        x[(k + c) * p + t] = sign * root * vt[(i, c)];
                    }
                }
                None => {
                    for j in 0..k + m {
                        x[j * p + t] = rng.random_range(-1.0..1.0);
                    }
                }
            }
        }
        x
    }

    fn initial(&self, start: usize) -> Vec<f64> {
        let (k, m, p) = (self.layout.k, self.layout.m, self.layout.p);
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        rng.set_stream(start as u64);
        if start == 0 {
            self.classical_start(&mut rng)
        } else {
            (0..(k + m) * p).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
    }

    fn run(&self, start: usize, mut x: Vec<f64>) -> Result<UnfoldingSolution> {
        let n = self.layout.k * self.layout.m;

        let mut g = self.delta.clone();
        let mut d = vec![0.0; n];
        self.layout.distances(&x, &mut d);
        let w = &self.objective.w;
        let dd: f64 = d.iter().zip(w).map(|(d, w)| w * d * d).sum();
        let gd: f64 = g.iter().zip(&d).zip(w).map(|((g, d), w)| w * g * d).sum();
        if dd > 0.0 && gd > 0.0 {
            let c = gd / dd;
            x.iter_mut().chain(d.iter_mut()).for_each(|v| *v *= c);
        }
        if self.opts.transform == Transform::Ordinal {
            self.rescale(&mut g, &d);
        }
        self.normalize(&mut g, &mut x, &mut d);
        let mut sigma = self.objective.value(&g, &d)?;
        let mut history = vec![sigma];
        let mut eta = None;
        let mut next = vec![0.0; x.len()];
        let mut relaxed = vec![0.0; x.len()];
        let mut d_relaxed = vec![0.0; n];
        let mut converged = false;
        let mut iterations = 0;
        // metric warm-up: disparities stay at the scaled input until the
        // configuration settles, then the ordinal transform is released
        let mut warm = self.opts.transform == Transform::Ordinal;

        while iterations < self.opts.max_iter {
            iterations += 1;
            if self.opts.transform == Transform::Ordinal && !warm {
                self.update_disparities(&mut g, &d, sigma, &mut eta);
                self.normalize(&mut g, &mut x, &mut d);
            }
            let mw = self.majorization_weights(&g);
            self.layout.guttman(&x, &g, &d, &mw, &mut next);
            self.layout.distances(&next, &mut d);
            let mut now = self.sigma(&g, &d);
            // over-relaxed step, kept only when it does better
            for i in 0..x.len() {
                relaxed[i] = 2.0 * next[i] - x[i];
            }
            self.layout.distances(&relaxed, &mut d_relaxed);
            let s_relaxed = self.sigma(&g, &d_relaxed);
            if s_relaxed < now {
                now = s_relaxed;
                std::mem::swap(&mut x, &mut relaxed);
                std::mem::swap(&mut d, &mut d_relaxed);
            } else {
                std::mem::swap(&mut x, &mut next);
            }
            if !now.is_finite() {
                return Err(Error::Internal(format!(
                    "penalized stress became non-finite at iteration {iterations} of start {start}"
                )));
            }
            history.push(now);
            let prev = sigma;
            sigma = now;
            if prev <= 0.0 || (prev - now) / prev < self.opts.eps {
                if warm {
                    warm = false;
                    continue;
                }
                converged = true;
                break;
            }
        }
        Ok(self.solution(x, g, d, sigma, iterations, converged, start, history))
    }

    #[allow(clippy::too_many_arguments)]
    fn solution(
        &self,
        x: Vec<f64>,
        g: Vec<f64>,
        d: Vec<f64>,
        sigma: f64,
        iterations: usize,
        converged: bool,
        start: usize,
        history: Vec<f64>,
    ) -> UnfoldingSolution {
        let (k, m, p) = (self.layout.k, self.layout.m, self.layout.p);
        let w = &self.objective.w;
        let rows = |v: &[f64], width: usize, range: std::ops::Range<usize>| {
            range.map(|i| v[i * width..(i + 1) * width].to_vec()).collect::<Vec<_>>()
        };
        let transform = (0..k)
            .map(|r| {
                let mut pts: Vec<Breakpoint> = (0..m)
                    .map(|c| Breakpoint {
                        rank: self.delta[r * m + c],
                        disparity: g[r * m + c],
                    })
                    .collect();
                pts.sort_by(|a, b| a.rank.total_cmp(&b.rank).then(a.disparity.total_cmp(&b.disparity)));
                pts.dedup();
                pts
            })
            .collect();
        UnfoldingSolution {
            z1: rows(&x, p, 0..k),
            z2: rows(&x, p, k..k + m),
            disparities: rows(&g, m, 0..k),
            distances: rows(&d, m, 0..k),
            stress_penalized: sigma,
            stress_raw: stress::raw(&g, &d, w),
            stress_normalized: self.objective.normalized(&g, &d).unwrap_or(f64::NAN),
            transform,
            iterations,
            converged,
            start,
            history,
        }
    }
}

/// Fit every start independently and return them in start order.
pub fn fit_starts(delta: &[Vec<f64>], options: &UnfoldOptions) -> Result<Vec<UnfoldingSolution>> {
    let problem = Problem::new(delta, options)?;
    (0..options.n_starts)
        .into_par_iter()
        .map(|s| problem.run(s, problem.initial(s)))
        .collect()
}

/// Single fit from a given configuration of ideal points `z1` (K×dim) and
/// object points `z2` (M×dim); `options.n_starts` is ignored.
pub fn fit_from(
    delta: &[Vec<f64>],
    options: &UnfoldOptions,
    z1: &[Vec<f64>],
    z2: &[Vec<f64>],
) -> Result<UnfoldingSolution> {
    let problem = Problem::new(delta, options)?;
    let (k, p1, mut x) = stress::flatten(z1, "ideal points")?;
    let (m, p2, x2) = stress::flatten(z2, "object points")?;
    if (k, m, p1, p2) != (problem.layout.k, problem.layout.m, options.dim, options.dim) {
        return Err(Error::structural(format!(
            "start configuration is {k}×{p1} and {m}×{p2}, expected {}×{d} and {}×{d}",
            problem.layout.k,
            problem.layout.m,
            d = options.dim
        )));
    }
    x.extend(x2);
    problem.run(0, x)
}

/// Penalized-stress differences at or below this are treated as ties.
pub const STRESS_TIE: f64 = 1e-10;

/// Fit the unfolding model with `options.n_starts` starts and keep the one
/// with the lowest penalized stress (earliest start on ties, up to
/// [`STRESS_TIE`]).
///
/// Start 0 is a classical-scaling start from the double-centred squared
/// dissimilarities; the others are seeded uniform random configurations.
pub fn fit(delta: &[Vec<f64>], options: &UnfoldOptions) -> Result<UnfoldingSolution> {
    let starts = fit_starts(delta, options)?;
    starts
        .into_iter()
        .reduce(|best, s| {
            if s.stress_penalized < best.stress_penalized - STRESS_TIE {
                s
            } else {
                best
            }
        })
        .ok_or_else(|| Error::Internal("no starts were run".into()))
}

/// Raw stress of an arbitrary configuration against fixed disparities.
pub fn raw_stress(
    z1: &[Vec<f64>],
    z2: &[Vec<f64>],
    disparities: &[Vec<f64>],
    weights: Option<&[Vec<f64>]>,
) -> Result<f64> {
    smacof::config_raw_stress(z1, z2, disparities, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    fn planted(k: usize, m: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z1: Vec<Vec<f64>> = (0..k).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let z2: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let d = z1.iter().map(|a| z2.iter().map(|b| dist(a, b)).collect()).collect();
        (z1, z2, d)
    }

    fn ranks(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| crate::aggregation::rank_from_scores(r, crate::model::Better::Smaller).unwrap())
            .collect()
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn identity_mode_recovers_planted_distances() {
        let (_, _, delta) = planted(10, 4, 1);
        let opts = UnfoldOptions {
            transform: Transform::Identity,
            eps: 1e-12,
            n_starts: 4,
            ..Default::default()
        };
        let sol = fit(&delta, &opts).unwrap();
        assert!(sol.stress_raw <= 1e-6, "{}", sol.stress_raw);
        let a: Vec<f64> = delta.iter().flatten().copied().collect();
        let b: Vec<f64> = sol.distances.iter().flatten().copied().collect();
        assert!(pearson(&a, &b) >= 0.999);
    }

    #[test]
    fn history_never_increases() {
        let (_, _, d) = planted(12, 5, 2);
        let delta = ranks(&d);
        let opts = UnfoldOptions {
            n_starts: 3,
            max_iter: 500,
            ..Default::default()
        };
        for sol in fit_starts(&delta, &opts).unwrap() {
            for pair in sol.history.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-10, "{pair:?}");
            }
        }
    }

    #[test]
    fn solution_invariants_hold() {
        let (_, _, d) = planted(15, 5, 3);
        let delta = ranks(&d);
        let sol = fit(&delta, &UnfoldOptions { n_starts: 2, ..Default::default() }).unwrap();
        for (r, row) in delta.iter().enumerate() {
            for c in 0..5 {
                assert!((dist(&sol.z1[r], &sol.z2[c]) - sol.distances[r][c]).abs() < 1e-9);
                assert!(sol.disparities[r][c] >= 0.0);
                for c2 in 0..5 {
                    if row[c] < row[c2] {
                        assert!(sol.disparities[r][c] <= sol.disparities[r][c2]);
                    }
                }
            }
            assert!(sol.transform[r].windows(2).all(|p| p[0].rank <= p[1].rank && p[0].disparity <= p[1].disparity));
        }
    }

    #[test]
    fn rigid_motion_leaves_stress_unchanged() {
        let (_, _, d) = planted(10, 4, 4);
        let delta = ranks(&d);
        let sol = fit(&delta, &UnfoldOptions { n_starts: 1, ..Default::default() }).unwrap();
        let (s, c) = (0.7f64.sin(), 0.7f64.cos());
        let moved = |z: &[Vec<f64>]| z.iter().map(|v| vec![c * v[0] - s * v[1] + 3.0, s * v[0] + c * v[1] - 1.5]).collect::<Vec<_>>();
        let a = raw_stress(&sol.z1, &sol.z2, &sol.disparities, None).unwrap();
        let b = raw_stress(&moved(&sol.z1), &moved(&sol.z2), &sol.disparities, None).unwrap();
        assert!((a - sol.stress_raw).abs() < 1e-9);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn reproducible_with_fixed_seed() {
        let (_, _, d) = planted(10, 4, 5);
        let delta = ranks(&d);
        let opts = UnfoldOptions { n_starts: 3, seed: 42, ..Default::default() };
        assert_eq!(fit(&delta, &opts).unwrap(), fit(&delta, &opts).unwrap());
    }

    #[test]
    fn permuting_rows_and_columns_permutes_points() {
        let (_, _, d) = planted(9, 4, 6);
        let delta = ranks(&d);
        let opts = UnfoldOptions { n_starts: 1, max_iter: 300, ..Default::default() };
        let base = fit(&delta, &opts).unwrap();
        let rperm = [3, 0, 8, 1, 7, 2, 6, 4, 5];
        let cperm = [2, 0, 3, 1];
        let shuffled: Vec<Vec<f64>> = rperm.iter().map(|&r| cperm.iter().map(|&c| delta[r][c]).collect()).collect();
        let sol = fit(&shuffled, &opts).unwrap();
        assert!((sol.stress_penalized - base.stress_penalized).abs() < 1e-6);
        for (i, &r) in rperm.iter().enumerate() {
            for (j, &c) in cperm.iter().enumerate() {
                assert!((sol.distances[i][j] - base.distances[r][c]).abs() < 1e-5);
            }
        }
        for (i, &r) in rperm.iter().enumerate() {
            for t in 0..2 {
                assert!((sol.z1[i][t] - base.z1[r][t]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn rejects_bad_shapes_and_options() {
        let delta = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(fit(&delta, &UnfoldOptions { dim: 3, ..Default::default() }).is_err());
        assert!(matches!(
            fit(&delta, &UnfoldOptions { penalty_lambda: 0.0, ..Default::default() }),
            Err(Error::Config { .. })
        ));
        assert!(fit(&[vec![1.0, 2.0]], &UnfoldOptions::default()).is_err());
        assert!(matches!(
            fit(&[vec![1.0, 1.0], vec![1.0, 1.0]], &UnfoldOptions::default()),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn constant_rows_are_allowed() {
        let delta = vec![vec![1.0, 2.0, 3.0], vec![2.0, 2.0, 2.0], vec![3.0, 1.0, 2.0]];
        let sol = fit(&delta, &UnfoldOptions { n_starts: 2, ..Default::default() }).unwrap();
        assert!(sol.stress_penalized.is_finite());
    }
}
