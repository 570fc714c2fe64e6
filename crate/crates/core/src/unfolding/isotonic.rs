//! Weighted monotone regression by pool-adjacent-violators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Treatment of tied dissimilarities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// Tied ranks may receive disparities in any order.
    #[default]
    Primary,
    /// Tied ranks must receive equal disparities.
    Secondary,
}

#[derive(Debug, Clone, Copy)]
struct Block {
    wsum: f64,
    wy: f64,
    ysum: f64,
    n: usize,
}

impl Block {
    fn value(&self) -> f64 {
        if self.wsum > 0.0 {
            self.wy / self.wsum
        } else {
            self.ysum / self.n as f64
        }
    }

    fn merge(&mut self, other: &Block) {
        self.wsum += other.wsum;
        self.wy += other.wy;
        self.ysum += other.ysum;
        self.n += other.n;
    }
}

/// PAVA over an already ordered sequence. `groups` gives the lengths of the
/// initial blocks (all ones for a plain fit); the result is written back into
/// `out` in sequence order.
fn pava(y: &[f64], w: &[f64], groups: impl Iterator<Item = usize>, out: &mut [f64]) {
    let mut stack: Vec<Block> = Vec::with_capacity(y.len());
    let mut pos = 0;
    for len in groups {
        let mut b = Block {
            wsum: 0.0,
            wy: 0.0,
            ysum: 0.0,
            n: 0,
        };
        for i in pos..pos + len {
            b.wsum += w[i];
            b.wy += w[i] * y[i];
            b.ysum += y[i];
            b.n += 1;
        }
        pos += len;
        while let Some(top) = stack.last() {
            if top.value() > b.value() {
                let mut prev = stack.pop().expect("non-empty");
                prev.merge(&b);
                b = prev;
            } else {
                break;
            }
        }
        stack.push(b);
    }
    let mut i = 0;
    for b in &stack {
        let v = b.value();
        out[i..i + b.n].fill(v);
        i += b.n;
    }
}

/// Ordering of one transformation group, precomputed from its dissimilarities.
#[derive(Debug, Clone)]
pub(crate) struct MonotoneOrder {
    /// Positions sorted by dissimilarity.
    order: Vec<usize>,
    /// Lengths of runs of equal dissimilarity in `order`.
    ties: Vec<usize>,
}

impl MonotoneOrder {
    pub(crate) fn new(ranks: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..ranks.len()).collect();
        order.sort_by(|&a, &b| ranks[a].total_cmp(&ranks[b]));
        let mut ties = Vec::new();
        let mut i = 0;
        while i < order.len() {
            let mut j = i + 1;
            while j < order.len() && ranks[order[j]] == ranks[order[i]] {
                j += 1;
            }
            ties.push(j - i);
            i = j;
        }
        MonotoneOrder { order, ties }
    }

    /// Least-squares monotone fit of `targets`, written to `out`.
    pub(crate) fn fit(&self, targets: &[f64], weights: &[f64], rule: TieRule, out: &mut [f64]) {
        let mut order = self.order.clone();
        if rule == TieRule::Primary {
            // within a tie block the order is free; sorting by target is optimal
            let mut start = 0;
            for &len in &self.ties {
                order[start..start + len].sort_by(|&a, &b| targets[a].total_cmp(&targets[b]));
                start += len;
            }
        }
        let y: Vec<f64> = order.iter().map(|&i| targets[i]).collect();
        let w: Vec<f64> = order.iter().map(|&i| weights[i]).collect();
        let mut fitted = vec![0.0; y.len()];
        match rule {
            TieRule::Primary => pava(&y, &w, std::iter::repeat_n(1, y.len()), &mut fitted),
            TieRule::Secondary => pava(&y, &w, self.ties.iter().copied(), &mut fitted),
        }
        for (k, &i) in order.iter().enumerate() {
            out[i] = fitted[k];
        }
    }
}

/// Weighted least-squares fit of `targets` whose order weakly follows `ranks`.
///
/// With [`TieRule::Secondary`] equal ranks receive equal values; with
/// [`TieRule::Primary`] tied ranks are unconstrained among themselves.
pub fn monotone_regress(ranks: &[f64], targets: &[f64], weights: &[f64], tie_rule: TieRule) -> Result<Vec<f64>> {
    if ranks.is_empty() || ranks.len() != targets.len() || ranks.len() != weights.len() {
        return Err(Error::structural(format!(
            "monotone regression needs equal non-empty lengths, got {}/{}/{}",
            ranks.len(),
            targets.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::structural(format!("weights must be finite and non-negative, got {w}")));
    }
    if ranks.iter().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::structural("non-finite rank or target"));
    }
    let mut out = vec![0.0; ranks.len()];
    MonotoneOrder::new(ranks).fit(targets, weights, tie_rule, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn already_monotone() {
        let r = monotone_regress(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &[1.0; 3], TieRule::Primary).unwrap();
        assert_eq!(r, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn full_pool() {
        let r = monotone_regress(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0], &[1.0; 3], TieRule::Primary).unwrap();
        assert!(close(&r, &[2.0, 2.0, 2.0]));
    }

    #[test]
    fn secondary_ties_pool_first() {
        let r = monotone_regress(&[1.0, 1.0, 2.0], &[0.0, 4.0, 1.0], &[1.0; 3], TieRule::Secondary).unwrap();
        assert!(close(&r, &[5.0 / 3.0; 3]), "{r:?}");
        // primary lets the tied pair split: 0 stays, {4, 1} pool to 2.5
        let r = monotone_regress(&[1.0, 1.0, 2.0], &[0.0, 4.0, 1.0], &[1.0; 3], TieRule::Primary).unwrap();
        assert!(close(&r, &[0.0, 2.5, 2.5]), "{r:?}");
    }

    #[test]
    fn unsorted_ranks_and_weights() {
        // ranks out of order; heavy weight on the violating point
        let r = monotone_regress(&[3.0, 1.0, 2.0], &[0.0, 1.0, 2.0], &[3.0, 1.0, 1.0], TieRule::Primary).unwrap();
        // pool of positions with ranks 2 and 3: (2*1 + 0*3)/4 = 0.5, then with rank 1: (1 + 2)/5 = 0.6
        assert!(close(&r, &[0.6, 0.6, 0.6]), "{r:?}");
    }

    #[test]
    fn zero_weight_block() {
        let r = monotone_regress(&[1.0, 2.0], &[3.0, 1.0], &[0.0, 0.0], TieRule::Primary).unwrap();
        assert!(close(&r, &[2.0, 2.0]));
    }

    #[test]
    fn bad_inputs() {
        assert!(monotone_regress(&[], &[], &[], TieRule::Primary).is_err());
        assert!(monotone_regress(&[1.0], &[1.0, 2.0], &[1.0], TieRule::Primary).is_err());
        assert!(monotone_regress(&[1.0, 2.0], &[1.0, 2.0], &[1.0, -0.5], TieRule::Primary).is_err());
    }

    /// Exhaustive search over a grid of monotone vectors, for length 3.
    #[test]
    fn grid_oracle_length_three() {
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        let targets = [3.0, 1.0, 2.0];
        let mut best = (f64::INFINITY, [0.0; 3]);
        for &a in &grid {
            for &b in grid.iter().filter(|&&b| b >= a) {
                for &c in grid.iter().filter(|&&c| c >= b) {
                    let e = (a - targets[0]).powi(2) + (b - targets[1]).powi(2) + (c - targets[2]).powi(2);
                    if e < best.0 {
                        best = (e, [a, b, c]);
                    }
                }
            }
        }
        assert!((best.0 - 2.0).abs() < 1e-9);
        let r = monotone_regress(&[1.0, 2.0, 3.0], &targets, &[1.0; 3], TieRule::Primary).unwrap();
        assert!(close(&r, &best.1));
    }
}
