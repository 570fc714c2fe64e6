//! Guttman transform for the rectangular (row points vs column points) case.
//!
//! Configurations are flat row-major `(K + M) × p` arrays: the K ideal points
//! first, then the M object points.

use nalgebra::DMatrix;

use super::stress::{flat_weights, flatten, raw};
use crate::error::{Error, Result};

const MIN_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub k: usize,
    pub m: usize,
    pub p: usize,
}

impl Layout {
    pub(crate) fn new(k: usize, m: usize, p: usize) -> Self {
        Layout { k, m, p }
    }

    pub(crate) fn distances(&self, x: &[f64], out: &mut [f64]) {
        let (k, m, p) = (self.k, self.m, self.p);
        for r in 0..k {
            let a = &x[r * p..(r + 1) * p];
            for c in 0..m {
                let b = &x[(k + c) * p..(k + c + 1) * p];
                out[r * m + c] = a.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            }
        }
    }

    /// One majorization update `X' = V⁺ B(X) X` under weights `w`.
    ///
    /// `V` couples only ideal points with object points, so the solve is
    /// reduced to the M×M Schur complement on the object block. Ideal points
    /// without any weight keep their position.
    pub(crate) fn guttman(&self, x: &[f64], g: &[f64], d: &[f64], w: &[f64], out: &mut [f64]) {
        let (k, m, p) = (self.k, self.m, self.p);
        let n = k + m;
        let mut bx = vec![0.0; n * p];
        for r in 0..k {
            for c in 0..m {
                let i = r * m + c;
                if w[i] == 0.0 {
                    continue;
                }
                let b = w[i] * g[i] / d[i].max(MIN_DISTANCE);
                let j = k + c;
                for t in 0..p {
                    let diff = b * (x[r * p + t] - x[j * p + t]);
                    bx[r * p + t] += diff;
                    bx[j * p + t] -= diff;
                }
            }
        }
        let row_w: Vec<f64> = (0..k).map(|r| w[r * m..(r + 1) * m].iter().sum()).collect();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        let mut rhs = DMatrix::<f64>::zeros(m, p);
        for c in 0..m {
            for t in 0..p {
                rhs[(c, t)] = bx[(k + c) * p + t];
            }
        }
        for r in 0..k {
            let a = row_w[r];
            if a <= 0.0 {
                continue;
            }
            let wr = &w[r * m..(r + 1) * m];
            for c in 0..m {
                schur[(c, c)] += wr[c];
                if wr[c] == 0.0 {
                    continue;
                }
                for c2 in 0..m {
                    schur[(c, c2)] -= wr[c] * wr[c2] / a;
                }
                for t in 0..p {
                    rhs[(c, t)] += wr[c] * bx[r * p + t] / a;
                }
            }
        }
        let scale = schur.diagonal().max().max(f64::MIN_POSITIVE);
        let y = match schur.pseudo_inverse(1e-12 * scale) {
            Ok(pinv) => pinv * rhs,
            Err(_) => DMatrix::zeros(m, p),
        };
        for c in 0..m {
            for t in 0..p {
                out[(k + c) * p + t] = y[(c, t)];
            }
        }
        for r in 0..k {
            let a = row_w[r];
            for t in 0..p {
                out[r * p + t] = if a > 0.0 {
                    let pull: f64 = (0..m).map(|c| w[r * m + c] * y[(c, t)]).sum();
                    (bx[r * p + t] + pull) / a
                } else {
                    x[r * p + t]
                };
            }
        }
        for t in 0..p {
            let centre = (0..n).map(|i| out[i * p + t]).sum::<f64>() / n as f64;
            for i in 0..n {
                out[i * p + t] -= centre;
            }
        }
    }
}

/// One Guttman-transform update of ideal points `z1` (K×p) and object points
/// `z2` (M×p) for fixed disparities. Raw stress never increases.
pub fn smacof_step(
    z1: &[Vec<f64>],
    z2: &[Vec<f64>],
    disparities: &[Vec<f64>],
    weights: Option<&[Vec<f64>]>,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let (k, p, x1) = flatten(z1, "ideal points")?;
    let (m, p2, x2) = flatten(z2, "object points")?;
    if p != p2 {
        return Err(Error::structural(format!(
            "ideal points have {p} columns but object points have {p2}"
        )));
    }
    let (gk, gm, g) = flatten(disparities, "disparities")?;
    if (gk, gm) != (k, m) {
        return Err(Error::structural(format!("disparities are {gk}×{gm}, expected {k}×{m}")));
    }
    let w = flat_weights(weights, k, m)?;
    if !w.iter().any(|&v| v > 0.0) {
        return Err(Error::Degenerate("all weights are zero; majorization is undefined".into()));
    }
    let layout = Layout::new(k, m, p);
    let mut x = x1;
    x.extend(x2);
    let mut d = vec![0.0; k * m];
    layout.distances(&x, &mut d);
    let mut next = vec![0.0; x.len()];
    layout.guttman(&x, &g, &d, &w, &mut next);
    let rows = |range: std::ops::Range<usize>| range.map(|i| next[i * p..(i + 1) * p].to_vec()).collect::<Vec<_>>();
    Ok((rows(0..k), rows(k..k + m)))
}

/// Raw stress of a configuration given as separate point sets.
pub(crate) fn config_raw_stress(
    z1: &[Vec<f64>],
    z2: &[Vec<f64>],
    disparities: &[Vec<f64>],
    weights: Option<&[Vec<f64>]>,
) -> Result<f64> {
    let (k, p, mut x) = flatten(z1, "ideal points")?;
    let (m, _, x2) = flatten(z2, "object points")?;
    x.extend(x2);
    let (_, _, g) = flatten(disparities, "disparities")?;
    let w = flat_weights(weights, k, m)?;
    let layout = Layout::new(k, m, p);
    let mut d = vec![0.0; k * m];
    layout.distances(&x, &mut d);
    Ok(raw(&g, &d, &w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    }

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    fn all_dists(z1: &[Vec<f64>], z2: &[Vec<f64>]) -> Vec<Vec<f64>> {
        z1.iter().map(|a| z2.iter().map(|b| dist(a, b)).collect()).collect()
    }

    #[test]
    fn zero_stress_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z1 = random_points(&mut rng, 5, 2);
        let z2 = random_points(&mut rng, 3, 2);
        let g = all_dists(&z1, &z2);
        let (n1, n2) = smacof_step(&z1, &z2, &g, None).unwrap();
        let d = all_dists(&n1, &n2);
        for (a, b) in d.iter().flatten().zip(g.iter().flatten()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn random_instances_strictly_decrease() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z1 = random_points(&mut rng, 6, 2);
            let z2 = random_points(&mut rng, 3, 2);
            let g: Vec<Vec<f64>> = (0..6).map(|_| (0..3).map(|_| rng.random_range(0.1..2.0)).collect()).collect();
            for weights in [None, Some((0..6).map(|_| (0..3).map(|_| rng.random_range(0.0..2.0)).collect::<Vec<f64>>()).collect::<Vec<_>>())] {
                let before = config_raw_stress(&z1, &z2, &g, weights.as_deref()).unwrap();
                let (n1, n2) = smacof_step(&z1, &z2, &g, weights.as_deref()).unwrap();
                let after = config_raw_stress(&n1, &n2, &g, weights.as_deref()).unwrap();
                assert!(after < before, "seed {seed}: {after} !< {before}");
            }
        }
    }

    /// Dense `V⁺ B(X) X` on the full (K+M)×(K+M) system.
    fn dense_guttman(x: &[f64], g: &[f64], w: &[f64], k: usize, m: usize, p: usize) -> Vec<f64> {
        let n = k + m;
        let layout = Layout::new(k, m, p);
        let mut d = vec![0.0; k * m];
        layout.distances(x, &mut d);
        let mut v = DMatrix::<f64>::zeros(n, n);
        let mut b = DMatrix::<f64>::zeros(n, n);
        for r in 0..k {
            for c in 0..m {
                let i = r * m + c;
                let j = k + c;
                let bij = w[i] * g[i] / d[i];
                for (mat, val) in [(&mut v, w[i]), (&mut b, bij)] {
                    mat[(r, r)] += val;
                    mat[(j, j)] += val;
                    mat[(r, j)] -= val;
                    mat[(j, r)] -= val;
                }
            }
        }
        let xm = DMatrix::from_row_slice(n, p, x);
        let y = v.pseudo_inverse(1e-10).unwrap() * b * xm;
        (0..n).flat_map(|i| (0..p).map(move |t| (i, t))).map(|(i, t)| y[(i, t)]).collect()
    }

    #[test]
    fn schur_solve_matches_dense_pseudo_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (k, m, p) = (5, 3, 2);
        let x: Vec<f64> = (0..(k + m) * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..k * m).map(|_| rng.random_range(0.1..2.0)).collect();
        for w in [vec![1.0; k * m], (0..k * m).map(|_| rng.random_range(0.1..2.0)).collect::<Vec<f64>>()] {
            let layout = Layout::new(k, m, p);
            let mut d = vec![0.0; k * m];
            layout.distances(&x, &mut d);
            let mut out = vec![0.0; x.len()];
            layout.guttman(&x, &g, &d, &w, &mut out);
            let expect = dense_guttman(&x, &g, &w, k, m, p);
            for (a, b) in out.iter().zip(&expect) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_weights_rejected() {
        let z1 = vec![vec![0.0], vec![1.0]];
        let z2 = vec![vec![0.5], vec![2.0]];
        let g = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let w = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        assert!(matches!(smacof_step(&z1, &z2, &g, Some(&w)), Err(Error::Degenerate(_))));
    }
}
