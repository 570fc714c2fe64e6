//! Raw and penalized stress on flat, row-major K×M arrays.

use std::ops::Range;

use crate::error::{Error, Result};

/// Weighted sum of squared residuals between disparities and distances.
pub(crate) fn raw(g: &[f64], d: &[f64], w: &[f64]) -> f64 {
    g.iter().zip(d).zip(w).map(|((g, d), w)| w * (g - d) * (g - d)).sum()
}

/// Weighted mean and population variance of the disparities.
pub(crate) fn moments(g: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    let wsum: f64 = w.iter().sum();
    if !(wsum > 0.0) {
        return Err(Error::Degenerate("all weights are zero".into()));
    }
    let mean = g.iter().zip(w).map(|(g, w)| w * g).sum::<f64>() / wsum;
    let var = g.iter().zip(w).map(|(g, w)| w * (g - mean) * (g - mean)).sum::<f64>() / wsum;
    Ok((mean, var))
}

/// `1 / v²` for one block of disparities.
fn inverse_cv2(g: &[f64], w: &[f64]) -> Result<(f64, f64, f64)> {
    let (mean, var) = moments(g, w)?;
    if !(mean.abs() > 0.0) {
        return Err(Error::Degenerate("disparities have zero mean".into()));
    }
    if !(var > mean * mean * 1e-24) {
        return Err(Error::Degenerate(
            "disparities are constant, so their coefficient of variation is zero".into(),
        ));
    }
    Ok((mean * mean / var, mean, var))
}

/// A block of cells sharing one monotone transform.
#[derive(Debug, Clone)]
pub(crate) struct Group {
    pub range: Range<usize>,
    pub wsum: f64,
    /// Whether the block enters the coefficient-of-variation penalty.
    pub penalized: bool,
}

/// Penalized stress over transform groups:
/// `mean_g(σn_g)^lambda · (1 + omega · mean_g(1 / v_g²))`.
///
/// With a single group this is `σn^lambda · (1 + omega / v²)`.
#[derive(Debug, Clone)]
pub(crate) struct Objective {
    pub w: Vec<f64>,
    pub groups: Vec<Group>,
    pub lambda: f64,
    pub omega: f64,
}

struct Terms {
    sn: f64,
    mu: f64,
    n_fit: f64,
    n_pen: f64,
}

impl Objective {
    pub(crate) fn new(w: Vec<f64>, ranges: Vec<Range<usize>>, penalized: Vec<bool>, lambda: f64, omega: f64) -> Self {
        let groups = ranges
            .into_iter()
            .zip(penalized)
            .map(|(range, penalized)| Group {
                wsum: w[range.clone()].iter().sum(),
                range,
                penalized,
            })
            .collect();
        Objective { w, groups, lambda, omega }
    }

    fn active(&self) -> impl Iterator<Item = &Group> {
        self.groups.iter().filter(|gr| gr.wsum > 0.0)
    }

    fn terms(&self, g: &[f64], d: &[f64]) -> Result<Terms> {
        let n_fit = self.active().count() as f64;
        let n_pen = self.active().filter(|gr| gr.penalized).count() as f64;
        if n_fit == 0.0 {
            return Err(Error::Degenerate("all weights are zero".into()));
        }
        if n_pen == 0.0 {
            return Err(Error::Degenerate("no block of dissimilarities varies".into()));
        }
        let mut sn = 0.0;
        let mut icv = 0.0;
        for gr in self.active() {
            let (gg, dd, ww) = (&g[gr.range.clone()], &d[gr.range.clone()], &self.w[gr.range.clone()]);
            let scale: f64 = gg.iter().zip(ww).map(|(g, w)| w * g * g).sum();
            if !(scale > 0.0) {
                return Err(Error::Degenerate("disparities have zero mean".into()));
            }
            sn += raw(gg, dd, ww) / scale;
            if gr.penalized {
                icv += inverse_cv2(gg, ww)?.0;
            }
        }
        Ok(Terms {
            sn: sn / n_fit,
            mu: 1.0 + self.omega * icv / n_pen,
            n_fit,
            n_pen,
        })
    }

    /// Mean over groups of raw stress divided by `Σ w·d̂²`.
    pub(crate) fn normalized(&self, g: &[f64], d: &[f64]) -> Result<f64> {
        Ok(self.terms(g, d)?.sn)
    }

    pub(crate) fn value(&self, g: &[f64], d: &[f64]) -> Result<f64> {
        let t = self.terms(g, d)?;
        Ok(t.sn.powf(self.lambda) * t.mu)
    }

    /// Gradient with respect to the disparities.
    pub(crate) fn gradient(&self, g: &[f64], d: &[f64], out: &mut [f64]) -> Result<()> {
        let t = self.terms(g, d)?;
        let outer = if t.sn > 0.0 {
            self.lambda * t.sn.powf(self.lambda - 1.0) * t.mu
        } else {
            0.0
        };
        let snl = t.sn.powf(self.lambda);
        out.fill(0.0);
        for gr in self.active() {
            let r = gr.range.clone();
            let (gg, dd, ww) = (&g[r.clone()], &d[r.clone()], &self.w[r.clone()]);
            let scale: f64 = gg.iter().zip(ww).map(|(g, w)| w * g * g).sum();
            let ratio = raw(gg, dd, ww) / scale;
            let (mean, var, qc) = if gr.penalized {
                let (_, mean, var) = inverse_cv2(gg, ww)?;
                (mean, var, 2.0 * self.omega * mean / (gr.wsum * var * var * t.n_pen))
            } else {
                (0.0, 0.0, 0.0)
            };
            for (j, i) in r.enumerate() {
                let dsn = 2.0 * ww[j] * ((gg[j] - dd[j]) - ratio * gg[j]) / (scale * t.n_fit);
                let dq = qc * ww[j] * (var - mean * (gg[j] - mean));
                out[i] = outer * dsn + snl * dq;
            }
        }
        Ok(())
    }
}

pub(crate) fn flatten(rows: &[Vec<f64>], what: &str) -> Result<(usize, usize, Vec<f64>)> {
    let k = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if k == 0 || m == 0 {
        return Err(Error::structural(format!("{what} is empty")));
    }
    if let Some(r) = rows.iter().position(|r| r.len() != m) {
        return Err(Error::structural(format!(
            "{what} row {r} has {} entries, expected {m}",
            rows[r].len()
        )));
    }
    Ok((k, m, rows.iter().flatten().copied().collect()))
}

pub(crate) fn flat_weights(weights: Option<&[Vec<f64>]>, k: usize, m: usize) -> Result<Vec<f64>> {
    let Some(rows) = weights else {
        return Ok(vec![1.0; k * m]);
    };
    let (wk, wm, w) = flatten(rows, "weights")?;
    if (wk, wm) != (k, m) {
        return Err(Error::structural(format!("weights are {wk}×{wm}, expected {k}×{m}")));
    }
    if let Some(v) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::structural(format!("weights must be finite and non-negative, got {v}")));
    }
    Ok(w)
}

fn checked(
    disparities: &[Vec<f64>],
    distances: &[Vec<f64>],
    weights: Option<&[Vec<f64>]>,
    lambda: f64,
    omega: f64,
) -> Result<(usize, usize, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (k, m, g) = flatten(disparities, "disparities")?;
    let (dk, dm, d) = flatten(distances, "distances")?;
    if (k, m) != (dk, dm) {
        return Err(Error::structural(format!(
            "disparities are {k}×{m} but distances are {dk}×{dm}"
        )));
    }
    if !(lambda > 0.0 && lambda <= 1.0) || !(omega >= 0.0) {
        return Err(Error::structural(format!(
            "penalty parameters out of range: lambda={lambda}, omega={omega}"
        )));
    }
    let w = flat_weights(weights, k, m)?;
    Ok((k, m, g, d, w))
}

/// Penalized stress `σn^lambda · (1 + omega / v²)`, where `σn` is the raw
/// stress normalized by `Σ w·d̂²` and `v` the weighted coefficient of
/// variation of all disparities.
///
/// `weights` defaults to all ones.
pub fn penalized_stress(
    disparities: &[Vec<f64>],
    distances: &[Vec<f64>],
    weights: Option<&[Vec<f64>]>,
    lambda: f64,
    omega: f64,
) -> Result<f64> {
    let (k, m, g, d, w) = checked(disparities, distances, weights, lambda, omega)?;
    Objective::new(w, vec![0..k * m], vec![true], lambda, omega).value(&g, &d)
}

/// Row-conditional penalized stress: the mean of the row-wise normalized
/// stresses raised to `lambda`, times `1 + omega · mean_k(1 / v_k²)`.
///
/// Rows listed in `unpenalized` are left out of the penalty mean; the fit
/// uses this for rows whose dissimilarities are all tied.
pub fn row_penalized_stress(
    disparities: &[Vec<f64>],
    distances: &[Vec<f64>],
    weights: Option<&[Vec<f64>]>,
    lambda: f64,
    omega: f64,
    unpenalized: &[usize],
) -> Result<f64> {
    let (k, m, g, d, w) = checked(disparities, distances, weights, lambda, omega)?;
    let ranges = (0..k).map(|r| r * m..(r + 1) * m).collect();
    let pen = (0..k).map(|r| !unpenalized.contains(&r)).collect();
    Objective::new(w, ranges, pen, lambda, omega).value(&g, &d)
}
