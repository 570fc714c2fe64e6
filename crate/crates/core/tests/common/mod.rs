#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use benchfold::model::{DatasetMeta, MeasureSpec, PerformanceTensor};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Average ranks (1-based) of `v`, smallest first, by direct counting.
pub fn midranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            let below = v.iter().filter(|&&y| y < x).count() as f64;
            let equal = v.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&midranks(a), &midranks(b))
}

/// Uniform points in the square [-1, 1]², `k` ideal and `m` object points.
pub fn planted(k: usize, m: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut r = rng(seed);
    let mut pts = |n: usize| -> Vec<Vec<f64>> {
        (0..n).map(|_| vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect()
    };
    let z1 = pts(k);
    let z2 = pts(m);
    (z1, z2)
}

/// Row-wise ranks of the planted distances.
pub fn planted_ranks(k: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let (z1, z2) = planted(k, m, seed);
    z1.iter()
        .map(|a| midranks(&z2.iter().map(|b| dist(a, b)).collect::<Vec<_>>()))
        .collect()
}

/// Every row an independent uniform permutation of 1..=m.
pub fn random_ranks(k: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..k)
        .map(|_| {
            let mut row: Vec<f64> = (1..=m).map(|v| v as f64).collect();
            row.shuffle(&mut r);
            row
        })
        .collect()
}

/// Random ibrier/cindex tensor with some failed iterations.
pub fn random_tensor(l: usize, m: usize, iterations: usize, fail: f64, seed: u64) -> PerformanceTensor {
    let mut r = rng(seed);
    let datasets: Vec<DatasetMeta> = (0..l)
        .map(|i| {
            let n = r.random_range(100..1000);
            DatasetMeta {
                id: format!("d{i:02}"),
                clin: r.random_range(0..15),
                n,
                n_eff: r.random_range(5..n / 2),
                p: r.random_range(1000..60000),
            }
        })
        .collect();
    let methods: Vec<String> = (0..m).map(|j| format!("m{j}")).collect();
    let measures = vec![MeasureSpec::ibrier(), MeasureSpec::cindex()];
    let mut t = PerformanceTensor::new(datasets.clone(), methods.clone(), measures);
    for d in &datasets {
        for method in &methods {
            let skill: f64 = r.random_range(0.0..0.1);
            let failed: Vec<bool> = (0..iterations).map(|_| r.random_bool(fail)).collect();
            let ib = failed
                .iter()
                .map(|&f| (!f).then(|| (0.12 + skill + r.random_range(-0.03..0.03)).max(0.0)))
                .collect();
            let ci = failed
                .iter()
                .map(|&f| (!f).then(|| 0.8 - 2.0 * skill + r.random_range(-0.05..0.05)))
                .collect();
            t.set_cell(&d.id, method, "ibrier", ib).unwrap();
            t.set_cell(&d.id, method, "cindex", ci).unwrap();
        }
    }
    t
}
