use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::item_rng;

pub const DEFAULT_KMEANS_MAX_ITER: usize = 100;

/// Starting point for Lloyd iterations.
#[derive(Clone, Debug)]
pub enum KmeansInit {
    /// Initial labels, one per row.
    Assign(Vec<usize>),
    /// Balanced random labels drawn from this seed.
    Seed(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmeansResult {
    pub assign: Vec<usize>,
    /// K × d cluster means.
    pub centroids: DMatrix<f64>,
    pub wcss: f64,
    /// Within-cluster sum of squares after the initial centroid update and
    /// after every Lloyd iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
}

/// Shuffle `0..n` and deal labels round-robin, so every cluster is non-empty
/// whenever `k ≤ n`.
pub fn balanced_random_labels(n: usize, k: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut labels = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        labels[i] = pos % k;
    }
    labels
}

pub(crate) fn squared_distance(y: &DMatrix<f64>, row: usize, g: &DMatrix<f64>, k: usize) -> f64 {
    (0..y.ncols()).map(|c| (y[(row, c)] - g[(k, c)]).powi(2)).sum()
}

/// Cluster means; rows of empty clusters are zero.
pub fn centroids_of(y: &DMatrix<f64>, assign: &[usize], k: usize) -> (DMatrix<f64>, Vec<usize>) {
    let d = y.ncols();
    let mut g = DMatrix::zeros(k, d);
    let mut sizes = vec![0usize; k];
    for (i, &l) in assign.iter().enumerate() {
        sizes[l] += 1;
        for c in 0..d {
            g[(l, c)] += y[(i, c)];
        }
    }
    for (l, &s) in sizes.iter().enumerate() {
        if s > 0 {
            for c in 0..d {
                g[(l, c)] /= s as f64;
            }
        }
    }
    (g, sizes)
}

pub fn within_ss(y: &DMatrix<f64>, assign: &[usize], g: &DMatrix<f64>) -> f64 {
    assign
        .iter()
        .enumerate()
        .map(|(i, &l)| squared_distance(y, i, g, l))
        .sum()
}

/// Per-cluster within sum of squares.
pub fn within_ss_by_cluster(y: &DMatrix<f64>, assign: &[usize], g: &DMatrix<f64>) -> Vec<f64> {
    let mut out = vec![0.0; g.nrows()];
    for (i, &l) in assign.iter().enumerate() {
        out[l] += squared_distance(y, i, g, l);
    }
    out
}

/// Total scatter about the column means.
pub fn total_ss(y: &DMatrix<f64>) -> f64 {
    let n = y.nrows() as f64;
    (0..y.ncols())
        .map(|c| {
            let col = y.column(c);
            let mean = col.sum() / n;
            col.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        })
        .sum()
}

/// Fill empty clusters by moving, one at a time, the point farthest from its
/// current centroid (among clusters with more than one member). Ties go to
/// the lowest row index.
fn repair_empty(y: &DMatrix<f64>, assign: &mut [usize], g: &DMatrix<f64>, sizes: &mut [usize]) {
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let mut best: Option<(usize, f64)> = None;
        for (i, &l) in assign.iter().enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let dist = squared_distance(y, i, g, l);
            if best.is_none_or(|(_, bd)| dist > bd) {
                best = Some((i, dist));
            }
        }
        let Some((i, _)) = best else { return };
        sizes[assign[i]] -= 1;
        assign[i] = empty;
        sizes[empty] += 1;
    }
}

/// Lloyd's algorithm on the rows of `y`.
///
/// Points only change cluster when another centroid is strictly closer, so
/// the within-cluster sum of squares never increases. Stops when the
/// assignment is stable or after `max_iter` iterations.
pub fn kmeans(y: &DMatrix<f64>, k: usize, init: KmeansInit, max_iter: usize) -> Result<KmeansResult> {
    let n = y.nrows();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k-means needs 1 ≤ K ≤ n, got K = {k}, n = {n}")));
    }
    let mut assign = match init {
        KmeansInit::Assign(a) => {
            if a.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: a.len(),
                });
            }
            if let Some(&bad) = a.iter().find(|&&l| l >= k) {
                return Err(Error::Data(format!("initial label {bad} outside [0, {k})")));
            }
            a
        }
        KmeansInit::Seed(seed) => balanced_random_labels(n, k, &mut item_rng(seed, 0)),
    };

    let (g0, mut sizes) = centroids_of(y, &assign, k);
    repair_empty(y, &mut assign, &g0, &mut sizes);
    let (mut g, _) = centroids_of(y, &assign, k);
    let mut history = vec![within_ss(y, &assign, &g)];
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let mut next = assign.clone();
        for (i, label) in next.iter_mut().enumerate() {
            let mut best = *label;
            let mut best_d = squared_distance(y, i, &g, best);
            for c in 0..k {
                let dist = squared_distance(y, i, &g, c);
                if dist < best_d {
                    best = c;
                    best_d = dist;
                }
            }
            *label = best;
        }
        let mut sizes = vec![0usize; k];
        for &l in &next {
            sizes[l] += 1;
        }
        repair_empty(y, &mut next, &g, &mut sizes);
        let stable = next == assign;
        assign = next;
        g = centroids_of(y, &assign, k).0;
        history.push(within_ss(y, &assign, &g));
        if stable {
            break;
        }
    }

    Ok(KmeansResult {
        wcss: *history.last().expect("history is never empty"),
        assign,
        centroids: g,
        history,
        iterations,
    })
}
