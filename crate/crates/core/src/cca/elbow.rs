use serde::{Deserialize, Serialize};

use super::cluster::{alternate, best_of, restart_candidates, CcaParams, CcaSolution};
use crate::dataset::IndicatorMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElbowPoint {
    pub k: usize,
    /// Within-cluster inertia of the indicator matrix.
    pub wcss: f64,
    /// Total inertia of the indicator matrix.
    pub tss: f64,
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElbowCurve {
    pub points: Vec<ElbowPoint>,
    /// Selected K (a value from the swept range, not an index).
    pub knee: usize,
}

/// Index of the point farthest (perpendicular distance) from the chord through
/// the first and last points. Ties resolve to the earliest point.
pub fn chord_knee(points: &[(f64, f64)]) -> usize {
    if points.len() < 3 {
        return 0;
    }
    let (x0, y0) = points[0];
    let (x1, y1) = points[points.len() - 1];
    let (dx, dy) = (x1 - x0, y1 - y0);
    let len = (dx * dx + dy * dy).sqrt();
    if len == 0.0 {
        return 0;
    }
    let mut best = (0, 0.0);
    for (i, &(x, y)) in points.iter().enumerate() {
        let dist = (dy * (x - x0) - dx * (y - y0)).abs() / len;
        if dist > best.1 {
            best = (i, dist);
        }
    }
    best.0
}

/// Grow `solution` to `new_k` clusters by repeatedly halving the largest
/// cluster at its mean along its widest coordinate.
pub(crate) fn split_largest(solution: &CcaSolution, new_k: usize) -> Vec<usize> {
    let y = &solution.y;
    let mut labels = solution.assign.clone();
    for next in solution.k..new_k {
        let mut sizes = vec![0usize; next];
        for &l in &labels {
            sizes[l] += 1;
        }
        let target = (0..next)
            .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == target).collect();
        let m = members.len() as f64;
        let mut widest = None;
        for s in 0..y.ncols() {
            let mean = members.iter().map(|&i| y[(i, s)]).sum::<f64>() / m;
            let var = members.iter().map(|&i| (y[(i, s)] - mean).powi(2)).sum::<f64>();
            if widest.is_none_or(|(_, _, v)| var > v) {
                widest = Some((s, mean, var));
            }
        }
        let mut moved = 0;
        if let Some((s, mean, var)) = widest {
            if var > 0.0 {
                for &i in &members {
                    if y[(i, s)] > mean {
                        labels[i] = next;
                        moved += 1;
                    }
                }
            }
        }
        if moved == 0 || moved == members.len() {
            for &i in &members {
                labels[i] = target;
            }
            // farthest member from the cluster mean, lowest index on ties
            let centre: Vec<f64> = (0..y.ncols())
                .map(|s| members.iter().map(|&i| y[(i, s)]).sum::<f64>() / m)
                .collect();
            let far = members
                .iter()
                .copied()
                .map(|i| {
                    let d: f64 = (0..y.ncols()).map(|s| (y[(i, s)] - centre[s]).powi(2)).sum();
                    (i, d)
                })
                .fold(None, |acc: Option<(usize, f64)>, (i, d)| match acc {
                    Some((_, bd)) if bd >= d => acc,
                    _ => Some((i, d)),
                });
            if let Some((i, _)) = far {
                labels[i] = next;
            }
        }
    }
    labels
}

/// Solutions for every K in `ks`, plus the normalized-wcss curve and knee.
///
/// For every K after the first, one extra restart starts from the previous
/// K's best solution with its largest cluster split, alongside the usual
/// `params.restarts` random starts. Splitting a cluster can only add
/// between-cluster inertia and the alternation never removes any, so the
/// normalized curve is non-increasing in K.
pub fn elbow_solutions(
    z: &IndicatorMatrix,
    ks: &[usize],
    params: &CcaParams,
) -> Result<(ElbowCurve, Vec<CcaSolution>)> {
    if ks.is_empty() {
        return Err(Error::Config("empty K range".into()));
    }
    if ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("K range must be strictly increasing".into()));
    }
    let mut solutions: Vec<CcaSolution> = Vec::with_capacity(ks.len());
    for &k in ks {
        let mut candidates = restart_candidates(z, k, params)?;
        if let Some(prev) = solutions.last() {
            let init = split_largest(prev, k);
            candidates.push(alternate(z, k, init, params, params.restarts)?);
        }
        solutions.push(best_of(candidates));
    }
    let points: Vec<ElbowPoint> = solutions
        .iter()
        .map(|s| ElbowPoint {
            k: s.k,
            wcss: s.total_inertia - s.between_inertia,
            tss: s.total_inertia,
            normalized: s.normalized_wcss(),
        })
        .collect();
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.k as f64, p.normalized)).collect();
    let knee = points[chord_knee(&xy)].k;
    Ok((ElbowCurve { points, knee }, solutions))
}

pub fn elbow(z: &IndicatorMatrix, ks: &[usize], params: &CcaParams) -> Result<ElbowCurve> {
    elbow_solutions(z, ks, params).map(|(curve, _)| curve)
}
