use log::{debug, warn};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linalg::thin_svd;
use crate::dataset::ContingencyMatrix;
use crate::error::{Error, Result};

/// Singular values below this are treated as structural zeros. CA singular
/// values are canonical correlations and lie in [0, 1].
pub const NULL_SINGULAR_VALUE: f64 = 1e-10;

/// Correspondence analysis of a cluster-by-category table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaResult {
    /// Category quantifications `B` (J × d): standard column coordinates.
    pub col_coords: DMatrix<f64>,
    /// Standard row coordinates (K × d).
    pub row_coords: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub row_masses: Vec<f64>,
    pub col_masses: Vec<f64>,
    /// Categories with zero mass; their rows of `B` are zero.
    pub absent_categories: Vec<usize>,
}

impl CaResult {
    pub fn dims(&self) -> usize {
        self.singular_values.len()
    }

    /// Total inertia carried by the retained dimensions.
    pub fn inertia(&self) -> f64 {
        self.singular_values.iter().map(|s| s * s).sum()
    }
}

/// Upper bound on the number of non-trivial dimensions of a K × J table whose
/// columns span `q` variables.
pub fn max_dims(k: usize, j: usize, q: usize) -> usize {
    (k.saturating_sub(1)).min(j.saturating_sub(q)).max(1)
}

/// Standardised residual matrix `D_r^{-1/2}(P − rcᵀ)D_c^{-1/2}` together with
/// the masses. Zero-mass columns are left at zero.
pub fn standardized_residuals(f: &ContingencyMatrix) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>)> {
    let total = f.grand_total() as f64;
    if total == 0.0 {
        return Err(Error::Numerical("contingency table is all zeros".into()));
    }
    let (k, j) = (f.n_rows(), f.n_cols());
    let r: Vec<f64> = f.row_sums().iter().map(|&s| s as f64 / total).collect();
    if let Some(empty) = r.iter().position(|&m| m == 0.0) {
        return Err(Error::Data(format!(
            "cluster {empty} is empty; repair empty clusters before correspondence analysis"
        )));
    }
    let c: Vec<f64> = f.column_sums().iter().map(|&s| s as f64 / total).collect();
    let s = DMatrix::from_fn(k, j, |a, b| {
        if c[b] == 0.0 {
            return 0.0;
        }
        let p = f.get(a, b) as f64 / total;
        (p - r[a] * c[b]) / (r[a] * c[b]).sqrt()
    });
    Ok((s, r, c))
}

/// Correspondence analysis keeping `d` leading non-trivial dimensions.
///
/// `d` is truncated to [`max_dims`]; dimensions whose singular value is
/// numerically zero get zero coordinate columns.
pub fn correspondence_analysis(f: &ContingencyMatrix, d: usize) -> Result<CaResult> {
    if d == 0 {
        return Err(Error::Config("correspondence analysis needs d ≥ 1".into()));
    }
    let limit = max_dims(f.n_rows(), f.n_cols(), f.q());
    let d = if d > limit {
        warn!("requested {d} dimensions but the table supports {limit}; truncating");
        limit
    } else {
        d
    };
    let (s, r, c) = standardized_residuals(f)?;
    let absent: Vec<usize> = c
        .iter()
        .enumerate()
        .filter(|(_, &m)| m == 0.0)
        .map(|(i, _)| i)
        .collect();
    if !absent.is_empty() {
        debug!("categories {absent:?} have zero mass and get zero quantifications");
    }

    let (u, sigma, v) = thin_svd(&s);
    let (k, j) = (f.n_rows(), f.n_cols());
    let mut col_coords = DMatrix::zeros(j, d);
    let mut row_coords = DMatrix::zeros(k, d);
    let mut singular_values = Vec::with_capacity(d);
    for dim in 0..d {
        let sv = sigma.get(dim).copied().unwrap_or(0.0);
        if sv <= NULL_SINGULAR_VALUE {
            singular_values.push(0.0);
            continue;
        }
        singular_values.push(sv);
        for b in 0..j {
            if c[b] > 0.0 {
                col_coords[(b, dim)] = v[(b, dim)] / c[b].sqrt();
            }
        }
        for a in 0..k {
            row_coords[(a, dim)] = u[(a, dim)] / r[a].sqrt();
        }
    }
    Ok(CaResult {
        col_coords,
        row_coords,
        singular_values,
        row_masses: r,
        col_masses: c,
        absent_categories: absent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(k: usize, j: usize, counts: &[u64]) -> ContingencyMatrix {
        ContingencyMatrix::from_counts(k, j, 1, counts.to_vec()).unwrap()
    }

    #[test]
    fn independence_gives_null_dimensions() {
        // every row proportional to (1, 2, 3)
        let f = table(2, 3, &[1, 2, 3, 3, 6, 9]);
        let ca = correspondence_analysis(&f, 1).unwrap();
        assert_eq!(ca.singular_values, vec![0.0]);
        assert!(ca.col_coords.iter().all(|&b| b == 0.0));
        assert!(ca.col_coords.iter().all(|b| b.is_finite()));
    }

    #[test]
    fn diagonal_two_by_two_closed_form() {
        // P = diag(1/2, 1/2): one dimension, singular value 1, standard
        // coordinates ±1 for both rows and columns.
        let f = table(2, 2, &[10, 0, 0, 10]);
        let ca = correspondence_analysis(&f, 5).unwrap();
        assert_eq!(ca.dims(), 1);
        assert!((ca.singular_values[0] - 1.0).abs() < 1e-12);
        let b = ca.col_coords.column(0);
        assert!((b[0].abs() - 1.0).abs() < 1e-12);
        assert!((b[0] + b[1]).abs() < 1e-12);
        let a = ca.row_coords.column(0);
        assert!((a[0] * b[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standard_coordinates_are_normalized() {
        let f = table(3, 5, &[5, 1, 0, 7, 2, 1, 9, 3, 0, 4, 2, 2, 8, 1, 6]);
        let ca = correspondence_analysis(&f, 2).unwrap();
        for dim in 0..2 {
            let col = ca.col_coords.column(dim);
            let mean: f64 = col.iter().zip(&ca.col_masses).map(|(b, c)| b * c).sum();
            let var: f64 = col.iter().zip(&ca.col_masses).map(|(b, c)| b * b * c).sum();
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
        assert!(ca.singular_values[0] >= ca.singular_values[1]);
    }

    #[test]
    fn absent_category_gets_zero_row() {
        let f = table(2, 3, &[4, 0, 1, 1, 0, 5]);
        let ca = correspondence_analysis(&f, 1).unwrap();
        assert_eq!(ca.absent_categories, vec![1]);
        assert_eq!(ca.col_coords[(1, 0)], 0.0);
        assert!(ca.col_coords[(0, 0)] != 0.0);
    }

    #[test]
    fn empty_cluster_and_bad_dims_rejected() {
        let f = table(2, 2, &[3, 1, 0, 0]);
        assert!(correspondence_analysis(&f, 1).is_err());
        let f = table(2, 2, &[3, 1, 1, 3]);
        assert!(correspondence_analysis(&f, 0).is_err());
    }

    #[test]
    fn dims_truncated_to_table_rank() {
        let f = ContingencyMatrix::from_counts(4, 4, 2, vec![3, 1, 2, 2, 1, 3, 1, 3, 2, 2, 3, 1, 2, 2, 2, 2]).unwrap();
        // J − q = 2 < K − 1 = 3
        let ca = correspondence_analysis(&f, 3).unwrap();
        assert_eq!(ca.dims(), 2);
    }
}

#[cfg(test)]
mod oracle {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// `V_g V_gᵀ` for each group of (numerically) equal singular values,
    /// recovered from `B` as `D_c^{1/2} B`.
    fn projectors(b: &DMatrix<f64>, sv: &[f64], c: &[f64]) -> Vec<DMatrix<f64>> {
        let v = DMatrix::from_fn(b.nrows(), b.ncols(), |i, s| b[(i, s)] * c[i].sqrt());
        let mut out = Vec::new();
        let mut start = 0;
        while start < sv.len() {
            let mut end = start + 1;
            while end < sv.len() && (sv[end] - sv[start]).abs() < 1e-6 {
                end += 1;
            }
            let vg = v.columns(start, end - start);
            out.push(vg * vg.transpose());
            start = end;
        }
        out
    }

    #[test]
    fn random_table_matches_dense_svd() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (k, j) = (5, 12);
        let counts: Vec<u64> = (0..k * j).map(|_| rng.random_range(1..40)).collect();
        let f = ContingencyMatrix::from_counts(k, j, 1, counts.clone()).unwrap();
        let ca = correspondence_analysis(&f, k - 1).unwrap();

        let p = DMatrix::from_row_slice(k, j, &counts.iter().map(|&v| v as f64).collect::<Vec<_>>());
        let p = &p / p.sum();
        let r = p.column_sum();
        let c = p.row_sum().transpose();
        let dr = DMatrix::from_diagonal(&r.map(|v| 1.0 / v.sqrt()));
        let dc = DMatrix::from_diagonal(&c.map(|v| 1.0 / v.sqrt()));
        // nalgebra's SVD loses accuracy on the rank-deficient centered
        // residuals, so decompose the full-rank uncentered D_r^{-1/2} P D_c^{-1/2}
        // and drop its trivial triple (σ = 1, v = √c)
        let m = &dr * &p * &dc;
        let svd = m.transpose().svd(true, false);
        let v = svd.u.unwrap();
        let sqrt_c = c.map(f64::sqrt);
        let trivial = (0..v.ncols())
            .max_by(|&a, &b| {
                v.column(a)
                    .dot(&sqrt_c)
                    .abs()
                    .total_cmp(&v.column(b).dot(&sqrt_c).abs())
            })
            .unwrap();
        assert!((svd.singular_values[trivial] - 1.0).abs() < 1e-12);
        let mut order: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| i != trivial).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let sv: Vec<f64> = order[..k - 1].iter().map(|&i| svd.singular_values[i]).collect();
        let b = DMatrix::from_fn(j, k - 1, |row, s| v[(row, order[s])] * dc[(row, row)]);

        for (a, o) in ca.singular_values.iter().zip(&sv) {
            assert!((a - o).abs() < 1e-8);
        }
        let cm: Vec<f64> = c.iter().copied().collect();
        for (pa, po) in projectors(&ca.col_coords, &ca.singular_values, &cm)
            .iter()
            .zip(projectors(&b, &sv, &cm))
        {
            assert!((pa - po).abs().max() < 1e-8);
        }
    }
}
