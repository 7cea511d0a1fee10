//! One-sided Jacobi SVD for the small dense matrices produced by
//! correspondence analysis (K × J with K ≤ a dozen or so).

use nalgebra::DMatrix;

const MAX_SWEEPS: usize = 80;

/// Thin SVD of a `rows × cols` matrix `s` with `rows ≤ cols`, computed by
/// orthogonalising the columns of `sᵀ`.
///
/// Returns `(u, sigma, v)` with `s = u · diag(sigma) · vᵀ`, singular values in
/// non-increasing order, `u` of shape `rows × rows` and `v` of shape
/// `cols × rows`. Columns of `v` belonging to zero singular values are zero.
/// Each pair of singular vectors is signed so that the largest-magnitude
/// entry of its `v` column (of its `u` column when `v` is zero) is positive,
/// the first such entry on ties.
pub fn thin_svd(s: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let p = s.nrows();
    let mut a = s.transpose();
    let mut w = DMatrix::<f64>::identity(p, p);
    let m = a.nrows();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for r in 0..m {
                    let x = a[(r, i)];
                    let y = a[(r, j)];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for r in 0..m {
                    let x = a[(r, i)];
                    let y = a[(r, j)];
                    a[(r, i)] = c * x - sn * y;
                    a[(r, j)] = sn * x + c * y;
                }
                for r in 0..p {
                    let x = w[(r, i)];
                    let y = w[(r, j)];
                    w[(r, i)] = c * x - sn * y;
                    w[(r, j)] = sn * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..p).map(|i| a.column(i).norm()).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]).then(x.cmp(&y)));

    let scale = norms.iter().copied().fold(0.0, f64::max);
    let mut u = DMatrix::zeros(p, p);
    let mut v = DMatrix::zeros(m, p);
    let mut sigma = Vec::with_capacity(p);
    for (dst, &src) in order.iter().enumerate() {
        let sv = norms[src];
        sigma.push(sv);
        u.set_column(dst, &w.column(src));
        if sv > scale * 1e-14 && sv > 0.0 {
            v.set_column(dst, &(a.column(src) / sv));
        }
        let pivot = |col: nalgebra::DVectorView<f64>| {
            col.iter()
                .fold(0.0_f64, |best, &x| if x.abs() > best.abs() { x } else { best })
        };
        let lead = match pivot(v.column(dst)) {
            0.0 => pivot(u.column(dst)),
            x => x,
        };
        if lead < 0.0 {
            u.column_mut(dst).neg_mut();
            v.column_mut(dst).neg_mut();
        }
    }
    (u, sigma, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(state: &mut u64) -> f64 {
        *state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn reconstructs_and_orthonormal() {
        let mut st = 3;
        for (rows, cols) in [(2, 5), (4, 9), (6, 6), (1, 3)] {
            let s = DMatrix::from_fn(rows, cols, |_, _| lcg(&mut st));
            let (u, sigma, v) = thin_svd(&s);
            let rebuilt = &u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sigma.clone())) * v.transpose();
            assert!((rebuilt - &s).abs().max() < 1e-12);
            assert!((u.transpose() * &u - DMatrix::identity(rows, rows)).abs().max() < 1e-12);
            assert!((v.transpose() * &v - DMatrix::identity(rows, rows)).abs().max() < 1e-12);
            assert!(sigma.windows(2).all(|w| w[0] >= w[1]));
            for c in 0..rows {
                let lead = v
                    .column(c)
                    .iter()
                    .copied()
                    .fold(0.0_f64, |b, x| if x.abs() > b.abs() { x } else { b });
                assert!(lead > 0.0);
            }
        }
    }

    #[test]
    fn rank_deficient_input() {
        let s = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        let (_, sigma, v) = thin_svd(&s);
        assert!((sigma[0] - (70.0f64).sqrt()).abs() < 1e-12);
        assert!(sigma[1].abs() < 1e-12);
        assert!(v.column(1).norm() == 0.0 || v.column(1).norm() > 0.99);
    }
}
