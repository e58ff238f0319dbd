//! Singular value decomposition for small dense matrices via one-sided Jacobi
//! rotations. Rotating column pairs of A until they are mutually orthogonal
//! yields A V = U diag(sigma); the method is simple, backward stable and more
//! than accurate enough for the handful-of-symbols operators in this crate.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAX_SWEEPS: usize = 64;
const ORTHO_TOL: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct Svd {
    /// Singular values in descending order, length min(rows, cols).
    pub values: Vec<f64>,
    /// Left singular vectors as columns (economy size).
    pub u: Matrix,
    /// Right singular vectors as columns, matching `values`.
    pub v: Matrix,
}

impl Svd {
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn right_vector(&self, k: usize) -> Vec<f64> {
        self.v.column(k)
    }
}

/// Full singular system of a small dense matrix.
pub fn svd_small(a: &Matrix) -> Result<Svd> {
    if a.rows() < a.cols() {
        // work on the transpose and swap the factors back
        let t = svd_small(&a.transpose())?;
        return Ok(Svd {
            values: t.values,
            u: t.v,
            v: t.u,
        });
    }
    let m = a.rows();
    let n = a.cols();
    // b holds the working columns, updated in place
    let mut b: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v = Matrix::identity(n);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for k in 0..m {
                    alpha += b[i][k] * b[i][k];
                    beta += b[j][k] * b[j][k];
                    gamma += b[i][k] * b[j][k];
                }
                let limit = ORTHO_TOL * (alpha * beta).sqrt();
                if gamma.abs() <= limit || limit == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..m {
                    let bi = b[i][k];
                    let bj = b[j][k];
                    b[i][k] = c * bi - s * bj;
                    b[j][k] = s * bi + c * bj;
                }
                for k in 0..n {
                    let vi = v.get(k, i);
                    let vj = v.get(k, j);
                    v.set(k, i, c * vi - s * vj);
                    v.set(k, j, s * vi + c * vj);
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "one-sided Jacobi SVD did not converge within {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = b
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());

    let mut values = Vec::with_capacity(n);
    let mut u = Matrix::zeros(m, n);
    let mut vs = Matrix::zeros(n, n);
    for (rank, &idx) in order.iter().enumerate() {
        let sigma = norms[idx];
        values.push(sigma);
        if sigma > 0.0 {
            for k in 0..m {
                u.set(k, rank, b[idx][k] / sigma);
            }
        }
        for k in 0..n {
            vs.set(k, rank, v.get(k, idx));
        }
    }
    Ok(Svd { values, u, v: vs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::dot;
    use proptest::prelude::*;

    #[test]
    fn identity_has_unit_values() {
        let svd = svd_small(&Matrix::identity(2)).unwrap();
        assert!((svd.values[0] - 1.0).abs() < 1e-14);
        assert!((svd.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_values_sorted() {
        let m = Matrix::new(3, 3, vec![2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let svd = svd_small(&m).unwrap();
        assert!((svd.values[0] - 5.0).abs() < 1e-13);
        assert!((svd.values[1] - 2.0).abs() < 1e-13);
        assert!((svd.values[2] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rectangular_shapes() {
        let tall = Matrix::new(3, 2, vec![1.0, 0.0, 0.0, 2.0, 0.0, 0.0]).unwrap();
        let svd = svd_small(&tall).unwrap();
        assert_eq!(svd.values.len(), 2);
        let wide = tall.transpose();
        let svd_w = svd_small(&wide).unwrap();
        assert_eq!(svd_w.values.len(), 2);
        assert!((svd.values[0] - svd_w.values[0]).abs() < 1e-13);
    }

    fn reconstruct(svd: &Svd, rows: usize, cols: usize) -> Matrix {
        let mut out = Matrix::zeros(rows, cols);
        for k in 0..svd.values.len() {
            for i in 0..rows {
                for j in 0..cols {
                    out.set(
                        i,
                        j,
                        out.get(i, j) + svd.values[k] * svd.u.get(i, k) * svd.v.get(j, k),
                    );
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn factors_reconstruct_and_v_is_orthonormal(
            entries in proptest::collection::vec(-3.0f64..3.0, 9),
        ) {
            let a = Matrix::new(3, 3, entries).unwrap();
            let svd = svd_small(&a).unwrap();
            // descending order
            for k in 1..3 {
                prop_assert!(svd.values[k - 1] + 1e-12 >= svd.values[k]);
            }
            // orthonormal right vectors
            for i in 0..3 {
                for j in 0..3 {
                    let d = dot(&svd.v.column(i), &svd.v.column(j));
                    let expected = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((d - expected).abs() < 1e-10);
                }
            }
            // A = U S V^T
            let back = reconstruct(&svd, 3, 3);
            prop_assert!(a.max_abs_diff(&back) < 1e-10);
            // A v_k = sigma_k u_k
            for k in 0..3 {
                let av = a.matvec(&svd.v.column(k)).unwrap();
                for i in 0..3 {
                    prop_assert!((av[i] - svd.values[k] * svd.u.get(i, k)).abs() < 1e-10);
                }
            }
        }
    }
}
