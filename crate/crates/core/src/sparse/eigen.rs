//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use super::DenseMatrix;
use crate::error::{check_dim, Error, Result};

/// Default cap on the order of matrices handed to [`jacobi_eigensolve`].
pub const DEFAULT_SIZE_CAP: usize = 200;

const OFF_DIAGONAL_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition with ascending eigenvalues; `vectors` holds the
/// orthonormal eigenvectors as columns in matching order.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// [`jacobi_eigensolve_capped`] with the default size cap.
pub fn jacobi_eigensolve(s: &DenseMatrix) -> Result<SymmetricEigen> {
    jacobi_eigensolve_capped(s, DEFAULT_SIZE_CAP)
}

/// Cyclic Jacobi rotations until the largest off-diagonal entry drops below
/// `1e-12 * |S|_F`.
pub fn jacobi_eigensolve_capped(s: &DenseMatrix, cap: usize) -> Result<SymmetricEigen> {
    check_dim("jacobi_eigensolve", s.nrows(), s.ncols())?;
    let n = s.nrows();
    if n > cap {
        return Err(Error::TooLarge {
            what: "dense eigenproblem",
            n,
            limit: cap,
        });
    }
    s.check_symmetric(SYMMETRY_TOL)?;

    // Work on the symmetrized copy.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (s.get(i, j) + s.get(j, i));
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let threshold = OFF_DIAGONAL_TOL * s.frobenius_norm();

    let max_off = |a: &[f64]| {
        let mut m = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                m = m.max(a[i * n + j].abs());
            }
        }
        m
    };

    let mut sweeps = 0;
    while max_off(&a) > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                method: "jacobi_eigensolve",
                iterations: sweeps,
                last: max_off(&a),
                history: Vec::new(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= threshold * 1e-3 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, dst, v[k * n + src]);
        }
    }
    Ok(SymmetricEigen { values, vectors })
}
