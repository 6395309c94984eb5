use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{lanczos_extremes, LanczosOptions, Target};
use crate::sparse::vector::random_vector;
use crate::sparse::CsrMatrix;

/// Safety factor applied to the estimated `lambda_max(diag(A)^{-1} A)`.
pub const OMEGA_SAFETY: f64 = 1.05;

const ESTIMATOR_SEED: u64 = 0x5eed_0d1a;

/// How the smoothing matrix `D` is formed from `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DMode {
    /// `D = omega^{-1} diag(A)` with `omega = 1 / (1.05 * lambda_max)`.
    #[default]
    ScaledDiagonal,
    /// `D_ii = sum_j |a_ij|`.
    L1,
}

/// Builds a diagonal `D` with `v^T A v <= v^T D v`.
pub fn build_d(a: &CsrMatrix, mode: DMode) -> Result<CsrMatrix> {
    Ok(build_d_with_omega(a, mode)?.0)
}

/// As [`build_d`], also returning `omega` (1 for the l1 mode).
pub fn build_d_with_omega(a: &CsrMatrix, mode: DMode) -> Result<(CsrMatrix, f64)> {
    let diag = a.diagonal();
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            op: "build_d",
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if let Some((i, v)) = diag.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NotPositiveDefinite(format!(
            "diagonal entry {i} is {v:e}, expected positive"
        )));
    }
    match mode {
        DMode::L1 => {
            let d: Vec<f64> = (0..a.nrows())
                .map(|i| a.row(i).1.iter().map(|v| v.abs()).sum())
                .collect();
            Ok((CsrMatrix::from_diagonal(&d), 1.0))
        }
        DMode::ScaledDiagonal => {
            let lambda = jacobi_scaled_lambda_max(a, &diag)?;
            let omega = 1.0 / (OMEGA_SAFETY * lambda);
            let d: Vec<f64> = diag.iter().map(|v| v / omega).collect();
            Ok((CsrMatrix::from_diagonal(&d), omega))
        }
    }
}

/// Estimate of `lambda_max(diag^{-1/2} A diag^{-1/2})`.
pub(crate) fn jacobi_scaled_lambda_max(a: &CsrMatrix, diag: &[f64]) -> Result<f64> {
    let n = a.nrows();
    if n == 1 {
        return Ok(1.0);
    }
    let inv_sqrt: Vec<f64> = diag.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut tmp = vec![0.0; n];
    let mut op = |x: &[f64]| {
        let scaled: Vec<f64> = x.iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect();
        a.spmv_into(&scaled, &mut tmp);
        Ok(tmp.iter().zip(&inv_sqrt).map(|(a, b)| a * b).collect())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ESTIMATOR_SEED);
    let start = random_vector(&mut rng, n);
    let ext = lanczos_extremes(
        &mut op,
        None,
        &start,
        LanczosOptions {
            max_steps: 120,
            tol: 1e-6,
            target: Target::Max,
        },
    )?;
    Ok(ext.max)
}

/// Largest Rayleigh quotient of the pencil `(A, D)` for diagonal `D`.
pub fn max_rayleigh_quotient(a: &CsrMatrix, d: &CsrMatrix) -> Result<f64> {
    jacobi_scaled_lambda_max(a, &d.diagonal())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_scaled_diagonal_dominates() {
        let a = CsrMatrix::identity(4);
        let (d, omega) = build_d_with_omega(&a, DMode::ScaledDiagonal).unwrap();
        assert!(omega <= 1.0);
        assert!(d.diagonal().iter().all(|&v| v >= 1.0));
    }

    #[test]
    fn l1_two_by_two() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]).unwrap();
        let d = build_d(&a, DMode::L1).unwrap();
        assert_eq!(d.diagonal(), vec![3.0, 3.0]);
        // lambda_max(A) = 3 so D - A is PSD
        assert!(max_rayleigh_quotient(&a, &d).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn rejects_nonpositive_diagonal() {
        let a = CsrMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(build_d(&a, DMode::L1), Err(Error::NotPositiveDefinite(_))));
    }
}
