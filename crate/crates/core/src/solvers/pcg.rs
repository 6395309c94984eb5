use crate::error::{check_dim, Error, Result};
use crate::sparse::vector::{axpy, dot, norm2};
use crate::sparse::{Cholesky, CsrMatrix};

/// Symmetric positive definite preconditioner `B ~ A^{-1}`.
pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64]) -> Vec<f64>;
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }
}

/// Inverse of the diagonal of `A`.
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let inv_diag = a
            .diagonal()
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                if d > 0.0 {
                    Ok(1.0 / d)
                } else {
                    Err(Error::NotPositiveDefinite(format!("diagonal entry {i} is {d:e}")))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { inv_diag })
    }
}

impl Preconditioner for JacobiPreconditioner {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        r.iter().zip(&self.inv_diag).map(|(a, b)| a * b).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub x: Vec<f64>,
    pub iters: usize,
    /// `|r_k| / |f|` for k = 0..=iters.
    pub history: Vec<f64>,
}

/// Preconditioned conjugate gradients from a zero start; stops when
/// `|f - A x| <= rtol |f|`.
pub fn pcg(
    a: &CsrMatrix,
    f: &[f64],
    precond: &dyn Preconditioner,
    rtol: f64,
    max_iter: usize,
) -> Result<PcgOutcome> {
    check_dim("pcg", a.ncols(), f.len())?;
    let n = f.len();
    let mut x = vec![0.0; n];
    let fnorm = norm2(f);
    if fnorm == 0.0 {
        return Ok(PcgOutcome { x, iters: 0, history: vec![0.0] });
    }
    let mut r = f.to_vec();
    let mut z = precond.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut history = vec![1.0];
    for it in 1..=max_iter {
        a.spmv_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Breakdown(format!("pcg: p^T A p = {pap:e} at iteration {it}")));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rel = norm2(&r) / fnorm;
        history.push(rel);
        if !rel.is_finite() {
            return Err(Error::NonFinite("pcg"));
        }
        if rel <= rtol {
            return Ok(PcgOutcome { x, iters: it, history });
        }
        z = precond.apply(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::NoConvergence {
        method: "pcg",
        iterations: max_iter,
        last: *history.last().unwrap(),
        history,
    })
}

/// Dimension below which SPD systems are solved by dense Cholesky.
pub const DENSE_LIMIT: usize = 5000;

/// Reusable solver for a fixed SPD matrix: dense Cholesky at desk scale,
/// Jacobi-preconditioned CG to `1e-12` above it.
#[derive(Debug, Clone)]
pub enum SpdSolver {
    Dense(Cholesky),
    Iterative { a: CsrMatrix, rtol: f64 },
}

impl SpdSolver {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        Self::with_limit(a, DENSE_LIMIT, 1e-12)
    }

    /// Dense below `limit` unknowns, CG to `rtol` otherwise.
    pub fn with_limit(a: &CsrMatrix, limit: usize, rtol: f64) -> Result<Self> {
        if a.nrows() <= limit {
            Ok(Self::Dense(Cholesky::factor(&a.to_dense())?))
        } else {
            Ok(Self::Iterative { a: a.clone(), rtol })
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Dense(c) => c.solve(b),
            Self::Iterative { a, rtol } => {
                let pre = JacobiPreconditioner::new(a)?;
                Ok(pcg(a, b, &pre, *rtol, 20 * a.nrows().max(100))?.x)
            }
        }
    }
}
