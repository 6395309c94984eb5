//! Complement operator `A_f`, the projection `pi_f` and its approximations,
//! and the modified prolongation `(I - pi_f~) P`.

mod polynomial;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarse::CoarseSpace;
use crate::error::{check_dim, Error, Result};
use crate::krylov::{lanczos_extremes, LanczosOptions, Target};
use crate::solvers::{SpdSolver, DENSE_LIMIT};
use crate::sparse::vector::random_vector;
use crate::sparse::{galerkin, Cholesky, CsrMatrix};

pub use polynomial::{cg_apply, chebyshev_apply, sa_error_polynomial, sa_polynomial_apply};

/// Safety margin applied to the measured extremes of `A_f` for Chebyshev.
pub const CHEBYSHEV_MARGIN: f64 = 0.02;

const BOUNDS_SEED: u64 = 0xb0_4d5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    Sa,
    Chebyshev,
    Cg,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Sa => "sa",
            Method::Chebyshev => "chebyshev",
            Method::Cg => "cg",
        }
    }
}

/// How `A_f^{-1}` is approximated. `nu = 0` means no modification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSpec {
    pub method: Method,
    pub nu: usize,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub drop_tol: f64,
}

impl PolynomialSpec {
    pub fn new(method: Method, nu: usize) -> Self {
        Self {
            method,
            nu,
            alpha: None,
            beta: None,
            drop_tol: 0.0,
        }
    }

    pub fn exact() -> Self {
        Self::new(Method::Exact, 1)
    }

    /// True when the spec leaves `P` unchanged.
    pub fn is_identity(&self) -> bool {
        self.method != Method::Exact && self.nu == 0
    }
}

/// `A_f = P_perp^T A P_perp`.
pub fn build_af(a: &CsrMatrix, p_perp: &CsrMatrix) -> Result<CsrMatrix> {
    galerkin(a, p_perp)
}

#[derive(Debug, Clone)]
enum Kind {
    Zero,
    Exact(SpdSolver),
    Sa(usize),
    Chebyshev { nu: usize, alpha: f64, beta: f64 },
    Cg(usize),
}

/// Approximate inverse of `A_f` configured from a [`PolynomialSpec`].
#[derive(Debug, Clone)]
pub struct AfInverse<'a> {
    af: &'a CsrMatrix,
    kind: Kind,
}

impl<'a> AfInverse<'a> {
    pub fn new(af: &'a CsrMatrix, spec: &PolynomialSpec) -> Result<Self> {
        let kind = if spec.is_identity() || af.nrows() == 0 {
            Kind::Zero
        } else {
            match spec.method {
                Method::Exact => Kind::Exact(SpdSolver::new(af)?),
                Method::Sa => Kind::Sa(spec.nu),
                Method::Cg => Kind::Cg(spec.nu),
                Method::Chebyshev => {
                    let (alpha, beta) = match (spec.alpha, spec.beta) {
                        (Some(a), Some(b)) => (a, b),
                        (a, b) => {
                            let (lo, hi) = chebyshev_bounds(af)?;
                            (a.unwrap_or(lo), b.unwrap_or(hi))
                        }
                    };
                    if !(alpha > 0.0 && alpha <= beta && beta <= 1.0) {
                        return Err(Error::InvalidArgument(format!(
                            "chebyshev bounds need 0 < alpha <= beta <= 1, got [{alpha}, {beta}]"
                        )));
                    }
                    Kind::Chebyshev {
                        nu: spec.nu,
                        alpha,
                        beta,
                    }
                }
            }
        };
        Ok(Self { af, kind })
    }

    /// `q(A_f) r`.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_dim("AfInverse::apply", self.af.nrows(), r.len())?;
        match &self.kind {
            Kind::Zero => Ok(vec![0.0; r.len()]),
            Kind::Exact(s) => s.solve(r),
            Kind::Sa(nu) => Ok(sa_polynomial_apply(self.af, *nu, r)),
            Kind::Chebyshev { nu, alpha, beta } => chebyshev_apply(self.af, *nu, *alpha, *beta, r),
            Kind::Cg(nu) => cg_apply(self.af, *nu, r),
        }
    }

    /// Chebyshev interval in use, if any.
    pub fn interval(&self) -> Option<(f64, f64)> {
        match self.kind {
            Kind::Chebyshev { alpha, beta, .. } => Some((alpha, beta)),
            _ => None,
        }
    }
}

/// Lanczos extremes of `A_f` widened by [`CHEBYSHEV_MARGIN`], `beta <= 1`.
pub fn chebyshev_bounds(af: &CsrMatrix) -> Result<(f64, f64)> {
    let ext = extreme_eigenvalues(af)?;
    let beta = (ext.1 * (1.0 + CHEBYSHEV_MARGIN)).min(1.0);
    let alpha = (ext.0 * (1.0 - CHEBYSHEV_MARGIN)).min(beta);
    Ok((alpha, beta))
}

/// Lanczos estimates of `(lambda_min, lambda_max)` of a symmetric matrix.
pub fn extreme_eigenvalues(m: &CsrMatrix) -> Result<(f64, f64)> {
    let n = m.nrows();
    if n == 1 {
        let v = m.get(0, 0);
        return Ok((v, v));
    }
    let mut op = |x: &[f64]| m.spmv(x);
    let mut rng = ChaCha8Rng::seed_from_u64(BOUNDS_SEED);
    let start = random_vector(&mut rng, n);
    let ext = lanczos_extremes(
        &mut op,
        None,
        &start,
        LanczosOptions {
            max_steps: 300,
            tol: 1e-8,
            target: Target::Both,
        },
    )?;
    Ok((ext.min, ext.max))
}

/// `pi_f x = P_perp A_f^{-1} P_perp^T A x` by dense Cholesky of `A_f`.
pub fn apply_pi_f_exact(a: &CsrMatrix, p_perp: &CsrMatrix, af: &CsrMatrix, x: &[f64]) -> Result<Vec<f64>> {
    let chol = exact_af_factor(af)?;
    apply_pi_f_with(a, p_perp, x, |r| chol.solve(r))
}

/// Dense Cholesky factor of `A_f`, refused above the dense limit.
pub fn exact_af_factor(af: &CsrMatrix) -> Result<Cholesky> {
    if af.nrows() > DENSE_LIMIT {
        return Err(Error::TooLarge {
            what: "A_f",
            n: af.nrows(),
            limit: DENSE_LIMIT,
        });
    }
    Cholesky::factor(&af.to_dense())
}

/// `P_perp q(A_f) P_perp^T A x` for any approximate inverse.
pub fn apply_pi_f_approx(a: &CsrMatrix, p_perp: &CsrMatrix, inv: &AfInverse<'_>, x: &[f64]) -> Result<Vec<f64>> {
    apply_pi_f_with(a, p_perp, x, |r| inv.apply(r))
}

fn apply_pi_f_with(
    a: &CsrMatrix,
    p_perp: &CsrMatrix,
    x: &[f64],
    solve: impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    if p_perp.ncols() == 0 {
        return Ok(vec![0.0; x.len()]);
    }
    let ax = a.spmv(x)?;
    let r = p_perp.spmv_transpose(&ax)?;
    p_perp.spmv(&solve(&r)?)
}

/// Modified prolongation, its Galerkin coarse matrix and sparsity figures.
#[derive(Debug, Clone)]
pub struct ModifiedCoarseSpace {
    pub p_tilde: CsrMatrix,
    pub a_c: CsrMatrix,
    pub spec: PolynomialSpec,
    /// `100 nnz(P~) / (N N_c)`.
    pub nnz_percent: f64,
    /// `(nnz(A) + nnz(A_c)) / nnz(A)`.
    pub operator_complexity: f64,
    coarse: SpdSolver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildRecord {
    pub method: Method,
    pub nu: usize,
    pub nnz_percent: f64,
    pub operator_complexity: f64,
}

impl ModifiedCoarseSpace {
    pub fn record(&self) -> BuildRecord {
        BuildRecord {
            method: self.spec.method,
            nu: self.spec.nu,
            nnz_percent: self.nnz_percent,
            operator_complexity: self.operator_complexity,
        }
    }

    pub fn coarse_solver(&self) -> &SpdSolver {
        &self.coarse
    }
}

/// Builds `P~` column by column: `p_j - P_perp q(A_f) P_perp^T A p_j`.
pub fn build_modified_p(
    a: &CsrMatrix,
    cs: &CoarseSpace,
    af: &CsrMatrix,
    spec: &PolynomialSpec,
) -> Result<ModifiedCoarseSpace> {
    if spec.drop_tol < 0.0 {
        return Err(Error::InvalidArgument(format!("drop_tol must be >= 0, got {}", spec.drop_tol)));
    }
    let p_tilde = if spec.is_identity() || cs.n_complement() == 0 {
        cs.p.clone()
    } else {
        let inv = AfInverse::new(af, spec)?;
        let n = a.nrows();
        let rhs = cs.p_perp.transpose().matmul(&a.matmul(&cs.p)?)?;
        let rhs_cols = rhs.columns();
        let p_cols = cs.p.columns();
        let nf = cs.n_complement();
        let columns = rhs_cols
            .par_iter()
            .zip(p_cols.par_iter())
            .map(|((fr, fv), (pr, pv))| -> Result<(Vec<usize>, Vec<f64>)> {
                let mut f = vec![0.0; nf];
                for (&i, &v) in fr.iter().zip(fv) {
                    f[i] = v;
                }
                let y = inv.apply(&f)?;
                let mut col = cs.p_perp.spmv(&y)?;
                for v in col.iter_mut() {
                    *v = -*v;
                }
                for (&i, &v) in pr.iter().zip(pv) {
                    col[i] += v;
                }
                let cut = spec.drop_tol * col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let (rows, vals): (Vec<usize>, Vec<f64>) = (0..n)
                    .filter(|&i| col[i] != 0.0 && col[i].abs() >= cut)
                    .map(|i| (i, col[i]))
                    .unzip();
                Ok((rows, vals))
            })
            .collect::<Result<Vec<_>>>()?;
        CsrMatrix::from_columns(n, &columns)?
    };
    let a_c = galerkin(a, &p_tilde)?;
    let coarse = SpdSolver::new(&a_c)?;
    let (n, nc) = (p_tilde.nrows() as f64, p_tilde.ncols() as f64);
    Ok(ModifiedCoarseSpace {
        nnz_percent: 100.0 * p_tilde.nnz() as f64 / (n * nc),
        operator_complexity: (a.nnz() + a_c.nnz()) as f64 / a.nnz() as f64,
        p_tilde,
        a_c,
        spec: *spec,
        coarse,
    })
}

/// Solves `P~^T A P~ u_c = P~^T f`; returns `(u_c, P~ u_c)`.
pub fn upscaled_solve(mcs: &ModifiedCoarseSpace, f: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let rhs = mcs.p_tilde.spmv_transpose(f)?;
    let uc = mcs.coarse.solve(&rhs)?;
    let u = mcs.p_tilde.spmv(&uc)?;
    Ok((uc, u))
}
