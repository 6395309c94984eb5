//! Measured constants (WAP, SAP, conditioning, perturbation) and the
//! evaluation of every error bound with those measured constants.

mod report;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coarse::{apply_pi_d, CoarseSpace};
use crate::error::{check_dim, Error, Result};
use crate::krylov::{lanczos_extremes, Extremes, LanczosOptions, Target};
use crate::modification::{
    apply_pi_f_approx, exact_af_factor, extreme_eigenvalues, upscaled_solve, AfInverse, Method,
    ModifiedCoarseSpace, PolynomialSpec,
};
use crate::solvers::SpdSolver;
use crate::sparse::vector::{axpy, dot, energy_norm, norm2, random_vector, scale, sub};
use crate::sparse::CsrMatrix;

pub use report::{AnalysisReport, REPORT_CSV_HEADER};

/// Default seed for every randomized measurement.
pub const DEFAULT_SEED: u64 = 20_190_611;

/// Fine systems up to this size are factored densely; larger ones use CG.
const FINE_DENSE_LIMIT: usize = 1500;
/// Relative residual for iterative fine solves.
const FINE_RTOL: f64 = 1e-10;
const ESTIMATOR_STEPS: usize = 300;
const ESTIMATOR_TOL: f64 = 1e-8;

/// Solver for `A` used by the measurements.
pub fn fine_solver(a: &CsrMatrix) -> Result<SpdSolver> {
    SpdSolver::with_limit(a, FINE_DENSE_LIMIT, FINE_RTOL)
}

fn estimate(
    op: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    weight: Option<&dyn Fn(&[f64]) -> Vec<f64>>,
    n: usize,
    seed: u64,
    target: Target,
) -> Result<Extremes> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = random_vector(&mut rng, n);
    lanczos_extremes(
        op,
        weight,
        &start,
        LanczosOptions {
            max_steps: ESTIMATOR_STEPS,
            tol: ESTIMATOR_TOL,
            target,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaW {
    /// From the stored local eigenvalues.
    pub local: f64,
    /// `sup_v |(I - pi_D) v|_D / |v|_A`.
    pub global: f64,
    pub converged: bool,
}

/// Local and global WAP constants. The global one is the square root of
/// the largest eigenvalue of `P_perp^T D A^{-1} D P_perp`, which shares its
/// nonzero spectrum with `A^{-1} (I - pi_D)^T D (I - pi_D)`.
pub fn measure_eta_w(a: &CsrMatrix, d: &CsrMatrix, cs: &CoarseSpace, seed: u64) -> Result<EtaW> {
    check_dim("measure_eta_w", a.nrows(), cs.n())?;
    let nf = cs.n_complement();
    if nf == 0 {
        return Ok(EtaW {
            local: cs.eta_w_local,
            global: 0.0,
            converged: true,
        });
    }
    let solver = fine_solver(a)?;
    let mut op = |y: &[f64]| -> Result<Vec<f64>> {
        let v = d.spmv(&cs.p_perp.spmv(y)?)?;
        let w = solver.solve(&v)?;
        cs.p_perp.spmv_transpose(&d.spmv(&w)?)
    };
    let ext = estimate(&mut op, None, nf, seed, Target::Max)?;
    Ok(EtaW {
        local: cs.eta_w_local,
        global: ext.max.max(0.0).sqrt(),
        converged: ext.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaAf {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
}

/// Extreme eigenvalues and condition number of `A_f`.
pub fn measure_kappa_af(af: &CsrMatrix) -> Result<KappaAf> {
    if af.nrows() == 0 {
        return Err(Error::InvalidArgument("A_f is empty".into()));
    }
    let (lo, hi) = extreme_eigenvalues(af)?;
    if !(lo > 0.0) {
        return Err(Error::NotPositiveDefinite(format!("lambda_min(A_f) estimated at {lo:e}")));
    }
    Ok(KappaAf {
        lambda_min: lo,
        lambda_max: hi,
        kappa: hi / lo,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SapMode {
    Sampled,
    #[default]
    Extremal,
}

/// `max |D| |u - P~ u_c|_A^2 / |f|^2`, over random `f` (sampled) or over
/// all `f` (extremal: `|D| lambda_max(A^{-1} - P~ A_c^{-1} P~^T)`).
pub fn measure_eta_s(
    a: &CsrMatrix,
    d: &CsrMatrix,
    mcs: &ModifiedCoarseSpace,
    samples: usize,
    mode: SapMode,
    seed: u64,
) -> Result<f64> {
    let n = a.nrows();
    let d_norm = d.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let solver = fine_solver(a)?;
    let error_of = |f: &[f64]| -> Result<Vec<f64>> {
        let u = solver.solve(f)?;
        let (_, uc) = upscaled_solve(mcs, f)?;
        Ok(sub(&u, &uc))
    };
    match mode {
        SapMode::Sampled => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = 0.0f64;
            for _ in 0..samples {
                let f = random_vector(&mut rng, n);
                let e = error_of(&f)?;
                worst = worst.max(d_norm * energy_norm(a, &e).powi(2) / dot(&f, &f));
            }
            Ok(worst)
        }
        SapMode::Extremal => {
            let mut op = |f: &[f64]| error_of(f);
            let ext = estimate(&mut op, None, n, seed, Target::Max)?;
            Ok(d_norm * ext.max.max(0.0))
        }
    }
}

/// `sup_f |u - P~ u_c|_A^2 / (f^T D^{-1} f)`, the right-hand side measured
/// in the `D^{-1}` norm instead of scaling by `|D|`. Bounded by `eta_w^2`
/// whatever the conditioning of `D`.
pub fn measure_eta_s_weighted(a: &CsrMatrix, d: &CsrMatrix, mcs: &ModifiedCoarseSpace, seed: u64) -> Result<f64> {
    let n = a.nrows();
    let root: Vec<f64> = d.diagonal().iter().map(|x| x.sqrt()).collect();
    let solver = fine_solver(a)?;
    let mut op = |y: &[f64]| -> Result<Vec<f64>> {
        let f: Vec<f64> = y.iter().zip(&root).map(|(v, r)| v * r).collect();
        let u = solver.solve(&f)?;
        let (_, uc) = upscaled_solve(mcs, &f)?;
        Ok(sub(&u, &uc).iter().zip(&root).map(|(v, r)| v * r).collect())
    };
    let ext = estimate(&mut op, None, n, seed, Target::Max)?;
    Ok(ext.max.max(0.0))
}

/// `max |(pi_f~ - pi_f) pi_D u|_A` over random `u` with `|u|_A = 1`.
pub fn measure_perturbation(
    a: &CsrMatrix,
    d: &CsrMatrix,
    cs: &CoarseSpace,
    af: &CsrMatrix,
    spec: &PolynomialSpec,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if cs.n_complement() == 0 {
        return Ok(0.0);
    }
    let chol = exact_af_factor(af)?;
    let inv = AfInverse::new(af, spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let mut u = random_vector(&mut rng, a.nrows());
        let nu = energy_norm(a, &u);
        scale(1.0 / nu, &mut u);
        let pu = apply_pi_d(cs, d, &u)?;
        let r = cs.p_perp.spmv_transpose(&a.spmv(&pu)?)?;
        let exact = chol.solve(&r)?;
        let approx = inv.apply(&r)?;
        let diff = cs.p_perp.spmv(&sub(&approx, &exact))?;
        worst = worst.max(energy_norm(a, &diff));
    }
    Ok(worst)
}

/// `(|pi_D|_A, |I - pi_D|_A)`, each by Lanczos in the `A` inner product on
/// `X^* X` with `X^* = A^{-1} X^T A`.
pub fn measure_projection_norms(a: &CsrMatrix, d: &CsrMatrix, cs: &CoarseSpace, seed: u64) -> Result<(f64, f64)> {
    let solver = fine_solver(a)?;
    let n = a.nrows();
    let weight = |x: &[f64]| a.spmv(x).expect("square");
    let pi_t = |y: &[f64]| -> Result<Vec<f64>> {
        // pi_D^T y = D P P^T y
        d.spmv(&cs.p.spmv(&cs.p.spmv_transpose(y)?)?)
    };
    let norm_of = |complement: bool| -> Result<f64> {
        let mut op = |v: &[f64]| -> Result<Vec<f64>> {
            let mut x = apply_pi_d(cs, d, v)?;
            if complement {
                x = sub(v, &x);
            }
            let ax = a.spmv(&x)?;
            let mut t = pi_t(&ax)?;
            if complement {
                t = sub(&ax, &t);
            }
            solver.solve(&t)
        };
        let ext = estimate(&mut op, Some(&weight), n, seed, Target::Max)?;
        Ok(ext.max.max(0.0).sqrt())
    };
    Ok((norm_of(false)?, norm_of(true)?))
}

/// Largest A-cosine between `Range(P_perp)` and `Range(P~)`: the top
/// singular value of `A_f^{-1/2} P_perp^T A P~ A_c^{-1/2}`.
pub fn measure_cosine(a: &CsrMatrix, cs: &CoarseSpace, af: &CsrMatrix, mcs: &ModifiedCoarseSpace, seed: u64) -> Result<f64> {
    if cs.n_complement() == 0 || mcs.p_tilde.ncols() == 0 {
        return Ok(0.0);
    }
    let chol = exact_af_factor(af)?;
    let coarse = mcs.coarse_solver();
    let nc = mcs.p_tilde.ncols();
    // M = P_perp^T A P~; generalized problem M^T A_f^{-1} M x = s^2 A_c x,
    // self-adjoint in the A_c inner product.
    let weight = |x: &[f64]| mcs.a_c.spmv(x).expect("square");
    let mut op = |x: &[f64]| -> Result<Vec<f64>> {
        let m = cs.p_perp.spmv_transpose(&a.spmv(&mcs.p_tilde.spmv(x)?)?)?;
        let y = chol.solve(&m)?;
        let back = mcs.p_tilde.spmv_transpose(&a.spmv(&cs.p_perp.spmv(&y)?)?)?;
        coarse.solve(&back)
    };
    let ext = estimate(&mut op, Some(&weight), nc, seed, Target::Max)?;
    Ok(ext.max.max(0.0).sqrt())
}

/// One inequality evaluated on every sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` seen (0 when every side vanished).
    pub worst_ratio: f64,
}

impl BoundCheck {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            samples: 0,
            violations: 0,
            worst_ratio: 0.0,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        const REL_SLACK: f64 = 1e-6;
        self.samples += 1;
        if lhs > rhs * (1.0 + REL_SLACK) {
            self.violations += 1;
        }
        if rhs > 0.0 {
            self.worst_ratio = self.worst_ratio.max(lhs / rhs);
        } else if lhs > 0.0 {
            self.worst_ratio = f64::INFINITY;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundLedger {
    pub checks: Vec<BoundCheck>,
}

impl BoundLedger {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(BoundCheck::passed)
    }
}

/// Decay factor `(eta - 1) / (eta + 1)` of the geometric bounds.
pub fn decay_factor(eta_w: f64) -> f64 {
    (eta_w - 1.0).max(0.0) / (eta_w + 1.0)
}

/// Perturbation bound of the approximation in `spec`, per unit `|u|_A`.
pub fn perturbation_bound(spec: &PolynomialSpec, eta_w: f64) -> f64 {
    let q = decay_factor(eta_w);
    let nu = spec.nu as i32;
    match spec.method {
        Method::Exact => 0.0,
        Method::Sa => eta_w * eta_w / (2 * spec.nu + 1) as f64,
        Method::Chebyshev => 2.0 * q.powi(nu) * eta_w / (1.0 + q.powi(2 * nu)),
        Method::Cg => 2.0 * q.powi(nu) * eta_w,
    }
}

/// Evaluates the energy (and, for the exact space, weighted l2) error
/// bounds on each right-hand side, using the measured global `eta_w`.
pub fn verify_bounds(
    a: &CsrMatrix,
    d: &CsrMatrix,
    mcs: &ModifiedCoarseSpace,
    eta_w: f64,
    rhs: &[Vec<f64>],
) -> Result<BoundLedger> {
    let solver = fine_solver(a)?;
    let d_diag = d.diagonal();
    let exact = mcs.spec.method == Method::Exact;
    let mut energy = BoundCheck::new(if exact { "energy" } else { "energy-perturbed" });
    let mut weighted = BoundCheck::new("weighted-l2");
    let mut weighted_full = BoundCheck::new("weighted-l2-rhs");
    let extra = perturbation_bound(&mcs.spec, eta_w);
    for f in rhs {
        check_dim("verify_bounds", a.nrows(), f.len())?;
        let u = solver.solve(f)?;
        let (_, uc) = upscaled_solve(mcs, f)?;
        let e = sub(&u, &uc);
        let e_a = energy_norm(a, &e);
        let scaled_f = f.iter().zip(&d_diag).map(|(x, di)| x * x / di).sum::<f64>().sqrt();
        let u_a = energy_norm(a, &u);
        energy.record(e_a, eta_w * scaled_f + extra * u_a);
        if exact {
            let e_d = e.iter().zip(&d_diag).map(|(x, di)| x * x * di).sum::<f64>().sqrt();
            weighted.record(e_d, eta_w * e_a);
            weighted_full.record(e_d, eta_w * eta_w * scaled_f);
        }
    }
    let mut checks = vec![energy];
    if exact {
        checks.push(weighted);
        checks.push(weighted_full);
    }
    Ok(BoundLedger { checks })
}

/// Relative energy and D-norm errors of the upscaled solution for `f`.
pub fn upscaling_errors(a: &CsrMatrix, d: &CsrMatrix, mcs: &ModifiedCoarseSpace, f: &[f64]) -> Result<(f64, f64)> {
    check_dim("upscaling_errors", a.nrows(), f.len())?;
    let u = fine_solver(a)?.solve(f)?;
    let (_, uc) = upscaled_solve(mcs, f)?;
    let e = sub(&u, &uc);
    let ratio = |num: f64, den: f64| if den == 0.0 { num } else { num / den };
    Ok((
        ratio(energy_norm(a, &e), energy_norm(a, &u)),
        ratio(energy_norm(d, &e), energy_norm(d, &u)),
    ))
}

/// Applies `(I - pi_f~) pi_D` to `v`.
pub fn apply_modified_projection(
    a: &CsrMatrix,
    d: &CsrMatrix,
    cs: &CoarseSpace,
    inv: &AfInverse<'_>,
    v: &[f64],
) -> Result<Vec<f64>> {
    let pv = apply_pi_d(cs, d, v)?;
    let corr = apply_pi_f_approx(a, &cs.p_perp, inv, &pv)?;
    Ok(sub(&pv, &corr))
}

/// Relative A-norm distance `|x - y|_A / |x|_A`.
pub fn relative_energy_gap(a: &CsrMatrix, x: &[f64], y: &[f64]) -> f64 {
    let mut diff = x.to_vec();
    axpy(-1.0, y, &mut diff);
    let nx = energy_norm(a, x);
    if nx == 0.0 {
        norm2(&diff)
    } else {
        energy_norm(a, &diff) / nx
    }
}
