use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SpdSolver;
use crate::error::{check_dim, Error, Result};
use crate::krylov::{lanczos_extremes, LanczosOptions, Target};
use crate::sparse::vector::{axpy, norm2, random_vector};
use crate::sparse::{galerkin, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Backward,
}

/// One lexicographic Gauss-Seidel sweep on `A u = f`, in place.
pub fn gs_sweep(a: &CsrMatrix, f: &[f64], u: &mut [f64], direction: Direction) -> Result<()> {
    check_dim("gs_sweep", a.nrows(), f.len())?;
    check_dim("gs_sweep", a.nrows(), u.len())?;
    let n = a.nrows();
    let mut relax = |i: usize| -> Result<()> {
        let (cols, vals) = a.row(i);
        let mut diag = 0.0;
        let mut s = f[i];
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i {
                diag = v;
            } else {
                s -= v * u[j];
            }
        }
        if diag == 0.0 {
            return Err(Error::InvalidArgument(format!("zero diagonal in row {i}")));
        }
        u[i] = s / diag;
        Ok(())
    };
    match direction {
        Direction::Forward => (0..n).try_for_each(&mut relax),
        Direction::Backward => (0..n).rev().try_for_each(&mut relax),
    }
}

/// Symmetrized two-grid method with Gauss-Seidel smoothing.
#[derive(Debug, Clone)]
pub struct TwoGrid {
    pub a: CsrMatrix,
    pub p: CsrMatrix,
    pub a_c: CsrMatrix,
    coarse: SpdSolver,
}

impl TwoGrid {
    pub fn new(a: &CsrMatrix, p: &CsrMatrix) -> Result<Self> {
        let a_c = galerkin(a, p)?;
        Self::with_coarse_matrix(a, p, a_c)
    }

    /// Uses a precomputed `A_c`, which must equal `P^T A P`.
    pub fn with_coarse_matrix(a: &CsrMatrix, p: &CsrMatrix, a_c: CsrMatrix) -> Result<Self> {
        check_dim("TwoGrid", a.nrows(), p.nrows())?;
        check_dim("TwoGrid", p.ncols(), a_c.nrows())?;
        let coarse = SpdSolver::new(&a_c)?;
        Ok(Self {
            a: a.clone(),
            p: p.clone(),
            a_c,
            coarse,
        })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
}

/// Forward Gauss-Seidel, exact coarse correction, backward Gauss-Seidel.
pub fn two_grid_cycle(tg: &TwoGrid, f: &[f64], u: &mut [f64]) -> Result<()> {
    gs_sweep(&tg.a, f, u, Direction::Forward)?;
    let mut r = f.to_vec();
    let au = tg.a.spmv(u)?;
    axpy(-1.0, &au, &mut r);
    let rc = tg.p.spmv_transpose(&r)?;
    let ec = tg.coarse.solve(&rc)?;
    let e = tg.p.spmv(&ec)?;
    axpy(1.0, &e, u);
    gs_sweep(&tg.a, f, u, Direction::Backward)
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub u: Vec<f64>,
    pub iters: usize,
    /// Relative residual norms, starting with the initial one.
    pub history: Vec<f64>,
}

/// Cycles from a zero start until `|f - A u| <= rtol |f|`.
pub fn solve_to_tolerance(tg: &TwoGrid, f: &[f64], rtol: f64, max_iter: usize) -> Result<SolveOutcome> {
    if !(rtol > 0.0 && rtol < 1.0) {
        return Err(Error::InvalidArgument(format!("rtol must lie in (0, 1), got {rtol}")));
    }
    check_dim("solve_to_tolerance", tg.n(), f.len())?;
    let mut u = vec![0.0; tg.n()];
    let fnorm = norm2(f);
    if fnorm == 0.0 {
        return Ok(SolveOutcome { u, iters: 0, history: vec![0.0] });
    }
    let mut history = vec![1.0];
    let mut r = vec![0.0; tg.n()];
    for it in 1..=max_iter {
        two_grid_cycle(tg, f, &mut u)?;
        tg.a.spmv_into(&u, &mut r);
        let rel = f.iter().zip(&r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / fnorm;
        history.push(rel);
        if !rel.is_finite() {
            return Err(Error::NonFinite("two-grid iteration"));
        }
        if rel <= rtol {
            return Ok(SolveOutcome { u, iters: it, history });
        }
    }
    Err(Error::NoConvergence {
        method: "two-grid",
        iterations: max_iter,
        last: *history.last().unwrap(),
        history,
    })
}

/// Writes the `iter,relres` residual history.
pub fn write_history_csv<W: Write>(history: &[f64], mut w: W) -> Result<()> {
    writeln!(w, "iter,relres")?;
    for (k, r) in history.iter().enumerate() {
        writeln!(w, "{k},{r:.12e}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    pub rho: f64,
    pub k_tg: f64,
    pub steps: usize,
    pub converged: bool,
}

/// `|E_TG|_A` by Lanczos in the `A` inner product (the symmetrized cycle
/// makes `E_TG` A-self-adjoint and positive semidefinite).
pub fn estimate_rho_tg(tg: &TwoGrid, iters: usize, seed: u64) -> Result<RhoEstimate> {
    if iters < 20 {
        return Err(Error::InvalidArgument(format!("need at least 20 iterations, got {iters}")));
    }
    let n = tg.n();
    let zero = vec![0.0; n];
    let mut op = |e: &[f64]| -> Result<Vec<f64>> {
        let mut u = e.to_vec();
        two_grid_cycle(tg, &zero, &mut u)?;
        Ok(u)
    };
    let weight = |x: &[f64]| tg.a.spmv(x).expect("dimension checked");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = random_vector(&mut rng, n);
    let ext = lanczos_extremes(
        &mut op,
        Some(&weight),
        &start,
        LanczosOptions {
            max_steps: iters,
            tol: 1e-6,
            target: Target::Max,
        },
    )?;
    let rho = ext.max.clamp(0.0, 1.0);
    Ok(RhoEstimate {
        rho,
        k_tg: 1.0 / (1.0 - rho),
        steps: ext.steps,
        converged: ext.converged,
    })
}
