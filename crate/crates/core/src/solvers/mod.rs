//! Gauss-Seidel smoothing, the symmetrized two-grid method, and conjugate
//! gradients.

mod pcg;
mod two_grid;

pub use pcg::{pcg, IdentityPreconditioner, JacobiPreconditioner, PcgOutcome, Preconditioner, SpdSolver, DENSE_LIMIT};
pub use two_grid::{
    estimate_rho_tg, gs_sweep, solve_to_tolerance, two_grid_cycle, write_history_csv, Direction, RhoEstimate,
    SolveOutcome, TwoGrid,
};
