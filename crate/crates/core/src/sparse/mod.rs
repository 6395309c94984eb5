//! Sparse and small-dense linear algebra kernels.

mod csr;
mod dense;
mod eigen;
pub mod matrix_market;
pub mod vector;

pub use csr::{galerkin, triple_product, CsrMatrix, SYMMETRY_TOL};
pub use dense::{dense_cholesky_solve, Cholesky, DenseMatrix};
pub use eigen::{jacobi_eigensolve, jacobi_eigensolve_capped, SymmetricEigen, DEFAULT_SIZE_CAP};
pub use vector::{energy_norm, weighted_norm};
