//! Problem construction: FEM stiffness matrices, graph Laplacians, and the
//! diagonal smoother paired with each.

mod fem;
mod graph;
mod smoothing;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub use fem::{assemble_fem, assemble_stiffness, default_inclusions, Boundary, Box2, FemProblem, MeshSpec};
pub use graph::{load_graph_laplacian, parse_edge_list, read_edge_list_file, Edge, GraphProblem};
pub use smoothing::{build_d, build_d_with_omega, max_rayleigh_quotient, DMode, OMEGA_SAFETY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Fem,
    Graph,
    Matrix,
}

/// SPD matrix `A` with a diagonal `D` satisfying `v^T A v <= v^T D v`.
#[derive(Debug, Clone)]
pub struct ProblemPair {
    pub a: CsrMatrix,
    pub d: CsrMatrix,
    pub kind: ProblemKind,
    pub omega: f64,
}

impl ProblemPair {
    pub fn new(a: CsrMatrix, d_mode: DMode, kind: ProblemKind) -> Result<Self> {
        let a = if a.is_symmetric() { a } else { a.into_symmetric()? };
        let (d, omega) = build_d_with_omega(&a, d_mode)?;
        Self::with_d(a, d, kind, omega)
    }

    /// Pairs `A` with a caller-supplied diagonal `D`, checking domination.
    pub fn with_d(a: CsrMatrix, d: CsrMatrix, kind: ProblemKind, omega: f64) -> Result<Self> {
        let rq = max_rayleigh_quotient(&a, &d)?;
        if rq > 1.0 + 1e-10 {
            return Err(Error::Invariant(format!(
                "D does not dominate A: max Rayleigh quotient {rq:.12}"
            )));
        }
        Ok(Self { a, d, kind, omega })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
}
