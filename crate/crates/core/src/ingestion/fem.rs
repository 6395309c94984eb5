//! Piecewise-linear finite elements for `-div(k grad u) = f` on the unit
//! square with homogeneous Dirichlet data, on a uniform right-triangle mesh.

use serde::{Deserialize, Serialize};

use super::{DMode, ProblemKind, ProblemPair};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Axis-aligned box `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2 {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Box2 {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Treatment of the Dirichlet boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Boundary nodes are removed: `(m-1)^2` unknowns.
    #[default]
    Eliminate,
    /// All `(m+1)^2` grid nodes are kept; boundary rows and columns are
    /// decoupled and carry their assembled diagonal.
    KeepDecoupled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    /// Subdivisions per side, `h = 1/m`.
    pub m: usize,
    /// Coefficient inside the inclusion boxes (1 elsewhere).
    pub eps: f64,
    #[serde(default = "default_inclusions")]
    pub boxes: Vec<Box2>,
    #[serde(default)]
    pub boundary: Boundary,
}

/// The two inclusions `[0.25, 0.5]^2` and `[0.5, 0.75]^2`.
pub fn default_inclusions() -> Vec<Box2> {
    vec![Box2::new(0.25, 0.5, 0.25, 0.5), Box2::new(0.5, 0.75, 0.5, 0.75)]
}

impl MeshSpec {
    pub fn new(m: usize, eps: f64) -> Self {
        Self {
            m,
            eps,
            boxes: default_inclusions(),
            boundary: Boundary::Eliminate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidArgument(format!("mesh needs m >= 2, got {}", self.m)));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidArgument(format!("contrast must be positive, got {}", self.eps)));
        }
        for b in &self.boxes {
            let inside = |v: f64| (0.0..=1.0).contains(&v);
            if !(inside(b.x0) && inside(b.x1) && inside(b.y0) && inside(b.y1)) || b.x0 > b.x1 || b.y0 > b.y1 {
                return Err(Error::InvalidArgument(format!("inclusion box {b:?} not inside the unit square")));
            }
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// Number of unknowns after boundary treatment.
    pub fn num_unknowns(&self) -> usize {
        match self.boundary {
            Boundary::Eliminate => (self.m - 1) * (self.m - 1),
            Boundary::KeepDecoupled => (self.m + 1) * (self.m + 1),
        }
    }

    fn coefficient(&self, x: f64, y: f64) -> f64 {
        if self.boxes.iter().any(|b| b.contains(x, y)) {
            self.eps
        } else {
            1.0
        }
    }
}

/// Assembled FEM system: stiffness `A`, smoother `D`, the load for `f = 1`,
/// and the coordinates of each unknown.
#[derive(Debug, Clone)]
pub struct FemProblem {
    pub pair: ProblemPair,
    pub load: Vec<f64>,
    pub coords: Vec<(f64, f64)>,
}

/// Stiffness of the reference right triangle with the right angle at local
/// vertex 0 (independent of `h` in two dimensions).
const RIGHT_TRIANGLE: [[f64; 3]; 3] = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];

/// Stiffness matrix and load vector only.
pub fn assemble_stiffness(spec: &MeshSpec) -> Result<(CsrMatrix, Vec<f64>, Vec<(f64, f64)>)> {
    spec.validate()?;
    let m = spec.m;
    let h = spec.h();
    let side = m + 1;
    let is_boundary = |i: usize, j: usize| i == 0 || j == 0 || i == m || j == m;

    // grid node -> unknown index
    let mut dof = vec![usize::MAX; side * side];
    let mut coords = Vec::with_capacity(spec.num_unknowns());
    let mut next = 0;
    for j in 0..side {
        for i in 0..side {
            let keep = match spec.boundary {
                Boundary::Eliminate => !is_boundary(i, j),
                Boundary::KeepDecoupled => true,
            };
            if keep {
                dof[j * side + i] = next;
                coords.push((i as f64 * h, j as f64 * h));
                next += 1;
            }
        }
    }
    let n = next;
    let node = |i: usize, j: usize| j * side + i;

    let mut triplets = Vec::with_capacity(9 * 2 * m * m);
    let mut boundary_diag = vec![0.0; n];
    let mut load = vec![0.0; n];
    let area_share = h * h / 6.0;
    for j in 0..m {
        for i in 0..m {
            // lower-left and upper-right triangles, right angle listed first
            let lower = [(i, j), (i + 1, j), (i, j + 1)];
            let upper = [(i + 1, j + 1), (i, j + 1), (i + 1, j)];
            for tri in [lower, upper] {
                let bx = tri.iter().map(|v| v.0 as f64).sum::<f64>() * h / 3.0;
                let by = tri.iter().map(|v| v.1 as f64).sum::<f64>() * h / 3.0;
                let kappa = spec.coefficient(bx, by);
                for (a, &(ia, ja)) in tri.iter().enumerate() {
                    let ra = dof[node(ia, ja)];
                    if ra == usize::MAX {
                        continue;
                    }
                    let a_bnd = is_boundary(ia, ja);
                    if !a_bnd {
                        load[ra] += area_share;
                    }
                    for (b, &(ib, jb)) in tri.iter().enumerate() {
                        let rb = dof[node(ib, jb)];
                        if rb == usize::MAX {
                            continue;
                        }
                        let v = kappa * RIGHT_TRIANGLE[a][b];
                        if a_bnd || is_boundary(ib, jb) {
                            // only reachable with KeepDecoupled
                            if ra == rb {
                                boundary_diag[ra] += v;
                            }
                            continue;
                        }
                        if v != 0.0 {
                            triplets.push((ra, rb, v));
                        }
                    }
                }
            }
        }
    }
    for (r, &v) in boundary_diag.iter().enumerate() {
        if v != 0.0 {
            triplets.push((r, r, v));
        }
    }
    let a = CsrMatrix::from_triplets(n, n, &triplets)?.into_symmetric()?;
    Ok((a, load, coords))
}

/// Assembles `A`, the load for `f = 1`, and `D` per `d_mode`.
pub fn assemble_fem(spec: &MeshSpec, d_mode: DMode) -> Result<FemProblem> {
    let (a, load, coords) = assemble_stiffness(spec)?;
    let pair = ProblemPair::new(a, d_mode, ProblemKind::Fem)?;
    Ok(FemProblem { pair, load, coords })
}
