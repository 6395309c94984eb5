//! Spectral tentative prolongation `P`, its D-orthogonal complement basis
//! `P_perp`, and the projection `pi_D`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::AggregateMap;
use crate::error::{check_dim, Error, Result};
use crate::sparse::{jacobi_eigensolve, CsrMatrix, DenseMatrix};

/// Which local matrix enters the per-aggregate eigenproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalMatrix {
    /// Principal submatrix with the absolute off-aggregate couplings removed
    /// from its diagonal. The local forms then sum to at most `v^T A v`, so
    /// the local bound is an upper bound for the global WAP constant.
    #[default]
    Lumped,
    /// Plain principal submatrix `A[agg, agg]`.
    Principal,
}

/// Rule choosing the coarse eigenvectors of each aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Eigenvalues `<= theta`, with `theta` in `(0, 1]`.
    Threshold(f64),
    /// The `k` lowest eigenvectors (capped at the aggregate size).
    FixedCount(usize),
}

impl Default for Selection {
    fn default() -> Self {
        Selection::Threshold(0.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CoarseOptions {
    pub selection: Selection,
    pub local_matrix: LocalMatrix,
}

/// Eigenbasis of one aggregate, split into coarse and complement parts.
/// Both parts are `D`-orthonormal.
#[derive(Debug, Clone)]
pub struct LocalSpectralBasis {
    pub coarse: DenseMatrix,
    pub complement: DenseMatrix,
    pub eigenvalues: Vec<f64>,
    /// `1 / lambda_first_excluded`, zero when every vector is coarse.
    pub local_wap_bound: f64,
}

impl LocalSpectralBasis {
    pub fn num_coarse(&self) -> usize {
        self.coarse.ncols()
    }

    pub fn num_complement(&self) -> usize {
        self.complement.ncols()
    }
}

/// Solves the local eigenproblem on the vertices `agg` (ascending).
pub fn build_local_basis(
    a: &CsrMatrix,
    d: &CsrMatrix,
    agg: &[usize],
    assignment: Option<&[usize]>,
    opts: &CoarseOptions,
) -> Result<LocalSpectralBasis> {
    if agg.is_empty() {
        return Err(Error::InvalidArgument("empty aggregate".into()));
    }
    if let Selection::Threshold(theta) = opts.selection {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidArgument(format!("theta must lie in (0, 1], got {theta}")));
        }
    }
    let k = agg.len();
    let mut local = a.extract_dense(agg, agg);
    if opts.local_matrix == LocalMatrix::Lumped {
        let me = assignment.map(|asg| asg[agg[0]]);
        for (li, &gi) in agg.iter().enumerate() {
            let (cols, vals) = a.row(gi);
            let outside: f64 = cols
                .iter()
                .zip(vals)
                .filter(|(&j, _)| match (assignment, me) {
                    (Some(asg), Some(me)) => asg[j] != me,
                    _ => agg.binary_search(&j).is_err(),
                })
                .map(|(_, v)| v.abs())
                .sum();
            local.set(li, li, local.get(li, li) - outside);
        }
    }
    let inv_sqrt: Vec<f64> = agg
        .iter()
        .map(|&i| {
            let di = d.get(i, i);
            if di > 0.0 {
                Ok(1.0 / di.sqrt())
            } else {
                Err(Error::NotPositiveDefinite(format!("D[{i},{i}] = {di:e}")))
            }
        })
        .collect::<Result<_>>()?;
    let mut scaled = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            scaled.set(i, j, inv_sqrt[i] * local.get(i, j) * inv_sqrt[j]);
        }
    }
    let eig = jacobi_eigensolve(&scaled)?;
    let nc = match opts.selection {
        Selection::Threshold(theta) => eig.values.iter().filter(|&&l| l <= theta).count(),
        Selection::FixedCount(c) => c.min(k),
    }
    .max(1);

    let split = |cols: std::ops::Range<usize>| {
        let mut m = DenseMatrix::zeros(k, cols.len());
        for (c, j) in cols.enumerate() {
            for i in 0..k {
                m.set(i, c, inv_sqrt[i] * eig.vectors.get(i, j));
            }
        }
        m
    };
    let local_wap_bound = if nc < k { 1.0 / eig.values[nc] } else { 0.0 };
    Ok(LocalSpectralBasis {
        coarse: split(0..nc),
        complement: split(nc..k),
        eigenvalues: eig.values,
        local_wap_bound,
    })
}

/// Tentative prolongation and complement basis, block diagonal by aggregate.
#[derive(Debug, Clone)]
pub struct CoarseSpace {
    pub p: CsrMatrix,
    pub p_perp: CsrMatrix,
    pub map: AggregateMap,
    pub bases: Vec<LocalSpectralBasis>,
    /// `max_i sqrt(local_wap_bound_i)`.
    pub eta_w_local: f64,
    /// First coarse column of each aggregate (length `n_a + 1`).
    pub coarse_offsets: Vec<usize>,
    /// First complement column of each aggregate (length `n_a + 1`).
    pub complement_offsets: Vec<usize>,
}

impl CoarseSpace {
    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn n_coarse(&self) -> usize {
        self.p.ncols()
    }

    pub fn n_complement(&self) -> usize {
        self.p_perp.ncols()
    }
}

/// Local eigenproblems on every aggregate (in parallel), then assembly.
pub fn build_coarse_space(
    a: &CsrMatrix,
    d: &CsrMatrix,
    map: &AggregateMap,
    opts: &CoarseOptions,
) -> Result<CoarseSpace> {
    check_dim("build_coarse_space", a.nrows(), map.n())?;
    check_dim("build_coarse_space", a.nrows(), d.nrows())?;
    let bases = (0..map.num_aggregates())
        .into_par_iter()
        .map(|i| build_local_basis(a, d, map.members(i), Some(map.assignment()), opts))
        .collect::<Result<Vec<_>>>()?;
    assemble_p_and_perp(bases, map)
}

/// Scatters local bases into global `P` and `P_perp`: aggregates ascending,
/// local column index ascending, zero extension outside each aggregate.
pub fn assemble_p_and_perp(bases: Vec<LocalSpectralBasis>, map: &AggregateMap) -> Result<CoarseSpace> {
    check_dim("assemble_p_and_perp", map.num_aggregates(), bases.len())?;
    let n = map.n();
    let mut p_cols = Vec::new();
    let mut f_cols = Vec::new();
    let mut coarse_offsets = vec![0];
    let mut complement_offsets = vec![0];
    let mut eta2 = 0.0f64;
    for (i, b) in bases.iter().enumerate() {
        let rows = map.members(i);
        check_dim("assemble_p_and_perp", rows.len(), b.coarse.nrows())?;
        check_dim("assemble_p_and_perp", rows.len(), b.num_coarse() + b.num_complement())?;
        for (block, cols) in [(&b.coarse, &mut p_cols), (&b.complement, &mut f_cols)] {
            for j in 0..block.ncols() {
                cols.push((rows.to_vec(), block.column(j)));
            }
        }
        coarse_offsets.push(p_cols.len());
        complement_offsets.push(f_cols.len());
        eta2 = eta2.max(b.local_wap_bound);
    }
    Ok(CoarseSpace {
        p: CsrMatrix::from_columns(n, &p_cols)?,
        p_perp: CsrMatrix::from_columns(n, &f_cols)?,
        map: map.clone(),
        bases,
        eta_w_local: eta2.sqrt(),
        coarse_offsets,
        complement_offsets,
    })
}

/// `pi_D v = P (P^T D v)`, using `P^T D P = I`.
pub fn apply_pi_d(cs: &CoarseSpace, d: &CsrMatrix, v: &[f64]) -> Result<Vec<f64>> {
    let dv = d.spmv(v)?;
    cs.p.spmv(&cs.p.spmv_transpose(&dv)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> CsrMatrix {
        CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]).unwrap()
    }

    #[test]
    fn singleton_aggregate() {
        let a = CsrMatrix::from_diagonal(&[4.0]);
        let b = build_local_basis(&a, &a, &[0], None, &CoarseOptions::default()).unwrap();
        assert_eq!(b.num_coarse(), 1);
        assert_eq!(b.num_complement(), 0);
        assert!((b.coarse.get(0, 0) - 0.5).abs() < 1e-15);
        assert_eq!(b.local_wap_bound, 0.0);
    }

    #[test]
    fn two_by_two_threshold() {
        let a = two_by_two();
        let d = CsrMatrix::from_diagonal(&[2.0, 2.0]);
        let opts = CoarseOptions {
            selection: Selection::Threshold(0.6),
            ..Default::default()
        };
        let b = build_local_basis(&a, &d, &[0, 1], None, &opts).unwrap();
        assert!((b.eigenvalues[0] - 0.5).abs() < 1e-14 && (b.eigenvalues[1] - 1.5).abs() < 1e-14);
        assert_eq!(b.num_coarse(), 1);
        let c = 0.5; // 2^{-1/2} * 2^{-1/2}
        assert!((b.coarse.get(0, 0).abs() - c).abs() < 1e-14);
        assert!((b.coarse.get(0, 0) - b.coarse.get(1, 0)).abs() < 1e-14);
        assert!((b.local_wap_bound - 1.0 / 1.5).abs() < 1e-14);
    }

    #[test]
    fn theta_out_of_range() {
        let a = two_by_two();
        for theta in [0.0, -1.0, 1.5] {
            let opts = CoarseOptions {
                selection: Selection::Threshold(theta),
                ..Default::default()
            };
            assert!(build_local_basis(&a, &a, &[0, 1], None, &opts).is_err());
        }
    }

    #[test]
    fn diagonal_local_problem_is_a_threshold_cut() {
        let a = CsrMatrix::from_diagonal(&[0.2, 0.9, 0.5]);
        let d = CsrMatrix::identity(3);
        let opts = CoarseOptions {
            selection: Selection::Threshold(0.6),
            ..Default::default()
        };
        let b = build_local_basis(&a, &d, &[0, 1, 2], None, &opts).unwrap();
        assert_eq!(b.eigenvalues, vec![0.2, 0.5, 0.9]);
        assert_eq!(b.num_coarse(), 2);
    }

    #[test]
    fn singletons_give_diagonal_p() {
        let a = two_by_two();
        let d = CsrMatrix::from_diagonal(&[4.0, 9.0]);
        let map = AggregateMap::from_assignment(vec![0, 1]).unwrap();
        let cs = build_coarse_space(&a, &d, &map, &CoarseOptions::default()).unwrap();
        assert_eq!(cs.p.to_dense(), DenseMatrix::from_diagonal(&[0.5, 1.0 / 3.0]));
        assert_eq!(cs.n_complement(), 0);
        let v = [1.0, -2.0];
        let pv = apply_pi_d(&cs, &d, &v).unwrap();
        assert!((pv[0] - 1.0).abs() < 1e-14 && (pv[1] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn lumped_diagonal_drops_outside_couplings() {
        let a = two_by_two();
        let d = CsrMatrix::from_diagonal(&[2.0, 2.0]);
        let asg = [0, 1];
        let b = build_local_basis(&a, &d, &[0], Some(&asg), &CoarseOptions::default()).unwrap();
        assert!((b.eigenvalues[0] - 0.5).abs() < 1e-15);
        let opts = CoarseOptions {
            local_matrix: LocalMatrix::Principal,
            ..Default::default()
        };
        let b = build_local_basis(&a, &d, &[0], Some(&asg), &opts).unwrap();
        assert!((b.eigenvalues[0] - 1.0).abs() < 1e-15);
    }
}
