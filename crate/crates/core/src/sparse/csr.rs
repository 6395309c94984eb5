//! Compressed sparse row storage, the single sparse format of the crate.

use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{check_dim, Error, Result};

/// Relative tolerance used for the symmetry flag.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// CSR matrix with strictly increasing column indices in every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, validating the structure.
    pub fn new(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != nrows + 1 {
            return Err(Error::InvalidStructure(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                nrows + 1
            )));
        }
        if row_offsets[0] != 0 || *row_offsets.last().unwrap() != col_indices.len() {
            return Err(Error::InvalidStructure(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(Error::InvalidStructure(
                "col_indices and values differ in length".into(),
            ));
        }
        for i in 0..nrows {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if lo > hi {
                return Err(Error::InvalidStructure(format!(
                    "row_offsets decrease at row {i}"
                )));
            }
            let cols = &col_indices[lo..hi];
            if cols.iter().any(|&c| c >= ncols) {
                return Err(Error::InvalidStructure(format!(
                    "column index out of range in row {i}"
                )));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidStructure(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
            symmetric: false,
        })
    }

    pub(crate) fn from_parts_unchecked(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(row_offsets.len(), nrows + 1);
        Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
            symmetric: false,
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidStructure(format!(
                    "triplet ({i}, {j}) outside {nrows}x{ncols}"
                )));
            }
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        let mut order: Vec<usize> = Vec::new();
        for i in 0..nrows {
            order.clear();
            order.extend(counts[i]..counts[i + 1]);
            order.sort_by_key(|&k| cols[k]);
            for &k in &order {
                match col_indices.last() {
                    Some(&last) if last == cols[k] && col_indices.len() > row_offsets[i] => {
                        *values.last_mut().unwrap() += vals[k];
                    }
                    _ => {
                        col_indices.push(cols[k]);
                        values.push(vals[k]);
                    }
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self::from_parts_unchecked(nrows, ncols, row_offsets, col_indices, values))
    }

    /// Builds an `nrows x columns.len()` matrix from sparse columns given as
    /// `(row indices, values)` pairs; row indices need not be sorted.
    pub fn from_columns(nrows: usize, columns: &[(Vec<usize>, Vec<f64>)]) -> Result<Self> {
        let ncols = columns.len();
        let mut counts = vec![0usize; nrows + 1];
        for (rows, vals) in columns {
            if rows.len() != vals.len() {
                return Err(Error::InvalidStructure("column rows/values length differ".into()));
            }
            for &r in rows {
                if r >= nrows {
                    return Err(Error::InvalidStructure(format!("row {r} out of range")));
                }
                counts[r + 1] += 1;
            }
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let nnz = counts[nrows];
        let mut col_indices = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut next = counts.clone();
        // Columns are visited in ascending order, so each row comes out sorted.
        for (j, (rows, vals)) in columns.iter().enumerate() {
            for (&r, &v) in rows.iter().zip(vals) {
                col_indices[next[r]] = j;
                values[next[r]] = v;
                next[r] += 1;
            }
        }
        Self::new(nrows, ncols, counts, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::from_parts_unchecked(n, n, (0..=n).collect(), (0..n).collect(), d.to_vec());
        m.symmetric = true;
        m
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        let mut m = Self::from_parts_unchecked(nrows, ncols, vec![0; nrows + 1], Vec::new(), Vec::new());
        m.symmetric = nrows == ncols;
        m
    }

    pub fn from_dense(d: &DenseMatrix) -> Self {
        let mut triplets = Vec::new();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                let v = d.get(i, j);
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(d.nrows(), d.ncols(), &triplets).expect("dense entries are in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Sets the symmetry flag after verifying it entrywise.
    pub fn into_symmetric(mut self) -> Result<Self> {
        self.check_symmetric()?;
        self.symmetric = true;
        Ok(self)
    }

    /// Verifies `|a_ij - a_ji| <= SYMMETRY_TOL * max(1, |a_ij|)` on stored entries.
    pub fn check_symmetric(&self) -> Result<()> {
        check_dim("check_symmetric", self.nrows, self.ncols)?;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let w = self.get(j, i);
                let dev = (v - w).abs();
                if dev > SYMMETRY_TOL * v.abs().max(1.0) {
                    return Err(Error::NotSymmetric { row: i, col: j, deviation: dev });
                }
            }
        }
        Ok(())
    }

    /// Replaces the matrix by `(M + M^T) / 2` and flags it symmetric.
    pub fn symmetrize(&self) -> Result<Self> {
        check_dim("symmetrize", self.nrows, self.ncols)?;
        let t = self.transpose();
        let mut s = self.add_scaled(0.5, &t, 0.5)?;
        s.symmetric = true;
        Ok(s)
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("spmv", self.ncols, x.len())?;
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` into a caller buffer; dimensions are the caller's contract.
    #[inline]
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut s = 0.0;
            for k in lo..hi {
                s += self.values[k] * x[self.col_indices[k]];
            }
            *yi = s;
        }
    }

    /// `y = A^T x`.
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("spmv_transpose", self.nrows, x.len())?;
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * xi;
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = counts.clone();
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                col_indices[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        let mut t = Self::from_parts_unchecked(self.ncols, self.nrows, counts, col_indices, values);
        t.symmetric = self.symmetric;
        t
    }

    /// `alpha * self + beta * other` on the union pattern.
    pub fn add_scaled(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        check_dim("add_scaled rows", self.nrows, other.nrows)?;
        check_dim("add_scaled cols", self.ncols, other.ncols)?;
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        let mut col_indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        row_offsets.push(0);
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let take_a = q >= cb.len() || (p < ca.len() && ca[p] <= cb[q]);
                let take_b = p >= ca.len() || (q < cb.len() && cb[q] <= ca[p]);
                if take_a && take_b {
                    col_indices.push(ca[p]);
                    values.push(alpha * va[p] + beta * vb[q]);
                    p += 1;
                    q += 1;
                } else if take_a {
                    col_indices.push(ca[p]);
                    values.push(alpha * va[p]);
                    p += 1;
                } else {
                    col_indices.push(cb[q]);
                    values.push(beta * vb[q]);
                    q += 1;
                }
            }
            row_offsets.push(col_indices.len());
        }
        let mut m = Self::from_parts_unchecked(self.nrows, self.ncols, row_offsets, col_indices, values);
        m.symmetric = self.symmetric && other.symmetric;
        Ok(m)
    }

    /// Sparse product `self * other`: a symbolic pass sizes the result, a
    /// numeric pass fills it.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dim("matmul", self.ncols, other.nrows)?;
        let n = self.nrows;
        let m = other.ncols;

        // symbolic
        let mut marker = vec![usize::MAX; m];
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0usize);
        let mut nnz = 0usize;
        for i in 0..n {
            let (acols, _) = self.row(i);
            for &k in acols {
                let (bcols, _) = other.row(k);
                for &j in bcols {
                    if marker[j] != i {
                        marker[j] = i;
                        nnz += 1;
                    }
                }
            }
            row_offsets.push(nnz);
        }

        // numeric
        let mut col_indices = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut acc = vec![0.0; m];
        marker.iter_mut().for_each(|v| *v = usize::MAX);
        for i in 0..n {
            let start = row_offsets[i];
            let mut len = 0usize;
            let (acols, avals) = self.row(i);
            for (&k, &a) in acols.iter().zip(avals) {
                let (bcols, bvals) = other.row(k);
                for (&j, &b) in bcols.iter().zip(bvals) {
                    if marker[j] != i {
                        marker[j] = i;
                        col_indices[start + len] = j;
                        len += 1;
                        acc[j] = a * b;
                    } else {
                        acc[j] += a * b;
                    }
                }
            }
            let row_cols = &mut col_indices[start..start + len];
            row_cols.sort_unstable();
            for (off, &j) in row_cols.iter().enumerate() {
                values[start + off] = acc[j];
            }
        }
        Ok(Self::from_parts_unchecked(n, m, row_offsets, col_indices, values))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Drops stored entries with `|value| <= tol`.
    pub fn prune(&self, tol: f64) -> Self {
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        let mut col_indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        row_offsets.push(0);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if v.abs() > tol {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        let mut m = Self::from_parts_unchecked(self.nrows, self.ncols, row_offsets, col_indices, values);
        m.symmetric = self.symmetric;
        m
    }

    /// Dense block `A[rows, cols]`.
    pub fn extract_dense(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(rows.len(), cols.len());
        let mut position = std::collections::HashMap::with_capacity(cols.len());
        for (k, &c) in cols.iter().enumerate() {
            position.insert(c, k);
        }
        for (r, &i) in rows.iter().enumerate() {
            let (rc, rv) = self.row(i);
            for (&j, &v) in rc.iter().zip(rv) {
                if let Some(&k) = position.get(&j) {
                    out.set(r, k, v);
                }
            }
        }
        out
    }

    /// Column `j` as sparse `(rows, values)`; O(nnz).
    pub fn column(&self, j: usize) -> (Vec<usize>, Vec<f64>) {
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        for i in 0..self.nrows {
            let (cols, v) = self.row(i);
            if let Ok(k) = cols.binary_search(&j) {
                rows.push(i);
                vals.push(v[k]);
            }
        }
        (rows, vals)
    }

    /// Columns as sparse `(rows, values)` lists, via one transpose.
    pub fn columns(&self) -> Vec<(Vec<usize>, Vec<f64>)> {
        let t = self.transpose();
        (0..self.ncols)
            .map(|j| {
                let (r, v) = t.row(j);
                (r.to_vec(), v.to_vec())
            })
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d.set(i, j, v);
            }
        }
        d
    }

    /// Largest entrywise magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.add_scaled(1.0, other, -1.0)?.max_abs())
    }
}

/// `R * (A * P)`. When `R` equals `P^T` and `A` is flagged symmetric, the
/// result is symmetrized and flagged symmetric.
pub fn triple_product(r: &CsrMatrix, a: &CsrMatrix, p: &CsrMatrix) -> Result<CsrMatrix> {
    check_dim("triple_product R*A", r.ncols(), a.nrows())?;
    check_dim("triple_product A*P", a.ncols(), p.nrows())?;
    let ap = a.matmul(p)?;
    let rap = r.matmul(&ap)?;
    if a.is_symmetric() && r.nrows() == p.ncols() && r.ncols() == p.nrows() && r.same_entries(&p.transpose()) {
        return rap.symmetrize();
    }
    Ok(rap)
}

/// Galerkin product `P^T A P`, flagged symmetric when `A` is.
pub fn galerkin(a: &CsrMatrix, p: &CsrMatrix) -> Result<CsrMatrix> {
    let pt = p.transpose_unflagged();
    triple_product(&pt, a, p)
}

impl CsrMatrix {
    fn transpose_unflagged(&self) -> Self {
        let mut t = self.transpose();
        t.symmetric = false;
        t
    }

    /// Structural and numerical equality, ignoring the symmetry flag.
    pub fn same_entries(&self, other: &Self) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_offsets == other.row_offsets
            && self.col_indices == other.col_indices
            && self.values == other.values
    }
}
