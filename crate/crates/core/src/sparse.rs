//! Compressed sparse row matrices.
//!
//! Every discrete operator in the crate (mass matrices, the Laplacian, the
//! divergence, convection and the assembled optimality systems) lives in a
//! [`SparseMatrix`]. Rows store strictly increasing column indices; assembly
//! goes through [`TripletBuilder`], which coalesces duplicates by summation in
//! a fixed order so results are bit-reproducible.

use crate::dense::DenseMatrix;
use crate::error::{check_len, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Coordinate-format accumulator used during assembly.
#[derive(Clone, Debug, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    /// Adds `value` at `(i, j)`. Out-of-range indices panic; they are always
    /// programming errors in the assembly loops.
    pub fn push(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            i < self.nrows && j < self.ncols,
            "triplet ({i},{j}) outside {}x{}",
            self.nrows,
            self.ncols
        );
        self.entries.push((i, j, value));
    }

    /// Adds every stored entry of `m`, scaled, with its origin at `(r0, c0)`.
    pub fn push_block(&mut self, r0: usize, c0: usize, m: &SparseMatrix, scale: f64) {
        for i in 0..m.nrows {
            for (j, v) in m.row_iter(i) {
                self.push(r0 + i, c0 + j, scale * v);
            }
        }
    }

    pub fn build(mut self) -> SparseMatrix {
        // Stable sort keeps the summation order of duplicates equal to the
        // insertion order.
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating the structural invariants.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_len("row_ptr", row_ptr.len(), nrows + 1)?;
        check_len("values", values.len(), col_idx.len())?;
        if row_ptr[0] != 0 || row_ptr[nrows] != col_idx.len() {
            return Err(Error::Dimension("row_ptr does not span the entries".into()));
        }
        for i in 0..nrows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::Dimension(format!("row_ptr decreases at row {i}")));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Dimension(format!(
                    "row {i}: column indices not strictly increasing"
                )));
            }
            if cols.iter().any(|&j| j >= ncols) {
                return Err(Error::Dimension(format!("row {i}: column index out of range")));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut b = TripletBuilder::with_capacity(nrows, ncols, triplets.len());
        for &(i, j, v) in triplets {
            b.push(i, j, v);
        }
        b.build()
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: d.to_vec(),
        }
    }

    pub fn from_dense(m: &DenseMatrix, drop_tol: f64) -> Self {
        let mut b = TripletBuilder::new(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.abs() > drop_tol {
                    b.push(i, j, v);
                }
            }
        }
        b.build()
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

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    /// Entry `(i, j)`, zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = M x`; panics on length mismatch.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    /// `y = Mᵀ x`; panics on length mismatch.
    pub fn mul_vec_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[k]] += self.values[k] * xi;
            }
        }
    }

    /// Matrix-vector product, `M x` or `Mᵀ x`.
    pub fn spmv(&self, x: &[f64], transpose: bool) -> Result<Vec<f64>> {
        if transpose {
            check_len("spmv (transpose) input", x.len(), self.nrows)?;
            let mut y = vec![0.0; self.ncols];
            self.mul_vec_transpose_into(x, &mut y);
            Ok(y)
        } else {
            check_len("spmv input", x.len(), self.ncols)?;
            let mut y = vec![0.0; self.nrows];
            self.mul_vec_into(x, &mut y);
            Ok(y)
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let dst = next[j];
                col_idx[dst] = i;
                values[dst] = self.values[k];
                next[j] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// `a·self + b·other` on the union pattern.
    pub fn add_scaled(&self, a: f64, other: &SparseMatrix, b: f64) -> Result<SparseMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Dimension(format!(
                "add: {}x{} vs {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut t = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        t.push_block(0, 0, self, a);
        t.push_block(0, 0, other, b);
        Ok(t.build())
    }

    /// `(M + Mᵀ)/2`.
    pub fn symmetric_part(&self) -> Result<SparseMatrix> {
        self.add_scaled(0.5, &self.transpose(), 0.5)
    }

    /// Sparse product `self · other`.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::Dimension(format!(
                "matmul: {}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut t = TripletBuilder::new(self.nrows, other.ncols);
        let mut acc = vec![0.0; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; other.ncols];
        for i in 0..self.nrows {
            for (k, a) in self.row_iter(i) {
                for (j, b) in other.row_iter(k) {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                t.push(i, j, acc[j]);
                acc[j] = 0.0;
                mark[j] = false;
            }
            touched.clear();
        }
        Ok(t.build())
    }

    /// Extracts `M[rows, cols]` (indices may be in any order; the output follows it).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SparseMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut t = TripletBuilder::new(rows.len(), cols.len());
        for (ni, &oi) in rows.iter().enumerate() {
            for (j, v) in self.row_iter(oi) {
                let nj = col_map[j];
                if nj != usize::MAX {
                    t.push(ni, nj, v);
                }
            }
        }
        t.build()
    }

    /// Symmetric reordering `P M Pᵀ` where `perm[new] = old`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Result<SparseMatrix> {
        if self.nrows != self.ncols || perm.len() != self.nrows {
            return Err(Error::Dimension("permute_symmetric needs a square matrix and full permutation".into()));
        }
        Ok(self.submatrix(perm, perm))
    }

    /// Zeroes the listed rows and columns and places `diag` on their diagonal.
    pub fn with_dirichlet(&self, dofs: &[usize], diag: f64) -> SparseMatrix {
        let mut fixed = vec![false; self.nrows.max(self.ncols)];
        for &d in dofs {
            fixed[d] = true;
        }
        let mut t = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz());
        for i in 0..self.nrows {
            if fixed[i] {
                continue;
            }
            for (j, v) in self.row_iter(i) {
                if !fixed[j] {
                    t.push(i, j, v);
                }
            }
        }
        for &d in dofs {
            if d < self.nrows && d < self.ncols {
                t.push(d, d, diag);
            }
        }
        t.build()
    }

    /// Drops the stored entries of the listed rows.
    pub fn without_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut drop = vec![false; self.nrows];
        for &r in rows {
            drop[r] = true;
        }
        self.filter(|i, _| !drop[i])
    }

    /// Drops the stored entries of the listed columns.
    pub fn without_cols(&self, cols: &[usize]) -> SparseMatrix {
        let mut drop = vec![false; self.ncols];
        for &c in cols {
            drop[c] = true;
        }
        self.filter(|_, j| !drop[j])
    }

    /// Keeps the entries for which `keep(i, j)` holds.
    pub fn filter(&self, keep: impl Fn(usize, usize) -> bool) -> SparseMatrix {
        let mut t = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row_iter(i) {
                if keep(i, j) {
                    t.push(i, j, v);
                }
            }
        }
        t.build()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row_iter(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row_iter(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest `|M_ij - M_ji|`.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let t = self.transpose();
        let diff = self.add_scaled(1.0, &t, -1.0).expect("same shape");
        diff.max_abs()
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.asymmetry() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Half bandwidth `max |i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.nrows)
            .flat_map(|i| self.row_iter(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Whether a symmetric matrix is positive definite, decided by a banded
    /// `LDLᵀ` factorisation without pivoting. Pivots must exceed
    /// `rel_tol · ‖M‖_∞`.
    pub fn is_positive_definite(&self, rel_tol: f64) -> Result<bool> {
        Ok(self.band_ldlt_pivots()?.iter().all(|&d| d > rel_tol * self.norm_inf()))
    }

    /// Pivots of the banded `LDLᵀ` factorisation of a symmetric matrix. By
    /// Sylvester's law of inertia the number of negative pivots equals the
    /// number of negative eigenvalues when no pivot vanishes.
    pub fn band_ldlt_pivots(&self) -> Result<Vec<f64>> {
        if self.nrows != self.ncols {
            return Err(Error::Dimension("LDLᵀ needs a square matrix".into()));
        }
        let n = self.nrows;
        let bw = self.bandwidth();
        let w = bw + 1;
        // band[i][k] holds M(i, i - bw + k) for the lower triangle
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in self.row_iter(i) {
                if j <= i {
                    band[i * w + (j + bw - i)] = v;
                }
            }
        }
        let at = |band: &Vec<f64>, i: usize, j: usize| band[i * w + (j + bw - i)];
        let mut d = vec![0.0; n];
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut djj = at(&band, j, j);
            for k in lo..j {
                let ljk = at(&band, j, k);
                djj -= ljk * ljk * d[k];
            }
            d[j] = djj;
            if djj == 0.0 {
                return Ok(d);
            }
            let hi = (j + bw).min(n - 1);
            for i in j + 1..=hi {
                let mut lij = at(&band, i, j);
                let lo_i = i.saturating_sub(bw).max(lo);
                for k in lo_i..j {
                    lij -= at(&band, i, k) * at(&band, j, k) * d[k];
                }
                band[i * w + (j + bw - i)] = lij / djj;
            }
        }
        Ok(d)
    }
}

/// Dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += a x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spmv_returns_input() {
        let x = vec![1.5, -2.0, 3.25];
        assert_eq!(SparseMatrix::identity(3).spmv(&x, false).unwrap(), x);
    }

    #[test]
    fn permutation_spmv() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]);
        assert_eq!(m.spmv(&[2.0, 3.0], false).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn spmv_dimension_error() {
        let m = SparseMatrix::identity(3);
        assert!(matches!(m.spmv(&[1.0, 2.0], false), Err(Error::Dimension(_))));
        let r = SparseMatrix::zeros(2, 3);
        assert!(r.spmv(&[1.0, 2.0], true).is_ok());
        assert!(r.spmv(&[1.0, 2.0, 3.0], true).is_err());
    }

    #[test]
    fn builder_coalesces_duplicates() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 0.0);
    }

    #[test]
    fn from_csr_rejects_unsorted_rows() {
        let bad = SparseMatrix::from_csr(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]);
        assert!(bad.is_err());
    }

    #[test]
    fn dirichlet_modification() {
        let m = SparseMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0)],
        );
        let d = m.with_dirichlet(&[0], 1.0);
        assert_eq!(d.get(0, 0), 1.0);
        assert_eq!(d.get(0, 1), 0.0);
        assert_eq!(d.get(1, 0), 0.0);
        assert_eq!(d.get(1, 1), 2.0);
    }

    #[test]
    fn band_ldlt_counts_negative_pivots() {
        let m = SparseMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0), (2, 2, 3.0)],
        );
        // eigenvalues 3, -1, 3
        let piv = m.band_ldlt_pivots().unwrap();
        assert_eq!(piv.iter().filter(|&&d| d < 0.0).count(), 1);
        assert!(!m.is_positive_definite(0.0).unwrap());
        assert!(SparseMatrix::identity(4).is_positive_definite(1e-12).unwrap());
    }

    #[test]
    fn matmul_matches_dense() {
        let a = SparseMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]);
        let b = SparseMatrix::from_triplets(3, 2, &[(0, 1, 4.0), (1, 0, 5.0), (2, 0, 6.0)]);
        let c = a.matmul(&b).unwrap().to_dense();
        let r = a.to_dense().matmul(&b.to_dense()).unwrap();
        assert_eq!(c, r);
    }
}
