//! Modified incomplete Cholesky factorisation with zero fill, MIC(0).
//!
//! The factorisation `K ≈ L D Lᵀ` keeps the sparsity pattern of `K`. Fill
//! that falls outside the pattern is not discarded but added back to the
//! two diagonal entries it couples (Gustafsson's modification), so the
//! factor reproduces the row sums of `K`.

use crate::error::{check_len, Error, Result};
use crate::operator::LinearOperator;
use crate::sparse::SparseMatrix;

/// `(L D Lᵀ)⁻¹` for the MIC(0) factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Mic0 {
    n: usize,
    /// Strict upper part of `D Lᵀ`, row-wise: `u_kj = d_k l_jk`.
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    upper: Vec<f64>,
    diag: Vec<f64>,
    /// Diagonal shift that was needed for a successful factorisation.
    pub shift: f64,
}

impl Mic0 {
    /// Factorises `k`, retrying with diagonal shifts `1e-8·‖K‖_∞·10^j`
    /// (`j = 0, 1, 2`) after a nonpositive pivot.
    pub fn new(k: &SparseMatrix) -> Result<Self> {
        if k.nrows() != k.ncols() {
            return Err(Error::Dimension("MIC(0) needs a square matrix".into()));
        }
        if !k.is_symmetric(1e-12) {
            return Err(Error::Symmetry("MIC(0) needs a symmetric matrix".into()));
        }
        let norm = k.norm_inf();
        let mut last_err = None;
        for attempt in 0..4 {
            let shift = if attempt == 0 { 0.0 } else { 1e-8 * norm * 10f64.powi(attempt - 1) };
            match Self::factor(k, shift, norm) {
                Ok(f) => return Ok(f),
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.expect("at least one attempt"))
    }

    fn factor(k: &SparseMatrix, shift: f64, norm: f64) -> Result<Self> {
        let n = k.nrows();
        // upper-triangular storage including the diagonal
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut val = Vec::new();
        let mut diag = vec![0.0; n];
        for i in 0..n {
            for (j, v) in k.row_iter(i) {
                if j == i {
                    diag[i] = v + shift;
                } else if j > i {
                    col_idx.push(j);
                    val.push(v);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        let find = |col_idx: &[usize], row_ptr: &[usize], i: usize, j: usize| -> Option<usize> {
            let r = row_ptr[i]..row_ptr[i + 1];
            col_idx[r.clone()].binary_search(&j).ok().map(|p| r.start + p)
        };
        let tiny = 1e-14 * norm;
        for kk in 0..n {
            let dk = diag[kk];
            if !(dk > tiny) {
                return Err(Error::Factorization(format!("pivot {dk:e} at row {kk} (shift {shift:e})")));
            }
            let r = row_ptr[kk]..row_ptr[kk + 1];
            for a in r.clone() {
                let i = col_idx[a];
                let uki = val[a];
                if uki == 0.0 {
                    continue;
                }
                let f = uki / dk;
                diag[i] -= f * uki;
                for b in a + 1..r.end {
                    let j = col_idx[b];
                    let upd = f * val[b];
                    match find(&col_idx, &row_ptr, i, j) {
                        Some(p) => val[p] -= upd,
                        None => {
                            diag[i] -= upd;
                            diag[j] -= upd;
                        }
                    }
                }
            }
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            upper: val,
            diag,
            shift,
        })
    }

    pub fn pivots(&self) -> &[f64] {
        &self.diag
    }
}

impl LinearOperator for Mic0 {
    fn nrows(&self) -> usize {
        self.n
    }

    fn ncols(&self) -> usize {
        self.n
    }

    fn apply_into(&self, r: &[f64], x: &mut [f64]) -> Result<()> {
        check_len("MIC(0) input", r.len(), self.n)?;
        check_len("MIC(0) output", x.len(), self.n)?;
        // L y = r with l_jk = u_kj / d_k (column-oriented forward sweep)
        x.copy_from_slice(r);
        for k in 0..self.n {
            let yk = x[k] / self.diag[k];
            if yk == 0.0 {
                continue;
            }
            for p in self.row_ptr[k]..self.row_ptr[k + 1] {
                x[self.col_idx[p]] -= self.upper[p] * yk;
            }
        }
        // D⁻¹ then Lᵀ x = z (row-oriented backward sweep)
        for k in (0..self.n).rev() {
            let mut s = x[k];
            for p in self.row_ptr[k]..self.row_ptr[k + 1] {
                s -= self.upper[p] * x[self.col_idx[p]];
            }
            x[k] = s / self.diag[k];
        }
        Ok(())
    }
}
