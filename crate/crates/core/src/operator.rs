//! The linear-operator abstraction shared by Krylov solvers and
//! preconditioners.

use crate::dense::DenseMatrix;
use crate::error::{check_len, Result};
use crate::sparse::SparseMatrix;

/// A linear map `ℝⁿ → ℝᵐ` that can be applied to vectors.
///
/// Preconditioners built from fixed-step iterations implement this trait
/// too; they are linear as long as every inner iteration starts from zero.
pub trait LinearOperator {
    fn nrows(&self) -> usize;

    fn ncols(&self) -> usize;

    /// `y = M x`. `x` has length `ncols`, `y` length `nrows`.
    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()>;

    /// `y = Mᵀ x`. Defaults to `apply_into`, which is right for symmetric maps.
    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_into(x, y)
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("operator input", x.len(), self.ncols())?;
        let mut y = vec![0.0; self.nrows()];
        self.apply_into(x, &mut y)?;
        Ok(y)
    }

    fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("operator transpose input", x.len(), self.nrows())?;
        let mut y = vec![0.0; self.ncols()];
        self.apply_transpose_into(x, &mut y)?;
        Ok(y)
    }
}

impl LinearOperator for SparseMatrix {
    fn nrows(&self) -> usize {
        SparseMatrix::nrows(self)
    }

    fn ncols(&self) -> usize {
        SparseMatrix::ncols(self)
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len("spmv input", x.len(), SparseMatrix::ncols(self))?;
        check_len("spmv output", y.len(), SparseMatrix::nrows(self))?;
        self.mul_vec_into(x, y);
        Ok(())
    }

    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len("spmv input", x.len(), SparseMatrix::nrows(self))?;
        check_len("spmv output", y.len(), SparseMatrix::ncols(self))?;
        self.mul_vec_transpose_into(x, y);
        Ok(())
    }
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        DenseMatrix::nrows(self)
    }

    fn ncols(&self) -> usize {
        DenseMatrix::ncols(self)
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let r = self.mul_vec(x)?;
        y.copy_from_slice(&r);
        Ok(())
    }

    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len("dense transpose input", x.len(), DenseMatrix::nrows(self))?;
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate() {
            for (yj, a) in y.iter_mut().zip(self.row(i)) {
                *yj += a * xi;
            }
        }
        Ok(())
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        (**self).apply_into(x, y)
    }
    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        (**self).apply_transpose_into(x, y)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Box<T> {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        (**self).apply_into(x, y)
    }
    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        (**self).apply_transpose_into(x, y)
    }
}

/// The identity map on `ℝⁿ`.
#[derive(Clone, Copy, Debug)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn nrows(&self) -> usize {
        self.0
    }
    fn ncols(&self) -> usize {
        self.0
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len("identity input", x.len(), self.0)?;
        y.copy_from_slice(x);
        Ok(())
    }
}

/// Applies a square operator column by column to form a dense matrix.
pub fn to_dense(op: &dyn LinearOperator) -> Result<DenseMatrix> {
    let n = op.ncols();
    let mut cols = Vec::with_capacity(n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        cols.push(op.apply(&e)?);
        e[j] = 0.0;
    }
    DenseMatrix::from_columns(&cols)
}
