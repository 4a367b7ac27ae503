//! Composite operators: block diagonals, the Schur complement
//! approximation and symmetric reorderings.

use crate::dense::{Cholesky, DenseMatrix};
use crate::error::{check_len, Error, Result};
use crate::operator::LinearOperator;
use crate::sparse::SparseMatrix;

use super::uzawa::Uzawa;

/// Boxed operator that can be shared across threads.
pub type BoxedOp = Box<dyn LinearOperator + Send + Sync>;

/// `blkdiag(M₁, …, M_k)`.
pub struct BlockDiagonal {
    blocks: Vec<BoxedOp>,
    offsets: Vec<usize>,
}

impl std::fmt::Debug for BlockDiagonal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockDiagonal").field("offsets", &self.offsets).finish()
    }
}

impl BlockDiagonal {
    pub fn new(blocks: Vec<BoxedOp>) -> Result<Self> {
        let mut offsets = vec![0];
        for b in &blocks {
            if b.nrows() != b.ncols() {
                return Err(Error::Dimension("block-diagonal blocks must be square".into()));
            }
            offsets.push(offsets.last().unwrap() + b.nrows());
        }
        Ok(Self { blocks, offsets })
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn block(&self, k: usize) -> &dyn LinearOperator {
        self.blocks[k].as_ref()
    }

    fn apply_with(&self, x: &[f64], y: &mut [f64], transpose: bool) -> Result<()> {
        let n = *self.offsets.last().unwrap();
        check_len("block-diagonal input", x.len(), n)?;
        check_len("block-diagonal output", y.len(), n)?;
        for (k, b) in self.blocks.iter().enumerate() {
            let r = self.offsets[k]..self.offsets[k + 1];
            if transpose {
                b.apply_transpose_into(&x[r.clone()], &mut y[r])?;
            } else {
                b.apply_into(&x[r.clone()], &mut y[r])?;
            }
        }
        Ok(())
    }
}

impl LinearOperator for BlockDiagonal {
    fn nrows(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn ncols(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_with(x, y, false)
    }

    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_with(x, y, true)
    }
}

/// `S̃⁻¹ = K̃⁻ᵀ 𝒬 K̃⁻¹` where `K̃⁻¹` is a fixed-step Uzawa operator and `𝒬`
/// the mass matrix of the primal block. Symmetric positive semidefinite by
/// construction.
#[derive(Debug)]
pub struct SchurApprox {
    uzawa: Uzawa,
    q: SparseMatrix,
}

impl SchurApprox {
    pub fn new(uzawa: Uzawa, q: SparseMatrix) -> Result<Self> {
        if q.nrows() != uzawa.nrows() || q.ncols() != uzawa.nrows() {
            return Err(Error::Dimension("Schur weight does not match the Uzawa operator".into()));
        }
        Ok(Self { uzawa, q })
    }

    pub fn uzawa(&self) -> &Uzawa {
        &self.uzawa
    }
}

impl LinearOperator for SchurApprox {
    fn nrows(&self) -> usize {
        self.uzawa.nrows()
    }

    fn ncols(&self) -> usize {
        self.uzawa.nrows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let z = self.uzawa.apply(x)?;
        let qz = self.q.spmv(&z, false)?;
        self.uzawa.apply_transpose_into(&qz, y)
    }
}

/// `Pᵀ M P` for an operator `M` that acts on permuted vectors
/// (`(Px)[new] = x[perm[new]]`).
pub struct Permuted<T> {
    inner: T,
    perm: Vec<usize>,
}

impl<T: std::fmt::Debug> std::fmt::Debug for Permuted<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Permuted").field("inner", &self.inner).field("n", &self.perm.len()).finish()
    }
}

impl<T: LinearOperator> Permuted<T> {
    pub fn new(inner: T, perm: Vec<usize>) -> Result<Self> {
        if inner.nrows() != perm.len() || inner.ncols() != perm.len() {
            return Err(Error::Dimension("permutation does not match the operator".into()));
        }
        Ok(Self { inner, perm })
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }

    fn apply_with(&self, x: &[f64], y: &mut [f64], transpose: bool) -> Result<()> {
        let n = self.perm.len();
        check_len("permuted input", x.len(), n)?;
        check_len("permuted output", y.len(), n)?;
        let px: Vec<f64> = self.perm.iter().map(|&o| x[o]).collect();
        let mut pz = vec![0.0; n];
        if transpose {
            self.inner.apply_transpose_into(&px, &mut pz)?;
        } else {
            self.inner.apply_into(&px, &mut pz)?;
        }
        for (new, &old) in self.perm.iter().enumerate() {
            y[old] = pz[new];
        }
        Ok(())
    }
}

impl<T: LinearOperator> LinearOperator for Permuted<T> {
    fn nrows(&self) -> usize {
        self.perm.len()
    }

    fn ncols(&self) -> usize {
        self.perm.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_with(x, y, false)
    }

    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_with(x, y, true)
    }
}

/// Inverse of a small symmetric positive definite matrix, applied through
/// its dense Cholesky factor.
#[derive(Clone, Debug)]
pub struct DenseSpdInverse {
    chol: Cholesky,
    n: usize,
}

impl DenseSpdInverse {
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        Ok(Self {
            chol: Cholesky::new(m)?,
            n: m.nrows(),
        })
    }
}

impl LinearOperator for DenseSpdInverse {
    fn nrows(&self) -> usize {
        self.n
    }

    fn ncols(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len("dense inverse output", y.len(), self.n)?;
        y.copy_from_slice(&self.chol.solve(x)?);
        Ok(())
    }
}

/// Ideal block-diagonal preconditioner `blkdiag(A₁₁, C A₁₁⁻¹ Cᵀ)⁻¹` for a
/// small saddle point matrix `[A₁₁ Cᵀ; C 0]` with `A₁₁` of size `n1`.
pub fn saddle_block_inverse(m: &DenseMatrix, n1: usize) -> Result<BlockDiagonal> {
    let n = m.nrows();
    if n1 > n || m.ncols() != n {
        return Err(Error::Dimension("saddle split out of range".into()));
    }
    let first: Vec<usize> = (0..n1).collect();
    let second: Vec<usize> = (n1..n).collect();
    let a11 = m.select(&first, &first);
    let c = m.select(&second, &first);
    let chol = Cholesky::new(&a11)?;
    // S = C A₁₁⁻¹ Cᵀ = (L⁻¹Cᵀ)ᵀ (L⁻¹Cᵀ)
    let w: Vec<Vec<f64>> = (0..c.nrows()).map(|i| chol.solve_lower(c.row(i))).collect();
    let s = DenseMatrix::from_fn(c.nrows(), c.nrows(), |i, j| {
        w[i].iter().zip(&w[j]).map(|(a, b)| a * b).sum()
    });
    let mut blocks: Vec<BoxedOp> = vec![Box::new(DenseSpdInverse { chol, n: n1 })];
    if n > n1 {
        blocks.push(Box::new(DenseSpdInverse::new(&s)?));
    }
    BlockDiagonal::new(blocks)
}
