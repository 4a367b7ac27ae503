//! Small dense linear algebra: row-major matrices, LU and Cholesky
//! factorisations, and a cyclic Jacobi eigensolver for symmetric and
//! symmetric-definite generalised problems.
//!
//! These routines back the element-level eigenvalue computations, the
//! dense reference solves and every spectral experiment. They are `O(n³)`
//! and meant for dimensions up to a few thousand.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Largest dimension converted to dense storage by the analyses and
/// reference solvers unless the caller raises it.
pub const DEFAULT_DENSE_CAP: usize = 6000;

pub(crate) fn check_cap(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        return Err(Error::Cap { dim, cap });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("dense data", data.len(), nrows * ncols)?;
        Ok(Self { nrows, ncols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            check_len("dense row", r.len(), ncols)?;
            data.extend_from_slice(r);
        }
        Ok(Self { nrows, ncols, data })
    }

    /// Builds the matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let ncols = cols.len();
        let nrows = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nrows, ncols);
        for (j, c) in cols.iter().enumerate() {
            check_len("dense column", c.len(), nrows)?;
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("dense mul_vec", x.len(), self.ncols)?;
        Ok((0..self.nrows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::Dimension(format!(
                "dense matmul {}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut out = DenseMatrix::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.ncols..(i + 1) * other.ncols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add_scaled(&self, a: f64, other: &DenseMatrix, b: f64) -> Result<DenseMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Dimension("dense add: shapes differ".into()));
        }
        Ok(DenseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect(),
        })
    }

    pub fn scaled(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Submatrix with the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        DenseMatrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest `|M_ij - M_ji|`, infinite for rectangular input.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let mut m: f64 = 0.0;
        for i in 0..self.nrows {
            for j in 0..i {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.asymmetry() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// `(M + Mᵀ)/2`.
    pub fn symmetrized(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.nrows, self.ncols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }
}

/// LU factorisation with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl Lu {
    /// Factorises `m`; pivots below `1e-14·‖M‖_∞` are reported as singular.
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        if m.nrows != m.ncols {
            return Err(Error::Dimension("LU needs a square matrix".into()));
        }
        if !m.is_finite() {
            return Err(Error::Singular("non-finite entries".into()));
        }
        let n = m.nrows;
        let tol = 1e-14 * m.norm_inf();
        let mut a = m.data.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, big) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if big <= tol || big == 0.0 {
                return Err(Error::Singular(format!("pivot {big:e} at column {k}")));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let akk = a[k * n + k];
            let (top, bottom) = a.split_at_mut((k + 1) * n);
            let krow = &top[k * n..(k + 1) * n];
            for i in 0..n - k - 1 {
                let row = &mut bottom[i * n..(i + 1) * n];
                let l = row[k] / akk;
                row[k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        row[j] -= l * krow[j];
                    }
                }
            }
        }
        Ok(Self { n, lu: a, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        check_len("LU rhs", b.len(), n)?;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        Ok(x)
    }
}

/// Solves `M x = b` by partial-pivot LU.
pub fn dense_solve(m: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_len("dense_solve rhs", b.len(), m.nrows)?;
    Lu::new(m)?.solve(b)
}

/// Cholesky factor `M = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        if m.nrows != m.ncols {
            return Err(Error::Dimension("Cholesky needs a square matrix".into()));
        }
        if !m.is_finite() {
            return Err(Error::NotSpd("non-finite entries".into()));
        }
        let n = m.nrows;
        let scale = m.max_abs();
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 1e-15 * scale || !d.is_finite() {
                return Err(Error::NotSpd(format!("pivot {d:e} at row {j}")));
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = m[(i, j)];
                let (ri, rj) = (i * n, j * n);
                for k in 0..j {
                    s -= l.data[ri + k] * l.data[rj + k];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &DenseMatrix {
        &self.l
    }

    /// `L⁻¹ b`
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.nrows;
        let mut x = b.to_vec();
        for i in 0..n {
            let s: f64 = self.l.row(i)[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / self.l[(i, i)];
        }
        x
    }

    /// `L⁻ᵀ b`
    pub fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.nrows;
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            x[i] /= self.l[(i, i)];
            let xi = x[i];
            for k in 0..i {
                x[k] -= self.l[(i, k)] * xi;
            }
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len("Cholesky rhs", b.len(), self.l.nrows)?;
        Ok(self.solve_upper(&self.solve_lower(b)))
    }
}

/// Eigenvalues with the summary numbers used throughout the analyses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Sorted ascending.
    pub eigenvalues: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// `max|λ| / min|λ|`.
    pub condition_number: f64,
    pub n_negative: usize,
}

impl SpectrumReport {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let min = eigenvalues.first().copied().unwrap_or(f64::NAN);
        let max = eigenvalues.last().copied().unwrap_or(f64::NAN);
        let amax = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let amin = eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let n_negative = eigenvalues.iter().filter(|&&v| v < 0.0).count();
        Self {
            min,
            max,
            condition_number: amax / amin,
            n_negative,
            eigenvalues,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Eigenvalues and orthonormal eigenvectors (as columns) of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigen {
    /// Sorted ascending.
    pub values: Vec<f64>,
    /// Column `k` belongs to `values[k]`.
    pub vectors: DenseMatrix,
}

fn check_symmetric(m: &DenseMatrix) -> Result<()> {
    if m.nrows != m.ncols {
        return Err(Error::Dimension("eigensolver needs a square matrix".into()));
    }
    if !m.is_finite() {
        return Err(Error::Symmetry("non-finite entries".into()));
    }
    if !m.is_symmetric(1e-12) {
        return Err(Error::Symmetry(format!("max |M - Mᵀ| = {:e}", m.asymmetry())));
    }
    Ok(())
}

/// Cyclic Jacobi sweeps on the symmetrised copy of `m`. Returns the
/// diagonalised matrix and, if requested, the accumulated rotations.
fn jacobi(m: &DenseMatrix, want_vectors: bool) -> (Vec<f64>, Option<DenseMatrix>) {
    let n = m.nrows;
    let mut a = m.symmetrized();
    let mut v = want_vectors.then(|| DenseMatrix::identity(n));
    let fro = a.frobenius();
    if n < 2 || fro == 0.0 {
        return (a.diagonal(), v);
    }
    let target = 1e-14 * fro;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..i {
                off += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= target {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // Negligible against both diagonal entries: rotating would
                // not change them in floating point.
                if apq.abs() < 1e-18 * app.abs().min(aqq.abs()) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // columns p, q
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                // rows p, q
                {
                    let (lo, hi) = a.data.split_at_mut(q * n);
                    let rp = &mut lo[p * n..(p + 1) * n];
                    let rq = &mut hi[..n];
                    for k in 0..n {
                        let apk = rp[k];
                        let aqk = rq[k];
                        rp[k] = c * apk - s * aqk;
                        rq[k] = s * apk + c * aqk;
                    }
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    (a.diagonal(), v)
}

/// Full spectrum of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eig(m: &DenseMatrix) -> Result<SpectrumReport> {
    check_symmetric(m)?;
    Ok(SpectrumReport::from_eigenvalues(jacobi(m, false).0))
}

/// Eigenvalues and eigenvectors of a symmetric matrix.
pub fn sym_eig_vectors(m: &DenseMatrix) -> Result<SymEigen> {
    check_symmetric(m)?;
    let (vals, vecs) = jacobi(m, true);
    let vecs = vecs.expect("vectors requested");
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let values = order.iter().map(|&k| vals[k]).collect();
    let vectors = vecs.select(&(0..vecs.nrows()).collect::<Vec<_>>(), &order);
    Ok(SymEigen { values, vectors })
}

/// `L⁻¹ M L⁻ᵀ` for `D = L Lᵀ`.
pub fn congruence_reduce(m: &DenseMatrix, d: &DenseMatrix) -> Result<DenseMatrix> {
    check_symmetric(m)?;
    if d.nrows != m.nrows {
        return Err(Error::Dimension("generalised eigenproblem: shapes differ".into()));
    }
    let ch = Cholesky::new(d)?;
    let n = m.nrows;
    // W = L⁻¹ M, column by column of M (M symmetric so rows = columns)
    let mut w = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let col = ch.solve_lower(m.row(j));
        for i in 0..n {
            w[(i, j)] = col[i];
        }
    }
    // C = W L⁻ᵀ = (L⁻¹ Wᵀ)ᵀ
    let mut c = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let row = ch.solve_lower(w.row(i));
        for j in 0..n {
            c[(j, i)] = row[j];
        }
    }
    Ok(c.symmetrized())
}

/// Spectrum of `D⁻¹ M` for symmetric `M` and symmetric positive definite `D`.
pub fn gen_sym_eig(m: &DenseMatrix, d: &DenseMatrix) -> Result<SpectrumReport> {
    if !d.is_symmetric(1e-12) {
        return Err(Error::Symmetry("D is not symmetric".into()));
    }
    sym_eig(&congruence_reduce(m, d)?)
}
