//! Geometric multigrid for the biquadratic Laplacian on the nested channel grids.
//!
//! Every level is rediscretised; prolongation is exact interpolation of
//! the coarse biquadratic field at the fine nodes (the spaces are nested),
//! restriction is its transpose. Smoothing is damped Jacobi with the
//! damping chosen from a power-iteration estimate of `λ_max(D⁻¹A)`, and the
//! coarsest grid is solved by dense Cholesky. A fixed number of V-cycles
//! from a zero initial guess is a symmetric positive definite linear
//! operator.

use crate::dense::{Cholesky, DenseMatrix};
use crate::error::{check_len, Error, Result};
use crate::fem::assemble::scalar_laplacian;
use crate::fem::element::lagrange2;
use crate::fem::mesh::{ChannelMesh, DofMap, NodeKind};
use crate::operator::LinearOperator;
use crate::sparse::{axpy, dot, norm2, SparseMatrix, TripletBuilder};

#[derive(Clone, Debug)]
struct Level {
    a: SparseMatrix,
    /// Per-row damped inverse diagonal `ω / a_ii` (`1 / a_ii` on decoupled rows).
    smoother: Vec<f64>,
    /// Interpolation from the next coarser level (absent on the coarsest).
    prolong: Option<SparseMatrix>,
    restrict: Option<SparseMatrix>,
}

/// V-cycle hierarchy for the scalar Laplacian with wall conditions.
#[derive(Clone, Debug)]
pub struct Multigrid {
    /// Coarsest first.
    levels: Vec<Level>,
    coarse: Cholesky,
    pub cycles: usize,
    pub pre_smooth: usize,
    pub post_smooth: usize,
    /// Damping factor used on every level.
    pub omega: Vec<f64>,
}

/// Interpolation of biquadratic fields from level `l - 1` to level `l`,
/// with wall rows and columns removed.
pub fn prolongation(fine: &ChannelMesh, coarse: &ChannelMesh) -> SparseMatrix {
    let nf = fine.q2_per_side;
    let nc = coarse.q2_per_side;
    let ne_c = coarse.elements_per_side;
    // 1D weights: fine index -> [(coarse index, weight)]
    let weights_1d: Vec<Vec<(usize, f64)>> = (0..nf)
        .map(|i| {
            let e = (i / 4).min(ne_c - 1);
            let xi = (i as f64 - 4.0 * e as f64) / 2.0 - 1.0;
            lagrange2(xi)
                .iter()
                .enumerate()
                .filter(|(_, w)| w.abs() > 1e-15)
                .map(|(a, &w)| (2 * e + a, w))
                .collect()
        })
        .collect();
    let mut t = TripletBuilder::new(fine.n_q2(), coarse.n_q2());
    for jf in 0..nf {
        for i_f in 0..nf {
            let kf = jf * nf + i_f;
            if fine.node_kind(kf) == NodeKind::Wall {
                continue;
            }
            for &(jc, wy) in &weights_1d[jf] {
                for &(ic, wx) in &weights_1d[i_f] {
                    let kc = jc * nc + ic;
                    if coarse.node_kind(kc) != NodeKind::Wall {
                        t.push(kf, kc, wx * wy);
                    }
                }
            }
        }
    }
    t.build()
}

/// Power-iteration estimate of `λ_max(D⁻¹A)`.
fn estimate_lambda_max(a: &SparseMatrix, inv_diag: &[f64]) -> f64 {
    let n = a.nrows();
    // deterministic, non-smooth start vector
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
    let mut y = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..60 {
        let nx = norm2(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        a.mul_vec_into(&x, &mut y);
        for i in 0..n {
            y[i] *= inv_diag[i];
        }
        // Rayleigh quotient in the D inner product
        let d: Vec<f64> = x.iter().zip(inv_diag).map(|(v, w)| v / w).collect();
        lambda = dot(&y, &d) / dot(&x, &d);
        std::mem::swap(&mut x, &mut y);
    }
    lambda
}

impl Multigrid {
    /// Builds the hierarchy from level 2 up to `level`.
    pub fn new(level: usize, cycles: usize, smoothing: usize) -> Result<Self> {
        if level < 2 {
            return Err(Error::Config(format!("no multigrid hierarchy for level {level}")));
        }
        if cycles == 0 {
            return Err(Error::Config("at least one V-cycle is required".into()));
        }
        let meshes: Vec<ChannelMesh> = (2..=level).map(ChannelMesh::new).collect::<Result<_>>()?;
        let mut levels = Vec::with_capacity(meshes.len());
        let mut omega = Vec::with_capacity(meshes.len());
        for (k, mesh) in meshes.iter().enumerate() {
            let dofs = DofMap::new(mesh);
            let a = scalar_laplacian(mesh, &dofs);
            let diag = a.diagonal();
            let decoupled: Vec<bool> = (0..a.nrows()).map(|i| a.row_iter(i).count() == 1).collect();
            let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
            let lmax = estimate_lambda_max(&a, &inv_diag);
            // Damping 4/(3λ_max) keeps every mode of the smoother contractive.
            let w = 4.0 / (3.0 * lmax);
            omega.push(w);
            let smoother = inv_diag
                .iter()
                .zip(&decoupled)
                .map(|(&d, &dec)| if dec { d } else { w * d })
                .collect();
            let (prolong, restrict) = if k == 0 {
                (None, None)
            } else {
                let p = prolongation(mesh, &meshes[k - 1]);
                let r = p.transpose();
                (Some(p), Some(r))
            };
            levels.push(Level { a, smoother, prolong, restrict });
        }
        let coarse = Cholesky::new(&levels[0].a.to_dense())?;
        Ok(Self {
            levels,
            coarse,
            cycles,
            pre_smooth: smoothing,
            post_smooth: smoothing,
            omega,
        })
    }

    pub fn n(&self) -> usize {
        self.levels.last().expect("nonempty").a.nrows()
    }

    /// The fine-grid operator.
    pub fn matrix(&self) -> &SparseMatrix {
        &self.levels.last().expect("nonempty").a
    }

    fn smooth(lvl: &Level, x: &mut [f64], b: &[f64], sweeps: usize, work: &mut [f64]) {
        for _ in 0..sweeps {
            lvl.a.mul_vec_into(x, work);
            for i in 0..x.len() {
                x[i] += lvl.smoother[i] * (b[i] - work[i]);
            }
        }
    }

    /// One V-cycle on level `k` for `A x = b`, improving `x` in place.
    fn vcycle(&self, k: usize, x: &mut [f64], b: &[f64]) {
        if k == 0 {
            let sol = self.coarse.solve(b).expect("coarse size");
            x.copy_from_slice(&sol);
            return;
        }
        let lvl = &self.levels[k];
        let n = x.len();
        let mut work = vec![0.0; n];
        Self::smooth(lvl, x, b, self.pre_smooth, &mut work);
        lvl.a.mul_vec_into(x, &mut work);
        let res: Vec<f64> = b.iter().zip(&work).map(|(p, q)| p - q).collect();
        let r = lvl.restrict.as_ref().expect("fine level");
        let p = lvl.prolong.as_ref().expect("fine level");
        let mut rc = vec![0.0; r.nrows()];
        r.mul_vec_into(&res, &mut rc);
        let mut ec = vec![0.0; r.nrows()];
        self.vcycle(k - 1, &mut ec, &rc);
        p.mul_vec_into(&ec, &mut work);
        axpy(1.0, &work, x);
        let mut work2 = vec![0.0; n];
        Self::smooth(lvl, x, b, self.post_smooth, &mut work2);
    }

    /// Runs `cycles` V-cycles on `A x = b` starting from `x`.
    pub fn solve_from(&self, x: &mut [f64], b: &[f64], cycles: usize) -> Result<()> {
        let n = self.n();
        check_len("multigrid rhs", b.len(), n)?;
        check_len("multigrid iterate", x.len(), n)?;
        let top = self.levels.len() - 1;
        let a = self.matrix();
        let mut ax = vec![0.0; n];
        for c in 0..cycles {
            if c == 0 && x.iter().all(|&v| v == 0.0) {
                self.vcycle(top, x, b);
                continue;
            }
            a.mul_vec_into(x, &mut ax);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            let mut e = vec![0.0; n];
            self.vcycle(top, &mut e, &r);
            axpy(1.0, &e, x);
        }
        Ok(())
    }
}

impl LinearOperator for Multigrid {
    fn nrows(&self) -> usize {
        self.n()
    }

    fn ncols(&self) -> usize {
        self.n()
    }

    fn apply_into(&self, r: &[f64], y: &mut [f64]) -> Result<()> {
        y.fill(0.0);
        self.solve_from(y, r, self.cycles)
    }
}

/// Applies a scalar operator to each of the two velocity components.
#[derive(Clone, Debug)]
pub struct ComponentWise<T>(pub T);

impl<T: LinearOperator> LinearOperator for ComponentWise<T> {
    fn nrows(&self) -> usize {
        2 * self.0.nrows()
    }

    fn ncols(&self) -> usize {
        2 * self.0.ncols()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let n = self.0.ncols();
        check_len("component-wise input", x.len(), 2 * n)?;
        let (y0, y1) = y.split_at_mut(self.0.nrows());
        self.0.apply_into(&x[..n], y0)?;
        self.0.apply_into(&x[n..], y1)
    }

    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let n = self.0.nrows();
        check_len("component-wise input", x.len(), 2 * n)?;
        let (y0, y1) = y.split_at_mut(self.0.ncols());
        self.0.apply_transpose_into(&x[..n], y0)?;
        self.0.apply_transpose_into(&x[n..], y1)
    }
}

/// Dense matrix of the multigrid operator, for spectral checks.
pub fn multigrid_dense(mg: &Multigrid) -> Result<DenseMatrix> {
    crate::operator::to_dense(mg)
}
