//! Fixed-step inexact Uzawa iteration for saddle point systems
//! `[A Bᵀ; B 0] (v, p) = (f, g)`.
//!
//! One step is
//!
//! ```text
//! v ← v + σ Ã⁻¹ (f - A v - Bᵀ p)
//! p ← p + τ² S̃⁻¹ (B v - g)
//! ```
//!
//! (the pressure correction solves `τ⁻¹ S̃ δp = B v - g` and is applied
//! with weight `τ`). Starting from zero, a fixed number of steps is a
//! linear map of `(f, g)`. [`LinearOperator::apply_transpose`] applies the
//! exact algebraic adjoint of that map, obtained by running the steps in
//! reverse with every sub-operator transposed; no symmetry of `A` is
//! assumed, so the same code serves the nonsymmetric Oseen case.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::operator::LinearOperator;
use crate::sparse::{axpy, norm2, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UzawaConfig {
    pub steps: usize,
    /// Velocity step length (`δ` in the nonsymmetric variant).
    pub sigma: f64,
    pub tau: f64,
    /// Iterates growing beyond this factor times the first iterate count as divergence.
    pub divergence_factor: f64,
}

impl UzawaConfig {
    pub fn new(steps: usize, sigma: f64, tau: f64) -> Self {
        Self {
            steps,
            sigma,
            tau,
            divergence_factor: 1e6,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.tau > 0.0) {
            return Err(Error::Config(format!(
                "Uzawa step lengths must be positive, got σ={}, τ={}",
                self.sigma, self.tau
            )));
        }
        if self.steps == 0 {
            return Err(Error::Config("Uzawa needs at least one step".into()));
        }
        Ok(())
    }
}

/// Approximate inverse of `[A Bᵀ; B 0]` by inexact Uzawa steps.
pub struct Uzawa {
    a: SparseMatrix,
    at: SparseMatrix,
    b: SparseMatrix,
    a_inv: Box<dyn LinearOperator + Send + Sync>,
    s_inv: Box<dyn LinearOperator + Send + Sync>,
    cfg: UzawaConfig,
}

impl std::fmt::Debug for Uzawa {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Uzawa").field("n_v", &self.a.nrows()).field("n_p", &self.b.nrows()).field("cfg", &self.cfg).finish()
    }
}

impl Uzawa {
    pub fn new(
        a: SparseMatrix,
        b: SparseMatrix,
        a_inv: Box<dyn LinearOperator + Send + Sync>,
        s_inv: Box<dyn LinearOperator + Send + Sync>,
        cfg: UzawaConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let nv = a.nrows();
        let np = b.nrows();
        if a.ncols() != nv || b.ncols() != nv || a_inv.nrows() != nv || s_inv.nrows() != np {
            return Err(Error::Dimension("Uzawa sub-operator sizes disagree".into()));
        }
        Ok(Self {
            at: a.transpose(),
            a,
            b,
            a_inv,
            s_inv,
            cfg,
        })
    }

    pub fn n_v(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_p(&self) -> usize {
        self.b.nrows()
    }

    pub fn config(&self) -> &UzawaConfig {
        &self.cfg
    }

    fn check_growth(&self, x: &[f64], first: &mut Option<f64>, step: usize, what: &str) -> Result<()> {
        let nx = norm2(x);
        if !nx.is_finite() {
            return Err(Error::Divergence(format!("{what} sweep: non-finite iterate at step {step}")));
        }
        match *first {
            None => *first = Some(nx),
            Some(f) if f > 0.0 && nx > self.cfg.divergence_factor * f => {
                return Err(Error::Divergence(format!(
                    "{what} sweep: iterate grew by {:.3e} at step {step}",
                    nx / f
                )));
            }
            _ => {}
        }
        Ok(())
    }

    /// Forward sweep: `(v, p) = K̃⁻¹ (f, g)`.
    pub fn solve(&self, f: &[f64], g: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (nv, np) = (self.n_v(), self.n_p());
        check_len("Uzawa velocity rhs", f.len(), nv)?;
        check_len("Uzawa pressure rhs", g.len(), np)?;
        let mut v = vec![0.0; nv];
        let mut p = vec![0.0; np];
        let mut r1 = vec![0.0; nv];
        let mut tmp = vec![0.0; nv];
        let mut da = vec![0.0; nv];
        let mut r2 = vec![0.0; np];
        let mut ds = vec![0.0; np];
        let tau2 = self.cfg.tau * self.cfg.tau;
        let mut first = None;
        for step in 0..self.cfg.steps {
            self.a.mul_vec_into(&v, &mut r1);
            self.b.mul_vec_transpose_into(&p, &mut tmp);
            for i in 0..nv {
                r1[i] = f[i] - r1[i] - tmp[i];
            }
            self.a_inv.apply_into(&r1, &mut da)?;
            axpy(self.cfg.sigma, &da, &mut v);
            self.b.mul_vec_into(&v, &mut r2);
            for i in 0..np {
                r2[i] -= g[i];
            }
            self.s_inv.apply_into(&r2, &mut ds)?;
            axpy(tau2, &ds, &mut p);
            let both: Vec<f64> = v.iter().chain(&p).copied().collect();
            self.check_growth(&both, &mut first, step, "forward")?;
        }
        Ok((v, p))
    }

    /// Adjoint sweep: `(f̄, ḡ) = K̃⁻ᵀ (v̄, p̄)`.
    pub fn solve_adjoint(&self, vbar_in: &[f64], pbar_in: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (nv, np) = (self.n_v(), self.n_p());
        check_len("Uzawa adjoint velocity", vbar_in.len(), nv)?;
        check_len("Uzawa adjoint pressure", pbar_in.len(), np)?;
        let mut vbar = vbar_in.to_vec();
        let mut pbar = pbar_in.to_vec();
        let mut fbar = vec![0.0; nv];
        let mut gbar = vec![0.0; np];
        let mut sbar = vec![0.0; np];
        let mut r2bar = vec![0.0; np];
        let mut abar = vec![0.0; nv];
        let mut r1bar = vec![0.0; nv];
        let mut tmp_v = vec![0.0; nv];
        let mut tmp_p = vec![0.0; np];
        let tau2 = self.cfg.tau * self.cfg.tau;
        let mut first = None;
        for step in 0..self.cfg.steps {
            // p ← p + τ² S̃⁻¹ (B v - g)
            for i in 0..np {
                sbar[i] = tau2 * pbar[i];
            }
            self.s_inv.apply_transpose_into(&sbar, &mut r2bar)?;
            self.b.mul_vec_transpose_into(&r2bar, &mut tmp_v);
            axpy(1.0, &tmp_v, &mut vbar);
            axpy(-1.0, &r2bar, &mut gbar);
            // v ← v + σ Ã⁻¹ (f - A v - Bᵀ p)
            for i in 0..nv {
                abar[i] = self.cfg.sigma * vbar[i];
            }
            self.a_inv.apply_transpose_into(&abar, &mut r1bar)?;
            axpy(1.0, &r1bar, &mut fbar);
            self.at.mul_vec_into(&r1bar, &mut tmp_v);
            axpy(-1.0, &tmp_v, &mut vbar);
            self.b.mul_vec_into(&r1bar, &mut tmp_p);
            axpy(-1.0, &tmp_p, &mut pbar);
            let both: Vec<f64> = fbar.iter().chain(&gbar).copied().collect();
            self.check_growth(&both, &mut first, step, "adjoint")?;
        }
        Ok((fbar, gbar))
    }
}

impl LinearOperator for Uzawa {
    fn nrows(&self) -> usize {
        self.n_v() + self.n_p()
    }

    fn ncols(&self) -> usize {
        self.n_v() + self.n_p()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let nv = self.n_v();
        check_len("Uzawa input", x.len(), nv + self.n_p())?;
        let (v, p) = self.solve(&x[..nv], &x[nv..])?;
        y[..nv].copy_from_slice(&v);
        y[nv..].copy_from_slice(&p);
        Ok(())
    }

    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let nv = self.n_v();
        check_len("Uzawa adjoint input", x.len(), nv + self.n_p())?;
        let (f, g) = self.solve_adjoint(&x[..nv], &x[nv..])?;
        y[..nv].copy_from_slice(&f);
        y[nv..].copy_from_slice(&g);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;
    use crate::sparse::dot;

    fn toy() -> (SparseMatrix, SparseMatrix) {
        let a = SparseMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 4.0), (0, 1, 1.5), (1, 0, 0.5), (1, 1, 3.0), (2, 2, 5.0), (1, 2, -1.0)],
        );
        let b = SparseMatrix::from_triplets(1, 3, &[(0, 0, 1.0), (0, 2, 1.0)]);
        (a, b)
    }

    #[test]
    fn adjoint_is_exact_transpose() {
        let (a, b) = toy();
        let ainv = DenseMatrix::from_diagonal(&[0.25, 1.0 / 3.0, 0.2]);
        let sinv = DenseMatrix::from_diagonal(&[2.0]);
        let u = Uzawa::new(a, b, Box::new(ainv), Box::new(sinv), UzawaConfig::new(4, 0.9, 0.8)).unwrap();
        let x = [0.3, -1.0, 2.0, 0.7];
        let y = [1.1, 0.4, -0.6, 1.5];
        let lhs = dot(&y, &u.apply(&x).unwrap());
        let rhs = dot(&x, &u.apply_transpose(&y).unwrap());
        assert!((lhs - rhs).abs() < 1e-13 * lhs.abs().max(1.0));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let (a, b) = toy();
        let u = Uzawa::new(
            a,
            b,
            Box::new(DenseMatrix::identity(3)),
            Box::new(DenseMatrix::identity(1)),
            UzawaConfig::new(3, 0.1, 1.0),
        )
        .unwrap();
        assert!(u.apply(&[0.0; 4]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn growth_is_reported_as_divergence() {
        let (a, b) = toy();
        let u = Uzawa::new(
            a,
            b,
            Box::new(DenseMatrix::identity(3)),
            Box::new(DenseMatrix::identity(1)),
            UzawaConfig::new(60, 5.0, 1.0),
        )
        .unwrap();
        assert!(matches!(u.apply(&[1.0, 0.0, 0.0, 0.0]), Err(Error::Divergence(_))));
    }
}
