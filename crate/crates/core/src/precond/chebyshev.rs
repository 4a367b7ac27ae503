//! Chebyshev semi-iteration for mass matrices.
//!
//! The iteration accelerates the Jacobi splitting `Q = D - (D - Q)` using
//! known bounds `θ ≤ λ(D⁻¹Q) ≤ Θ`. For finite element mass matrices those
//! bounds come from a single element matrix and do not depend on the mesh.
//! Started from zero with a fixed step count the result is a fixed
//! polynomial in `D⁻¹Q` applied to `D⁻¹r`, so the operator is linear and
//! symmetric.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::operator::LinearOperator;
use crate::sparse::{axpy, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevConfig {
    pub steps: usize,
    /// Lower bound of `λ(D⁻¹Q)`.
    pub theta: f64,
    /// Upper bound of `λ(D⁻¹Q)`.
    pub big_theta: f64,
}

/// Element eigenvalue bounds of `D⁻¹Q` for the mass matrices of the discretisation.
pub mod bounds {
    /// Biquadratic velocity mass matrix.
    pub const Q2: (f64, f64) = (0.25, 25.0 / 16.0);
    /// Bilinear pressure mass matrix.
    pub const Q1: (f64, f64) = (0.25, 2.25);
    /// Quadratic boundary (control) mass matrix.
    pub const Q2_EDGE: (f64, f64) = (0.5, 1.25);
}

impl ChebyshevConfig {
    pub fn new(steps: usize, (theta, big_theta): (f64, f64)) -> Self {
        Self { steps, theta, big_theta }
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= self.big_theta && self.big_theta.is_finite()) {
            return Err(Error::Config(format!(
                "Chebyshev bounds must satisfy 0 < θ ≤ Θ, got ({}, {})",
                self.theta, self.big_theta
            )));
        }
        if self.steps == 0 {
            return Err(Error::Config("Chebyshev needs at least one step".into()));
        }
        Ok(())
    }
}

/// `Q⁻¹` approximated by a fixed number of Chebyshev steps, optionally
/// scaled by a constant (`scale·Q`'s inverse is `Q⁻¹/scale`).
#[derive(Clone, Debug)]
pub struct Chebyshev {
    q: SparseMatrix,
    inv_diag: Vec<f64>,
    cfg: ChebyshevConfig,
    /// The operator approximates `(scale·Q)⁻¹`.
    scale: f64,
}

impl Chebyshev {
    pub fn new(q: SparseMatrix, cfg: ChebyshevConfig) -> Result<Self> {
        Self::scaled(q, cfg, 1.0)
    }

    /// Approximates `(scale·Q)⁻¹`.
    pub fn scaled(q: SparseMatrix, cfg: ChebyshevConfig, scale: f64) -> Result<Self> {
        cfg.validate()?;
        if q.nrows() != q.ncols() {
            return Err(Error::Dimension("Chebyshev needs a square matrix".into()));
        }
        if !(scale > 0.0) {
            return Err(Error::Config(format!("scale must be positive, got {scale}")));
        }
        let inv_diag = q
            .diagonal()
            .iter()
            .map(|&d| if d > 0.0 { Ok(1.0 / d) } else { Err(Error::NotSpd(format!("diagonal entry {d}"))) })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { q, inv_diag, cfg, scale })
    }

    pub fn config(&self) -> &ChebyshevConfig {
        &self.cfg
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.q
    }
}

impl LinearOperator for Chebyshev {
    fn nrows(&self) -> usize {
        self.q.nrows()
    }

    fn ncols(&self) -> usize {
        self.q.nrows()
    }

    fn apply_into(&self, r: &[f64], x: &mut [f64]) -> Result<()> {
        let n = self.q.nrows();
        check_len("Chebyshev input", r.len(), n)?;
        check_len("Chebyshev output", x.len(), n)?;
        let d = 0.5 * (self.cfg.big_theta + self.cfg.theta);
        let c = 0.5 * (self.cfg.big_theta - self.cfg.theta);
        x.fill(0.0);
        let mut res = r.to_vec();
        let mut qd = vec![0.0; n];
        // first step: x₁ = D⁻¹r / d
        let mut dir: Vec<f64> = res.iter().zip(&self.inv_diag).map(|(a, b)| a * b / d).collect();
        if c <= f64::EPSILON * d {
            // A single point spectrum: plain scaled Jacobi.
            for _ in 0..self.cfg.steps {
                axpy(1.0, &dir, x);
                self.q.mul_vec_into(&dir, &mut qd);
                axpy(-1.0, &qd, &mut res);
                for i in 0..n {
                    dir[i] = res[i] * self.inv_diag[i] / d;
                }
            }
        } else {
            let sigma = d / c;
            let mut rho = 1.0 / sigma;
            for k in 0..self.cfg.steps {
                axpy(1.0, &dir, x);
                if k + 1 == self.cfg.steps {
                    break;
                }
                self.q.mul_vec_into(&dir, &mut qd);
                axpy(-1.0, &qd, &mut res);
                let rho_next = 1.0 / (2.0 * sigma - rho);
                let a = rho_next * rho;
                let b = 2.0 * rho_next / c;
                for i in 0..n {
                    dir[i] = a * dir[i] + b * self.inv_diag[i] * res[i];
                }
                rho = rho_next;
            }
        }
        if self.scale != 1.0 {
            x.iter_mut().for_each(|v| *v /= self.scale);
        }
        Ok(())
    }
}
