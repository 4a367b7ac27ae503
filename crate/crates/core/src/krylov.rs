//! Preconditioned MINRES for symmetric indefinite systems.
//!
//! The iteration follows Paige and Saunders with a symmetric positive
//! definite preconditioner: the Lanczos process runs in the inner product
//! induced by the preconditioner and the residual norm it minimises is
//! `‖b - Ax‖_{M⁻¹}`. That norm is what the convergence test and the
//! residual history use.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::operator::LinearOperator;
use crate::sparse::{axpy, dot, norm2};

#[derive(Clone, Debug)]
pub struct MinresOptions {
    /// Relative reduction of the preconditioned residual norm.
    pub tol: f64,
    pub maxit: usize,
    /// Initial guess; zero when absent.
    pub x0: Option<Vec<f64>>,
    /// Probe the operator for symmetry and the preconditioner for
    /// linearity and positivity before iterating.
    pub probe: bool,
    pub seed: u64,
}

impl Default for MinresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            maxit: 1000,
            x0: None,
            probe: cfg!(debug_assertions),
            seed: 0x5eed,
        }
    }
}

/// Outcome of a MINRES solve.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Preconditioned residual norms, starting with the initial residual.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub relative_tolerance: f64,
    /// Seconds.
    pub wall_time: f64,
    /// `‖b - Ax‖₂` at the returned iterate.
    pub final_true_residual: f64,
    /// `‖b - Ax₀‖₂`.
    pub initial_true_residual: f64,
}

impl SolveReport {
    /// Residual history as `iteration,preconditioned_residual` CSV.
    pub fn residual_csv(&self) -> String {
        let mut s = String::from("iteration,preconditioned_residual\n");
        for (k, r) in self.residual_history.iter().enumerate() {
            let _ = writeln!(s, "{k},{r:e}");
        }
        s
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Checks `|xᵀAy - yᵀAx| ≤ tol ‖x‖ ‖y‖ ‖A‖` on random probes, with `‖A‖`
/// estimated from the probes themselves.
pub fn probe_symmetry(op: &dyn LinearOperator, seed: u64, tol: f64) -> Result<()> {
    let n = op.ncols();
    if op.nrows() != n {
        return Err(Error::Dimension("operator is not square".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..2 {
        let x = random_vector(&mut rng, n);
        let y = random_vector(&mut rng, n);
        let ax = op.apply(&x)?;
        let ay = op.apply(&y)?;
        let (nx, ny) = (norm2(&x), norm2(&y));
        let scale = (norm2(&ax) / nx).max(norm2(&ay) / ny);
        let gap = (dot(&x, &ay) - dot(&y, &ax)).abs();
        if gap > tol * nx * ny * scale {
            return Err(Error::Symmetry(format!(
                "|xᵀAy - yᵀAx| = {gap:e} exceeds {:e}",
                tol * nx * ny * scale
            )));
        }
    }
    Ok(())
}

/// Checks superposition and positivity of a preconditioner on random probes.
pub fn probe_preconditioner(op: &dyn LinearOperator, seed: u64, tol: f64) -> Result<()> {
    let n = op.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let x = random_vector(&mut rng, n);
    let y = random_vector(&mut rng, n);
    let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + 2.0 * b).collect();
    let mx = op.apply(&x)?;
    let my = op.apply(&y)?;
    let ms = op.apply(&s)?;
    let diff: Vec<f64> = (0..n).map(|i| ms[i] - mx[i] - 2.0 * my[i]).collect();
    let scale = norm2(&mx) + 2.0 * norm2(&my);
    if !(norm2(&diff) <= tol * scale) {
        return Err(Error::Preconditioner(format!(
            "superposition violated: {:e} relative",
            norm2(&diff) / scale
        )));
    }
    for (v, mv) in [(&x, &mx), (&y, &my)] {
        if !(dot(v, mv) > 0.0) {
            return Err(Error::Preconditioner("xᵀMx ≤ 0 on a probe".into()));
        }
    }
    Ok(())
}

/// Solves `A x = b` by MINRES preconditioned with `m` (an approximation of
/// `A`'s inverse in the sense of spectral equivalence, applied as `M⁻¹`).
///
/// Reaching `maxit` is not an error: the last iterate is returned with
/// `converged = false`.
pub fn minres(
    a: &dyn LinearOperator,
    m: &dyn LinearOperator,
    b: &[f64],
    opts: &MinresOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let n = a.ncols();
    if a.nrows() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension("MINRES needs square operators of equal size".into()));
    }
    check_len("MINRES right-hand side", b.len(), n)?;
    if opts.probe {
        probe_symmetry(a, opts.seed, 1e-10)?;
        probe_preconditioner(m, opts.seed, 1e-10)?;
    }

    let mut x = match &opts.x0 {
        Some(x0) => {
            check_len("MINRES initial guess", x0.len(), n)?;
            x0.clone()
        }
        None => vec![0.0; n],
    };
    let mut v = b.to_vec();
    if opts.x0.is_some() {
        let ax = a.apply(&x)?;
        axpy(-1.0, &ax, &mut v);
    }
    let initial_true = norm2(&v);
    let mut z = m.apply(&v)?;
    let g2 = dot(&z, &v);
    if g2 < 0.0 || !g2.is_finite() {
        return Err(Error::Preconditioner(format!("rᵀMr = {g2:e}")));
    }
    let mut gamma = g2.sqrt();
    let gamma1 = gamma;
    let mut report = SolveReport {
        relative_tolerance: opts.tol,
        residual_history: vec![gamma1],
        initial_true_residual: initial_true,
        ..Default::default()
    };
    if gamma1 == 0.0 {
        report.converged = true;
        report.final_true_residual = initial_true;
        report.wall_time = start.elapsed().as_secs_f64();
        return Ok((x, report));
    }

    let mut v_old = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w_old = vec![0.0; n];
    let mut gamma_old = 1.0;
    let (mut c, mut c_old) = (1.0, 1.0);
    let (mut s, mut s_old) = (0.0, 0.0);
    let mut eta = gamma1;
    let mut az = vec![0.0; n];

    for it in 1..=opts.maxit {
        z.iter_mut().for_each(|zi| *zi /= gamma);
        a.apply_into(&z, &mut az)?;
        let delta = dot(&az, &z);
        // v_next = A z - (δ/γ) v - (γ/γ_old) v_old
        let mut v_next = az.clone();
        axpy(-delta / gamma, &v, &mut v_next);
        axpy(-gamma / gamma_old, &v_old, &mut v_next);
        let z_next = m.apply(&v_next)?;
        let g2 = dot(&z_next, &v_next);
        if !g2.is_finite() || g2 < -1e-12 * dot(&v_next, &v_next).sqrt() * norm2(&z_next) {
            return Err(Error::Preconditioner(format!(
                "preconditioner produced rᵀMr = {g2:e} at iteration {it}"
            )));
        }
        let gamma_next = g2.max(0.0).sqrt();

        let a0 = c * delta - c_old * s * gamma;
        let a1 = (a0 * a0 + gamma_next * gamma_next).sqrt();
        let a2 = s * delta + c_old * c * gamma;
        let a3 = s_old * gamma;
        if a1 == 0.0 {
            return Err(Error::Singular(format!("MINRES breakdown at iteration {it}")));
        }
        let c_next = a0 / a1;
        let s_next = gamma_next / a1;
        // w_next = (z - a3 w_old - a2 w) / a1
        let mut w_next = z.clone();
        axpy(-a3, &w_old, &mut w_next);
        axpy(-a2, &w, &mut w_next);
        w_next.iter_mut().for_each(|wi| *wi /= a1);
        axpy(c_next * eta, &w_next, &mut x);
        eta *= -s_next;

        report.iterations = it;
        report.residual_history.push(eta.abs());
        w_old = std::mem::replace(&mut w, w_next);
        v_old = std::mem::replace(&mut v, v_next);
        z = z_next;
        gamma_old = gamma;
        gamma = gamma_next;
        c_old = c;
        c = c_next;
        s_old = s;
        s = s_next;

        if eta.abs() <= opts.tol * gamma1 || gamma == 0.0 {
            report.converged = true;
            break;
        }
    }
    let ax = a.apply(&x)?;
    report.final_true_residual = b.iter().zip(&ax).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((x, report))
}
