//! Picard iteration for Navier–Stokes boundary control.
//!
//! Every outer step freezes the convecting wind at the previous velocity,
//! assembles the Oseen optimality system and solves it with MINRES and the
//! reordering-based preconditioner. The first step uses zero wind, which is
//! the Stokes control problem with viscosity `ν`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dense::{check_cap, dense_solve, DEFAULT_DENSE_CAP};
use crate::error::{Error, Result};
use crate::fem::ChannelBlocks;
use crate::kkt::{build_oseen_kkt, plan_permutation, KktSystem};
use crate::krylov::{minres, MinresOptions, SolveReport};
use crate::precond::{perm_precond, StackConfig};
use crate::sparse::norm2;

/// How every Oseen control system is solved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// MINRES with the reordering-based preconditioner.
    #[default]
    Minres,
    /// Dense LU, limited to systems below the dense cap.
    Direct,
}

impl std::str::FromStr for InnerSolver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minres" => Ok(Self::Minres),
            "direct" => Ok(Self::Direct),
            other => Err(Error::Config(format!("unknown inner solver '{other}'"))),
        }
    }
}

impl std::fmt::Display for InnerSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Minres => "minres",
            Self::Direct => "direct",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PicardConfig {
    pub stack: StackConfig,
    /// Relative reduction of the nonlinear residual.
    pub tol: f64,
    pub max_outer: usize,
    /// Relative tolerance of every inner MINRES solve.
    pub inner_tol: f64,
    pub inner_maxit: usize,
    /// Start each inner solve from the previous outer iterate.
    pub warm_start: bool,
    /// When false the wind is held at zero (diagnostic).
    pub convection: bool,
    pub inner: InnerSolver,
}

impl PicardConfig {
    pub fn new(nu: f64) -> Self {
        Self {
            stack: StackConfig::oseen(nu),
            tol: 1e-6,
            max_outer: 40,
            inner_tol: 1e-6,
            inner_maxit: 20000,
            warm_start: true,
            convection: true,
            inner: InnerSolver::Minres,
        }
    }
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self::new(0.1)
    }
}

/// Summary of a nonlinear control solve.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct NonlinearReport {
    pub level: usize,
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub stride: usize,
    /// Number of Oseen solves with a wind from a previous iterate.
    pub picard_iterations: usize,
    /// MINRES iterations of every Oseen solve, including the zero-wind start.
    pub minres_iterations: Vec<usize>,
    pub average_minres: f64,
    /// `‖c - 𝒜(v_k) x_k‖₂ / ‖c‖₂` after every Oseen solve.
    pub residual_history: Vec<f64>,
    pub control_energy: f64,
    pub converged: bool,
    /// Seconds.
    pub wall_time: f64,
}

/// Final iterate and the optimality system assembled at its own wind.
#[derive(Clone, Debug)]
pub struct NavierSolution {
    pub x: Vec<f64>,
    pub system: KktSystem,
}

impl NavierSolution {
    pub fn velocity(&self) -> &[f64] {
        self.system.parts(&self.x).v
    }
}

/// `‖c - 𝒜(v) x‖₂` with the system assembled at the velocity `v` of `x`.
pub fn nonlinear_residual(blocks: &ChannelBlocks, x: &[f64], alpha: f64, beta: f64, nu: f64) -> Result<f64> {
    let nv = blocks.dofs.n_v;
    let sys = build_oseen_kkt(blocks, &x[..nv], alpha, beta, nu)?;
    sys.residual_norm(x)
}

/// One Oseen control solve with the given wind.
pub fn solve_oseen_control(
    blocks: &ChannelBlocks,
    wind: &[f64],
    alpha: f64,
    beta: f64,
    nu: f64,
    cfg: &PicardConfig,
    x0: Option<Vec<f64>>,
) -> Result<(Vec<f64>, SolveReport, KktSystem)> {
    let sys = build_oseen_kkt(blocks, wind, alpha, beta, nu)?;
    if cfg.inner == InnerSolver::Direct {
        check_cap(sys.dim(), DEFAULT_DENSE_CAP)?;
        let start = Instant::now();
        let x = dense_solve(&sys.matrix.to_dense(), &sys.rhs)?;
        let res = sys.residual_norm(&x)?;
        let rep = SolveReport {
            iterations: 0,
            residual_history: vec![res],
            converged: true,
            relative_tolerance: cfg.inner_tol,
            wall_time: start.elapsed().as_secs_f64(),
            final_true_residual: res,
            initial_true_residual: norm2(&sys.rhs),
        };
        return Ok((x, rep, sys));
    }
    let s = &cfg.stack;
    let plan = plan_permutation(&sys.layout, &blocks.dofs, s.stride, s.offset, s.selection)?;
    let m = perm_precond(&sys, &plan, s)?;
    let opts = MinresOptions {
        tol: cfg.inner_tol,
        maxit: cfg.inner_maxit,
        x0,
        ..MinresOptions::default()
    };
    let (x, rep) = minres(&sys.matrix, &m, &sys.rhs, &opts)?;
    Ok((x, rep, sys))
}

/// Navier–Stokes control by Picard iteration on a prepared discretisation.
pub fn solve_navier_control(
    blocks: &ChannelBlocks,
    alpha: f64,
    beta: f64,
    nu: f64,
    cfg: &PicardConfig,
) -> Result<(NavierSolution, NonlinearReport)> {
    if cfg.max_outer == 0 {
        return Err(Error::Config("at least one outer iteration is required".into()));
    }
    let start = Instant::now();
    let nv = blocks.dofs.n_v;
    let mut report = NonlinearReport {
        level: blocks.mesh.level,
        nu,
        alpha,
        beta,
        stride: cfg.stack.stride,
        ..NonlinearReport::default()
    };
    let zero = vec![0.0; nv];
    let (mut x, rep, mut sys) = solve_oseen_control(blocks, &zero, alpha, beta, nu, cfg, None)?;
    report.minres_iterations.push(rep.iterations);
    let c_norm = norm2(&sys.rhs).max(f64::MIN_POSITIVE);
    let own_wind = |x: &[f64]| if cfg.convection { x[..nv].to_vec() } else { zero.clone() };
    if !rep.converged {
        return Err(Error::NonConvergence {
            iterations: rep.iterations,
            detail: "inner MINRES at the zero-wind start".into(),
        });
    }
    sys = build_oseen_kkt(blocks, &own_wind(&x), alpha, beta, nu)?;
    let mut res = sys.residual_norm(&x)? / c_norm;
    report.residual_history.push(res);
    while res > cfg.tol && report.picard_iterations < cfg.max_outer {
        let wind = own_wind(&x);
        let x0 = cfg.warm_start.then(|| x.clone());
        let (xn, rep, _) = solve_oseen_control(blocks, &wind, alpha, beta, nu, cfg, x0)?;
        report.picard_iterations += 1;
        report.minres_iterations.push(rep.iterations);
        if !rep.converged {
            return Err(Error::NonConvergence {
                iterations: rep.iterations,
                detail: format!("inner MINRES at outer iteration {}", report.picard_iterations),
            });
        }
        x = xn;
        let own = build_oseen_kkt(blocks, &own_wind(&x), alpha, beta, nu)?;
        res = own.residual_norm(&x)? / c_norm;
        if !res.is_finite() {
            return Err(Error::Divergence("nonlinear residual is not finite".into()));
        }
        report.residual_history.push(res);
        sys = own;
    }
    report.converged = res <= cfg.tol;
    report.average_minres =
        report.minres_iterations.iter().sum::<usize>() as f64 / report.minres_iterations.len() as f64;
    report.control_energy = sys.control_energy(&x);
    report.wall_time = start.elapsed().as_secs_f64();
    if !report.converged {
        return Err(Error::NonConvergence {
            iterations: report.picard_iterations,
            detail: format!("nonlinear residual ratio {res:.3e}"),
        });
    }
    Ok((NavierSolution { x, system: sys }, report))
}
