//! Preconditioners for the control optimality systems.
//!
//! All operators here are fixed-step iterations started from zero, so they
//! are linear and can be used inside MINRES. The Stokes preconditioner is
//! block diagonal,
//!
//! ```text
//! blkdiag(Q_v, αQ_p, βQ_u, S̃),   S̃ = K 𝒬⁻¹ Kᵀ,
//! ```
//!
//! with Chebyshev semi-iteration for the mass matrices and `S̃⁻¹` applied
//! as `K̃⁻ᵀ 𝒬 K̃⁻¹` through inexact Uzawa sweeps. The Oseen variant first
//! reorders the system so that selected inflow velocities and their
//! adjoints join the control block, then builds the same kind of block
//! diagonal preconditioner on the reordered blocks.

pub mod block;
pub mod chebyshev;
pub mod mic;
pub mod multigrid;
pub mod uzawa;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::ChannelBlocks;
use crate::kkt::{apply_permutation_and_drop, InflowSelection, KktSystem, PermutationPlan};
use crate::sparse::{SparseMatrix, TripletBuilder};

pub use block::{saddle_block_inverse, BlockDiagonal, BoxedOp, DenseSpdInverse, Permuted, SchurApprox};
pub use chebyshev::{bounds, Chebyshev, ChebyshevConfig};
pub use mic::Mic0;
pub use multigrid::{ComponentWise, Multigrid};
pub use uzawa::{Uzawa, UzawaConfig};

/// Settings of the preconditioner stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StackConfig {
    /// Chebyshev steps for every mass matrix.
    pub cheb_steps: usize,
    /// V-cycles per velocity solve (Stokes).
    pub mg_cycles: usize,
    /// Jacobi sweeps before and after each coarse correction.
    pub smoothing: usize,
    pub uzawa_steps: usize,
    /// Velocity step length of the Uzawa iteration.
    pub sigma: f64,
    pub tau: f64,
    /// Scale of the pressure Schur approximation `S̃ = schur_scale·Q_p`.
    pub schur_scale: f64,
    /// Every `stride`-th inflow candidate is moved (Oseen only).
    pub stride: usize,
    pub offset: usize,
    pub selection: InflowSelection,
    /// Declare divergence up front when the reduced symmetric part is indefinite.
    pub require_definite: bool,
}

impl Default for StackConfig {
    fn default() -> Self {
        Self::stokes()
    }
}

impl StackConfig {
    pub fn stokes() -> Self {
        Self {
            cheb_steps: 20,
            mg_cycles: 5,
            smoothing: 2,
            uzawa_steps: 5,
            sigma: 1.0,
            tau: 1.0,
            schur_scale: 1.0,
            stride: 1,
            offset: 0,
            selection: InflowSelection::Influx,
            require_definite: true,
        }
    }

    /// Oseen defaults for viscosity `nu`: velocity step `δ = ν`, Schur
    /// approximation `Q_p / ν`, the scaling that makes `λ(S̃⁻¹S_S) ≤ 1`.
    pub fn oseen(nu: f64) -> Self {
        Self {
            uzawa_steps: 30,
            sigma: nu,
            schur_scale: 1.0 / nu,
            ..Self::stokes()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cheb_steps == 0 || self.mg_cycles == 0 || self.uzawa_steps == 0 {
            return Err(Error::Config("step and cycle counts must be positive".into()));
        }
        for (name, v) in [("sigma", self.sigma), ("tau", self.tau), ("schur_scale", self.schur_scale)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// `blkdiag(A, B)` for two sparse matrices.
pub fn sparse_block_diag(a: &SparseMatrix, b: &SparseMatrix) -> SparseMatrix {
    let n = a.nrows() + b.nrows();
    let m = a.ncols() + b.ncols();
    let mut t = TripletBuilder::with_capacity(n, m, a.nnz() + b.nnz());
    t.push_block(0, 0, a, 1.0);
    t.push_block(a.nrows(), a.ncols(), b, 1.0);
    t.build()
}

/// `S̃⁻¹ = K̃⁻ᵀ blkdiag(Q_v, αQ_p) K̃⁻¹` for the Stokes operator, with
/// multigrid velocity solves inside the Uzawa sweeps.
pub fn stokes_schur(sys: &KktSystem, blocks: &ChannelBlocks, cfg: &StackConfig) -> Result<SchurApprox> {
    cfg.validate()?;
    let mg = Multigrid::new(blocks.mesh.level, cfg.mg_cycles, cfg.smoothing)?;
    let s_inv = Chebyshev::scaled(
        sys.q_p.clone(),
        ChebyshevConfig::new(cfg.cheb_steps, bounds::Q1),
        cfg.schur_scale,
    )?;
    let uz = Uzawa::new(
        sys.f.clone(),
        sys.b.clone(),
        Box::new(ComponentWise(mg)),
        Box::new(s_inv),
        UzawaConfig::new(cfg.uzawa_steps, cfg.sigma, cfg.tau),
    )?;
    let q = sparse_block_diag(&sys.q_v, &sys.q_p.scaled(sys.alpha));
    SchurApprox::new(uz, q)
}

/// Block-diagonal preconditioner for the Stokes control system:
/// Chebyshev for `Q_v`, `αQ_p`, `βQ_u` and the Uzawa-based `S̃⁻¹`.
pub fn stokes_block_precond(sys: &KktSystem, blocks: &ChannelBlocks, cfg: &StackConfig) -> Result<BlockDiagonal> {
    cfg.validate()?;
    let steps = cfg.cheb_steps;
    let qv = Chebyshev::new(sys.q_v.clone(), ChebyshevConfig::new(steps, bounds::Q2))?;
    let qp = Chebyshev::scaled(sys.q_p.clone(), ChebyshevConfig::new(steps, bounds::Q1), sys.alpha)?;
    let qu = Chebyshev::scaled(sys.q_u.clone(), ChebyshevConfig::new(steps, bounds::Q2_EDGE), sys.beta)?;
    let schur = stokes_schur(sys, blocks, cfg)?;
    BlockDiagonal::new(vec![Box::new(qv), Box::new(qp), Box::new(qu), Box::new(schur)])
}

/// Pieces of the reordered Oseen system used by the preconditioner.
#[derive(Clone, Debug)]
pub struct ReducedOseen {
    /// `F` restricted to the retained velocities.
    pub f: SparseMatrix,
    /// Symmetric part of `f`.
    pub f_sym: SparseMatrix,
    pub b: SparseMatrix,
    pub q_v: SparseMatrix,
}

impl ReducedOseen {
    pub fn new(sys: &KktSystem, plan: &PermutationPlan) -> Result<Self> {
        let kept = &plan.kept;
        let f = sys.f.submatrix(kept, kept);
        let f_sym = f.symmetric_part()?;
        let all_p: Vec<usize> = (0..sys.layout.n_p).collect();
        Ok(Self {
            f_sym,
            f,
            b: sys.b.submatrix(&all_p, kept),
            q_v: sys.q_v.submatrix(kept, kept),
        })
    }
}

/// Checks that the reduced symmetric part is positive definite; the
/// nonsymmetric Uzawa iteration is not expected to converge otherwise.
pub fn check_reduced_definite(red: &ReducedOseen) -> Result<()> {
    let pivots = red.f_sym.band_ldlt_pivots()?;
    let tol = 1e-13 * red.f_sym.norm_inf();
    let negative = pivots.iter().filter(|&&d| !(d > tol)).count();
    if negative > 0 {
        return Err(Error::Divergence(format!(
            "symmetric part of the reduced velocity block has {negative} nonpositive pivot(s)"
        )));
    }
    Ok(())
}

/// Reordering-based preconditioner for the Oseen control system.
///
/// The returned operator acts on vectors in the original ordering.
pub fn perm_precond(
    sys: &KktSystem,
    plan: &PermutationPlan,
    cfg: &StackConfig,
) -> Result<Permuted<BlockDiagonal>> {
    cfg.validate()?;
    let red = ReducedOseen::new(sys, plan)?;
    if cfg.require_definite {
        check_reduced_definite(&red)?;
    }
    let steps = cfg.cheb_steps;
    let permuted = apply_permutation_and_drop(sys, plan)?;
    let qv = Chebyshev::new(red.q_v.clone(), ChebyshevConfig::new(steps, bounds::Q2))?;
    let qp = Chebyshev::scaled(sys.q_p.clone(), ChebyshevConfig::new(steps, bounds::Q1), sys.alpha)?;
    let r3: Vec<usize> = (plan.offsets[2]..plan.offsets[3]).collect();
    let m33 = permuted.dropped.submatrix(&r3, &r3).to_dense();
    let third = saddle_block_inverse(&m33, sys.layout.n_u + plan.moved.len())?;
    let mic = Mic0::new(&red.f_sym).map_err(|e| match e {
        Error::Factorization(m) => Error::Divergence(format!("MIC(0) of the reduced symmetric part: {m}")),
        other => other,
    })?;
    let s_inv = Chebyshev::scaled(
        sys.q_p.clone(),
        ChebyshevConfig::new(steps, bounds::Q1),
        cfg.schur_scale,
    )?;
    let uz = Uzawa::new(
        red.f.clone(),
        red.b.clone(),
        Box::new(mic),
        Box::new(s_inv),
        UzawaConfig::new(cfg.uzawa_steps, cfg.sigma, cfg.tau),
    )?;
    let q = sparse_block_diag(&red.q_v, &sys.q_p.scaled(sys.alpha));
    let schur = SchurApprox::new(uz, q)?;
    let inner = BlockDiagonal::new(vec![Box::new(qv), Box::new(qp), Box::new(third), Box::new(schur)])?;
    Permuted::new(inner, plan.perm.clone())
}
