//! Boundary control of Stokes and Navier–Stokes flow in a square channel.
//!
//! The crate assembles a Q2–Q1 Taylor–Hood discretisation of the channel
//! `(-1, 1)²`, forms the first-order optimality (KKT) systems of the
//! discretised tracking problem with inflow boundary control, and solves
//! them with preconditioned MINRES. Preconditioners are built from
//! fixed-step, hence linear, inner iterations: Chebyshev semi-iteration for
//! mass matrices, geometric multigrid for the Laplacian, MIC(0) for the
//! convection-diffusion block and inexact Uzawa sweeps for the Schur
//! complement. The [`analysis`] module reproduces the spectral experiments
//! that justify each building block.
//!
//! ```no_run
//! use channel_control::{fem, kkt, krylov, precond};
//!
//! let (mesh, dofs) = fem::build_mesh(3)?;
//! let blocks = fem::assemble_all(&mesh, &dofs)?;
//! let sys = kkt::build_stokes_kkt(&blocks, 1e-3, 1e-3)?;
//! let m = precond::stokes_block_precond(&sys, &blocks, &precond::StackConfig::stokes())?;
//! let (x, report) = krylov::minres(&sys.matrix, &m, &sys.rhs, &krylov::MinresOptions::default())?;
//! println!("{} iterations, control energy {}", report.iterations, sys.control_energy(&x));
//! # Ok::<(), channel_control::Error>(())
//! ```

pub mod analysis;
pub mod dense;
pub mod error;
pub mod fem;
pub mod kkt;
pub mod krylov;
pub mod market;
pub mod operator;
pub mod picard;
pub mod precond;
pub mod sparse;

pub use dense::{DenseMatrix, SpectrumReport};
pub use error::{Error, Result};
pub use operator::LinearOperator;
pub use sparse::SparseMatrix;

/// Version of this library.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
