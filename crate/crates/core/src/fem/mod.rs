//! Q2–Q1 Taylor–Hood discretisation of the channel with inflow boundary control.

pub mod assemble;
pub mod element;
pub mod mesh;
pub mod quadrature;
pub mod vtk;

pub use assemble::{
    assemble_all, assemble_control_blocks, assemble_convection, assemble_stokes_blocks,
    build_targets, ChannelBlocks, ControlBlocks, StokesBlocks, TargetProfile,
};
pub use mesh::{build_mesh, ChannelMesh, DofMap, NodeKind};
