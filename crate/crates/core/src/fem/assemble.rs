//! Global assembly of the Taylor–Hood matrices, the control coupling, the
//! convection operator and the tracking targets.
//!
//! Wall Dirichlet conditions are imposed without removing unknowns: the
//! Laplacian gets unit rows and columns, the divergence loses its wall
//! columns, the control coupling loses its wall rows and the convection
//! matrix its wall rows and columns. Mass matrices and targets are left as
//! assembled.

use crate::dense::DenseMatrix;
use crate::error::{check_len, Result};
use crate::fem::element::{
    q2_edge_mass, q2_gradients, q2_mass, q2_stiffness, q2_values, q1_mass, q2q1_divergence,
};
use crate::fem::mesh::{ChannelMesh, DofMap};
use crate::fem::quadrature::gauss_tensor;
use crate::sparse::{SparseMatrix, TripletBuilder};

/// Desired state of the tracking functional: a half-channel jet
/// `v̂ = (4y - 4y², 0)` for `0 ≤ y < 1`, zero below, and `p̂ = 0`.
#[derive(Clone, Copy, Debug, Default)]
pub struct TargetProfile;

impl TargetProfile {
    pub fn velocity(&self, _x: f64, y: f64) -> [f64; 2] {
        if (0.0..1.0).contains(&y) {
            [4.0 * y - 4.0 * y * y, 0.0]
        } else {
            [0.0, 0.0]
        }
    }

    pub fn pressure(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }
}

/// Stokes operators on one grid.
#[derive(Clone, Debug)]
pub struct StokesBlocks {
    /// Scalar Laplacian with wall conditions imposed.
    pub laplacian: SparseMatrix,
    /// `blkdiag(laplacian, laplacian)`.
    pub a: SparseMatrix,
    /// Divergence `-∫ψₖ ∇·φⱼ`, wall columns removed.
    pub b: SparseMatrix,
    pub q_v: SparseMatrix,
    pub q_p: SparseMatrix,
}

#[derive(Clone, Debug)]
pub struct ControlBlocks {
    pub q_u: SparseMatrix,
    /// Velocity–control coupling with wall rows removed.
    pub q_hat: SparseMatrix,
}

/// Everything needed to build the optimality systems on one grid.
#[derive(Clone, Debug)]
pub struct ChannelBlocks {
    pub mesh: ChannelMesh,
    pub dofs: DofMap,
    pub laplacian: SparseMatrix,
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub q_v: SparseMatrix,
    pub q_p: SparseMatrix,
    pub q_u: SparseMatrix,
    pub q_hat: SparseMatrix,
    /// `(∫φⱼ·v̂)`
    pub v_target: Vec<f64>,
    /// `(∫ψₖ p̂)`
    pub p_target: Vec<f64>,
}

fn assemble_q2_scalar(mesh: &ChannelMesh, ke: &DenseMatrix) -> SparseMatrix {
    let n = mesh.n_q2();
    let mut t = TripletBuilder::with_capacity(n, n, 81 * mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let nodes = mesh.q2_element_nodes(e);
        for i in 0..9 {
            for j in 0..9 {
                t.push(nodes[i], nodes[j], ke[(i, j)]);
            }
        }
    }
    t.build()
}

/// Scalar biquadratic stiffness matrix without boundary conditions.
pub fn scalar_laplacian_raw(mesh: &ChannelMesh) -> SparseMatrix {
    assemble_q2_scalar(mesh, &q2_stiffness(mesh.h))
}

/// Scalar biquadratic mass matrix.
pub fn scalar_mass(mesh: &ChannelMesh) -> SparseMatrix {
    assemble_q2_scalar(mesh, &q2_mass(mesh.h))
}

/// Bilinear pressure mass matrix.
pub fn pressure_mass(mesh: &ChannelMesh) -> SparseMatrix {
    let me = q1_mass(mesh.h);
    let n = mesh.n_q1();
    let mut t = TripletBuilder::with_capacity(n, n, 16 * mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let nodes = mesh.q1_element_nodes(e);
        for i in 0..4 {
            for j in 0..4 {
                t.push(nodes[i], nodes[j], me[(i, j)]);
            }
        }
    }
    t.build()
}

/// Divergence matrix `-∫ψₖ ∇·φⱼ` without boundary conditions.
pub fn divergence_raw(mesh: &ChannelMesh) -> SparseMatrix {
    let [bx, by] = q2q1_divergence(mesh.h);
    let n_q2 = mesh.n_q2();
    let mut t = TripletBuilder::with_capacity(mesh.n_q1(), 2 * n_q2, 72 * mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let pn = mesh.q1_element_nodes(e);
        let vn = mesh.q2_element_nodes(e);
        for k in 0..4 {
            for j in 0..9 {
                t.push(pn[k], vn[j], bx[(k, j)]);
                t.push(pn[k], n_q2 + vn[j], by[(k, j)]);
            }
        }
    }
    t.build()
}

/// `blkdiag(m, m)`.
pub fn block_diag2(m: &SparseMatrix) -> SparseMatrix {
    let (r, c) = (m.nrows(), m.ncols());
    let mut t = TripletBuilder::with_capacity(2 * r, 2 * c, 2 * m.nnz());
    t.push_block(0, 0, m, 1.0);
    t.push_block(r, c, m, 1.0);
    t.build()
}

/// Scalar Laplacian with unit wall rows and columns.
pub fn scalar_laplacian(mesh: &ChannelMesh, dofs: &DofMap) -> SparseMatrix {
    let walls: Vec<usize> = dofs.dirichlet.iter().copied().filter(|&i| i < dofs.n_q2).collect();
    scalar_laplacian_raw(mesh).with_dirichlet(&walls, 1.0)
}

pub fn assemble_stokes_blocks(mesh: &ChannelMesh, dofs: &DofMap) -> StokesBlocks {
    let laplacian = scalar_laplacian(mesh, dofs);
    let a = block_diag2(&laplacian);
    let b = divergence_raw(mesh).without_cols(&dofs.dirichlet);
    let q_v = block_diag2(&scalar_mass(mesh));
    let q_p = pressure_mass(mesh);
    StokesBlocks { laplacian, a, b, q_v, q_p }
}

/// One-dimensional quadratic mass matrix along the inflow edge, indexed
/// by inflow node position (bottom to top).
pub fn inflow_mass(mesh: &ChannelMesh) -> SparseMatrix {
    let me = q2_edge_mass(mesh.h);
    let n = mesh.q2_per_side;
    let mut t = TripletBuilder::new(n, n);
    for e in 0..mesh.elements_per_side {
        for i in 0..3 {
            for j in 0..3 {
                t.push(2 * e + i, 2 * e + j, me[(i, j)]);
            }
        }
    }
    t.build()
}

/// Control coupling `∫φᵢ·χₗ` over the inflow edge, before wall rows are removed.
///
/// Each control basis function is the trace of a velocity basis function,
/// so row `control_to_velocity[l]` repeats row `l` of the control mass
/// matrix and every other row vanishes.
pub fn control_coupling_raw(dofs: &DofMap, q_u: &SparseMatrix) -> SparseMatrix {
    let mut t = TripletBuilder::with_capacity(dofs.n_v, dofs.n_u, q_u.nnz());
    for (l, &row) in dofs.control_to_velocity.iter().enumerate() {
        for (m, v) in q_u.row_iter(l) {
            t.push(row, m, v);
        }
    }
    t.build()
}

pub fn assemble_control_blocks(mesh: &ChannelMesh, dofs: &DofMap) -> ControlBlocks {
    let q_u = block_diag2(&inflow_mass(mesh));
    let q_hat = control_coupling_raw(dofs, &q_u).without_rows(&dofs.dirichlet);
    ControlBlocks { q_u, q_hat }
}

/// Scalar convection matrix `∫(w·∇φⱼ) φᵢ` for a discrete biquadratic wind,
/// no boundary conditions. Uses a 4×4 Gauss rule, exact for the degree-7
/// integrand per direction.
pub fn scalar_convection_raw(mesh: &ChannelMesh, wind: &[f64]) -> Result<SparseMatrix> {
    let n_q2 = mesh.n_q2();
    check_len("wind", wind.len(), 2 * n_q2)?;
    let jac = 0.25 * mesh.h * mesh.h;
    let g = 2.0 / mesh.h;
    let quad = gauss_tensor(4);
    let tab: Vec<([f64; 9], [[f64; 2]; 9], f64)> = quad
        .iter()
        .map(|&(xi, eta, w)| (q2_values(xi, eta), q2_gradients(xi, eta), w * jac))
        .collect();
    let mut t = TripletBuilder::with_capacity(n_q2, n_q2, 81 * mesh.n_elements());
    let mut ke = [[0.0; 9]; 9];
    for e in 0..mesh.n_elements() {
        let nodes = mesh.q2_element_nodes(e);
        ke.iter_mut().for_each(|r| r.fill(0.0));
        for (phi, dphi, w) in &tab {
            let mut wx = 0.0;
            let mut wy = 0.0;
            for k in 0..9 {
                wx += wind[nodes[k]] * phi[k];
                wy += wind[n_q2 + nodes[k]] * phi[k];
            }
            for j in 0..9 {
                let adv = g * (wx * dphi[j][0] + wy * dphi[j][1]);
                if adv == 0.0 {
                    continue;
                }
                for i in 0..9 {
                    ke[i][j] += w * adv * phi[i];
                }
            }
        }
        for i in 0..9 {
            for j in 0..9 {
                t.push(nodes[i], nodes[j], ke[i][j]);
            }
        }
    }
    Ok(t.build())
}

/// Vector convection `blkdiag(N_s, N_s)` with wall rows and columns removed.
pub fn assemble_convection(mesh: &ChannelMesh, dofs: &DofMap, wind: &[f64]) -> Result<SparseMatrix> {
    let ns = scalar_convection_raw(mesh, wind)?;
    let mut wall = vec![false; dofs.n_v];
    for &d in &dofs.dirichlet {
        wall[d] = true;
    }
    Ok(block_diag2(&ns).filter(|i, j| !wall[i] && !wall[j]))
}

/// Load vectors `b = (∫φⱼ·v̂)` and `d = (∫ψₖ p̂)` of the tracking functional.
pub fn build_targets(mesh: &ChannelMesh, dofs: &DofMap, profile: &TargetProfile) -> (Vec<f64>, Vec<f64>) {
    let n_q2 = dofs.n_q2;
    let jac = 0.25 * mesh.h * mesh.h;
    let quad = gauss_tensor(3);
    let mut b = vec![0.0; dofs.n_v];
    let mut d = vec![0.0; dofs.n_p];
    for e in 0..mesh.n_elements() {
        let (x0, y0) = mesh.element_origin(e);
        let vn = mesh.q2_element_nodes(e);
        let pn = mesh.q1_element_nodes(e);
        for &(xi, eta, w) in &quad {
            let x = x0 + 0.5 * mesh.h * (xi + 1.0);
            let y = y0 + 0.5 * mesh.h * (eta + 1.0);
            let v = profile.velocity(x, y);
            let p = profile.pressure(x, y);
            let phi = q2_values(xi, eta);
            for k in 0..9 {
                b[vn[k]] += w * jac * v[0] * phi[k];
                b[n_q2 + vn[k]] += w * jac * v[1] * phi[k];
            }
            if p != 0.0 {
                let psi = crate::fem::element::q1_values(xi, eta);
                for k in 0..4 {
                    d[pn[k]] += w * jac * p * psi[k];
                }
            }
        }
    }
    (b, d)
}

/// Assembles every block and target on the given grid.
pub fn assemble_all(mesh: &ChannelMesh, dofs: &DofMap) -> Result<ChannelBlocks> {
    let s = assemble_stokes_blocks(mesh, dofs);
    let c = assemble_control_blocks(mesh, dofs);
    let (v_target, p_target) = build_targets(mesh, dofs, &TargetProfile);
    Ok(ChannelBlocks {
        mesh: mesh.clone(),
        dofs: dofs.clone(),
        laplacian: s.laplacian,
        a: s.a,
        b: s.b,
        q_v: s.q_v,
        q_p: s.q_p,
        q_u: c.q_u,
        q_hat: c.q_hat,
        v_target,
        p_target,
    })
}

/// Nodal interpolant of a velocity field.
pub fn interpolate_velocity(mesh: &ChannelMesh, f: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
    let n = mesh.n_q2();
    let mut v = vec![0.0; 2 * n];
    for k in 0..n {
        let (x, y) = mesh.q2_coord(k);
        let [a, b] = f(x, y);
        v[k] = a;
        v[n + k] = b;
    }
    v
}

/// Nodal interpolant of a pressure field.
pub fn interpolate_pressure(mesh: &ChannelMesh, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    (0..mesh.n_q1())
        .map(|k| {
            let (x, y) = mesh.q1_coord(k);
            f(x, y)
        })
        .collect()
}

/// Poiseuille channel flow `v = (1 - y², 0)`.
pub fn poiseuille_velocity(_x: f64, y: f64) -> [f64; 2] {
    [1.0 - y * y, 0.0]
}

/// Pressure `p = 2 - 2x` driving Poiseuille flow at unit viscosity.
pub fn poiseuille_pressure(x: f64, _y: f64) -> f64 {
    2.0 - 2.0 * x
}
