//! Optimality systems of the discretised control problems.
//!
//! Unknowns are ordered as velocity `v`, pressure `p`, control `u`,
//! velocity adjoint `λ` and pressure adjoint `μ`:
//!
//! ```text
//! [ Q_v   0     0     Fᵀ   Bᵀ ] [v]   [ b  ]
//! [ 0     αQ_p  0     B    0  ] [p]   [ αd ]
//! [ 0     0     βQ_u  -Q̂ᵀ  0  ] [u] = [ 0  ]
//! [ F     Bᵀ    -Q̂    0    0  ] [λ]   [ 0  ]
//! [ B     0     0     0    0  ] [μ]   [ 0  ]
//! ```
//!
//! with `F = A` for Stokes and `F = νA + N(w)` for the Oseen linearisation.
//! The matrix is symmetric in both cases since `F` and `Fᵀ` occupy mirrored
//! positions.
//!
//! For the Oseen case a [`PermutationPlan`] moves selected inflow velocity
//! unknowns, together with their adjoints, next to the control. The
//! remaining velocity block then no longer sees the inflow part of the
//! convection operator, whose symmetric part is indefinite.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::fem::assemble::{assemble_convection, ChannelBlocks};
use crate::fem::mesh::DofMap;
use crate::market;
use crate::sparse::{SparseMatrix, TripletBuilder};

/// Index ranges of the five unknown blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub n_v: usize,
    pub n_p: usize,
    pub n_u: usize,
    /// Start offsets of `v, p, u, λ, μ` followed by the total size.
    pub offsets: [usize; 6],
}

impl BlockLayout {
    pub fn new(n_v: usize, n_p: usize, n_u: usize) -> Self {
        let sizes = [n_v, n_p, n_u, n_v, n_p];
        let mut offsets = [0; 6];
        for k in 0..5 {
            offsets[k + 1] = offsets[k] + sizes[k];
        }
        Self { n_v, n_p, n_u, offsets }
    }

    pub fn dim(&self) -> usize {
        self.offsets[5]
    }

    pub fn range(&self, block: usize) -> std::ops::Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    /// Size of the leading `(v, p, u)` part.
    pub fn primal_dim(&self) -> usize {
        self.offsets[3]
    }
}

/// Which kind of flow operator sits in the constraint block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FlowModel {
    Stokes,
    Oseen { nu: f64 },
}

/// An assembled optimality system together with its blocks.
#[derive(Clone, Debug)]
pub struct KktSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub layout: BlockLayout,
    pub alpha: f64,
    pub beta: f64,
    pub model: FlowModel,
    /// `A` (Stokes) or `νA + N` (Oseen).
    pub f: SparseMatrix,
    pub b: SparseMatrix,
    pub q_v: SparseMatrix,
    /// Unscaled pressure mass matrix.
    pub q_p: SparseMatrix,
    /// Unscaled control mass matrix.
    pub q_u: SparseMatrix,
    pub q_hat: SparseMatrix,
}

/// Views into a KKT-ordered vector.
#[derive(Clone, Copy, Debug)]
pub struct KktParts<'a> {
    pub v: &'a [f64],
    pub p: &'a [f64],
    pub u: &'a [f64],
    pub lambda: &'a [f64],
    pub mu: &'a [f64],
}

impl KktSystem {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn nu(&self) -> f64 {
        match self.model {
            FlowModel::Stokes => 1.0,
            FlowModel::Oseen { nu } => nu,
        }
    }

    pub fn parts<'a>(&self, x: &'a [f64]) -> KktParts<'a> {
        let l = &self.layout;
        KktParts {
            v: &x[l.range(0)],
            p: &x[l.range(1)],
            u: &x[l.range(2)],
            lambda: &x[l.range(3)],
            mu: &x[l.range(4)],
        }
    }

    /// `uᵀ Q_u u` for the control part of `x`.
    pub fn control_energy(&self, x: &[f64]) -> f64 {
        let u = self.parts(x).u;
        let qu = self.q_u.spmv(u, false).expect("control length");
        crate::sparse::dot(u, &qu)
    }

    /// `‖c - 𝒜x‖₂`.
    pub fn residual_norm(&self, x: &[f64]) -> Result<f64> {
        let ax = self.matrix.spmv(x, false)?;
        Ok(ax
            .iter()
            .zip(&self.rhs)
            .map(|(a, c)| (c - a) * (c - a))
            .sum::<f64>()
            .sqrt())
    }

    /// Writes the matrix, right-hand side and block layout to `dir`.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        market::write_matrix(dir.join("kkt_matrix.mtx"), &self.matrix)?;
        market::write_vector(dir.join("kkt_rhs.mtx"), &self.rhs)?;
        std::fs::write(dir.join("kkt_layout.json"), serde_json::to_string_pretty(&self.layout)?)?;
        Ok(())
    }
}

fn check_params(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Config(format!(
            "regularisation parameters must be positive, got alpha={alpha}, beta={beta}"
        )));
    }
    Ok(())
}

fn assemble(blocks: &ChannelBlocks, f: SparseMatrix, alpha: f64, beta: f64, model: FlowModel) -> KktSystem {
    let d = &blocks.dofs;
    let layout = BlockLayout::new(d.n_v, d.n_p, d.n_u);
    let [ov, op, ou, ol, om, n] = layout.offsets;
    let ft = f.transpose();
    let bt = blocks.b.transpose();
    let qht = blocks.q_hat.transpose();
    let nnz = 2 * (blocks.q_v.nnz() + f.nnz() + 2 * blocks.b.nnz() + blocks.q_hat.nnz())
        + blocks.q_p.nnz()
        + blocks.q_u.nnz();
    let mut t = TripletBuilder::with_capacity(n, n, nnz);
    t.push_block(ov, ov, &blocks.q_v, 1.0);
    t.push_block(ov, ol, &ft, 1.0);
    t.push_block(ov, om, &bt, 1.0);
    t.push_block(op, op, &blocks.q_p, alpha);
    t.push_block(op, ol, &blocks.b, 1.0);
    t.push_block(ou, ou, &blocks.q_u, beta);
    t.push_block(ou, ol, &qht, -1.0);
    t.push_block(ol, ov, &f, 1.0);
    t.push_block(ol, op, &bt, 1.0);
    t.push_block(ol, ou, &blocks.q_hat, -1.0);
    t.push_block(om, ov, &blocks.b, 1.0);
    let mut rhs = vec![0.0; n];
    rhs[ov..op].copy_from_slice(&blocks.v_target);
    for (r, d) in rhs[op..ou].iter_mut().zip(&blocks.p_target) {
        *r = alpha * d;
    }
    KktSystem {
        matrix: t.build(),
        rhs,
        layout,
        alpha,
        beta,
        model,
        f,
        b: blocks.b.clone(),
        q_v: blocks.q_v.clone(),
        q_p: blocks.q_p.clone(),
        q_u: blocks.q_u.clone(),
        q_hat: blocks.q_hat.clone(),
    }
}

/// Stokes control optimality system.
pub fn build_stokes_kkt(blocks: &ChannelBlocks, alpha: f64, beta: f64) -> Result<KktSystem> {
    check_params(alpha, beta)?;
    Ok(assemble(blocks, blocks.a.clone(), alpha, beta, FlowModel::Stokes))
}

/// Oseen control optimality system with `F = νA + N(wind)`.
pub fn build_oseen_kkt(blocks: &ChannelBlocks, wind: &[f64], alpha: f64, beta: f64, nu: f64) -> Result<KktSystem> {
    check_params(alpha, beta)?;
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Config(format!("viscosity must be positive, got {nu}")));
    }
    check_len("wind", wind.len(), blocks.dofs.n_v)?;
    let n = assemble_convection(&blocks.mesh, &blocks.dofs, wind)?;
    let f = blocks.a.add_scaled(nu, &n, 1.0)?;
    Ok(assemble(blocks, f, alpha, beta, FlowModel::Oseen { nu }))
}

/// Forward Stokes problem `[A Bᵀ; B 0] (v, p) = (Q̂u, 0)` driven by the
/// inflow traction `u`, given in control coefficients. This is the
/// constraint block of the optimality system with the control fixed.
pub fn forward_stokes_system(blocks: &ChannelBlocks, control: &[f64]) -> Result<(SparseMatrix, Vec<f64>)> {
    let d = &blocks.dofs;
    check_len("control", control.len(), d.n_u)?;
    let n = d.n_v + d.n_p;
    let mut t = TripletBuilder::with_capacity(n, n, blocks.a.nnz() + 2 * blocks.b.nnz());
    t.push_block(0, 0, &blocks.a, 1.0);
    t.push_block(0, d.n_v, &blocks.b.transpose(), 1.0);
    t.push_block(d.n_v, 0, &blocks.b, 1.0);
    let mut rhs = blocks.q_hat.spmv(control, false)?;
    rhs.resize(n, 0.0);
    Ok((t.build(), rhs))
}

/// Which inflow nodes are candidates for moving.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InflowSelection {
    /// Inflow nodes that are element vertices, corners excluded.
    Vertices,
    /// Inflow nodes at element edge midpoints.
    Midpoints,
    /// Every inflow node, corners excluded.
    All,
    /// Nodes on the upper half of the inflow edge, `0 < y < 1`, where the
    /// desired velocity enters the channel.
    #[default]
    Influx,
}

impl fmt::Display for InflowSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InflowSelection::Vertices => "vertices",
            InflowSelection::Midpoints => "midpoints",
            InflowSelection::All => "all",
            InflowSelection::Influx => "influx",
        })
    }
}

impl std::str::FromStr for InflowSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertices" => Ok(Self::Vertices),
            "midpoints" => Ok(Self::Midpoints),
            "all" => Ok(Self::All),
            "influx" => Ok(Self::Influx),
            other => Err(Error::Config(format!("unknown inflow selection '{other}'"))),
        }
    }
}

pub const ALLOWED_STRIDES: [usize; 5] = [1, 2, 4, 6, 8];

/// Reordering that moves selected inflow velocity unknowns and their
/// adjoints into the control block.
///
/// After permutation the blocks are: retained velocity `v'`, pressure,
/// the augmented block `(u, v_I, λ_I)`, retained adjoint `λ'` and the
/// pressure adjoint. `perm[new] = old`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationPlan {
    pub stride: usize,
    pub offset: usize,
    pub selection: InflowSelection,
    /// Selected biquadratic node indices.
    pub selected_nodes: Vec<usize>,
    /// Moved velocity indices (both components of every selected node), ascending.
    pub moved: Vec<usize>,
    /// Velocity indices that stay in the first block, ascending.
    pub kept: Vec<usize>,
    pub perm: Vec<usize>,
    pub inverse: Vec<usize>,
    /// Start offsets of the five permuted blocks followed by the total size.
    pub offsets: [usize; 6],
}

impl PermutationPlan {
    /// Size of the augmented third block.
    pub fn block3_dim(&self) -> usize {
        self.offsets[3] - self.offsets[2]
    }

    pub fn is_identity(&self) -> bool {
        self.moved.is_empty()
    }

    /// Block label of every permuted index.
    pub fn block_of(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.perm.len()];
        for b in 0..5 {
            for x in &mut out[self.offsets[b]..self.offsets[b + 1]] {
                *x = b as u8;
            }
        }
        out
    }

    /// `y = P x`.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&o| x[o]).collect()
    }

    /// `x = Pᵀ y`.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        self.inverse.iter().map(|&n| y[n]).collect()
    }
}

/// Selects every `stride`-th candidate inflow node starting at `offset` and
/// builds the permutation.
pub fn plan_permutation(
    layout: &BlockLayout,
    dofs: &DofMap,
    stride: usize,
    offset: usize,
    selection: InflowSelection,
) -> Result<PermutationPlan> {
    if !ALLOWED_STRIDES.contains(&stride) {
        return Err(Error::Config(format!(
            "stride {stride} not in {ALLOWED_STRIDES:?}"
        )));
    }
    if layout.n_v != dofs.n_v || layout.n_p != dofs.n_p || layout.n_u != dofs.n_u {
        return Err(Error::Dimension("plan layout does not match the degree-of-freedom map".into()));
    }
    let inflow = &dofs.inflow_nodes;
    let (start, step) = match selection {
        InflowSelection::Vertices => (2, 2),
        InflowSelection::Midpoints => (1, 2),
        InflowSelection::All => (1, 1),
        InflowSelection::Influx => (inflow.len() / 2 + 1, 1),
    };
    let candidates: Vec<usize> = (start..inflow.len() - 1).step_by(step).map(|j| inflow[j]).collect();
    let selected_nodes: Vec<usize> = candidates.iter().copied().skip(offset).step_by(stride).collect();
    let mut moved: Vec<usize> = selected_nodes
        .iter()
        .flat_map(|&k| [dofs.velocity_dof(0, k), dofs.velocity_dof(1, k)])
        .collect();
    moved.sort_unstable();
    let mut is_moved = vec![false; dofs.n_v];
    for &i in &moved {
        is_moved[i] = true;
    }
    let kept: Vec<usize> = (0..dofs.n_v).filter(|&i| !is_moved[i]).collect();
    let [ov, op, ou, ol, om, n] = layout.offsets;
    let mut perm = Vec::with_capacity(n);
    perm.extend(kept.iter().map(|&i| ov + i));
    perm.extend(op..ou);
    perm.extend(ou..ol);
    perm.extend(moved.iter().map(|&i| ov + i));
    perm.extend(moved.iter().map(|&i| ol + i));
    perm.extend(kept.iter().map(|&i| ol + i));
    perm.extend(om..n);
    let mut inverse = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inverse[old] = new;
    }
    let m = moved.len();
    let nk = kept.len();
    let offsets = [0, nk, nk + layout.n_p, nk + layout.n_p + layout.n_u + 2 * m, n - layout.n_p, n];
    Ok(PermutationPlan {
        stride,
        offset,
        selection,
        selected_nodes,
        moved,
        kept,
        perm,
        inverse,
        offsets,
    })
}

/// Block pairs that are structurally nonzero in the unpermuted system.
const PATTERN: [(u8, u8); 11] = [
    (0, 0),
    (1, 1),
    (2, 2),
    (0, 3),
    (3, 0),
    (0, 4),
    (4, 0),
    (1, 3),
    (3, 1),
    (2, 3),
    (3, 2),
];

/// The permuted system and its fill-dropped counterpart.
#[derive(Clone, Debug)]
pub struct PermutedSystem {
    /// `P 𝒜 Pᵀ`.
    pub matrix: SparseMatrix,
    /// `P c`.
    pub rhs: Vec<f64>,
    /// `P 𝒜 Pᵀ` restricted to the block pattern of the unpermuted system.
    pub dropped: SparseMatrix,
}

/// Permutes the system and drops the fill that falls outside the original
/// block pattern.
pub fn apply_permutation_and_drop(kkt: &KktSystem, plan: &PermutationPlan) -> Result<PermutedSystem> {
    if plan.perm.len() != kkt.dim() {
        return Err(Error::Dimension(format!(
            "plan of size {} for a system of size {}",
            plan.perm.len(),
            kkt.dim()
        )));
    }
    let matrix = kkt.matrix.permute_symmetric(&plan.perm)?;
    let blocks = plan.block_of();
    let mut allowed = [[false; 5]; 5];
    for (a, b) in PATTERN {
        allowed[a as usize][b as usize] = true;
    }
    let dropped = matrix.filter(|i, j| allowed[blocks[i] as usize][blocks[j] as usize]);
    Ok(PermutedSystem {
        rhs: plan.forward(&kkt.rhs),
        matrix,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_all, build_mesh};

    fn blocks(level: usize) -> ChannelBlocks {
        let (m, d) = build_mesh(level).unwrap();
        assemble_all(&m, &d).unwrap()
    }

    #[test]
    fn stokes_kkt_symmetric_with_expected_size() {
        let b = blocks(2);
        let k = build_stokes_kkt(&b, 1e-3, 1e-3).unwrap();
        assert_eq!(k.dim(), 128);
        assert!(k.matrix.asymmetry() <= 1e-14 * k.matrix.max_abs());
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        let b = blocks(2);
        assert!(matches!(build_stokes_kkt(&b, 0.0, 1.0), Err(Error::Config(_))));
        assert!(matches!(build_stokes_kkt(&b, 1.0, -1.0), Err(Error::Config(_))));
        let w = vec![0.0; b.dofs.n_v];
        assert!(matches!(build_oseen_kkt(&b, &w, 1.0, 1.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn control_block_is_scaled_mass() {
        let b = blocks(2);
        let k = build_stokes_kkt(&b, 1e-3, 0.25).unwrap();
        let r = k.layout.range(2).collect::<Vec<_>>();
        let blk = k.matrix.submatrix(&r, &r);
        let want = b.q_u.scaled(0.25);
        assert_eq!(blk.add_scaled(1.0, &want, -1.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn zero_wind_oseen_is_scaled_stokes() {
        let b = blocks(2);
        let w = vec![0.0; b.dofs.n_v];
        let o = build_oseen_kkt(&b, &w, 1e-2, 1e-1, 0.5).unwrap();
        assert!(o.f.add_scaled(1.0, &b.a, -0.5).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn table_dimensions_for_stride_two() {
        for (level, n) in [(2, 14), (3, 26), (4, 50), (5, 98)] {
            let (_, d) = build_mesh(level).unwrap();
            let layout = BlockLayout::new(d.n_v, d.n_p, d.n_u);
            for sel in [InflowSelection::Influx, InflowSelection::Vertices, InflowSelection::Midpoints] {
                let p = plan_permutation(&layout, &d, 2, 0, sel).unwrap();
                assert_eq!(p.block3_dim(), n, "level {level} {sel}");
            }
        }
    }

    #[test]
    fn invalid_stride_and_large_offset() {
        let (_, d) = build_mesh(2).unwrap();
        let layout = BlockLayout::new(d.n_v, d.n_p, d.n_u);
        assert!(matches!(plan_permutation(&layout, &d, 3, 0, InflowSelection::Vertices), Err(Error::Config(_))));
        let p = plan_permutation(&layout, &d, 8, 50, InflowSelection::Vertices).unwrap();
        assert!(p.is_identity());
        assert_eq!(p.block3_dim(), d.n_u);
        assert_eq!(p.perm, (0..layout.dim()).collect::<Vec<_>>());
    }

    #[test]
    fn permutation_round_trip() {
        let (_, d) = build_mesh(3).unwrap();
        let layout = BlockLayout::new(d.n_v, d.n_p, d.n_u);
        let p = plan_permutation(&layout, &d, 1, 0, InflowSelection::Vertices).unwrap();
        let x: Vec<f64> = (0..layout.dim()).map(|i| i as f64).collect();
        assert_eq!(p.backward(&p.forward(&x)), x);
    }
}
