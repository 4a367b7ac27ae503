//! Uniform square grids on the channel `(-1, 1)²` and their degree-of-freedom maps.
//!
//! Level `l` has `2^(l-1)` elements per side. Nodes and elements are
//! numbered lexicographically, `x` fastest. The left edge `x = -1` is the
//! inflow, the right edge `x = 1` the outflow and the horizontal edges
//! `y = ±1` are walls carrying homogeneous Dirichlet conditions; corners
//! count as wall nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_LEVEL: usize = 2;
pub const MAX_LEVEL: usize = 9;

/// Boundary classification of a biquadratic node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Interior,
    Wall,
    Inflow,
    Outflow,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelMesh {
    pub level: usize,
    pub elements_per_side: usize,
    /// Element side length.
    pub h: f64,
    /// Biquadratic nodes per side, `2^l + 1`.
    pub q2_per_side: usize,
    /// Bilinear nodes per side, `2^(l-1) + 1`.
    pub q1_per_side: usize,
}

impl ChannelMesh {
    pub fn new(level: usize) -> Result<Self> {
        if !(MIN_LEVEL..=MAX_LEVEL).contains(&level) {
            return Err(Error::Config(format!(
                "level {level} outside {MIN_LEVEL}..={MAX_LEVEL}"
            )));
        }
        let ne = 1usize << (level - 1);
        Ok(Self {
            level,
            elements_per_side: ne,
            h: 2.0 / ne as f64,
            q2_per_side: 2 * ne + 1,
            q1_per_side: ne + 1,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.elements_per_side * self.elements_per_side
    }

    pub fn n_q2(&self) -> usize {
        self.q2_per_side * self.q2_per_side
    }

    pub fn n_q1(&self) -> usize {
        self.q1_per_side * self.q1_per_side
    }

    /// Coordinates of biquadratic node `k`.
    pub fn q2_coord(&self, k: usize) -> (f64, f64) {
        let n = self.q2_per_side;
        let step = 0.5 * self.h;
        (-1.0 + (k % n) as f64 * step, -1.0 + (k / n) as f64 * step)
    }

    /// Coordinates of bilinear node `k`.
    pub fn q1_coord(&self, k: usize) -> (f64, f64) {
        let n = self.q1_per_side;
        (-1.0 + (k % n) as f64 * self.h, -1.0 + (k / n) as f64 * self.h)
    }

    /// Lower-left corner of element `e`.
    pub fn element_origin(&self, e: usize) -> (f64, f64) {
        let ne = self.elements_per_side;
        (-1.0 + (e % ne) as f64 * self.h, -1.0 + (e / ne) as f64 * self.h)
    }

    /// Global biquadratic nodes of element `e` in local order.
    pub fn q2_element_nodes(&self, e: usize) -> [usize; 9] {
        let ne = self.elements_per_side;
        let n = self.q2_per_side;
        let (ex, ey) = (e % ne, e / ne);
        let mut out = [0; 9];
        for b in 0..3 {
            for a in 0..3 {
                out[3 * b + a] = (2 * ey + b) * n + 2 * ex + a;
            }
        }
        out
    }

    /// Global bilinear nodes of element `e` in local order.
    pub fn q1_element_nodes(&self, e: usize) -> [usize; 4] {
        let ne = self.elements_per_side;
        let n = self.q1_per_side;
        let (ex, ey) = (e % ne, e / ne);
        [ey * n + ex, ey * n + ex + 1, (ey + 1) * n + ex, (ey + 1) * n + ex + 1]
    }

    pub fn node_kind(&self, k: usize) -> NodeKind {
        let n = self.q2_per_side;
        let (i, j) = (k % n, k / n);
        if j == 0 || j == n - 1 {
            NodeKind::Wall
        } else if i == 0 {
            NodeKind::Inflow
        } else if i == n - 1 {
            NodeKind::Outflow
        } else {
            NodeKind::Interior
        }
    }
}

/// Degree-of-freedom bookkeeping for velocity, pressure and control.
///
/// Velocity unknowns are ordered with all `x` components first, then all
/// `y` components, each following the biquadratic node numbering. Control
/// unknowns live on the inflow edge, corners included, ordered bottom to
/// top, again `x` components first.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DofMap {
    pub n_q2: usize,
    pub n_v: usize,
    pub n_p: usize,
    pub n_u: usize,
    /// Biquadratic nodes on `x = -1`, bottom to top, corners included.
    pub inflow_nodes: Vec<usize>,
    /// Velocity index whose trace is control basis function `l`.
    pub control_to_velocity: Vec<usize>,
    /// Velocity indices on the walls (both components).
    pub dirichlet: Vec<usize>,
    pub kinds: Vec<NodeKind>,
}

impl DofMap {
    pub fn new(mesh: &ChannelMesh) -> Self {
        let n_q2 = mesh.n_q2();
        let n = mesh.q2_per_side;
        let kinds: Vec<NodeKind> = (0..n_q2).map(|k| mesh.node_kind(k)).collect();
        let inflow_nodes: Vec<usize> = (0..n).map(|j| j * n).collect();
        let control_to_velocity = inflow_nodes
            .iter()
            .copied()
            .chain(inflow_nodes.iter().map(|&k| n_q2 + k))
            .collect();
        let walls: Vec<usize> = (0..n_q2).filter(|&k| kinds[k] == NodeKind::Wall).collect();
        let dirichlet = walls.iter().copied().chain(walls.iter().map(|&k| n_q2 + k)).collect();
        Self {
            n_q2,
            n_v: 2 * n_q2,
            n_p: mesh.n_q1(),
            n_u: 2 * n,
            inflow_nodes,
            control_to_velocity,
            dirichlet,
            kinds,
        }
    }

    /// Velocity index of component `c` at biquadratic node `k`.
    pub fn velocity_dof(&self, c: usize, k: usize) -> usize {
        c * self.n_q2 + k
    }

    /// Dimension `2 n_v + 2 n_p + n_u` of the optimality system.
    pub fn kkt_dim(&self) -> usize {
        2 * self.n_v + 2 * self.n_p + self.n_u
    }

    /// Whether velocity index `i` sits on a node of the given kind.
    pub fn velocity_kind(&self, i: usize) -> NodeKind {
        self.kinds[i % self.n_q2]
    }
}

/// Builds the mesh of the given level with its degree-of-freedom map.
pub fn build_mesh(level: usize) -> Result<(ChannelMesh, DofMap)> {
    let mesh = ChannelMesh::new(level)?;
    let dofs = DofMap::new(&mesh);
    Ok((mesh, dofs))
}
