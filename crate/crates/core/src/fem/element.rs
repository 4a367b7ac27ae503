//! Reference-element shape functions and element matrices.
//!
//! Local node numbering is lexicographic, `x` fastest: on the nine-node
//! biquadratic element node `3b + a` sits at `(ξ_a, η_b)` with
//! `ξ ∈ {-1, 0, 1}`, so nodes 0, 2, 6, 8 are the corners, 4 is the centre
//! and 0, 3, 6 lie on the left edge. (One-based, the corners are 1, 3, 7,
//! 9, the centre is 5 and the left edge is {1, 4, 7}.)

use crate::dense::DenseMatrix;
use crate::fem::quadrature::{gauss_legendre, gauss_tensor};

/// Quadratic Lagrange basis on the nodes `-1, 0, 1`.
#[inline]
pub fn lagrange2(xi: f64) -> [f64; 3] {
    [0.5 * xi * (xi - 1.0), 1.0 - xi * xi, 0.5 * xi * (xi + 1.0)]
}

#[inline]
pub fn lagrange2_deriv(xi: f64) -> [f64; 3] {
    [xi - 0.5, -2.0 * xi, xi + 0.5]
}

/// Linear Lagrange basis on the nodes `-1, 1`.
#[inline]
pub fn lagrange1(xi: f64) -> [f64; 2] {
    [0.5 * (1.0 - xi), 0.5 * (1.0 + xi)]
}

/// Biquadratic shape function values at `(ξ, η)`.
pub fn q2_values(xi: f64, eta: f64) -> [f64; 9] {
    let lx = lagrange2(xi);
    let ly = lagrange2(eta);
    let mut out = [0.0; 9];
    for b in 0..3 {
        for a in 0..3 {
            out[3 * b + a] = lx[a] * ly[b];
        }
    }
    out
}

/// Reference gradients `(∂/∂ξ, ∂/∂η)` of the biquadratic shape functions.
pub fn q2_gradients(xi: f64, eta: f64) -> [[f64; 2]; 9] {
    let lx = lagrange2(xi);
    let ly = lagrange2(eta);
    let dx = lagrange2_deriv(xi);
    let dy = lagrange2_deriv(eta);
    let mut out = [[0.0; 2]; 9];
    for b in 0..3 {
        for a in 0..3 {
            out[3 * b + a] = [dx[a] * ly[b], lx[a] * dy[b]];
        }
    }
    out
}

/// Bilinear shape function values at `(ξ, η)`, node `2b + a`.
pub fn q1_values(xi: f64, eta: f64) -> [f64; 4] {
    let lx = lagrange1(xi);
    let ly = lagrange1(eta);
    [lx[0] * ly[0], lx[1] * ly[0], lx[0] * ly[1], lx[1] * ly[1]]
}

/// Biquadratic mass matrix of a square element with side `h`.
pub fn q2_mass(h: f64) -> DenseMatrix {
    let jac = 0.25 * h * h;
    let mut m = DenseMatrix::zeros(9, 9);
    for (xi, eta, w) in gauss_tensor(3) {
        let phi = q2_values(xi, eta);
        for i in 0..9 {
            for j in 0..9 {
                m[(i, j)] += w * jac * phi[i] * phi[j];
            }
        }
    }
    m
}

/// Biquadratic stiffness matrix `∫∇φⱼ·∇φᵢ` of a square element. Scale-invariant in 2D.
pub fn q2_stiffness(h: f64) -> DenseMatrix {
    let jac = 0.25 * h * h;
    let g = 2.0 / h;
    let mut m = DenseMatrix::zeros(9, 9);
    for (xi, eta, w) in gauss_tensor(3) {
        let d = q2_gradients(xi, eta);
        for i in 0..9 {
            for j in 0..9 {
                m[(i, j)] += w * jac * g * g * (d[i][0] * d[j][0] + d[i][1] * d[j][1]);
            }
        }
    }
    m
}

/// Bilinear mass matrix of a square element with side `h`.
pub fn q1_mass(h: f64) -> DenseMatrix {
    let jac = 0.25 * h * h;
    let mut m = DenseMatrix::zeros(4, 4);
    for (xi, eta, w) in gauss_tensor(3) {
        let psi = q1_values(xi, eta);
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] += w * jac * psi[i] * psi[j];
            }
        }
    }
    m
}

/// Quadratic mass matrix of a boundary edge with length `h`.
pub fn q2_edge_mass(h: f64) -> DenseMatrix {
    let (p, w) = gauss_legendre(3);
    let mut m = DenseMatrix::zeros(3, 3);
    for (xi, wq) in p.iter().zip(&w) {
        let phi = lagrange2(*xi);
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] += wq * 0.5 * h * phi[i] * phi[j];
            }
        }
    }
    m
}

/// Divergence pairing `-∫ψₖ ∂φⱼ/∂x_c` for `c = 0, 1`: two 4×9 blocks.
pub fn q2q1_divergence(h: f64) -> [DenseMatrix; 2] {
    let jac = 0.25 * h * h;
    let g = 2.0 / h;
    let mut bx = DenseMatrix::zeros(4, 9);
    let mut by = DenseMatrix::zeros(4, 9);
    for (xi, eta, w) in gauss_tensor(3) {
        let psi = q1_values(xi, eta);
        let d = q2_gradients(xi, eta);
        for k in 0..4 {
            for j in 0..9 {
                bx[(k, j)] -= w * jac * g * psi[k] * d[j][0];
                by[(k, j)] -= w * jac * g * psi[k] * d[j][1];
            }
        }
    }
    [bx, by]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_functions_form_partition_of_unity() {
        for &(x, y) in &[(0.3, -0.7), (-1.0, 1.0), (0.0, 0.0)] {
            assert!((q2_values(x, y).iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!((q1_values(x, y).iter().sum::<f64>() - 1.0).abs() < 1e-15);
            let gsum = q2_gradients(x, y).iter().fold([0.0, 0.0], |a, g| [a[0] + g[0], a[1] + g[1]]);
            assert!(gsum[0].abs() < 1e-14 && gsum[1].abs() < 1e-14);
        }
    }

    #[test]
    fn nodal_interpolation_property() {
        let nodes = [-1.0, 0.0, 1.0];
        for b in 0..3 {
            for a in 0..3 {
                let v = q2_values(nodes[a], nodes[b]);
                for (k, &vk) in v.iter().enumerate() {
                    let want = if k == 3 * b + a { 1.0 } else { 0.0 };
                    assert!((vk - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn element_mass_sums_to_area() {
        let h = 0.5;
        let total: f64 = q2_mass(h).as_slice().iter().sum();
        assert!((total - h * h).abs() < 1e-15);
        let total: f64 = q1_mass(h).as_slice().iter().sum();
        assert!((total - h * h).abs() < 1e-15);
        let total: f64 = q2_edge_mass(h).as_slice().iter().sum();
        assert!((total - h).abs() < 1e-15);
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let k = q2_stiffness(0.25);
        let r = k.mul_vec(&[1.0; 9]).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-13));
    }
}
