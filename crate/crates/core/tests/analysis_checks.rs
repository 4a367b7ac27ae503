//! Spectral analyses checked against independent computations.

use channel_control::analysis::{
    braess_peisker_check, element_elimination_csv, element_elimination_eigs, golden_values, mass_bounds,
    multigrid_spectrum, murphy_ideal_check, schur_interlacing_report, uzawa_contraction, SchurChoice,
    ELIMINATION_PATTERNS,
};
use channel_control::dense::{gen_sym_eig, DenseMatrix, DEFAULT_DENSE_CAP};
use channel_control::fem::element::q2_mass;
use channel_control::fem::{assemble_all, build_mesh, ChannelBlocks};
use channel_control::precond::StackConfig;

fn blocks(level: usize) -> ChannelBlocks {
    let (m, d) = build_mesh(level).unwrap();
    assemble_all(&m, &d).unwrap()
}

/// Biquadratic element mass matrix on the unit square as the tensor
/// product of the 1D quadratic mass matrix `[4 2 -1; 2 16 2; -1 2 4]/30`,
/// nodes numbered row by row from the lower left.
fn tensor_q2_mass() -> DenseMatrix {
    let m1 = [[4.0, 2.0, -1.0], [2.0, 16.0, 2.0], [-1.0, 2.0, 4.0]];
    DenseMatrix::from_fn(9, 9, |i, j| m1[i / 3][j / 3] * m1[i % 3][j % 3] / 900.0)
}

fn scaled_extremes(m: &DenseMatrix) -> (f64, f64) {
    let r = gen_sym_eig(m, &DenseMatrix::from_diagonal(&m.diagonal())).unwrap();
    (r.min, r.max)
}

#[test]
fn element_mass_matches_the_tensor_product() {
    let a = q2_mass(1.0);
    let b = tensor_q2_mass();
    for i in 0..9 {
        for j in 0..9 {
            assert!((a[(i, j)] - b[(i, j)]).abs() < 1e-15);
        }
    }
}

#[test]
fn element_bounds_from_independent_matrices() {
    let rows = mass_bounds().unwrap();
    let (lo, hi) = scaled_extremes(&tensor_q2_mass());
    assert!((rows[0].min - lo).abs() < 1e-12 && (rows[0].max - hi).abs() < 1e-12);
    // bilinear: [2 1; 1 2]/6 ⊗ [2 1; 1 2]/6
    let q1 = DenseMatrix::from_fn(4, 4, |i, j| {
        let m = |a: usize, b: usize| if a == b { 2.0 } else { 1.0 };
        m(i / 2, j / 2) * m(i % 2, j % 2) / 36.0
    });
    let (lo, hi) = scaled_extremes(&q1);
    assert!((lo - 0.25).abs() < 1e-12 && (hi - 2.25).abs() < 1e-12);
    assert!((rows[1].min - lo).abs() < 1e-12 && (rows[1].max - hi).abs() < 1e-12);
    assert!((rows[2].min - 0.5).abs() < 1e-12 && (rows[2].max - 1.25).abs() < 1e-12);
}

#[test]
fn node_removal_bounds() {
    let full = tensor_q2_mass();
    let want_min = [0.25, 0.3125, 0.3125, 0.3506, 0.3506, 0.4581, 0.3750];
    for (p, want) in ELIMINATION_PATTERNS.iter().zip(want_min) {
        let r = element_elimination_eigs(p).unwrap();
        let keep: Vec<usize> = (0..9).filter(|i| !p.contains(&(i + 1))).collect();
        let (lo, hi) = scaled_extremes(&full.select(&keep, &keep));
        assert!((r.min - lo).abs() < 1e-12 && (r.max - hi).abs() < 1e-12);
        assert!((r.min - want).abs() < 1e-4, "{p:?}: {}", r.min);
        assert!((r.max - 1.5625).abs() < 1e-4);
    }
    let a = element_elimination_csv(&ELIMINATION_PATTERNS).unwrap();
    assert_eq!(a, element_elimination_csv(&ELIMINATION_PATTERNS).unwrap());
}

#[test]
fn ideal_preconditioner_has_three_eigenvalues() {
    let b = blocks(2);
    let r = murphy_ideal_check(&b, 1e-3, 1e-3, SchurChoice::Exact, DEFAULT_DENSE_CAP).unwrap();
    assert!(r.max_distance < 1e-8, "{}", r.max_distance);
    assert_eq!(r.counts.iter().sum::<usize>(), b.dofs.kkt_dim());
    assert_eq!(golden_values()[1], 1.0);
}

#[test]
fn dropping_the_control_term_leaves_a_low_rank_perturbation() {
    let b = blocks(3);
    let r = schur_interlacing_report(&b, 1e-3, 1e-3, DEFAULT_DENSE_CAP).unwrap();
    assert_eq!(r.below_one, 0);
    assert!(r.cluster_max <= 1.0 + 1e-8, "{}", r.cluster_max);
    assert_eq!(r.top.len(), b.dofs.n_u);
}

#[test]
fn uzawa_contracts_more_with_more_steps() {
    let b = blocks(3);
    let eta = |steps| {
        let cfg = StackConfig {
            uzawa_steps: steps,
            ..StackConfig::stokes()
        };
        uzawa_contraction(&b, &cfg, 3, 7, DEFAULT_DENSE_CAP).unwrap()
    };
    let (e5, e10) = (eta(5), eta(10));
    assert!(e10 < e5 && e5 < 1.0, "{e5} {e10}");
}

#[test]
fn schur_approximation_respects_the_contraction_bounds() {
    let b = blocks(2);
    for steps in [5, 10] {
        let cfg = StackConfig {
            uzawa_steps: steps,
            ..StackConfig::stokes()
        };
        let r = braess_peisker_check(&b, &cfg, 1e-3, DEFAULT_DENSE_CAP).unwrap();
        assert!(r.holds, "{r:?}");
    }
}

#[test]
fn multigrid_is_spectrally_equivalent() {
    let r = multigrid_spectrum(3, 5, 2, DEFAULT_DENSE_CAP).unwrap();
    assert!(r.min > 0.5 && r.max < 1.5, "{r:?}");
}
