//! Randomised invariants.

use channel_control::analysis::random_interlacing_suite;
use channel_control::dense::{dense_solve, gen_sym_eig, sym_eig_vectors, DenseMatrix};
use channel_control::fem::{assemble_all, build_mesh};
use channel_control::kkt::{build_stokes_kkt, plan_permutation, BlockLayout, InflowSelection, ALLOWED_STRIDES};
use channel_control::krylov::{minres, MinresOptions};
use channel_control::market::{vector_from_str, vector_to_string};
use channel_control::operator::{Identity, LinearOperator};
use channel_control::precond::{bounds, stokes_block_precond, stokes_schur, Chebyshev, ChebyshevConfig, StackConfig};
use channel_control::sparse::{dot, SparseMatrix};
use proptest::prelude::*;

fn sym_from(n: usize, vals: &[f64]) -> DenseMatrix {
    let a = DenseMatrix::from_fn(n, n, |i, j| vals[i * n + j]);
    a.add_scaled(0.5, &a.transpose(), 0.5).unwrap()
}

fn spd_from(n: usize, vals: &[f64]) -> DenseMatrix {
    let g = DenseMatrix::from_fn(n, n, |i, j| vals[i * n + j]);
    g.transpose().matmul(&g).unwrap().add_scaled(1.0, &DenseMatrix::identity(n), 1.0).unwrap()
}

fn selection() -> impl Strategy<Value = InflowSelection> {
    prop_oneof![
        Just(InflowSelection::Influx),
        Just(InflowSelection::Vertices),
        Just(InflowSelection::Midpoints),
        Just(InflowSelection::All),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transpose_product_matches_explicit_transpose(
        entries in prop::collection::vec((0usize..7, 0usize..5, -2.0f64..2.0), 0..30),
        x in prop::collection::vec(-1.0f64..1.0, 7),
    ) {
        let m = SparseMatrix::from_triplets(7, 5, &entries);
        let a = m.spmv(&x, true).unwrap();
        let b = m.transpose().spmv(&x, false).unwrap();
        let d = m.to_dense().transpose().mul_vec(&x).unwrap();
        for i in 0..5 {
            prop_assert!((a[i] - b[i]).abs() <= 1e-14 * (1.0 + b[i].abs()));
            prop_assert!((a[i] - d[i]).abs() <= 1e-14 * (1.0 + d[i].abs()));
        }
    }

    #[test]
    fn symmetric_eigenpairs_satisfy_the_equation(vals in prop::collection::vec(-1.0f64..1.0, 64)) {
        let m = sym_from(8, &vals);
        let e = sym_eig_vectors(&m).unwrap();
        let norm = m.frobenius();
        for k in 0..8 {
            let v = e.vectors.column(k);
            let mv = m.mul_vec(&v).unwrap();
            let r: f64 = mv.iter().zip(&v).map(|(a, b)| (a - e.values[k] * b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(r <= 1e-10 * norm.max(1.0));
        }
    }

    // Power sums Σλᵏ = trace((D⁻¹M)ᵏ) for k = 1..n pin down the whole spectrum.
    #[test]
    fn generalized_eigenvalues_match_power_sums(
        mv in prop::collection::vec(-1.0f64..1.0, 36),
        dv in prop::collection::vec(-1.0f64..1.0, 36),
    ) {
        let n = 6;
        let m = sym_from(n, &mv);
        let d = spd_from(n, &dv);
        let ev = gen_sym_eig(&m, &d).unwrap().eigenvalues;
        let cols: Vec<Vec<f64>> = (0..n).map(|j| dense_solve(&d, &m.column(j)).unwrap()).collect();
        let c = DenseMatrix::from_columns(&cols).unwrap();
        let mut pw = c.clone();
        for k in 1..=n {
            let tr = pw.trace();
            let sum: f64 = ev.iter().map(|l| l.powi(k as i32)).sum();
            let scale = ev.iter().map(|l| l.abs().powi(k as i32)).sum::<f64>().max(1e-3);
            prop_assert!((tr - sum).abs() <= 1e-10 * scale, "k={} trace {} sum {}", k, tr, sum);
            pw = pw.matmul(&c).unwrap();
        }
    }

    #[test]
    fn permutation_plans_are_bijections(
        level in 2usize..6,
        stride_ix in 0usize..5,
        offset in 0usize..3,
        sel in selection(),
        x in prop::collection::vec(-1.0f64..1.0, 1..2),
    ) {
        let (_, d) = build_mesh(level).unwrap();
        let layout = BlockLayout::new(d.n_v, d.n_p, d.n_u);
        let Ok(plan) = plan_permutation(&layout, &d, ALLOWED_STRIDES[stride_ix], offset, sel) else {
            return Ok(());
        };
        let n = layout.dim();
        let mut seen = vec![false; n];
        for &o in &plan.perm {
            prop_assert!(!seen[o]);
            seen[o] = true;
        }
        prop_assert_eq!(plan.block3_dim(), d.n_u + 2 * plan.moved.len());
        prop_assert_eq!(plan.moved.len(), 2 * plan.selected_nodes.len());
        let v: Vec<f64> = (0..n).map(|i| x[0] + i as f64).collect();
        prop_assert_eq!(plan.backward(&plan.forward(&v)), v);
    }

    #[test]
    fn interlacing_holds_on_random_low_rank_updates(seed in any::<u64>()) {
        let r = random_interlacing_suite(4, seed, 1e-10).unwrap();
        prop_assert_eq!(r.failures, 0);
    }

    #[test]
    fn vectors_survive_text_round_trip(v in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..20)) {
        prop_assert_eq!(vector_from_str(&vector_to_string(&v)).unwrap(), v);
    }

    #[test]
    fn minres_solves_random_indefinite_systems(
        vals in prop::collection::vec(-1.0f64..1.0, 100),
        signs in prop::collection::vec(any::<bool>(), 10),
        b in prop::collection::vec(-1.0f64..1.0, 10),
    ) {
        let n = 10;
        let mut a = sym_from(n, &vals).scaled(0.2);
        for i in 0..n {
            a[(i, i)] += if signs[i] { 3.0 } else { -3.0 };
        }
        let opts = MinresOptions { tol: 1e-12, maxit: 200, probe: true, ..MinresOptions::default() };
        let (x, rep) = minres(&a, &Identity(n), &b, &opts).unwrap();
        prop_assert!(rep.converged);
        let exact = dense_solve(&a, &b).unwrap();
        for i in 0..n {
            prop_assert!((x[i] - exact[i]).abs() < 1e-8);
        }
    }
}

fn random_vectors(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut s = seed;
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let x = (0..n).map(|_| next()).collect();
    let y = (0..n).map(|_| next()).collect();
    (x, y)
}

fn check_linear_spd(op: &dyn LinearOperator, seed: u64) {
    let n = op.nrows();
    let (x, y) = random_vectors(seed, n);
    let mx = op.apply(&x).unwrap();
    let my = op.apply(&y).unwrap();
    let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 2.0 * a - b).collect();
    let msum = op.apply(&sum).unwrap();
    let scale = mx.iter().chain(&my).fold(0.0_f64, |m, v| m.max(v.abs()));
    for i in 0..n {
        assert!((msum[i] - (2.0 * mx[i] - my[i])).abs() <= 1e-12 * scale, "superposition");
    }
    let (a, b) = (dot(&y, &mx), dot(&x, &my));
    assert!((a - b).abs() <= 1e-10 * (a.abs() + b.abs()), "symmetry {a} {b}");
    assert!(dot(&x, &mx) > 0.0 && dot(&y, &my) > 0.0, "positivity");
}

#[test]
fn preconditioners_are_linear_symmetric_and_positive() {
    let (m, d) = build_mesh(3).unwrap();
    let blocks = assemble_all(&m, &d).unwrap();
    let sys = build_stokes_kkt(&blocks, 1e-3, 1e-3).unwrap();
    let cfg = StackConfig::stokes();
    let cheb = Chebyshev::new(sys.q_v.clone(), ChebyshevConfig::new(20, bounds::Q2)).unwrap();
    check_linear_spd(&cheb, 1);
    check_linear_spd(&stokes_schur(&sys, &blocks, &cfg).unwrap(), 2);
    check_linear_spd(&stokes_block_precond(&sys, &blocks, &cfg).unwrap(), 3);
}

#[test]
fn uzawa_adjoint_is_the_exact_transpose() {
    let (m, d) = build_mesh(3).unwrap();
    let blocks = assemble_all(&m, &d).unwrap();
    let sys = build_stokes_kkt(&blocks, 1e-3, 1e-3).unwrap();
    let schur = stokes_schur(&sys, &blocks, &StackConfig::stokes()).unwrap();
    let uz = schur.uzawa();
    for seed in 0..4 {
        let (x, y) = random_vectors(seed, uz.nrows());
        let a = dot(&y, &uz.apply(&x).unwrap());
        let b = dot(&x, &uz.apply_transpose(&y).unwrap());
        assert!((a - b).abs() <= 1e-11 * a.abs().max(b.abs()), "{a} {b}");
    }
}
