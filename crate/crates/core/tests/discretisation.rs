//! Discretisation checks against closed-form values.

use channel_control::dense::{dense_solve, Cholesky};
use channel_control::fem::assemble::{
    interpolate_pressure, interpolate_velocity, poiseuille_pressure, poiseuille_velocity, scalar_convection_raw,
};
use channel_control::fem::mesh::NodeKind;
use channel_control::fem::{assemble_all, build_mesh, ChannelBlocks};
use channel_control::kkt::{forward_stokes_system, plan_permutation, BlockLayout, InflowSelection};
use channel_control::sparse::dot;

fn blocks(level: usize) -> ChannelBlocks {
    let (m, d) = build_mesh(level).unwrap();
    assemble_all(&m, &d).unwrap()
}

#[test]
fn system_sizes_follow_the_level_formulae() {
    let n_table = [128, 392, 1352, 5000, 19208, 75272];
    let stride2 = [14, 26, 50, 98, 194, 386];
    for (i, level) in (2..=7).enumerate() {
        let (_, d) = build_mesh(level).unwrap();
        let q2 = (1 << level) + 1;
        let q1 = (1 << (level - 1)) + 1;
        assert_eq!(d.n_v, 2 * q2 * q2);
        assert_eq!(d.n_p, q1 * q1);
        assert_eq!(d.n_u, 2 * q2);
        assert_eq!(d.kkt_dim(), n_table[i]);
        let layout = BlockLayout::new(d.n_v, d.n_p, d.n_u);
        let plan = plan_permutation(&layout, &d, 2, 0, InflowSelection::default()).unwrap();
        assert_eq!(plan.block3_dim(), stride2[i], "level {level}");
    }
}

#[test]
fn mass_matrices_integrate_constants_and_are_definite() {
    let b = blocks(3);
    let ones_p = vec![1.0; b.dofs.n_p];
    assert!((dot(&ones_p, &b.q_p.spmv(&ones_p, false).unwrap()) - 4.0).abs() < 1e-12);
    let ones_u = vec![1.0; b.dofs.n_u];
    assert!((dot(&ones_u, &b.q_u.spmv(&ones_u, false).unwrap()) - 4.0).abs() < 1e-12);
    for m in [&b.q_v, &b.q_p, &b.q_u, &b.a] {
        assert!(m.is_symmetric(1e-14));
        assert!(Cholesky::new(&m.to_dense()).is_ok());
    }
}

#[test]
fn control_coupling_rows_copy_the_control_mass() {
    let b = blocks(3);
    let d = &b.dofs;
    let mut seen = vec![false; d.n_v];
    // wall rows are cleared with the Dirichlet conditions, corners included
    for (l, &j) in d.control_to_velocity.iter().enumerate() {
        if d.dirichlet.contains(&j) {
            continue;
        }
        seen[j] = true;
        for k in 0..d.n_u {
            assert_eq!(b.q_hat.get(j, k), b.q_u.get(l, k));
        }
    }
    for j in (0..d.n_v).filter(|&j| !seen[j]) {
        assert!(b.q_hat.row_iter(j).all(|(_, v)| v == 0.0), "row {j}");
    }
}

#[test]
fn targets_integrate_the_jet() {
    let b = blocks(4);
    let n = b.dofs.n_q2;
    let sx: f64 = b.v_target[..n].iter().sum();
    let sy: f64 = b.v_target[n..].iter().sum();
    assert!((sx - 4.0 / 3.0).abs() < 1e-10, "{sx}");
    assert!(sy.abs() < 1e-14);
    assert!(b.p_target.iter().all(|&v| v == 0.0));
}

#[test]
fn poiseuille_flow_is_reproduced_exactly() {
    for level in [2, 3] {
        let b = blocks(level);
        let d = &b.dofs;
        // traction (∂v/∂n - p n) = (4, 0) on x = -1 for v = (1-y², 0), p = 2-2x
        let m = d.inflow_nodes.len();
        let g: Vec<f64> = (0..d.n_u).map(|l| if l < m { 4.0 } else { 0.0 }).collect();
        let (k, rhs) = forward_stokes_system(&b, &g).unwrap();
        let x = dense_solve(&k.to_dense(), &rhs).unwrap();
        let v = interpolate_velocity(&b.mesh, poiseuille_velocity);
        let p = interpolate_pressure(&b.mesh, poiseuille_pressure);
        let ev = x[..d.n_v].iter().zip(&v).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
        let ep = x[d.n_v..].iter().zip(&p).map(|(a, e)| (a - e).abs()).fold(0.0, f64::max);
        assert!(ev < 1e-8 && ep < 1e-8, "level {level}: velocity {ev:e}, pressure {ep:e}");
    }
}

#[test]
fn divergence_free_wind_convection_sign_structure() {
    let b = blocks(3);
    let w = interpolate_velocity(&b.mesh, poiseuille_velocity);
    let ns = scalar_convection_raw(&b.mesh, &w).unwrap();
    let sym = ns.add_scaled(1.0, &ns.transpose(), 1.0).unwrap();
    let n = b.mesh.n_q2();
    let kind = |k: usize| b.mesh.node_kind(k);
    // interior-supported vectors see no symmetric part
    let interior: Vec<f64> = (0..n).map(|k| if kind(k) == NodeKind::Interior { (k as f64).sin() } else { 0.0 }).collect();
    assert!(dot(&interior, &sym.spmv(&interior, false).unwrap()).abs() < 1e-12);
    // the inflow edge contributes negatively, the outflow edge positively
    let on = |want: NodeKind| -> Vec<f64> { (0..n).map(|k| if kind(k) == want { 1.0 } else { 0.0 }).collect() };
    let inflow = on(NodeKind::Inflow);
    let outflow = on(NodeKind::Outflow);
    assert!(dot(&inflow, &sym.spmv(&inflow, false).unwrap()) < 0.0);
    assert!(dot(&outflow, &sym.spmv(&outflow, false).unwrap()) > 0.0);
}
