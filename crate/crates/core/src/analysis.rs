//! Spectral experiments behind the preconditioner design.
//!
//! Each function forms the relevant matrices densely (subject to a size
//! cap) and reports eigenvalues or derived quantities: diagonal scaling of
//! element mass matrices, Chebyshev-preconditioned mass matrices, the
//! low-rank Schur complement drop, the ideal block preconditioner, the
//! symmetric part of the convection-diffusion operator under inflow node
//! removal, and the contraction of the inexact Uzawa sweeps. The `*_csv`
//! helpers render the results as plain CSV tables.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{check_cap, gen_sym_eig, sym_eig, sym_eig_vectors, Cholesky, DenseMatrix, SpectrumReport};
use crate::error::{Error, Result};
use crate::fem::assemble::scalar_convection_raw;
use crate::fem::element::{q1_mass, q2_edge_mass, q2_mass};
use crate::fem::{ChannelBlocks, NodeKind};
use crate::kkt::{build_stokes_kkt, plan_permutation, BlockLayout, InflowSelection, KktSystem};
use crate::operator::{to_dense, LinearOperator};
use crate::picard::{solve_navier_control, InnerSolver, PicardConfig};
use crate::precond::{bounds, stokes_schur, Chebyshev, ChebyshevConfig, Multigrid, StackConfig};
use crate::sparse::{norm2, SparseMatrix};

/// Eigenvalues of `P S` for symmetric `P` and symmetric positive definite
/// `S`, computed as the spectrum of `Lᵀ P L` with `S = L Lᵀ`.
pub fn product_spectrum(p: &DenseMatrix, s: &DenseMatrix) -> Result<SpectrumReport> {
    let l = Cholesky::new(s)?.factor().clone();
    let m = l.transpose().matmul(&p.matmul(&l)?)?;
    sym_eig(&m.symmetrized())
}

/// `K Q⁻¹ Kᵀ` for dense `K` and symmetric positive definite `Q`.
pub fn gram_inverse(k: &DenseMatrix, q: &DenseMatrix) -> Result<DenseMatrix> {
    let chol = Cholesky::new(q)?;
    let w: Vec<Vec<f64>> = (0..k.nrows()).map(|i| chol.solve_lower(k.row(i))).collect();
    Ok(DenseMatrix::from_fn(k.nrows(), k.nrows(), |i, j| {
        w[i].iter().zip(&w[j]).map(|(a, b)| a * b).sum()
    }))
}

// ---------------------------------------------------------------------------
// Element mass matrices

/// Extreme eigenvalues of `D⁻¹Q` for one element mass matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassBound {
    pub matrix: String,
    pub min: f64,
    pub max: f64,
}

fn diagonal_scaled(m: &DenseMatrix) -> Result<SpectrumReport> {
    gen_sym_eig(m, &DenseMatrix::from_diagonal(&m.diagonal()))
}

/// Bounds for the biquadratic velocity, bilinear pressure and quadratic
/// edge (control) element mass matrices.
pub fn mass_bounds() -> Result<Vec<MassBound>> {
    [("velocity_q2", q2_mass(1.0)), ("pressure_q1", q1_mass(1.0)), ("control_q2_edge", q2_edge_mass(1.0))]
        .into_iter()
        .map(|(name, m)| {
            let r = diagonal_scaled(&m)?;
            Ok(MassBound {
                matrix: name.into(),
                min: r.min,
                max: r.max,
            })
        })
        .collect()
}

pub fn mass_bounds_csv(rows: &[MassBound]) -> String {
    let mut s = String::from("matrix,lambda_min,lambda_max\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.16e},{:.16e}", r.matrix, r.min, r.max);
    }
    s
}

/// Node subsets of the biquadratic element (numbered 1–9 row by row from
/// the lower left) for which the node-removal bounds are tabulated.
pub const ELIMINATION_PATTERNS: [&[usize]; 7] = [&[], &[1], &[4], &[1, 4], &[1, 7], &[1, 5, 7], &[1, 4, 7]];

/// Spectrum of `D⁻¹Q` for the biquadratic element mass matrix with the
/// rows and columns of the given nodes removed.
pub fn element_elimination_eigs(pattern: &[usize]) -> Result<SpectrumReport> {
    let mut seen = [false; 10];
    for &k in pattern {
        if !(1..=9).contains(&k) || seen[k] {
            return Err(Error::Config(format!("invalid node pattern {pattern:?}")));
        }
        seen[k] = true;
    }
    if !pattern.iter().all(|k| [1, 4, 5, 7].contains(k)) {
        return Err(Error::Config(format!(
            "pattern {pattern:?} must be a subset of the left-edge and centre nodes {{1, 4, 5, 7}}"
        )));
    }
    let keep: Vec<usize> = (0..9).filter(|i| !seen[i + 1]).collect();
    diagonal_scaled(&q2_mass(1.0).select(&keep, &keep))
}

/// One row per pattern: `pattern,lambda_min,lambda_max`.
pub fn element_elimination_csv(patterns: &[&[usize]]) -> Result<String> {
    let mut s = String::from("pattern,lambda_min,lambda_max\n");
    for p in patterns {
        let r = element_elimination_eigs(p)?;
        let label = if p.is_empty() {
            "none".to_string()
        } else {
            p.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(s, "{label},{:.16e},{:.16e}", r.min, r.max);
    }
    Ok(s)
}

// ---------------------------------------------------------------------------
// Assembled mass matrices under Chebyshev preconditioning

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassKind {
    Velocity,
    Pressure,
    Control,
}

impl MassKind {
    pub const ALL: [MassKind; 3] = [MassKind::Velocity, MassKind::Pressure, MassKind::Control];

    pub fn name(self) -> &'static str {
        match self {
            MassKind::Velocity => "velocity",
            MassKind::Pressure => "pressure",
            MassKind::Control => "control",
        }
    }

    pub fn matrix(self, blocks: &ChannelBlocks) -> &SparseMatrix {
        match self {
            MassKind::Velocity => &blocks.q_v,
            MassKind::Pressure => &blocks.q_p,
            MassKind::Control => &blocks.q_u,
        }
    }

    pub fn bounds(self) -> (f64, f64) {
        match self {
            MassKind::Velocity => bounds::Q2,
            MassKind::Pressure => bounds::Q1,
            MassKind::Control => bounds::Q2_EDGE,
        }
    }
}

/// Spectrum of `M_C⁻¹Q` with `M_C⁻¹` the given number of Chebyshev steps.
/// Zero steps stands for the exact inverse.
pub fn mass_spectrum_report(blocks: &ChannelBlocks, kind: MassKind, steps: usize, cap: usize) -> Result<SpectrumReport> {
    let q = kind.matrix(blocks);
    check_cap(q.nrows(), cap)?;
    let qd = q.to_dense();
    if steps == 0 {
        return Ok(SpectrumReport::from_eigenvalues(vec![1.0; q.nrows()]));
    }
    let cheb = Chebyshev::new(q.clone(), ChebyshevConfig::new(steps, kind.bounds()))?;
    let p = to_dense(&cheb)?.symmetrized();
    product_spectrum(&p, &qd)
}

// ---------------------------------------------------------------------------
// Low-rank interlacing

/// Outcome of checking `λᵢ(A) ≤ λᵢ(A+L) ≤ λ_{i-m}(A)` (descending order).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterlacingCheck {
    pub rank: usize,
    /// Largest violation of either bound, `0` when all hold.
    pub max_violation: f64,
    /// 1-based descending index of the worst violation, if any exceeds the tolerance.
    pub offending: Option<usize>,
    pub passed: bool,
}

/// Checks the interlacing bounds for `B = A + L` with `L` positive
/// semidefinite of numerical rank `m`.
pub fn lowrank_interlacing_check(a: &DenseMatrix, l: &DenseMatrix, tol: f64) -> Result<InterlacingCheck> {
    if a.nrows() != l.nrows() || a.ncols() != l.ncols() {
        return Err(Error::Dimension("A and L differ in shape".into()));
    }
    let le = sym_eig(l)?;
    let scale = le.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if le.min < -1e-10 * scale.max(1.0) {
        return Err(Error::NotSpd(format!("L has eigenvalue {:e}", le.min)));
    }
    let rank = le.eigenvalues.iter().filter(|&&v| v > 1e-10 * scale).count();
    let mut ea = sym_eig(a)?.eigenvalues;
    let mut eb = sym_eig(&a.add_scaled(1.0, l, 1.0)?)?.eigenvalues;
    ea.reverse();
    eb.reverse();
    let norm = ea.iter().chain(&eb).fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut worst = (0.0, None);
    for i in 0..eb.len() {
        let mut v = ea[i] - eb[i];
        if i >= rank {
            v = v.max(eb[i] - ea[i - rank]);
        }
        if v > worst.0 {
            worst = (v, Some(i + 1));
        }
    }
    let passed = worst.0 <= tol * norm;
    Ok(InterlacingCheck {
        rank,
        max_violation: worst.0,
        offending: if passed { None } else { worst.1 },
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterlacingSuite {
    pub trials: usize,
    pub failures: usize,
    pub max_violation: f64,
    /// Ranks drawn, in trial order.
    pub ranks: Vec<usize>,
}

/// Random symmetric `A` and rank-`m` positive semidefinite `L`, `m ∈ 1..=5`.
pub fn random_interlacing_suite(trials: usize, seed: u64, tol: f64) -> Result<InterlacingSuite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = InterlacingSuite {
        trials,
        failures: 0,
        max_violation: 0.0,
        ranks: Vec::with_capacity(trials),
    };
    for _ in 0..trials {
        let n = rng.gen_range(6..=16);
        let m = rng.gen_range(1..=5);
        let g = DenseMatrix::from_row_major(n, n, (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
        let a = g.add_scaled(0.5, &g.transpose(), 0.5)?;
        let cols: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let l = DenseMatrix::from_fn(n, n, |i, j| cols.iter().map(|c| c[i] * c[j]).sum());
        let r = lowrank_interlacing_check(&a, &l, tol)?;
        out.ranks.push(r.rank);
        out.max_violation = out.max_violation.max(r.max_violation);
        if !r.passed {
            out.failures += 1;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Schur complement with and without the low-rank control term

/// Dense `K = [F Bᵀ; B 0]` and `𝒬 = blkdiag(Q_v, αQ_p)` of a control system.
fn primal_operator(sys: &KktSystem) -> (DenseMatrix, DenseMatrix) {
    let (nv, np) = (sys.layout.n_v, sys.layout.n_p);
    let f = sys.f.to_dense();
    let b = sys.b.to_dense();
    let qv = sys.q_v.to_dense();
    let qp = sys.q_p.to_dense();
    let k = DenseMatrix::from_fn(nv + np, nv + np, |i, j| match (i < nv, j < nv) {
        (true, true) => f[(i, j)],
        (true, false) => b[(j - nv, i)],
        (false, true) => b[(i - nv, j)],
        (false, false) => 0.0,
    });
    let q = DenseMatrix::from_fn(nv + np, nv + np, |i, j| match (i < nv, j < nv) {
        (true, true) => qv[(i, j)],
        (false, false) => sys.alpha * qp[(i - nv, j - nv)],
        _ => 0.0,
    });
    (k, q)
}

/// `(S̃, S)` with `S̃ = K𝒬⁻¹Kᵀ` and `S = S̃ + β⁻¹ Q̂ Q_u⁻¹ Q̂ᵀ` (padded).
pub fn schur_pair(sys: &KktSystem) -> Result<(DenseMatrix, DenseMatrix)> {
    let (nv, np) = (sys.layout.n_v, sys.layout.n_p);
    let (k, q) = primal_operator(sys);
    let s_tilde = gram_inverse(&k, &q)?;
    let qh = sys.q_hat.to_dense();
    let pad = DenseMatrix::from_fn(nv + np, sys.layout.n_u, |i, j| if i < nv { qh[(i, j)] } else { 0.0 });
    let low = gram_inverse(&pad, &sys.q_u.to_dense())?;
    let s = s_tilde.add_scaled(1.0, &low, 1.0 / sys.beta)?;
    Ok((s_tilde, s))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchurInterlacingReport {
    pub level: usize,
    pub alpha: f64,
    pub beta: f64,
    pub n_u: usize,
    /// Spectrum of `S̃⁻¹S`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues below `1 - 1e-10`.
    pub below_one: usize,
    /// Largest eigenvalue once the top `n_u` are set aside.
    pub cluster_max: f64,
    /// The `n_u` largest eigenvalues, ascending.
    pub top: Vec<f64>,
}

/// Spectrum of `S̃⁻¹S` for the Stokes control system.
pub fn schur_interlacing_report(blocks: &ChannelBlocks, alpha: f64, beta: f64, cap: usize) -> Result<SchurInterlacingReport> {
    let sys = build_stokes_kkt(blocks, alpha, beta)?;
    check_cap(sys.layout.n_v + sys.layout.n_p, cap)?;
    let (s_tilde, s) = schur_pair(&sys)?;
    let spec = gen_sym_eig(&s, &s_tilde)?;
    let n_u = sys.layout.n_u;
    let ev = spec.eigenvalues;
    let split = ev.len().saturating_sub(n_u);
    Ok(SchurInterlacingReport {
        level: blocks.mesh.level,
        alpha,
        beta,
        n_u,
        below_one: ev.iter().filter(|&&v| v < 1.0 - 1e-10).count(),
        cluster_max: ev[..split].iter().copied().fold(f64::NEG_INFINITY, f64::max),
        top: ev[split..].to_vec(),
        eigenvalues: ev,
    })
}

/// `index,eigenvalue` rows.
pub fn spectrum_csv(eigenvalues: &[f64]) -> String {
    let mut s = String::from("index,eigenvalue\n");
    for (i, v) in eigenvalues.iter().enumerate() {
        let _ = writeln!(s, "{i},{v:.16e}");
    }
    s
}

// ---------------------------------------------------------------------------
// Ideal block-diagonal preconditioner

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchurChoice {
    /// `ℬ𝒜₁₁⁻¹ℬᵀ`.
    Exact,
    /// `K𝒬⁻¹Kᵀ`, the control term dropped.
    Dropped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealPreconditionedReport {
    pub spectrum: SpectrumReport,
    /// Largest distance of an eigenvalue to `{1, (1±√5)/2}`.
    pub max_distance: f64,
    /// Eigenvalues within `1e-6` of each of `(1-√5)/2, 1, (1+√5)/2`.
    pub counts: [usize; 3],
}

pub fn golden_values() -> [f64; 3] {
    let r5 = 5f64.sqrt();
    [(1.0 - r5) / 2.0, 1.0, (1.0 + r5) / 2.0]
}

/// Spectrum of `blkdiag(𝒜₁₁, S)⁻¹ 𝒜` for the Stokes control system.
pub fn murphy_ideal_check(
    blocks: &ChannelBlocks,
    alpha: f64,
    beta: f64,
    schur: SchurChoice,
    cap: usize,
) -> Result<IdealPreconditionedReport> {
    let sys = build_stokes_kkt(blocks, alpha, beta)?;
    let n = sys.dim();
    check_cap(n, cap)?;
    let l = &sys.layout;
    let n1 = l.primal_dim();
    let a = sys.matrix.to_dense();
    let first: Vec<usize> = (0..n1).collect();
    let second: Vec<usize> = (n1..n).collect();
    let a11 = a.select(&first, &first);
    let s = match schur {
        SchurChoice::Exact => gram_inverse(&a.select(&second, &first), &a11)?,
        SchurChoice::Dropped => schur_pair(&sys)?.0,
    };
    let p = DenseMatrix::from_fn(n, n, |i, j| match (i < n1, j < n1) {
        (true, true) => a11[(i, j)],
        (false, false) => s[(i - n1, j - n1)],
        _ => 0.0,
    });
    let spectrum = gen_sym_eig(&a, &p)?;
    let targets = golden_values();
    let dist = |v: f64| targets.iter().map(|t| (v - t).abs()).fold(f64::INFINITY, f64::min);
    let max_distance = spectrum.eigenvalues.iter().map(|&v| dist(v)).fold(0.0, f64::max);
    let mut counts = [0; 3];
    for &v in &spectrum.eigenvalues {
        for (c, t) in counts.iter_mut().zip(targets) {
            if (v - t).abs() < 1e-6 {
                *c += 1;
            }
        }
    }
    Ok(IdealPreconditionedReport {
        spectrum,
        max_distance,
        counts,
    })
}

// ---------------------------------------------------------------------------
// Symmetric part of convection-diffusion

/// Velocity of the converged Navier–Stokes control solution, computed with
/// dense inner solves.
pub fn navier_wind(blocks: &ChannelBlocks, nu: f64, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    let cfg = PicardConfig {
        inner: InnerSolver::Direct,
        ..PicardConfig::new(nu)
    };
    let (sol, _) = solve_navier_control(blocks, alpha, beta, nu, &cfg)?;
    Ok(sol.velocity().to_vec())
}

/// Largest `|(N+Nᵀ)ᵢⱼ|` over pairs where either node lies off the inflow
/// and outflow edges (`x = ±1`, corners included), for the scalar
/// convection matrix without boundary conditions.
pub fn convection_support_violation(blocks: &ChannelBlocks, wind: &[f64]) -> Result<f64> {
    let mesh = &blocks.mesh;
    let n = scalar_convection_raw(mesh, wind)?;
    let s = n.add_scaled(1.0, &n.transpose(), 1.0)?;
    let on_edge: Vec<bool> = (0..mesh.n_q2()).map(|k| (mesh.q2_coord(k).0.abs() - 1.0).abs() < 1e-12).collect();
    let mut worst = 0.0_f64;
    for i in 0..s.nrows() {
        for (j, v) in s.row_iter(i) {
            if !(on_edge[i] && on_edge[j]) {
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvectionRow {
    /// `None` for the full matrix.
    pub stride: Option<usize>,
    pub removed_nodes: usize,
    pub dim: usize,
    pub n_negative: usize,
    pub min: f64,
    pub max: f64,
    /// `max|λ| / min|λ|`.
    pub condition_number: f64,
    /// Smallest share of squared eigenvector mass on inflow unknowns among
    /// the negative modes.
    pub negative_inflow_fraction: Option<f64>,
    /// Median of the same share over the positive modes.
    pub median_positive_inflow_fraction: f64,
}

fn convection_row(f_sym: &SparseMatrix, keep: &[usize], inflow: &[bool], stride: Option<usize>, removed: usize) -> Result<ConvectionRow> {
    let m = f_sym.submatrix(keep, keep).to_dense();
    let eig = sym_eig_vectors(&m)?;
    let frac = |k: usize| {
        let col = eig.vectors.column(k);
        let tot: f64 = col.iter().map(|v| v * v).sum();
        let inf: f64 = col.iter().zip(keep).filter(|(_, &g)| inflow[g]).map(|(v, _)| v * v).sum();
        inf / tot
    };
    let spec = SpectrumReport::from_eigenvalues(eig.values.clone());
    let neg: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] < 0.0).collect();
    let mut pos: Vec<f64> = (0..eig.values.len()).filter(|&k| eig.values[k] > 0.0).map(frac).collect();
    pos.sort_by(f64::total_cmp);
    Ok(ConvectionRow {
        stride,
        removed_nodes: removed,
        dim: keep.len(),
        n_negative: spec.n_negative,
        min: spec.min,
        max: spec.max,
        condition_number: spec.condition_number,
        negative_inflow_fraction: (!neg.is_empty()).then(|| neg.iter().map(|&k| frac(k)).fold(1.0, f64::min)),
        median_positive_inflow_fraction: pos.get(pos.len() / 2).copied().unwrap_or(f64::NAN),
    })
}

/// Spectra of the symmetric part of `F = νA + N(wind)` and of its
/// restrictions with inflow nodes removed at each stride.
pub fn convection_symmetric_report(
    blocks: &ChannelBlocks,
    wind: &[f64],
    nu: f64,
    strides: &[usize],
    selection: InflowSelection,
    cap: usize,
) -> Result<Vec<ConvectionRow>> {
    let d = &blocks.dofs;
    check_cap(d.n_v, cap)?;
    let n = crate::fem::assemble_convection(&blocks.mesh, d, wind)?;
    let f_sym = blocks.a.add_scaled(nu, &n, 1.0)?.symmetric_part()?;
    let inflow: Vec<bool> = (0..d.n_v).map(|i| d.velocity_kind(i) == NodeKind::Inflow).collect();
    let all: Vec<usize> = (0..d.n_v).collect();
    let mut rows = vec![convection_row(&f_sym, &all, &inflow, None, 0)?];
    let layout = BlockLayout::new(d.n_v, d.n_p, d.n_u);
    for &k in strides {
        let plan = plan_permutation(&layout, d, k, 0, selection)?;
        rows.push(convection_row(&f_sym, &plan.kept, &inflow, Some(k), plan.selected_nodes.len())?);
    }
    Ok(rows)
}

pub fn convection_csv(rows: &[ConvectionRow]) -> String {
    let mut s = String::from(
        "removed,removed_nodes,dim,n_negative,lambda_min,lambda_max,condition_number,negative_inflow_fraction,median_positive_inflow_fraction\n",
    );
    for r in rows {
        let label = r.stride.map_or("none".to_string(), |k| format!("every_{k}"));
        let neg = r.negative_inflow_fraction.map_or(String::new(), |v| format!("{v:.6}"));
        let _ = writeln!(
            s,
            "{label},{},{},{},{:.10e},{:.10e},{:.10e},{neg},{:.6}",
            r.removed_nodes, r.dim, r.n_negative, r.min, r.max, r.condition_number, r.median_positive_inflow_fraction
        );
    }
    s
}

// ---------------------------------------------------------------------------
// Inexact Uzawa contraction

/// `max ‖K̃⁻¹b - K⁻¹b‖ / ‖K⁻¹b‖` over random right-hand sides for the
/// Stokes operator, with the multigrid-based Uzawa sweeps of `cfg`.
pub fn uzawa_contraction(blocks: &ChannelBlocks, cfg: &StackConfig, probes: usize, seed: u64, cap: usize) -> Result<f64> {
    let sys = build_stokes_kkt(blocks, 1.0, 1.0)?;
    let n = sys.layout.n_v + sys.layout.n_p;
    check_cap(n, cap)?;
    let (k, _) = primal_operator(&sys);
    let lu = crate::dense::Lu::new(&k)?;
    let schur = stokes_schur(&sys, blocks, cfg)?;
    let uz = schur.uzawa();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eta = 0.0_f64;
    for _ in 0..probes {
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let exact = lu.solve(&b)?;
        let approx = uz.apply(&b)?;
        let err: Vec<f64> = approx.iter().zip(&exact).map(|(a, e)| a - e).collect();
        eta = eta.max(norm2(&err) / norm2(&exact));
    }
    Ok(eta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BraessPeiskerReport {
    pub steps: usize,
    /// `‖𝒬^{1/2}(K̃⁻¹K - I)𝒬^{-1/2}‖₂`.
    pub eta: f64,
    /// Extreme eigenvalues of `(K̃⁻ᵀ𝒬K̃⁻¹)(K𝒬⁻¹Kᵀ)`.
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

/// Compares the Uzawa-based Schur approximation with `K𝒬⁻¹Kᵀ` against the
/// bounds `(1 ∓ η)²` implied by the contraction `η` of the sweeps.
pub fn braess_peisker_check(blocks: &ChannelBlocks, cfg: &StackConfig, alpha: f64, cap: usize) -> Result<BraessPeiskerReport> {
    let sys = build_stokes_kkt(blocks, alpha, 1.0)?;
    let n = sys.layout.n_v + sys.layout.n_p;
    check_cap(n, cap)?;
    let (k, q) = primal_operator(&sys);
    let schur = stokes_schur(&sys, blocks, cfg)?;
    let uz = schur.uzawa();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| uz.apply(&k.column(j))).collect::<Result<_>>()?;
    let mut e = DenseMatrix::from_columns(&cols)?;
    for i in 0..n {
        e[(i, i)] -= 1.0;
    }
    let m = e.transpose().matmul(&q.matmul(&e)?)?.symmetrized();
    let eta = gen_sym_eig(&m, &q)?.max.max(0.0).sqrt();
    let p = to_dense(&schur)?.symmetrized();
    let s = gram_inverse(&k, &q)?;
    let spec = product_spectrum(&p, &s)?;
    let lower = if eta < 1.0 { (1.0 - eta).powi(2) } else { 0.0 };
    let upper = (1.0 + eta).powi(2);
    let slack = 1e-8 * upper;
    Ok(BraessPeiskerReport {
        steps: cfg.uzawa_steps,
        eta,
        lambda_min: spec.min,
        lambda_max: spec.max,
        lower,
        upper,
        holds: spec.min >= lower - slack && spec.max <= upper + slack,
    })
}

// ---------------------------------------------------------------------------
// Multigrid

/// Spectrum of `M_MG⁻¹ A` for the scalar Laplacian at `level`.
pub fn multigrid_spectrum(level: usize, cycles: usize, smoothing: usize, cap: usize) -> Result<SpectrumReport> {
    let mg = Multigrid::new(level, cycles, smoothing)?;
    check_cap(mg.n(), cap)?;
    let p = to_dense(&mg)?.symmetrized();
    product_spectrum(&p, &mg.matrix().to_dense())
}
