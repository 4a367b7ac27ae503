//! Control solves, parameter sweeps and field export.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use channel_control::fem::vtk::{control_to_csv, fields_to_vtk};
use channel_control::fem::{assemble_all, build_mesh, ChannelBlocks};
use channel_control::kkt::{build_stokes_kkt, BlockLayout, InflowSelection};
use channel_control::krylov::{minres, MinresOptions, SolveReport};
use channel_control::picard::{solve_navier_control, InnerSolver, NonlinearReport, PicardConfig};
use channel_control::precond::{stokes_block_precond, StackConfig};
use channel_control::sparse::dot;
use channel_control::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::output::RunDir;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveKind {
    Stokes,
    Navier,
}

impl SolveKind {
    pub fn command(self) -> &'static str {
        match self {
            SolveKind::Stokes => "stokes-control",
            SolveKind::Navier => "ns-control",
        }
    }
}

/// Fully resolved settings of one control solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveSettings {
    pub level: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Viscosity; absent for Stokes.
    pub nu: Option<f64>,
    /// MINRES tolerance, and for Navier–Stokes also the nonlinear one.
    pub tol: f64,
    /// MINRES iteration limit per linear solve.
    pub maxit: usize,
    pub cheb_steps: usize,
    pub uzawa_steps: usize,
    pub mg_cycles: usize,
    pub stride: usize,
    pub selection: InflowSelection,
    pub max_outer: usize,
    pub inner: InnerSolver,
    pub allow_indefinite: bool,
    pub vtk: bool,
}

impl SolveSettings {
    /// Flags that reproduce these settings in a fresh process.
    pub fn to_args(&self) -> Vec<String> {
        let mut a = vec![
            "--level".to_string(),
            self.level.to_string(),
            "--alpha".into(),
            self.alpha.to_string(),
            "--beta".into(),
            self.beta.to_string(),
            "--tol".into(),
            self.tol.to_string(),
            "--maxit".into(),
            self.maxit.to_string(),
            "--cheb-steps".into(),
            self.cheb_steps.to_string(),
            "--uzawa-steps".into(),
            self.uzawa_steps.to_string(),
            "--mg-cycles".into(),
            self.mg_cycles.to_string(),
        ];
        if let Some(nu) = self.nu {
            a.extend([
                "--nu".to_string(),
                nu.to_string(),
                "--stride".into(),
                self.stride.to_string(),
                "--selection".into(),
                self.selection.to_string(),
                "--max-outer".into(),
                self.max_outer.to_string(),
                "--inner".into(),
                self.inner.to_string(),
            ]);
            if self.allow_indefinite {
                a.push("--allow-indefinite".into());
            }
        }
        if self.vtk {
            a.push("--vtk".into());
        }
        a
    }

    fn run_name(&self) -> String {
        let mut s = format!("level{}_beta{}", self.level, self.beta);
        if let Some(nu) = self.nu {
            s += &format!("_nu{}", nu_label(nu).replace('/', "over"));
        }
        s
    }
}

/// `1/20` for reciprocals of integers, the plain value otherwise.
pub fn nu_label(nu: f64) -> String {
    let r = 1.0 / nu;
    if (r - r.round()).abs() < 1e-9 * r && r >= 1.0 {
        format!("1/{}", r.round())
    } else {
        nu.to_string()
    }
}

pub fn blocks_at(level: usize) -> Result<ChannelBlocks> {
    let (mesh, dofs) = build_mesh(level)?;
    assemble_all(&mesh, &dofs)
}

#[derive(Debug, Serialize)]
struct StokesReport {
    level: usize,
    alpha: f64,
    beta: f64,
    dim: usize,
    iterations: usize,
    converged: bool,
    control_energy: f64,
    solve: SolveReport,
}

/// Writes `fields.vtk` and `control_profile.csv`; returns `uᵀQ_u u`.
fn write_fields(dir: &mut RunDir, blocks: &ChannelBlocks, x: &[f64]) -> Result<f64> {
    let d = &blocks.dofs;
    let layout = BlockLayout::new(d.n_v, d.n_p, d.n_u);
    if x.len() != layout.dim() {
        return Err(Error::Dimension(format!(
            "solution has length {}, level {} needs {}",
            x.len(),
            blocks.mesh.level,
            layout.dim()
        )));
    }
    let (v, p, u) = (&x[layout.range(0)], &x[layout.range(1)], &x[layout.range(2)]);
    dir.write("fields.vtk", &fields_to_vtk(&blocks.mesh, d, v, p)?)?;
    dir.write("control_profile.csv", &control_to_csv(&blocks.mesh, d, u)?)?;
    Ok(dot(u, &blocks.q_u.spmv(u, false)?))
}

fn stokes_row(level: usize, dim: usize, its: Option<usize>, energy: Option<f64>) -> String {
    match (its, energy) {
        (Some(k), Some(e)) => format!("{level:>5} {dim:>8} {k:>7} {e:>14.6e}"),
        _ => format!("{level:>5} {dim:>8} {:>7} {:>14}", "---", "---"),
    }
}

const STOKES_HEADER: &str = "level        N  MINRES  control_energy";

fn navier_row(nu: f64, level: usize, stride: usize, r: Option<(usize, f64, f64)>) -> String {
    let nu = nu_label(nu);
    match r {
        Some((k, avg, e)) => format!("{nu:>6} {level:>5} {stride:>6} {k:>6} {avg:>12.1} {e:>14.6e}"),
        None => format!("{nu:>6} {level:>5} {stride:>6} {:>6} {:>12} {:>14}", "---", "---", "---"),
    }
}

const NAVIER_HEADER: &str = "    nu level stride Picard  avg_MINRES  control_energy";

pub fn stokes_control(s: &SolveSettings, out: &Path) -> Result<()> {
    let mut dir = RunDir::create(out)?;
    let blocks = blocks_at(s.level)?;
    let sys = build_stokes_kkt(&blocks, s.alpha, s.beta)?;
    let cfg = StackConfig {
        cheb_steps: s.cheb_steps,
        uzawa_steps: s.uzawa_steps,
        mg_cycles: s.mg_cycles,
        ..StackConfig::stokes()
    };
    let m = stokes_block_precond(&sys, &blocks, &cfg)?;
    let opts = MinresOptions {
        tol: s.tol,
        maxit: s.maxit,
        ..MinresOptions::default()
    };
    let (x, rep) = minres(&sys.matrix, &m, &sys.rhs, &opts)?;
    let report = StokesReport {
        level: s.level,
        alpha: s.alpha,
        beta: s.beta,
        dim: sys.dim(),
        iterations: rep.iterations,
        converged: rep.converged,
        control_energy: sys.control_energy(&x),
        solve: rep,
    };
    dir.write_json("solve_report.json", &report)?;
    dir.write("minres_residuals.csv", &report.solve.residual_csv())?;
    dir.write_vector("solution.mtx", &x)?;
    if s.vtk {
        write_fields(&mut dir, &blocks, &x)?;
    }
    dir.finish(SolveKind::Stokes.command(), s, None)?;
    println!("{STOKES_HEADER}");
    println!("{}", stokes_row(s.level, report.dim, Some(report.iterations), Some(report.control_energy)));
    if !report.converged {
        return Err(Error::NonConvergence {
            iterations: report.iterations,
            detail: "MINRES".into(),
        });
    }
    Ok(())
}

pub fn navier_control(s: &SolveSettings, out: &Path) -> Result<()> {
    let nu = s.nu.ok_or_else(|| Error::Config("ns-control needs --nu".into()))?;
    let mut dir = RunDir::create(out)?;
    let blocks = blocks_at(s.level)?;
    let mut cfg = PicardConfig::new(nu);
    cfg.stack.cheb_steps = s.cheb_steps;
    cfg.stack.uzawa_steps = s.uzawa_steps;
    cfg.stack.mg_cycles = s.mg_cycles;
    cfg.stack.stride = s.stride;
    cfg.stack.selection = s.selection;
    cfg.stack.require_definite = !s.allow_indefinite;
    cfg.tol = s.tol;
    cfg.inner_tol = s.tol;
    cfg.inner_maxit = s.maxit;
    cfg.max_outer = s.max_outer;
    cfg.inner = s.inner;
    println!("{NAVIER_HEADER}");
    match solve_navier_control(&blocks, s.alpha, s.beta, nu, &cfg) {
        Ok((sol, report)) => {
            dir.write_json("nonlinear_report.json", &json!({ "status": "converged", "report": report }))?;
            dir.write("picard_residuals.csv", &picard_csv(&report))?;
            dir.write_vector("solution.mtx", &sol.x)?;
            if s.vtk {
                write_fields(&mut dir, &blocks, &sol.x)?;
            }
            dir.finish(SolveKind::Navier.command(), s, None)?;
            let r = (report.picard_iterations, report.average_minres, report.control_energy);
            println!("{}", navier_row(nu, s.level, s.stride, Some(r)));
            Ok(())
        }
        Err(e) => {
            let status = match e {
                Error::Divergence(_) => "diverged",
                Error::NonConvergence { .. } => "not_converged",
                _ => "failed",
            };
            dir.write_json("nonlinear_report.json", &json!({ "status": status, "error": e.to_string() }))?;
            dir.finish(SolveKind::Navier.command(), s, None)?;
            println!("{}", navier_row(nu, s.level, s.stride, None));
            Err(e)
        }
    }
}

fn picard_csv(r: &NonlinearReport) -> String {
    let mut s = String::from("outer,minres_iterations,relative_residual\n");
    for (k, (m, res)) in r.minres_iterations.iter().zip(&r.residual_history).enumerate() {
        s += &format!("{k},{m},{res:e}\n");
    }
    s
}

/// Runs every setting in its own `chanctl` process, at most `jobs` at a
/// time, and writes `sweep_summary.csv`. Returns the first nonzero child
/// exit code, or zero.
pub fn sweep(kind: SolveKind, runs: &[SolveSettings], out: &Path, jobs: usize) -> Result<i32> {
    let exe = std::env::current_exe()?;
    std::fs::create_dir_all(out)?;
    let dirs: Vec<PathBuf> = runs.iter().map(|r| out.join(r.run_name())).collect();
    let codes = Mutex::new(vec![0; runs.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|sc| {
        for _ in 0..jobs.clamp(1, runs.len().max(1)) {
            sc.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= runs.len() {
                    break;
                }
                let status = Command::new(&exe)
                    .arg(kind.command())
                    .args(runs[i].to_args())
                    .arg("--out")
                    .arg(&dirs[i])
                    .stdout(Stdio::null())
                    .stderr(Stdio::null())
                    .status();
                let code = status.ok().and_then(|s| s.code()).unwrap_or(1);
                codes.lock().expect("sweep bookkeeping")[i] = code;
            });
        }
    });
    let codes = codes.into_inner().expect("sweep bookkeeping");
    let mut csv = String::new();
    match kind {
        SolveKind::Stokes => {
            csv += "level,beta,exit_code,dim,minres_iterations,control_energy\n";
            println!("{STOKES_HEADER}");
        }
        SolveKind::Navier => {
            csv += "level,nu,beta,stride,exit_code,picard_iterations,average_minres,control_energy\n";
            println!("{NAVIER_HEADER}");
        }
    }
    for ((s, dir), code) in runs.iter().zip(&dirs).zip(&codes) {
        match kind {
            SolveKind::Stokes => {
                let r = read_json(&dir.join("solve_report.json"));
                let dim = r.as_ref().and_then(|r| r["dim"].as_u64()).unwrap_or(0) as usize;
                let its = r.as_ref().and_then(|r| r["iterations"].as_u64()).map(|k| k as usize);
                let e = r.as_ref().and_then(|r| r["control_energy"].as_f64());
                csv += &format!("{},{},{code},{dim},{},{}\n", s.level, s.beta, opt(its), opt(e));
                println!("{}", stokes_row(s.level, dim, its, e));
            }
            SolveKind::Navier => {
                let r = read_json(&dir.join("nonlinear_report.json"))
                    .filter(|r| r["status"] == "converged")
                    .map(|r| r["report"].clone());
                let row = r.as_ref().and_then(|r| {
                    Some((
                        r["picard_iterations"].as_u64()? as usize,
                        r["average_minres"].as_f64()?,
                        r["control_energy"].as_f64()?,
                    ))
                });
                let nu = s.nu.unwrap_or(f64::NAN);
                let (k, avg, e) = (row.map(|r| r.0), row.map(|r| r.1), row.map(|r| r.2));
                csv += &format!(
                    "{},{},{},{},{code},{},{},{}\n",
                    s.level,
                    nu,
                    s.beta,
                    s.stride,
                    opt(k),
                    opt(avg),
                    opt(e)
                );
                println!("{}", navier_row(nu, s.level, s.stride, row));
            }
        }
    }
    std::fs::write(out.join("sweep_summary.csv"), csv)?;
    Ok(codes.into_iter().find(|&c| c != 0).unwrap_or(0))
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn read_json(path: &Path) -> Option<serde_json::Value> {
    serde_json::from_str(&std::fs::read_to_string(path).ok()?).ok()
}

/// Reads a finished solve from `from` and writes VTK fields and the
/// control profile to `out`. Returns the control energy.
pub fn export_fields(from: &Path, out: &Path) -> Result<f64> {
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(from.join("manifest.json"))?)?;
    let level = manifest["settings"]["level"]
        .as_u64()
        .ok_or_else(|| Error::Parse(format!("{} records no level", from.join("manifest.json").display())))?;
    let x = channel_control::market::read_vector(from.join("solution.mtx"))?;
    let blocks = blocks_at(level as usize)?;
    let mut dir = RunDir::create(out)?;
    let energy = write_fields(&mut dir, &blocks, &x)?;
    dir.finish("export-fields", &json!({ "from": from, "level": level }), None)?;
    println!("control energy {energy:.6e}");
    Ok(energy)
}
