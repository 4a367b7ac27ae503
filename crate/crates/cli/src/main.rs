//! `chanctl`: solves and analyses for boundary control of channel flow.
//!
//! Every subcommand writes its artifacts and a `manifest.json` into the
//! directory given by `--out`. Settings come from flags, then from the
//! `key=value` file given by `--config`, then from built-in defaults.

mod analyze;
mod config;
mod output;
mod solve;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use channel_control::analysis::SchurChoice;
use channel_control::dense::DEFAULT_DENSE_CAP;
use channel_control::kkt::InflowSelection;
use channel_control::picard::InnerSolver;
use channel_control::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{parse_from_str, parse_real, FileSettings};
use solve::{SolveKind, SolveSettings};

/// Exit status of a run. Usage errors exit with 2 (from the argument parser).
mod exit {
    pub const FAILURE: u8 = 1;
    pub const CONFIG: u8 = 3;
    pub const CAP: u8 = 4;
    pub const DIVERGENCE: u8 = 5;
    pub const NO_CONVERGENCE: u8 = 6;
    pub const IO: u8 = 7;
    pub const CHECK_FAILED: u8 = 8;
}

const EXIT_CODES: &str = "Exit codes: 0 success, 2 usage, 3 invalid configuration, 4 dense size cap exceeded, \
5 divergence, 6 no convergence, 7 missing or unreadable files, 8 check failed, 1 other errors.";

#[derive(Parser, Debug)]
#[command(name = "chanctl", version, about = "Boundary control of Stokes and Navier-Stokes channel flow", after_help = EXIT_CODES)]
struct Cli {
    /// `key=value` settings file; keys are long flag names, flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Stokes boundary control with block-diagonal preconditioned MINRES.
    StokesControl(SolveArgs),
    /// Navier-Stokes boundary control by Picard iteration.
    NsControl(SolveArgs),
    /// Eigenvalue bounds of the diagonally scaled element mass matrices.
    MassBounds,
    /// Element mass bounds with nodes removed.
    ElementElim(ElimArgs),
    /// Spectra of Chebyshev-preconditioned mass matrices.
    Chebyshev(GridArgs),
    /// Spectrum of the Schur complement against its control-free approximation.
    SchurSpectrum(GridArgs),
    /// Symmetric part of convection-diffusion at a converged wind.
    Convection(ConvectionArgs),
    /// Spectrum of the ideally preconditioned Stokes control system.
    Murphy(MurphyArgs),
    /// Randomised low-rank interlacing checks.
    Interlacing(InterlacingArgs),
    /// VTK fields and control profile of a finished solve.
    ExportFields(ExportArgs),
}

#[derive(Args, Debug, Default)]
struct SolveArgs {
    /// Refinement level; a comma-separated list runs a sweep.
    #[arg(long, value_delimiter = ',')]
    level: Vec<usize>,
    /// Pressure regularisation.
    #[arg(long, value_parser = parse_real)]
    alpha: Option<f64>,
    /// Control regularisation; a list runs a sweep.
    #[arg(long, value_delimiter = ',', value_parser = parse_real)]
    beta: Vec<f64>,
    /// Viscosity, e.g. `1/20`; a list runs a sweep.
    #[arg(long, value_delimiter = ',', value_parser = parse_real)]
    nu: Vec<f64>,
    /// Move every `stride`-th inflow node into the control block.
    #[arg(long)]
    stride: Option<usize>,
    /// Inflow nodes eligible for moving: influx, vertices, midpoints, all.
    #[arg(long, value_parser = parse_from_str::<InflowSelection>)]
    selection: Option<InflowSelection>,
    /// Relative tolerance.
    #[arg(long, value_parser = parse_real)]
    tol: Option<f64>,
    /// MINRES iteration limit per linear solve.
    #[arg(long)]
    maxit: Option<usize>,
    #[arg(long)]
    cheb_steps: Option<usize>,
    #[arg(long)]
    uzawa_steps: Option<usize>,
    #[arg(long)]
    mg_cycles: Option<usize>,
    /// Picard iteration limit.
    #[arg(long)]
    max_outer: Option<usize>,
    /// Linear solver for the Oseen systems: minres or direct.
    #[arg(long, value_parser = parse_from_str::<InnerSolver>)]
    inner: Option<InnerSolver>,
    /// Run the Uzawa sweeps even when the reduced velocity block is indefinite.
    #[arg(long)]
    allow_indefinite: bool,
    /// Also write VTK fields and the control profile.
    #[arg(long)]
    vtk: bool,
    /// Parallel runs in a sweep.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct ElimArgs {
    /// Removed element nodes, numbered 1-9 row by row from the lower left.
    #[arg(long, value_delimiter = ',')]
    pattern: Vec<usize>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long)]
    level: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    alpha: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    beta: Option<f64>,
    #[arg(long)]
    cheb_steps: Option<usize>,
    /// Largest dimension of a dense eigenproblem.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args, Debug)]
struct ConvectionArgs {
    #[arg(long)]
    level: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    nu: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    alpha: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    beta: Option<f64>,
    /// Removal strides to compare with the full matrix.
    #[arg(long, value_delimiter = ',')]
    strides: Vec<usize>,
    #[arg(long, value_parser = parse_from_str::<InflowSelection>)]
    selection: Option<InflowSelection>,
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchurArg {
    Exact,
    Dropped,
}

#[derive(Args, Debug)]
struct MurphyArgs {
    #[arg(long)]
    level: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    alpha: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    beta: Option<f64>,
    /// Schur complement in the preconditioner.
    #[arg(long, value_enum)]
    schur: Option<SchurArg>,
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args, Debug)]
struct InterlacingArgs {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_real)]
    tol: Option<f64>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// Directory of a finished stokes-control or ns-control run.
    #[arg(long)]
    from: PathBuf,
}

fn solve_settings(kind: SolveKind, a: SolveArgs, f: &FileSettings) -> Result<(Vec<SolveSettings>, usize)> {
    let stokes = kind == SolveKind::Stokes;
    let levels = f.pick_list(a.level, "level", vec![3], parse_from_str)?;
    let betas = f.pick_list(a.beta, "beta", vec![if stokes { 1e-3 } else { 1.0 }], parse_real)?;
    let nus = if stokes { vec![] } else { f.pick_list(a.nu, "nu", vec![0.1], parse_real)? };
    let base = SolveSettings {
        level: 0,
        alpha: f.pick(a.alpha, "alpha", 1e-3, parse_real)?,
        beta: 0.0,
        nu: None,
        tol: f.pick(a.tol, "tol", 1e-6, parse_real)?,
        maxit: f.pick(a.maxit, "maxit", if stokes { 1000 } else { 20000 }, parse_from_str)?,
        cheb_steps: f.pick(a.cheb_steps, "cheb-steps", 20, parse_from_str)?,
        uzawa_steps: f.pick(a.uzawa_steps, "uzawa-steps", if stokes { 5 } else { 30 }, parse_from_str)?,
        mg_cycles: f.pick(a.mg_cycles, "mg-cycles", 5, parse_from_str)?,
        stride: f.pick(a.stride, "stride", 1, parse_from_str)?,
        selection: f.pick(a.selection, "selection", InflowSelection::default(), parse_from_str)?,
        max_outer: f.pick(a.max_outer, "max-outer", 40, parse_from_str)?,
        inner: f.pick(a.inner, "inner", InnerSolver::default(), parse_from_str)?,
        allow_indefinite: a.allow_indefinite || f.pick(None, "allow-indefinite", false, parse_from_str)?,
        vtk: a.vtk || f.pick(None, "vtk", false, parse_from_str)?,
    };
    let jobs = f.pick(a.jobs, "jobs", 1, parse_from_str)?;
    let mut runs = Vec::new();
    for &level in &levels {
        for &beta in &betas {
            if stokes {
                runs.push(SolveSettings { level, beta, ..base.clone() });
            }
            for &nu in &nus {
                runs.push(SolveSettings {
                    level,
                    beta,
                    nu: Some(nu),
                    ..base.clone()
                });
            }
        }
    }
    Ok((runs, jobs))
}

fn run(cli: Cli) -> Result<u8> {
    let f = FileSettings::load(cli.config.as_deref())?;
    let given_out = match cli.out {
        Some(o) => Some(o),
        None => f.pick(None, "out", None, |s| Ok(Some(PathBuf::from(s))))?,
    };
    let out = given_out.clone().unwrap_or_else(|| PathBuf::from("chanctl-out"));
    let cap = |c: Option<usize>| f.pick(c, "cap", DEFAULT_DENSE_CAP, parse_from_str);
    let verdict = match cli.command {
        Cmd::StokesControl(a) => return solve_command(SolveKind::Stokes, a, &f, &out),
        Cmd::NsControl(a) => return solve_command(SolveKind::Navier, a, &f, &out),
        Cmd::MassBounds => analyze::run_mass_bounds(&out)?,
        Cmd::ElementElim(a) => {
            let patterns = if a.pattern.is_empty() { vec![] } else { vec![a.pattern] };
            analyze::run_element_elim(&patterns, &out)?
        }
        Cmd::Chebyshev(a) => analyze::run_chebyshev(
            f.pick(a.level, "level", 3, parse_from_str)?,
            f.pick(a.cheb_steps, "cheb-steps", 20, parse_from_str)?,
            cap(a.cap)?,
            &out,
        )?,
        Cmd::SchurSpectrum(a) => analyze::run_schur_spectrum(
            f.pick(a.level, "level", 3, parse_from_str)?,
            f.pick(a.alpha, "alpha", 1e-3, parse_real)?,
            f.pick(a.beta, "beta", 1e-3, parse_real)?,
            cap(a.cap)?,
            &out,
        )?,
        Cmd::Convection(a) => {
            let strides = f.pick_list(a.strides, "strides", vec![1, 2, 4], parse_from_str)?;
            analyze::run_convection(
                f.pick(a.level, "level", 4, parse_from_str)?,
                f.pick(a.nu, "nu", 0.05, parse_real)?,
                f.pick(a.alpha, "alpha", 1e-3, parse_real)?,
                f.pick(a.beta, "beta", 1.0, parse_real)?,
                &strides,
                f.pick(a.selection, "selection", InflowSelection::default(), parse_from_str)?,
                cap(a.cap)?,
                &out,
            )?
        }
        Cmd::Murphy(a) => {
            let schur = match a.schur {
                Some(SchurArg::Dropped) => SchurChoice::Dropped,
                Some(SchurArg::Exact) => SchurChoice::Exact,
                None => f.pick(None, "schur", SchurChoice::Exact, |s| match s {
                    "exact" => Ok(SchurChoice::Exact),
                    "dropped" => Ok(SchurChoice::Dropped),
                    other => Err(format!("unknown Schur choice '{other}'")),
                })?,
            };
            analyze::run_murphy(
                f.pick(a.level, "level", 2, parse_from_str)?,
                f.pick(a.alpha, "alpha", 1e-3, parse_real)?,
                f.pick(a.beta, "beta", 1e-3, parse_real)?,
                schur,
                cap(a.cap)?,
                &out,
            )?
        }
        Cmd::Interlacing(a) => analyze::run_interlacing(
            f.pick(a.trials, "trials", 50, parse_from_str)?,
            f.pick(a.seed, "seed", 1, parse_from_str)?,
            f.pick(a.tol, "tol", 1e-10, parse_real)?,
            &out,
        )?,
        Cmd::ExportFields(a) => {
            let dest = given_out.unwrap_or_else(|| a.from.join("fields"));
            solve::export_fields(&a.from, &dest)?;
            true
        }
    };
    Ok(if verdict { 0 } else { exit::CHECK_FAILED })
}

fn solve_command(kind: SolveKind, a: SolveArgs, f: &FileSettings, out: &Path) -> Result<u8> {
    let (runs, jobs) = solve_settings(kind, a, f)?;
    match runs.as_slice() {
        [one] => {
            match kind {
                SolveKind::Stokes => solve::stokes_control(one, out)?,
                SolveKind::Navier => solve::navier_control(one, out)?,
            }
            Ok(0)
        }
        _ => {
            let code = solve::sweep(kind, &runs, out, jobs)?;
            Ok(u8::try_from(code).unwrap_or(exit::FAILURE))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse(_) => exit::CONFIG,
        Error::Cap { .. } => exit::CAP,
        Error::Divergence(_) => exit::DIVERGENCE,
        Error::NonConvergence { .. } => exit::NO_CONVERGENCE,
        Error::Io(_) | Error::Json(_) => exit::IO,
        _ => exit::FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("chanctl: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
