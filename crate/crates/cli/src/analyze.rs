//! Spectral analyses, each writing one CSV named after its content.

use std::fmt::Write as _;
use std::path::Path;

use channel_control::analysis::{
    self, convection_csv, convection_support_violation, element_elimination_csv, mass_bounds, mass_bounds_csv,
    mass_spectrum_report, murphy_ideal_check, navier_wind, random_interlacing_suite, schur_interlacing_report,
    spectrum_csv, MassKind, SchurChoice, ELIMINATION_PATTERNS,
};
use channel_control::kkt::InflowSelection;
use channel_control::Result;
use serde_json::json;

use crate::output::RunDir;
use crate::solve::{blocks_at, nu_label};

/// Result of an analysis that carries a pass/fail verdict.
pub type Verdict = bool;

pub fn run_mass_bounds(out: &Path) -> Result<Verdict> {
    let mut dir = RunDir::create(out)?;
    let rows = mass_bounds()?;
    let csv = mass_bounds_csv(&rows);
    dir.write("mass_bounds.csv", &csv)?;
    dir.finish("mass-bounds", &json!({}), None)?;
    print!("{csv}");
    Ok(true)
}

pub fn run_element_elim(patterns: &[Vec<usize>], out: &Path) -> Result<Verdict> {
    let mut dir = RunDir::create(out)?;
    let default: Vec<Vec<usize>> = ELIMINATION_PATTERNS.iter().map(|p| p.to_vec()).collect();
    let patterns = if patterns.is_empty() { &default } else { patterns };
    let refs: Vec<&[usize]> = patterns.iter().map(Vec::as_slice).collect();
    let csv = element_elimination_csv(&refs)?;
    dir.write("element_elimination_bounds.csv", &csv)?;
    dir.finish("element-elim", &json!({ "patterns": patterns }), None)?;
    print!("{csv}");
    Ok(true)
}

pub fn run_chebyshev(level: usize, steps: usize, cap: usize, out: &Path) -> Result<Verdict> {
    let mut dir = RunDir::create(out)?;
    let blocks = blocks_at(level)?;
    let mut csv = String::from("matrix,steps,lambda_min,lambda_max,condition_number\n");
    for kind in MassKind::ALL {
        let r = mass_spectrum_report(&blocks, kind, steps, cap)?;
        let _ = writeln!(csv, "{},{steps},{:.16e},{:.16e},{:.16e}", kind.name(), r.min, r.max, r.condition_number);
    }
    dir.write("chebyshev_mass_spectra.csv", &csv)?;
    dir.finish("chebyshev", &json!({ "level": level, "cheb_steps": steps, "cap": cap }), None)?;
    print!("{csv}");
    Ok(true)
}

pub fn run_schur_spectrum(level: usize, alpha: f64, beta: f64, cap: usize, out: &Path) -> Result<Verdict> {
    let mut dir = RunDir::create(out)?;
    let blocks = blocks_at(level)?;
    let r = schur_interlacing_report(&blocks, alpha, beta, cap)?;
    dir.write("schur_spectrum.csv", &spectrum_csv(&r.eigenvalues))?;
    dir.finish(
        "schur-spectrum",
        &json!({ "level": level, "alpha": alpha, "beta": beta, "cap": cap }),
        None,
    )?;
    println!(
        "{} eigenvalues, {} below 1, {} outliers; cluster in [1, {:.6}], largest {:.6e}",
        r.eigenvalues.len(),
        r.below_one,
        r.n_u,
        r.cluster_max,
        r.top.last().copied().unwrap_or(f64::NAN)
    );
    Ok(r.below_one == 0)
}

#[allow(clippy::too_many_arguments)]
pub fn run_convection(
    level: usize,
    nu: f64,
    alpha: f64,
    beta: f64,
    strides: &[usize],
    selection: InflowSelection,
    cap: usize,
    out: &Path,
) -> Result<Verdict> {
    let mut dir = RunDir::create(out)?;
    let blocks = blocks_at(level)?;
    let wind = navier_wind(&blocks, nu, alpha, beta)?;
    let rows = analysis::convection_symmetric_report(&blocks, &wind, nu, strides, selection, cap)?;
    let csv = convection_csv(&rows);
    dir.write("convection_symmetric_part.csv", &csv)?;
    dir.finish(
        "convection",
        &json!({
            "level": level, "nu": nu, "alpha": alpha, "beta": beta,
            "strides": strides, "selection": selection, "cap": cap,
        }),
        None,
    )?;
    let support = convection_support_violation(&blocks, &wind)?;
    println!("nu = {}, level {level}; convection entries off the open edges: {support:.3e}", nu_label(nu));
    print!("{csv}");
    Ok(true)
}

pub fn run_murphy(level: usize, alpha: f64, beta: f64, schur: SchurChoice, cap: usize, out: &Path) -> Result<Verdict> {
    let mut dir = RunDir::create(out)?;
    let blocks = blocks_at(level)?;
    let r = murphy_ideal_check(&blocks, alpha, beta, schur, cap)?;
    dir.write("ideal_preconditioned_spectrum.csv", &spectrum_csv(&r.spectrum.eigenvalues))?;
    dir.finish(
        "murphy",
        &json!({ "level": level, "alpha": alpha, "beta": beta, "schur": schur, "cap": cap }),
        None,
    )?;
    println!(
        "{} eigenvalues; counts near (1-√5)/2, 1, (1+√5)/2: {:?}; largest distance {:.3e}",
        r.spectrum.len(),
        r.counts,
        r.max_distance
    );
    Ok(true)
}

pub fn run_interlacing(trials: usize, seed: u64, tol: f64, out: &Path) -> Result<Verdict> {
    let mut dir = RunDir::create(out)?;
    let r = random_interlacing_suite(trials, seed, tol)?;
    let mut csv = String::from("trial,rank\n");
    for (k, m) in r.ranks.iter().enumerate() {
        let _ = writeln!(csv, "{k},{m}");
    }
    dir.write("interlacing_trials.csv", &csv)?;
    dir.write(
        "interlacing_summary.csv",
        &format!("trials,failures,max_violation\n{},{},{:e}\n", r.trials, r.failures, r.max_violation),
    )?;
    dir.finish("interlacing", &json!({ "trials": trials, "tol": tol }), Some(seed))?;
    let pass = r.failures == 0;
    println!(
        "{}: {} trials, {} failures, largest violation {:.3e}",
        if pass { "pass" } else { "FAIL" },
        r.trials,
        r.failures,
        r.max_violation
    );
    Ok(pass)
}
