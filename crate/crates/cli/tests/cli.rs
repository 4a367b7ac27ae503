//! End-to-end runs of the `chanctl` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn chanctl(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chanctl"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("chanctl runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Rows of a CSV file without its header, split at commas.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    assert_eq!(code(&chanctl(&out, &["stokes-control", "--bogus"])), 2);
    assert_eq!(code(&chanctl(&out, &["stokes-control", "--level", "1"])), 3);
    assert_eq!(code(&chanctl(&out, &["stokes-control", "--beta=-1"])), 3);
    assert_eq!(code(&chanctl(&out, &["chebyshev", "--level", "3", "--cap", "10"])), 4);
    let o = chanctl(&out, &["ns-control", "--level", "2", "--nu", "1/30"]);
    assert_eq!(code(&o), 5, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("nonlinear_report.json"));
    assert_eq!(report["status"], "diverged");
    assert_eq!(code(&chanctl(&out, &["export-fields", "--from", "/nonexistent/run"])), 7);
}

#[test]
fn mass_bounds_are_written_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&chanctl(&a, &["mass-bounds"])), 0);
    assert_eq!(code(&chanctl(&b, &["mass-bounds"])), 0);
    let rows = csv_rows(&a.join("mass_bounds.csv"));
    let want = [(0.25, 1.5625), (0.25, 2.25), (0.5, 1.25)];
    assert_eq!(rows.len(), 3);
    for (r, (lo, hi)) in rows.iter().zip(want) {
        assert!((r[1].parse::<f64>().unwrap() - lo).abs() < 1e-12);
        assert!((r[2].parse::<f64>().unwrap() - hi).abs() < 1e-12);
    }
    let read = |d: &Path| std::fs::read(d.join("mass_bounds.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let manifest = read_json(&a.join("manifest.json"));
    assert_eq!(manifest["command"], "mass-bounds");
    assert_eq!(manifest["program"], "chanctl");
    assert!(manifest["outputs"].as_array().unwrap().iter().any(|f| f == "mass_bounds.csv"));
}

#[test]
fn element_elimination_of_three_nodes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chanctl(tmp.path(), &["element-elim", "--pattern", "1,4,7"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&tmp.path().join("element_elimination_bounds.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "1 4 7");
    assert!((rows[0][1].parse::<f64>().unwrap() - 0.375).abs() < 1e-4);
    assert!((rows[0][2].parse::<f64>().unwrap() - 1.5625).abs() < 1e-4);
}

#[test]
fn interlacing_suite_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chanctl(tmp.path(), &["interlacing", "--trials", "50", "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(csv_rows(&tmp.path().join("interlacing_trials.csv")).len(), 50);
    assert!(tmp.path().join("interlacing_summary.csv").exists());
}

#[test]
fn stokes_solve_then_export() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("solve");
    let o = chanctl(&run, &["stokes-control", "--level", "2", "--beta", "1e-2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&run.join("solve_report.json"));
    assert_eq!(report["converged"], true);
    assert_eq!(report["dim"], 128);
    let energy = report["control_energy"].as_f64().unwrap();
    assert!(energy > 0.0);
    let residuals = csv_rows(&run.join("minres_residuals.csv"));
    assert_eq!(residuals.len(), report["iterations"].as_u64().unwrap() as usize + 1);

    let o = Command::new(env!("CARGO_BIN_EXE_chanctl"))
        .args(["export-fields", "--from", run.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let fields = run.join("fields");
    let vtk = std::fs::read_to_string(fields.join("fields.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile"));
    let profile = csv_rows(&fields.join("control_profile.csv"));
    assert_eq!(profile.len(), 5);
    assert!(profile.iter().all(|r| r.len() == 3));
    let printed = String::from_utf8_lossy(&o.stdout);
    let shown: f64 = printed.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((shown - energy).abs() <= 1e-6 * energy, "{shown} {energy}");
    // the solve manifest is left in place
    assert_eq!(read_json(&run.join("manifest.json"))["command"], "stokes-control");
}

#[test]
fn flags_override_the_settings_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("settings.txt");
    std::fs::write(&cfg, "# run settings\nlevel = 3\nbeta = 1/100\nmaxit = 500\n").unwrap();
    let run = tmp.path().join("run");
    let o = Command::new(env!("CARGO_BIN_EXE_chanctl"))
        .args(["--config", cfg.to_str().unwrap(), "--out", run.to_str().unwrap()])
        .args(["stokes-control", "--level", "2"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let settings = &read_json(&run.join("manifest.json"))["settings"];
    assert_eq!(settings["level"], 2);
    assert_eq!(settings["beta"], 0.01);
    assert_eq!(settings["maxit"], 500);
}

#[test]
fn sweep_runs_each_setting() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chanctl(tmp.path(), &["stokes-control", "--level", "2", "--beta", "1e-1,1e-2", "--jobs", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&tmp.path().join("sweep_summary.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[2] == "0"));
    let e: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(e[1] > e[0]);
    for name in ["level2_beta0.1", "level2_beta0.01"] {
        assert!(tmp.path().join(name).join("solve_report.json").exists(), "{name}");
    }
}
