//! End-to-end checks of the `nlkpp` binary: subcommands, file formats,
//! exit codes.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlkpp"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nlkpp-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn eigen_prints_a_csv_row_and_dumps_phi() {
    let dir = tmpdir("eigen");
    let phi = dir.join("phi.csv");
    let out = bin()
        .args([
            "eigen", "--kernel", "uniform", "--sigma", "0.1", "--m", "2", "--n", "165",
            "--domain", "1.0", "--coef", "2 + sin(2*pi*x)", "--boundary", "neumann",
            "--dump-phi",
        ])
        .arg(&phi)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lambda,residual,lower_bound,upper_bound,solver_gap,eigenfunction_criterion,degenerate"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let lambda: f64 = row[0].parse().unwrap();
    assert!(lambda < -2.0 && lambda > -3.0, "lambda {lambda}");

    let dumped = fs::read_to_string(&phi).unwrap();
    assert!(dumped.starts_with("x,value"));
    assert_eq!(dumped.lines().count(), 166);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn stationary_constant_run() {
    let out = bin()
        .args([
            "stationary", "--sigma", "0.5", "--m", "0", "--n", "33", "--coef", "2",
            "--limit", "abar",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("true,"));
    let gap_linf: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!(gap_linf < 1e-8);
}

#[test]
fn evolve_emits_per_time_rows() {
    let out = bin()
        .args([
            "evolve", "--sigma", "0.5", "--m", "0", "--n", "33", "--coef", "1",
            "--u0", "0.5", "--T", "2.0", "--out-times", "10", "--ref", "logistic",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), "t,gap_linf,mass");
    assert_eq!(text.lines().count(), 12); // header + t=0 + 10 outputs
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    let t: f64 = last[0].parse().unwrap();
    assert!((t - 2.0).abs() < 1e-12);
    let gap: f64 = last[1].parse().unwrap();
    assert!(gap < 1e-2, "constant-cell logistic gap {gap}");
}

#[test]
fn sweep_and_rate_fit_round_trip() {
    let dir = tmpdir("sweep");
    let cfg = dir.join("rate.cfg");
    fs::write(
        &cfg,
        "task = evolve-rate\ncoef = 2 + sin(2*pi*x)\nsigma = 20, 40, 80\nm = 0\nn = 64\n\
         T = 0.5\nu0 = 1 + 0.5*cos(pi*x)\nreference = logistic-discrete\n",
    )
    .unwrap();
    let csv = dir.join("rate.csv");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("sigma,m,n,sup_error,dt,steps,mass_residual,flag"));
    assert_eq!(table.lines().count(), 4);

    let out = bin()
        .args(["rate-fit", "--in"])
        .arg(&csv)
        .args(["--expect-max-slope", "-0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("verdict:"));
    assert!(text.contains("ok"));
    let slope: f64 = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((slope + 1.0).abs() < 0.1, "slope {slope}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_exit_codes_reflect_cell_flags() {
    let dir = tmpdir("flags");
    // abar limit with a mean-zero coefficient: every cell is refused.
    let cfg = dir.join("bad.cfg");
    fs::write(
        &cfg,
        "task = stationary\ncoef = sin(2*pi*x)\nsigma = 0.5\nm = 0\nn = 48\nlimit = abar\n",
    )
    .unwrap();
    let out = bin().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Unknown key: configuration error, exit 1.
    let cfg = dir.join("typo.cfg");
    fs::write(&cfg, "task = eigen\ncoef = 1\nsigma = 0.5\nm = 0\nn = 48\nsigmas = 1\n").unwrap();
    let out = bin().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 6"), "stderr: {err}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn coefficient_can_come_from_a_field_file() {
    let dir = tmpdir("coef-file");
    // Dump a field, then feed it back as the coefficient.
    let field = dir.join("a.csv");
    let out = bin()
        .args([
            "stationary", "--sigma", "0.4", "--m", "0", "--n", "41", "--coef", "1.5",
            "--out",
        ])
        .arg(&field)
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = bin()
        .args(["eigen", "--sigma", "0.4", "--m", "0", "--n", "41", "--coef"])
        .arg(&field)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let lambda: f64 = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((lambda + 1.5).abs() < 1e-8, "lambda {lambda}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn resolution_violation_names_the_required_n() {
    let out = bin()
        .args(["eigen", "--sigma", "0.05", "--m", "0", "--n", "16", "--coef", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("resolution error"), "stderr: {err}");
    assert!(err.contains("n >= 80"), "stderr: {err}");
}
