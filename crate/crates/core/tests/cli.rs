//! The `singopt` binary on the canned configs: exit codes, output files and
//! a few trace values.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_singopt"))
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn run_config(config: &Path, out: &Path) -> (i32, String) {
    let o = bin().arg("run").arg("--config").arg(config).arg("--out").arg(out).output().unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn newton_trap_config_reproduces_the_jump() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run_config(&example("newton_trap.toml"), dir.path());
    assert_eq!(code, 0, "{err}");
    let rows = csv_rows(&dir.path().join("trace_newton.csv"));
    assert_eq!(rows.len(), 2);
    let d1: f64 = rows[1][3].parse().unwrap();
    assert!((d1 - 66.66).abs() < 1e-6, "dist after one step {d1}");

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let runs = summary["runs"].as_array().unwrap();
    assert_eq!(runs[0]["termination"]["kind"], "max_iters");
    assert_eq!(runs[1]["termination"]["kind"], "grad_tol");
}

#[test]
fn every_canned_config_runs() {
    let mut ran = 0;
    for entry in std::fs::read_dir(example("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "toml") {
            continue;
        }
        let dir = tempfile::tempdir().unwrap();
        let (code, err) = run_config(&path, dir.path());
        assert_eq!(code, 0, "{}: {err}", path.display());
        assert!(dir.path().join("summary.json").exists());
        ran += 1;
    }
    assert!(ran >= 9, "only {ran} configs found");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };

    let unknown = write("unknown.toml", "[problem]\nname = \"nope\"\n[x0]\ncoords = [0.0]\n[[solvers]]\nalgorithm = \"gd\"\nstep = \"constant\"\ngamma = 0.1\n");
    assert_eq!(run_config(&unknown, &dir.path().join("a")).0, 1);

    let typo = write("typo.toml", "[problem]\nname = \"circle\"\n[x0]\ncoords = [1.0, 0.2]\n[[solvers]]\nalgorithm = \"arc\"\nsigma_0 = 2.0\n");
    assert_eq!(run_config(&typo, &dir.path().join("b")).0, 1);

    // a step of 10 on f = x^2 doubles the iterate's magnitude ~20x per step
    let blowup = write("blowup.toml", "[problem]\nname = \"quadratic\"\ndiag = [2.0]\n[x0]\ncoords = [1.0]\n[[solvers]]\nalgorithm = \"gd\"\nstep = \"constant\"\ngamma = 10.0\nmax_iters = 1000\n");
    assert_eq!(run_config(&blowup, &dir.path().join("c")).0, 2);

    assert_eq!(bin().arg("run").arg("--config").arg(dir.path().join("missing.toml")).status().unwrap().code(), Some(1));
}

#[test]
fn conditions_command() {
    let o = bin()
        .args(["conditions", "--problem", "circle", "--center", "1,0", "--r-outer", "0.05", "--samples", "2000", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let pl = report["estimates"]["pl"]["mu_hat"].as_f64().unwrap();
    assert!((6.0..=8.4).contains(&pl), "PL {pl}");

    let o = bin().args(["conditions", "--problem", "aniso_quad", "--param", "a=2", "--param", "b=8"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let o = bin().args(["conditions", "--problem", "circle", "--center", "1,0,0"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
