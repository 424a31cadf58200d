use std::fs;
use std::path::Path;
use std::process::Command;

fn cli(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_jacobi-diag"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("exp.toml");
    fs::write(
        &path,
        r#"
seed = 1
rules = ["cyclic"]
[generator]
kind = "planted-jade"
n = 4
L = 3
[solver]
grad_tol = 1e-10
"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn generate_writes_manifest_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("gen");
    let printed = cli(&[
        "generate",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "4",
    ]);
    assert!(printed.trim().ends_with("manifest.json"));
    assert!(out.join("instances/rep000/truth.json").exists());
    assert!(out.join("instances/rep000/truth.ten").exists());
}

#[test]
fn run_compare_and_diagnose_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("run");
    let summary = cli(&[
        "run",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--rule",
        "cyclic",
        "--rule",
        "gradient-max",
        "--delta",
        "0.2",
        "--grad-tol",
        "1e-10",
        "--max-iters",
        "2000",
    ]);
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "instance,rule,final_f,iters,converged,time_s");
    assert_eq!(lines.len(), 3);
    assert!(lines[1..].iter().all(|l| l.contains(",true,")), "{summary}");

    let runs = out.join("runs");
    let a = runs.join("rep000_cyclic.csv");
    let b = runs.join("rep000_gradient-max.csv");
    let prefix = dir.path().join("cmp");
    cli(&[
        "compare",
        a.to_str().unwrap(),
        &format!("G={}", b.display()),
        "--out",
        prefix.to_str().unwrap(),
    ]);
    let table = fs::read_to_string(prefix.with_extension("csv")).unwrap();
    assert!(table.starts_with("k,rep000_cyclic_f,rep000_cyclic_grad_norm,G_f,G_grad_norm\n"));
    assert!(fs::read_to_string(prefix.with_extension("svg"))
        .unwrap()
        .starts_with("<svg"));

    let manifest = out.join("instances/rep000/manifest.json");
    let x = runs.join("rep000_gradient-max_x.ten");
    let report = cli(&[
        "diagnose",
        "--manifest",
        manifest.to_str().unwrap(),
        "--trace",
        b.to_str().unwrap(),
        "--x",
        x.to_str().unwrap(),
        "--delta",
        "0.2",
        "--grad-tol",
        "1e-9",
    ]);
    let json: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(json["stationarity"]["stationary"], true);
    assert_eq!(json["hess_scan"]["all_negative_definite"], true);
    assert!(json["audit"]["monotone_violations"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn bad_input_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "[generator]\nkind = \"random-symmetric\"\nd = 3\nn = 1\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_jacobi-diag"))
        .args(["run", bad.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension"));
    let out = Command::new(env!("CARGO_BIN_EXE_jacobi-diag"))
        .args(["compare", "/nonexistent.csv"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
