use std::fs;

use jacobi_diag::cost::evaluate;
use jacobi_diag::driver::{parse_csv, safeguard_audit};
use jacobi_diag::PairRule;
use jacobi_harness::experiment::{run_experiment, ExperimentConfig};
use jacobi_harness::manifest;
use jacobi_harness::plot::{parse_combined_csv, svg_series};

fn config(out: &std::path::Path, body: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml(body).unwrap();
    cfg.out = out.to_path_buf();
    cfg
}

#[test]
fn random_symmetric_protocol_gives_monotone_converged_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        r#"
seed = 42
repetitions = 2
rules = ["cyclic", "gradient-max"]
plot = true
[generator]
kind = "random-symmetric"
d = 3
n = 6
[solver]
delta = 0.1
grad_tol = 1e-8
"#,
    );
    let summary = run_experiment(&cfg).unwrap();
    assert_eq!(summary.rows.len(), 4);
    for row in &summary.rows {
        let rows = parse_csv(&fs::read_to_string(&row.trace_path).unwrap()).unwrap();
        let delta = (row.rule != PairRule::Cyclic).then_some(0.1);
        let audit = safeguard_audit(&rows, delta).unwrap();
        assert!(
            audit.passes(),
            "{} {}: {:?}",
            row.instance,
            row.rule.name(),
            audit.monotone_violations
        );
        assert!(
            row.converged,
            "{} {} stopped with {:?}",
            row.instance,
            row.rule.name(),
            row.status
        );
        assert_eq!(rows.last().unwrap().f, row.final_f);
        assert_eq!(row.time_s, 0.0);
    }
    let text = fs::read_to_string(&summary.summary_path).unwrap();
    assert!(text.starts_with("instance,rule,final_f,iters,converged,time_s\n"));
    assert_eq!(text.lines().count(), 5);

    let table =
        parse_combined_csv(&fs::read_to_string(dir.path().join("compare/rep000.csv")).unwrap())
            .unwrap();
    let svg = fs::read_to_string(dir.path().join("compare/rep000.svg")).unwrap();
    let lines = svg_series(&svg).unwrap();
    assert_eq!(table.len(), 2);
    for (label, panel, values) in lines {
        let s = table.iter().find(|s| s.label == label).unwrap();
        if panel == "f" {
            assert_eq!(values, s.f);
        } else {
            let logs: Vec<f64> = s.grad_norm.iter().map(|g| g.log10()).collect();
            assert_eq!(values.len(), logs.len());
        }
    }
}

#[test]
fn planted_summary_reaches_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        r#"
seed = 5
rules = ["gradient-max"]
[generator]
kind = "planted-orthogonal"
d = 3
n = 6
"#,
    );
    let summary = run_experiment(&cfg).unwrap();
    let row = &summary.rows[0];
    let (f_star, score) = row.planted.unwrap();
    assert_eq!(f_star, 91.0);
    assert!(
        (row.final_f - f_star).abs() <= 1e-6,
        "{} vs {f_star}",
        row.final_f
    );
    assert!(score >= 0.999, "match score {score}");
    let planted = fs::read_to_string(dir.path().join("planted.csv")).unwrap();
    assert!(planted.starts_with("instance,rule,f_star,final_f,match_score\n"));
}

#[test]
fn zero_iterations_report_the_starting_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        r#"
seed = 8
[generator]
kind = "random-jade"
n = 4
L = 3
[solver]
max_iters = 0
"#,
    );
    let summary = run_experiment(&cfg).unwrap();
    let row = &summary.rows[0];
    let spec = manifest::read_spec(&dir.path().join("instances/rep000/manifest.json")).unwrap();
    let f0 = evaluate(
        &spec,
        &jacobi_diag::Mat::<jacobi_diag::Complex64>::identity(4, 4),
    )
    .unwrap();
    assert_eq!(row.iters, 0);
    assert!((row.final_f - f0).abs() <= 1e-14 * f0.abs());
}

#[test]
fn identical_configs_write_identical_bytes() {
    let body = r#"
seed = 9
repetitions = 3
rules = ["cyclic", "gradient-first-cyclic"]
[generator]
kind = "random-complex3"
n = 4
"#;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = run_experiment(&config(a.path(), body)).unwrap();
    let sb = run_experiment(&config(b.path(), body)).unwrap();
    assert_eq!(
        fs::read(&sa.summary_path).unwrap(),
        fs::read(&sb.summary_path).unwrap()
    );
    for (ra, rb) in sa.rows.iter().zip(&sb.rows) {
        assert_eq!(
            fs::read(&ra.trace_path).unwrap(),
            fs::read(&rb.trace_path).unwrap()
        );
        assert_eq!(fs::read(&ra.x_path).unwrap(), fs::read(&rb.x_path).unwrap());
    }
    for rep in 0..3 {
        let p = format!("instances/rep{rep:03}/term0.ten");
        assert_eq!(
            fs::read(a.path().join(&p)).unwrap(),
            fs::read(b.path().join(&p)).unwrap()
        );
    }
}

#[test]
fn manifest_instances_run_directly() {
    let dir = tempfile::tempdir().unwrap();
    let inst = jacobi_harness::GeneratorDirective::RandomHermitianForm {
        half_order: 2,
        dim: 3,
    }
    .generate(1, 0)
    .unwrap();
    let path = manifest::write_instance(&dir.path().join("form"), &inst).unwrap();
    let mut cfg = config(&dir.path().join("out"), "rules = [\"gradient-max\"]");
    cfg.instance = Some(path);
    let summary = run_experiment(&cfg).unwrap();
    assert_eq!(summary.rows.len(), 1);
    assert_eq!(summary.rows[0].instance, "form");
    assert!(summary.rows[0].final_f.is_finite());
}
