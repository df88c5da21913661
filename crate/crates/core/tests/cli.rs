use std::path::Path;
use std::process::{Command, Output};

fn bnpirt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bnpirt")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = bnpirt(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_fit_and_analyse() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    ok(&["--seed", "8", "simulate", "--scenario", "bimodal", "-n", "80", "-i", "5", "--out", p(&sim)]);
    assert!(sim.join("truth.csv").exists());
    let data = sim.join("data.csv");

    let fit = dir.path().join("fit");
    ok(&[
        "--seed", "8", "fit", "--data", p(&data), "--out", p(&fit), "--ability-model", "semiparametric",
        "--iterations", "600", "--burnin", "100",
    ]);
    for f in ["samples.csv", "samples_meta.json", "labels.csv", "atoms.csv"] {
        assert!(fit.join(f).exists(), "{f}");
    }

    let base = dir.path().join("base");
    ok(&["postprocess", "--archive", p(&fit), "--out", p(&base)]);
    let density = ok(&["density", "--archive", p(&base), "--grid-min", "-4", "--grid-max", "4", "--grid-points", "41"]);
    assert_eq!(density.lines().count(), 42);
    assert!(density.starts_with("grid,mean,lower,upper"));

    let pct = dir.path().join("pct.csv");
    ok(&["--seed", "1", "percentiles", "--archive", p(&base), "--out", p(&pct)]);
    assert_eq!(std::fs::read_to_string(&pct).unwrap().lines().count(), 81);

    let waic: serde_json::Value = serde_json::from_str(&ok(&["waic", "--archive", p(&fit), "--data", p(&data)])).unwrap();
    assert!(waic["waic"].as_f64().unwrap() > 0.0);

    let csv = dir.path().join("eff.csv");
    ok(&["diagnose", "--archive", p(&fit), "--csv", p(&csv)]);
    assert!(std::fs::read_to_string(&csv).unwrap().lines().count() >= 2);
}

#[test]
fn prior_check_reports_moments() {
    let out = ok(&["prior-check", "--clusters", "2000", "--alpha-shape", "2", "--alpha-rate", "4", "--draws", "2000"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let e = v["expected"].as_f64().unwrap();
    assert!((e - 4.7).abs() < 0.4, "{e}");

    let out = ok(&["--seed", "3", "prior-check", "--ability", "standard-normal", "--draws", "5000"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["mean"].as_f64().unwrap() - 0.5).abs() < 0.03);
}

#[test]
fn pipeline_from_config_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        r#"
seed = 5
iterations = 2000
burnin = 500
[data]
scenario = "unimodal"
n_individuals = 100
n_items = 5
[[strategy]]
ability_model = "parametric"
"#,
    )
    .unwrap();
    let out = dir.path().join("bundle");
    ok(&["--config", p(&cfg), "pipeline", "--out", p(&out)]);
    let report = ok(&["report", "--bundle", p(&out)]);
    assert_eq!(report.lines().count(), 2);
    assert!(report.contains("2pl-param-irt-unconstrained-mh"));
}

#[test]
fn exit_codes() {
    assert_eq!(bnpirt(&["--help"]).status.code(), Some(0));
    assert_eq!(bnpirt(&["simulate", "--scenario", "trimodal", "-n", "5", "-i", "3", "--out", "x"]).status.code(), Some(2));
    assert_eq!(bnpirt(&["pipeline"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = bnpirt(&["simulate", "--scenario", "unimodal", "-n", "1", "-i", "3", "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let missing = dir.path().join("none.csv");
    let out = bnpirt(&["fit", "--data", p(&missing), "--out", p(dir.path()), "--iterations", "10", "--burnin", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}
