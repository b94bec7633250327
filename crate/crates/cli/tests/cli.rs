use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn uhmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uhmc")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = uhmc(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

#[test]
fn gen_data_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["gen-data", "--d", "10", "--r", "10", "--seed", "7", "--out", out.to_str().unwrap()]);
    }
    let fa = std::fs::read(a.join("dataset.csv")).unwrap();
    assert_eq!(fa, std::fs::read(b.join("dataset.csv")).unwrap());
    assert_eq!(String::from_utf8(fa).unwrap().lines().count(), 11);
}

#[test]
fn plan_with_unit_constants_has_trajectory_time_one_sixth() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["plan", "--m", "1", "--M", "1", "--d", "100", "--eps", "0.1", "--delta", "0.1", "--start", "warm", "--omega", "1", "--out", out]);
    let plan = json(&dir.path().join("plan.json"));
    assert!((plan["T"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-15);
    assert!((plan["Delta"].as_f64().unwrap() - 1.0 / 288.0).abs() < 1e-15);
    assert_eq!(plan["i_max"], 36);
}

#[test]
fn sample_uhmc_counts_rows_and_gradients() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["sample", "--target", "gaussian", "--d", "2", "--kind", "uhmc", "--eta", "0.5", "--T", "1.0", "--imax", "10", "--out", out]);
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "step,q1,q2,energy,accept");
    assert_eq!(lines.count(), 11);
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["grad_evals"], 30);
    assert!(dir.path().join("timing.json").is_file());
}

#[test]
fn config_echo_reruns_bit_for_bit_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    ok(&["sample", "--kind", "mala", "--d", "3", "--spectrum", "1,4", "--eta", "0.3", "--imax", "200", "--seed", "5", "--out", first.to_str().unwrap()]);
    let config = first.join("config.json");
    let second = dir.path().join("second");
    ok(&["sample", "--config", config.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    for f in ["trace.csv", "summary.json"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(second.join(f)).unwrap(), "{f}");
    }
    let third = dir.path().join("third");
    ok(&["sample", "--config", config.to_str().unwrap(), "--seed", "6", "--out", third.to_str().unwrap()]);
    assert_ne!(std::fs::read(first.join("trace.csv")).unwrap(), std::fs::read(third.join("trace.csv")).unwrap());
    assert_eq!(json(&third.join("config.json"))["seed"], 6);
}

#[test]
fn every_artifact_has_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["scaling", "--d-list", "4,16", "--draws", "3", "--seed", "2", "--out", dir.path().to_str().unwrap()]);
    let mut hashes = Vec::new();
    for f in ["config.json", "scaling.json", "scaling.csv", "scaling.gp", "timing.json"] {
        let meta = json(&dir.path().join(format!("{f}.meta.json")));
        assert_eq!(meta["command"], "scaling");
        assert_eq!(meta["seed"], 2);
        assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
        hashes.push(meta["config_hash"].as_str().unwrap().to_string());
    }
    assert_eq!(hashes[0].len(), 64);
    assert!(hashes.iter().all(|h| h == &hashes[0]));
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out = out.to_str().unwrap();

    let bad_flag = uhmc(&["sample", "--no-such-flag"]);
    assert_eq!(bad_flag.status.code(), Some(1));
    assert_eq!(stderr_json(&bad_flag)["error"], "config");
    let missing = uhmc(&["sample", "--dataset", "/definitely/not/here.csv", "--out", out]);
    assert_eq!(missing.status.code(), Some(1));
    let domain = uhmc(&["plan", "--m", "2", "--M", "1", "--d", "3", "--out", out]);
    assert_eq!(domain.status.code(), Some(1));

    let diverge = uhmc(&["sample", "--d", "3", "--spectrum", "1,400", "--eta", "5", "--T", "100", "--imax", "10", "--out", out]);
    assert_eq!(diverge.status.code(), Some(2));
    assert_eq!(stderr_json(&diverge)["exit_code"], 2);

    let file = dir.path().join("plain-file");
    std::fs::write(&file, "x").unwrap();
    let io = uhmc(&["gen-data", "--out", file.to_str().unwrap()]);
    assert_eq!(io.status.code(), Some(3));
}

#[test]
fn logistic_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    ok(&["gen-data", "--d", "5", "--r", "8", "--seed", "1", "--out", &p("data")]);
    let dataset = p("data/dataset.csv");
    ok(&["regularity", "--dataset", &dataset, "--restarts", "2", "--iterations", "40", "--out", &p("reg")]);
    let reg = json(&dir.path().join("reg/regularity.json"));
    assert!(reg["L_inf_estimate"].as_f64().unwrap() <= reg["L_inf_bound"].as_f64().unwrap() + 1e-6);
    assert_eq!(reg["directions"].as_array().unwrap().len(), 8);

    ok(&["plan", "--dataset", &dataset, "--start", "cold", "--out", &p("plan")]);
    assert!(json(&dir.path().join("plan/plan.json"))["b_tilde"].as_f64().unwrap() > 0.0);

    ok(&[
        "benchmark", "--dataset", &dataset, "--kind", "uhmc,ula", "--eta-grid", "0.2,0.4", "--budget", "2000",
        "--reference-steps", "5000", "--bins", "10", "--out", &p("bench"),
    ]);
    let csv = std::fs::read_to_string(dir.path().join("bench/benchmark.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(std::fs::read_to_string(dir.path().join("bench/benchmark.gp")).unwrap().contains("benchmark.csv"));

    ok(&["couple", "--dataset", &dataset, "--imax", "20", "--out", &p("couple")]);
    let couple = std::fs::read_to_string(dir.path().join("couple/coupling.csv")).unwrap();
    assert_eq!(couple.lines().count(), 22);

    ok(&["regularity", "--d-list", "4,8", "--restarts", "1", "--iterations", "20", "--draws", "50", "--out", &p("f3")]);
    let rows = json(&dir.path().join("f3/figure3.json"));
    assert_eq!(rows.as_array().unwrap().len(), 2);
}
