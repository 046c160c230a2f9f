use std::path::Path;
use std::process::{Command, Output};

fn sfcalc(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sfcalc"));
    cmd.args(args).env_remove("SFCALC_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn column(csv: &str, engine: &str, col: usize) -> Vec<String> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect::<Vec<_>>())
        .filter(|f| f[1] == engine)
        .map(|f| f[col].clone())
        .collect()
}

const GENERATED: &str = r#"{
  "schema": 1,
  "name": "generated",
  "model": {"kind": "weighted_blocks", "blocks": [{"dim": 4, "weight": 1.0}, {"dim": 3, "weight": 0.5}]},
  "path": {"kind": "generator", "name": "random_invertible", "seed": 5},
  "engines": ["crossing", "phillips", "integral"],
  "engine_params": {"s_grid": [2.0]}
}"#;

#[test]
fn bundled_single_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let out = sfcalc(&["run", "single_crossing.json", "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("single_crossing.csv")).unwrap();
    assert!(csv.starts_with("scenario,engine,parameter_s,value,error_estimate,runtime_ms,seed\n"));
    for engine in ["crossing", "phillips", "integral", "appendix", "aps_index"] {
        assert!(column(&csv, engine, 3).iter().all(|v| v == "1.0"), "{engine}: {csv}");
    }
    assert!(dir.path().join("single_crossing.log").exists());
}

#[test]
fn bundled_dirac_gives_one_over_pi() {
    let dir = tempfile::tempdir().unwrap();
    let out = sfcalc(&["run", "zsign_dirac", "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("zsign_dirac.csv")).unwrap();
    let v: f64 = column(&csv, "phillips", 3)[0].parse().unwrap();
    assert!((v - std::f64::consts::FRAC_1_PI).abs() < 1e-7);
}

#[test]
fn bundled_circle_signature_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = sfcalc(&["run", "circle_signature.json", "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("circle_signature.csv")).unwrap();
    assert_eq!(column(&csv, "aps_index", 3), vec!["0.0"]);
    for line in csv.lines().skip(1) {
        let v: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(v.abs() <= 1e-6, "{line}");
    }
}

#[test]
fn identical_runs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "g.json", GENERATED);
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "3"].iter().enumerate() {
        let out_dir = dir.path().join(format!("run{k}"));
        let out = sfcalc(&["--threads", threads, "run", &file, "--out", out_dir.to_str().unwrap()], &[]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(out_dir.join("generated.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn seed_override_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "g.json", GENERATED);
    let out = sfcalc(&["run", &file, "--out", dir.path().to_str().unwrap()], &[("SFCALC_SEED", "99")]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("generated.csv")).unwrap();
    assert!(column(&csv, "crossing", 6).iter().all(|s| s == "99"), "{csv}");
    let bad = sfcalc(&["run", &file, "--out", dir.path().to_str().unwrap()], &[("SFCALC_SEED", "x")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn invalid_scenarios_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let broken = write(dir.path(), "broken.json", "{\n  \"schema\": 1,\n  \"name\": \n}");
    let out = sfcalc(&["run", &broken, "--out", d], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
    let unseeded = write(dir.path(), "u.json", &GENERATED.replace(", \"seed\": 5", ""));
    let out = sfcalc(&["run", &unseeded, "--out", d], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("path.seed"));
    let engine = write(dir.path(), "e.json", &GENERATED.replace("\"phillips\"", "\"winding\""));
    assert_eq!(sfcalc(&["run", &engine, "--out", d], &[]).status.code(), Some(2));
    assert_eq!(sfcalc(&["run", "missing.json", "--out", d], &[]).status.code(), Some(2));
}

#[test]
fn precondition_exits_2_and_numeric_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
      "schema": 1,
      "name": "nonconvergent",
      "model": {"kind": "weighted_blocks", "blocks": [{"dim": 1, "weight": 1.0}]},
      "path": {"kind": "samples", "nodes": [0, 1], "samples": [{"blocks": [[[-1]]]}, {"blocks": [[[0.0]]]}]},
      "engines": ["appendix"]
    }"#;
    let file = write(dir.path(), "n.json", text);
    let out = sfcalc(&["run", &file, "--out", dir.path().to_str().unwrap()], &[]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(2), "{stderr}");
    let text = GENERATED.replace("\"engine_params\": {\"s_grid\": [2.0]}", "\"engine_params\": {\"s_grid\": [2.0], \"phillips_depth\": 1, \"window\": 1e-9}");
    let file = write(dir.path(), "d.json", &text);
    let out = sfcalc(&["run", &file, "--out", dir.path().to_str().unwrap()], &[]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(3), "{stderr}");
    assert!(stderr.contains("failed"), "{stderr}");
}

#[test]
fn failed_agreement_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let text = GENERATED.replace("\"engine_params\"", "\"expect\": {\"value\": 17.0, \"tolerance\": 1e-6}, \"engine_params\"");
    let file = write(dir.path(), "x.json", &text);
    let out = sfcalc(&["run", &file, "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    let log = std::fs::read_to_string(dir.path().join("generated.log")).unwrap();
    assert!(log.contains("misses expected 17"), "{log}");
}

#[test]
fn verify_suites() {
    let out = sfcalc(&["verify", "aps"], &[]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 30);
    assert_eq!(sfcalc(&["verify", "everything"], &[]).status.code(), Some(2));
}

#[test]
fn list_and_bad_flags() {
    let out = sfcalc(&["list-scenarios"], &[]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["single_crossing.json", "zsign_dirac.json", "circle_signature.json"] {
        assert!(stdout.contains(name));
    }
    assert_eq!(sfcalc(&["--tolerance-scale", "0", "list-scenarios"], &[]).status.code(), Some(2));
    assert_eq!(sfcalc(&["--threads", "0", "list-scenarios"], &[]).status.code(), Some(2));
}
