use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_massart-forge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_massart-forge"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_writes_dataset_sidecar_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data.csv");
    let o = run(&["gen", "--n", "50", "--m", "5", "--seed", "3", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x_1,x_2,x_3,x_4,x_5,y");
    assert_eq!(lines.count(), 50);
    let side = json(&dir.path().join("data.json"));
    assert_eq!(side["seed"], 3);
    assert_eq!(side["v"].as_array().unwrap().len(), 5);
    let manifest = json(&dir.path().join("data.csv.manifest.json"));
    assert_eq!(manifest["command"], "gen");
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["summary"]["pass"], true);
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    assert_eq!(outputs[0]["sha256"].as_str().unwrap().len(), 64);
    for key in ["argv", "config", "rng", "tool_version", "started_at", "finished_at"] {
        assert!(manifest.get(key).is_some(), "manifest lacks {key}");
    }
}

#[test]
fn redacted_sidecar_hides_direction() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = run(&["gen", "--n", "10", "--m", "4", "--redact", "--out", s(&out)]);
    assert!(o.status.success());
    let side = json(&dir.path().join("r.json"));
    assert!(side.get("v").is_none_or(Value::is_null));
}

#[test]
fn different_seeds_give_different_data() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert!(run(&["gen", "--n", "20", "--seed", "1", "--out", s(&a)]).status.success());
    assert!(run(&["gen", "--n", "20", "--seed", "2", "--out", s(&b)]).status.success());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn invalid_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    for args in [
        vec!["gen", "--zeta", "0.7", "--out", s(&out)],
        vec!["gen", "--eta", "0.6", "--out", s(&out)],
        vec!["gen", "--epsilon", "0.5", "--out", s(&out)],
        vec!["verify", "--k", "500"],
        vec!["experiment", "--learners", "nope"],
        vec!["experiment", "--seeds", "1,x"],
        vec!["plan", "--log-M", "1e4", "--eta", "0.3"],
        vec!["gen"],
        vec!["no-such-command"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run_env(&["plan", "--log-M", "100", "--zeta", "0.01", "--eta", "0.3"], "MASSART_FORGE_THREADS", "zero");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_plan_is_written_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("plan.json");
    let o = run(&["plan", "--log-M", "1e4", "--zeta-exp", "0.5", "--eta", "0.49", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let plan = json(&out);
    assert!(!plan["violations"].as_array().unwrap().is_empty());
    assert!(plan["m_prime_log"].as_f64().unwrap().is_finite());
    let manifest = json(&dir.path().join("plan.json.manifest.json"));
    assert_eq!(manifest["summary"]["pass"], false);
}

#[test]
fn plan_prints_to_stdout_without_out() {
    let o = run(&["plan", "--log-M", "1e6", "--zeta", "1e-3", "--eta", "0.3"]);
    let plan: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(plan["log_m"].as_f64(), Some(1e6));
    // the manifest goes to stderr
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("\"command\": \"plan\""));
}

#[test]
fn verify_passes_on_desk_config() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("verify.json");
    let o = run_env(&["verify", "--samples", "20000", "--report", s(&report)], "MASSART_FORGE_THREADS", "2");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&report);
    assert_eq!(r["pass"], true);
    assert_eq!(r["moments"].as_array().unwrap().len(), 13);
    assert!(dir.path().join("verify.json.manifest.json").exists());
}

#[test]
fn emit_density_accepts_negative_window() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = run(&["emit-density", "--grid", "11", "--lo", "-1", "--hi", "1", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x,density_A,density_B,in_J1,in_J2");
    assert_eq!(text.lines().count(), 12);
    let o = run(&["emit-density", "--lo", "1", "--hi", "-1", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn replay_detects_tampered_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data.csv");
    assert!(run(&["gen", "--n", "30", "--out", s(&out)]).status.success());
    let manifest = dir.path().join("data.csv.manifest.json");
    let replay_dir = dir.path().join("again");
    let o = run(&["replay", s(&manifest), "--out-dir", s(&replay_dir)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(replay_dir.join("data.csv.manifest.json").exists());

    let mut m = json(&manifest);
    m["outputs"][0]["sha256"] = Value::String("0".repeat(64));
    let tampered = dir.path().join("tampered.manifest.json");
    std::fs::write(&tampered, serde_json::to_string(&m).unwrap()).unwrap();
    let o = run(&["replay", s(&tampered), "--out-dir", s(&replay_dir)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("DIFFERENT"));

    let o = run(&["replay", s(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn small_experiment_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp.json");
    let o = run(&[
        "experiment", "--learners", "constant", "--heldout", "5000", "--seeds", "4", "--out", s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    for key in ["nu", "rho", "alpha_chi", "N_bound", "tau", "queries_used", "gaps", "learner_errors", "seeds"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["learner_errors"].as_array().unwrap().len(), 4);
}
