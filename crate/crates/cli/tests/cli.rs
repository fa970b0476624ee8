use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn grsk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grsk")).args(args).env_remove("GRSK_SEED").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn example() -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "data", "example23.csv"].iter().collect();
    p.to_string_lossy().into_owned()
}

#[test]
fn rational_example_is_reproduced_exactly() {
    let out = grsk(&["rsk", "insert", "--matrix", &example()]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["schema"], "grsk-report/1");
    let r = &v["result"]["result"];
    let diag = &r["array"]["diagonals_out"];
    assert_eq!(diag, &serde_json::json!([["8", "18", "84"], ["2/3", "138/7"], ["28/69"]]));
    assert_eq!(r["array"]["words"]["a2"], serde_json::json!(["2/9", "18/7"]));
    assert_eq!(r["array"]["words"]["a3"], serde_json::json!(["14/69"]));
    assert_eq!(r["row_insertion"]["xi_out"], serde_json::json!(["3", "25"]));
    assert_eq!(r["row_insertion"]["b_out"], serde_json::json!(["2/5"]));
}

#[test]
fn equivalence_run_exits_zero() {
    let out = grsk(&["verify", "equivalence", "--n", "5", "--N", "4", "--trials", "100", "--seed", "7"]);
    assert!(out.status.success());
    assert!(json(&out)["result"]["max_rel_discrepancy"].as_f64().unwrap() < 1e-9);
}

#[test]
fn laplace_methods_agree() {
    let out = grsk(&["laplace", "--N", "2", "--n", "3", "--s", "1", "--method", "both"]);
    assert!(out.status.success());
    assert!(json(&out)["result"]["agree_sigma"].as_f64().unwrap() < 3.0);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(grsk(&["rsk", "insert"]).status.code(), Some(2));
    assert_eq!(grsk(&["laplace", "--method", "nope"]).status.code(), Some(2));
    let bad = Command::new(env!("CARGO_BIN_EXE_grsk"))
        .args(["verify", "equivalence", "--trials", "1"])
        .env("GRSK_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn numerical_contract_failures_exit_one_with_diagnostics() {
    let out = grsk(&["whittaker", "eval", "--lambda", "0.1,0.2", "--y", "1,-1"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert!(v["error"]["kind"].is_string());
    assert!(v["error"]["message"].is_string());
}

#[test]
fn environment_seed_overrides_flag() {
    let run = |env: Option<&str>, seed: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_grsk"));
        c.args(["verify", "equivalence", "--n", "2", "--N", "2", "--trials", "3", "--seed", seed]);
        match env {
            Some(e) => c.env("GRSK_SEED", e),
            None => c.env_remove("GRSK_SEED"),
        };
        json(&c.output().unwrap())["seed"].as_u64().unwrap()
    };
    assert_eq!(run(None, "5"), 5);
    assert_eq!(run(Some("11"), "5"), 11);
}

#[test]
fn reports_are_byte_identical_and_written_to_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let args = ["tropical", "--replicas", "50", "--seed", "3", "--out", d, "--format", "csv"];
    let a = grsk(&args);
    let b = grsk(&[&args[..], &["--threads", "2"]].concat());
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = std::fs::read_to_string(dir.path().join("tropical.csv")).unwrap();
    assert!(text.starts_with("eps,distance,std_error,envelope,envelope_violations\n"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn whittaker_eval_accepts_complex_spectral_points() {
    let out = grsk(&["whittaker", "eval", "--N", "2", "--lambda", "0.5i,-0.5i", "--y", "1.2,0.8"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["result"]["value_re"].as_f64().unwrap().is_finite());
    assert!(v["result"]["value_im"].as_f64().unwrap().abs() < 1e-8);
}
