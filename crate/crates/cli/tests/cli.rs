use std::io::Write;
use std::process::{Command, Output, Stdio};

use cmdp_core::scalar::parse_rational;
use cmdp_core::{Rational, Scalar};
use serde_json::Value;

fn cmdp(args: &[&str], stdin: Option<&[u8]>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_cmdp"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or_default()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn example(n: &str, theta: &str) -> Vec<u8> {
    let out = cmdp(&["example", "--N", n, "--theta", theta, "--paper-p"], None);
    assert!(out.status.success());
    out.stdout
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn number(v: &Value) -> Rational {
    parse_rational(v.as_str().unwrap()).unwrap()
}

#[test]
fn example_piped_into_solve_gives_13_40() {
    let model = example("60", "1/4");
    let out = cmdp(&["solve", "--json"], Some(&model));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "Optimal");
    let err = (number(&v["value"]) - parse_rational("13/40").unwrap()).to_f64().abs();
    assert!(err < 2f64.powi(-50), "{err}");

    let out = cmdp(&["--mode", "float", "solve"], Some(&model));
    let table = String::from_utf8(out.stdout).unwrap();
    let line = table.lines().find(|l| l.starts_with("value")).unwrap();
    let value: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((value - 0.325).abs() < 1e-9);
}

#[test]
fn invalid_model_exits_with_violations() {
    let bad = br#"{"states": ["s"], "actions": ["a"], "admissible": {"s": ["a"]},
        "transitions": [{"from": "s", "action": "a", "to": "s", "prob": "1/2"}],
        "reward": {"s": {"a": "0"}}, "initial": {"s": "1"}}"#;
    let out = cmdp(&["solve"], Some(bad));
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("violates"), "{err}");

    let out = cmdp(&["validate", "--json"], Some(bad));
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["valid"], false);
    assert!(!v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn dual_on_example() {
    let model = example("60", "1/4");
    let out = cmdp(&["dual", "--json"], Some(&model));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let lambda = number(&v["dual"]["lambda_star"][0]).to_f64();
    assert!((lambda + 0.3).abs() < 1e-6, "{lambda}");
    assert_eq!(v["dual"]["gap"], "0");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(cmdp(&["frobnicate"], None).status.code(), Some(2));
    let model = example("10", "1/4");
    assert_eq!(cmdp(&["simulate"], Some(&model)).status.code(), Some(2));
    assert_eq!(cmdp(&["--mode", "decimal", "solve"], Some(&model)).status.code(), Some(2));
}

#[test]
fn rational_json_is_byte_identical() {
    let model = example("30", "1/4");
    let a = cmdp(&["solve", "--json", "--dual"], Some(&model));
    let b = cmdp(&["solve", "--json", "--dual"], Some(&model));
    assert_eq!(a.stdout, b.stdout);
    let a = cmdp(&["--seed", "5", "simulate", "--samples", "2000", "--json"], Some(&model));
    let b = cmdp(&["--seed", "5", "simulate", "--samples", "2000", "--json"], Some(&model));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn evaluate_reads_policy_files() {
    let dir = std::env::temp_dir().join(format!("cmdp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let model = dir.join("model.json");
    std::fs::write(&model, example("60", "1/4")).unwrap();
    let policy = dir.join("pi_a.json");
    std::fs::write(&policy, r#"{"1": {"a": "1", "b": "0"}}"#).unwrap();
    let out = cmdp(&["evaluate", model.to_str().unwrap(), "--policy", policy.to_str().unwrap(), "--json"], None);
    // pi_a earns 2/5 but violates the constraint.
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert!((number(&v["reward_value"]).to_f64() - 0.4).abs() < 1e-9);
    assert!(v["divergent_states"].as_array().unwrap().iter().any(|s| s == "D"));

    // A solve report is a valid policy file.
    let report = cmdp(&["solve", model.to_str().unwrap(), "--json"], None);
    std::fs::write(&policy, &report.stdout).unwrap();
    let out = cmdp(&["evaluate", model.to_str().unwrap(), "--policy", policy.to_str().unwrap(), "--json"], None);
    assert_eq!(out.status.code(), Some(0));
    let out_path = dir.join("eval.json");
    let out = cmdp(
        &["evaluate", model.to_str().unwrap(), "--policy", policy.to_str().unwrap(), "--json", "--out", out_path.to_str().unwrap()],
        None,
    );
    assert!(out.stdout.is_empty());
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!((number(&written["reward_value"]).to_f64() - 0.325).abs() < 1e-9);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn checks_slater_and_phantom() {
    let model = example("30", "1/2");
    let out = cmdp(&["slater", "--json"], Some(&model));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["slack"], "0");
    let out = cmdp(&["check", "--json"], Some(&model));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["base_measure"]["1"], "1/4");

    let demo = cmdp(&["phantom-demo"], None).stdout;
    let out = cmdp(&["phantom", "--json"], Some(&demo));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["phantom_verdict"], "Phantom");
    assert_eq!(v["naive_status"], "Unbounded");
    assert_eq!(v["kp_value"], "0");

    let out = cmdp(&["example", "--N", "20", "--include-negative", "4"], None);
    let out = cmdp(&["phantom", "--json"], Some(&out.stdout));
    assert_eq!(json(&out)["phantom_verdict"], "NoGap");
}

#[test]
fn infeasible_limit_exits_one() {
    let out = cmdp(&["solve", "--json"], Some(&example("20", "3/5")));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["status"], "Infeasible");
}

#[test]
fn table_shows_every_top_level_json_scalar() {
    let model = example("10", "1/4");
    let j = json(&cmdp(&["solve", "--json"], Some(&model)));
    let table = String::from_utf8(cmdp(&["solve"], Some(&model)).stdout).unwrap();
    for (k, v) in j.as_object().unwrap() {
        if let Some(s) = v.as_str() {
            assert!(table.contains(k.as_str()) && table.contains(s), "{k} = {s} missing");
        }
    }
}
