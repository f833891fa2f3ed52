use std::path::Path;

use genlab_cli::{cli_main, EXIT_FAIL, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn run(args: &[&str]) -> i32 {
    cli_main(std::iter::once("genlab").chain(args.iter().copied()))
}

fn run_json(dir: &Path, name: &str, args: &[&str]) -> (i32, String) {
    let path = dir.join(name);
    let p = path.to_str().unwrap();
    let mut full = vec!["--quiet", "--json-out", p];
    full.extend_from_slice(args);
    let code = run(&full);
    (code, std::fs::read_to_string(&path).unwrap_or_default())
}

fn schema() -> jsonschema::Validator {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../schemas/output.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

#[test]
fn list_mechanisms_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_json(dir.path(), "list.json", &["list-mechanisms"]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!(v["result"]["mechanisms"].as_array().unwrap().iter().any(|m| m == "majority"));
}

#[test]
fn majority_fails_dp_with_full_delta() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) =
        run_json(dir.path(), "dp.json", &["verify-dp", "--mech", "majority", "--domain", "0,1", "--n", "3", "--eps", "10"]);
    assert_eq!(code, EXIT_FAIL);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["result"]["delta_hat"].as_f64(), Some(1.0));
    assert_eq!(v["pass"], false);
}

#[test]
fn outputs_match_schema() {
    let dir = tempfile::tempdir().unwrap();
    let validator = schema();
    let cases: Vec<Vec<&str>> = vec![
        vec!["list-mechanisms"],
        vec!["verify-dp", "--mech", "noisy-majority:eps=0.5", "--domain", "0,1", "--n", "4", "--eps", "0.5"],
        vec!["verify-pg", "--mech", "majority", "--sim", "constant:value=1", "--dist", "uniform-bits", "--n", "5", "--eps", "0.7"],
        vec!["verify-rg", "--mech", "majority", "--adversary", "identity", "--n", "20", "--alpha", "0.3", "--trials", "200"],
        vec!["compose", "--mode", "basic", "--params-json", "[[0.01,0.5],[0.02,0.25]]"],
        vec!["compose", "--mode", "advanced", "--params-json", r#"{"k":10,"eps":0.1,"delta_prime":0.01}"#],
        vec!["experiment", "tightness", "--eps", "0.2", "--beta", "0.05", "--ns", "16,32"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let (code, text) = run_json(dir.path(), &format!("out{i}.json"), args);
        assert!(code == EXIT_OK || code == EXIT_FAIL, "{args:?} exited {code}");
        let v: Value = serde_json::from_str(&text).unwrap();
        assert!(validator.is_valid(&v), "{args:?}: {text}");
        assert_eq!(v["command"], args[0]);
    }
}

#[test]
fn basic_composition_adds_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_json(
        dir.path(),
        "c.json",
        &["compose", "--mode", "basic", "--params-json", "[[0.01,0.5],[0.02,0.25]]"],
    );
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!((v["result"]["eps"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert!((v["result"]["beta"].as_f64().unwrap() - 0.03).abs() < 1e-12);
}

#[test]
fn advanced_composition_has_no_beta() {
    let dir = tempfile::tempdir().unwrap();
    let (_, text) =
        run_json(dir.path(), "a.json", &["compose", "--mode", "advanced", "--params-json", r#"{"k":1,"eps":0.1,"delta_prime":0.05}"#]);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert!(v["result"]["beta"].is_null());
    let eps = v["result"]["eps"].as_f64().unwrap();
    // sqrt(2 ln 20) * 0.1 + 0.1 * (e^0.1 - 1)
    let expected = (2.0 * 20f64.ln()).sqrt() * 0.1 + 0.1 * (0.1f64.exp() - 1.0);
    assert!((eps - expected).abs() < 1e-12);
}

#[test]
fn tightness_experiment_passes_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    let code = run(&[
        "--quiet",
        "--seed",
        "7",
        "--csv-out",
        csv.to_str().unwrap(),
        "experiment",
        "tightness",
        "--eps",
        "0.2",
        "--beta",
        "0.05",
        "--ns",
        "16,32,64,128",
    ]);
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("metric,value"));
    assert!(lines.any(|l| l.starts_with("slope,")));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["bogus"]), EXIT_USAGE);
    assert_eq!(run(&["verify-dp", "--mech", "majority"]), EXIT_USAGE);
    assert_eq!(run(&["--quiet", "verify-dp", "--mech", "nope", "--domain", "0,1", "--n", "3", "--eps", "1"]), EXIT_USAGE);
    assert_eq!(run(&["--help"]), EXIT_OK);
}

#[test]
fn enumeration_cap_is_enforced() {
    let args = ["verify-dp", "--mech", "majority", "--domain", "0,1", "--n", "12", "--eps", "1", "--ungrouped"];
    let mut capped = vec!["--quiet", "--cap", "100"];
    capped.extend_from_slice(&args);
    assert_eq!(run(&capped), EXIT_USAGE);
    let mut free = vec!["--quiet"];
    free.extend_from_slice(&args);
    assert_ne!(run(&free), EXIT_USAGE);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--seed", "3", "experiment", "threshold", "--n", "200", "--delta", "0.05", "--trials", "100"];
    let (c1, a) = run_json(dir.path(), "a.json", &args);
    let (c2, b) = run_json(dir.path(), "b.json", &args);
    assert_eq!(c1, c2);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}
