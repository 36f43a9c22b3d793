use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const KINGMAN: &str = r#"{
  "xi": {"kingman": "1"},
  "theta": "1",
  "u1": "1",
  "u2": "1",
  "e_star": [["0", "1/2"]],
  "alpha": "1/2",
  "replicas": 4000,
  "seed": 11,
  "options": {"order": 1, "eta": [1, 2], "t": "1/4"}
}"#;

const ATOM: &str = r#"{
  "xi": {"atoms": [{"coords": ["1/2", "1/4"], "weight": "1"}]},
  "theta": "1",
  "u1": "1",
  "u2": "2",
  "e_star": [["0", "1/4"], ["1/2", "3/4"]],
  "alpha": "1/2",
  "b_max": 5
}"#;

fn write(dir: &TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn xistep(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_xistep"));
    cmd.args(args);
    if let Some(path) = config {
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

#[test]
fn kingman_rates() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "k.json", KINGMAN);
    let out = xistep(&["rates"], Some(&cfg));
    assert!(out.status.success());
    let r = report(&out);
    let named = &r["result"]["named"];
    for key in ["a2", "a21", "a211"] {
        assert_eq!(named[key], "1");
    }
    for key in ["a3", "a22", "a31", "a4"] {
        assert_eq!(named[key], "0");
    }
    assert_eq!(r["result"]["consistency"]["passed"], true);
    assert_eq!(r["artifact"], "xistep");
    assert_eq!(r["seed"], 11);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn atom_rates() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "a.json", ATOM);
    let r = report(&xistep(&["rates"], Some(&cfg)));
    assert_eq!(r["result"]["named"]["a21"], "11/20");
    assert_eq!(r["result"]["named"]["a3"], "9/20");
}

#[test]
fn malformed_rational_names_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.json", &ATOM.replace(r#""weight": "1""#, r#""weight": "1/0""#));
    let out = xistep(&["rates"], Some(&cfg));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("xi.atoms[0].weight"), "{err}");
    assert!(err.contains("zero denominator"), "{err}");
}

#[test]
fn alpha_must_match_the_set() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.json", &KINGMAN.replace(r#""alpha": "1/2""#, r#""alpha": "1/4""#));
    let out = xistep(&["stationary"], Some(&cfg));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

#[test]
fn first_stationary_moments_are_alpha() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "a.json", &ATOM.replace(r#""b_max": 5"#, r#""b_max": 5, "options": {"order": 1}"#));
    let r = report(&xistep(&["stationary"], Some(&cfg)));
    let moments = r["result"]["moments"].as_object().unwrap();
    assert_eq!(moments.len(), 2);
    assert_eq!(moments["1,0"], "1/2");
    assert_eq!(moments["0,1"], "1/2");
}

#[test]
fn reversibility_verdict() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "k.json", KINGMAN);
    let out = xistep(&["reversibility"], Some(&cfg));
    assert!(out.status.success());
    let r = &report(&out)["result"];
    assert_eq!(r["conditions"]["equal_migration"], true);
    assert_eq!(r["conditions"]["alpha_half"], true);
    assert_ne!(r["final_contradiction_residual"], "0");
    assert_eq!(r["verdict"], "not reversible");
}

#[test]
fn monte_carlo_commands_are_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "k.json", KINGMAN);
    for command in ["qt", "simulate"] {
        let a = xistep(&[command, "--seed", "5"], Some(&cfg));
        let b = xistep(&[command, "--seed", "5"], Some(&cfg));
        assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{command}");
    }
    let one = Command::new(env!("CARGO_BIN_EXE_xistep"))
        .args(["qt", "--seed", "5", "--config"])
        .arg(&cfg)
        .env("XISTEP_THREADS", "1")
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_xistep"))
        .args(["qt", "--seed", "5", "--config"])
        .arg(&cfg)
        .env("XISTEP_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn simulate_writes_a_trajectory() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "k.json", &KINGMAN.replace(r#""t": "1/4""#, r#""max_events": 1000"#));
    let csv = dir.path().join("t.csv");
    let out = xistep(&["simulate", "--trajectory", csv.to_str().unwrap()], Some(&cfg));
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["result"]["final"]["block_count"], 1);
    assert_eq!(r["result"]["coalescences"], 1);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,kind,colony,profile_or_block,block_count"));
    assert_eq!(lines.count() as u64, r["result"]["events"].as_u64().unwrap());
}

#[test]
fn truncation_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "z.json",
        &KINGMAN
            .replace(r#""kingman": "1""#, r#""kingman": "0""#)
            .replace(r#""t": "1/4""#, r#""max_events": 20"#),
    );
    let out = xistep(&["simulate"], Some(&cfg));
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["status"], "fail");
    assert_eq!(r["result"]["truncated"], true);
}

#[test]
fn stationary_cross_check() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "k.json",
        &KINGMAN.replace(r#""order": 1"#, r#""order": 2, "monte_carlo": true"#),
    );
    let out = xistep(&["stationary", "--replicas", "20000"], Some(&cfg));
    assert!(out.status.success());
    let r = report(&out);
    assert_eq!(r["result"]["moments"]["2,0"], "11/32");
    let lines = r["result"]["monte_carlo"]["lines"].as_array().unwrap();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0]["moment"], "0,0");
}

#[test]
fn hausdorff_passes_on_solved_moments() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "a.json", ATOM);
    let out = xistep(&["hausdorff"], Some(&cfg));
    assert!(out.status.success());
    assert_eq!(report(&out)["result"]["violations"], Value::Array(vec![]));
}

#[test]
fn selftest_passes_and_catches_a_perturbed_rate() {
    let clean = xistep(&["selftest"], None);
    assert!(clean.status.success());
    let other_seed = xistep(&["selftest", "--seed", "99"], None);
    assert!(other_seed.status.success());
    let perturbed = xistep(&["selftest", "--perturb-rate", "3;2;1=1/100"], None);
    assert_eq!(perturbed.status.code(), Some(1));
    let suites = report(&perturbed)["result"]["suites"].clone();
    let failed: Vec<_> = suites
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["passed"] == false)
        .map(|s| s["suite"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(failed, vec!["rate consistency"]);
}

#[test]
fn missing_config_is_an_error() {
    let out = xistep(&["rates"], None);
    assert_eq!(out.status.code(), Some(2));
}
