use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn plcircle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plcircle")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn construct_and_query_two_break_map() {
    let dir = tempfile::tempdir().unwrap();
    let f = json(&plcircle(&["construct", "boshernitzan", "--l1", "2", "--l2", "1/3"]));
    assert_eq!(f["pieces"][1]["left"], "2/5");
    let path = write(dir.path(), "f.json", &f);

    let sym = json(&plcircle(&["rho", &path, "--mode", "symbolic"]));
    assert_eq!((sym["alpha"].as_str(), sym["beta"].as_str()), (Some("2"), Some("6")));
    let exact = json(&plcircle(&["rho", &path]));
    assert_eq!(exact["kind"], "absent");
    assert_eq!(exact["reason"], "DepthExhausted");
    let iv = json(&plcircle(&["rho", &path, "--mode", "interval", "--iters", "2000"]));
    let x = 2f64.ln() / 6f64.ln();
    assert!((iv["approx"].as_f64().unwrap() - x).abs() < 1e-3);

    let d = json(&plcircle(&["dcheck", &path]));
    assert_eq!((d["verdict"].as_str(), d["pi"].as_str()), (Some("yes"), Some("6")));
    let e = json(&plcircle(&["eval", &path, "--x", "2/5"]));
    assert_eq!((e["lift"].as_str(), e["value"].as_str()), (Some("1"), Some("0")));

    let inv = write(dir.path(), "inv.json", &json(&plcircle(&["invert", &path])));
    let id = json(&plcircle(&["compose", &path, &inv]));
    assert_eq!(id["pieces"].as_array().unwrap().len(), 1);
    assert_eq!(id["f0"], "0");
}

#[test]
fn finite_order_construction() {
    let out = plcircle(&["construct", "finite-order", "--m", "3", "--q", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NotRealizable"));

    let dir = tempfile::tempdir().unwrap();
    let f = json(&plcircle(&["construct", "finite-order", "--m", "3", "--q", "2", "--r", "2"]));
    let path = write(dir.path(), "f.json", &f);
    let rho = json(&plcircle(&["rho", &path]));
    assert_eq!((rho["p"].as_str(), rho["q"].as_str()), (Some("1"), Some("2")));
    let sq = json(&plcircle(&["power", &path, "--n", "2"]));
    assert_eq!(sq["pieces"].as_array().unwrap().len(), 1);
    assert_eq!(sq["f0"], "0");
    assert_eq!(json(&plcircle(&["member", &path, "--basis", "3"]))["member"], true);
}

#[test]
fn commuting_family_lives_on_the_right_circle() {
    let fam = json(&plcircle(&["construct", "stein-family", "--basis", "2,3"]));
    let fam = fam.as_array().unwrap();
    assert_eq!(fam.len(), 2);
    assert!(fam.iter().all(|f| f["circumference"] == "5"));
}

#[test]
fn witnesses_and_transport() {
    let w = json(&plcircle(&["bs-witness", "--l", "1", "--lp", "2", "--basis", "2,3"]));
    assert_eq!(w["exists"], true);
    let none = json(&plcircle(&["bs-witness", "--l", "1", "--lp", "1/5", "--basis", "2"]));
    assert_eq!(none["exists"], false);

    let dir = tempfile::tempdir().unwrap();
    let r = json(&plcircle(&["construct", "rotation", "--r", "1", "--a", "1/4"]));
    let path = write(dir.path(), "r.json", &r);
    let moved = json(&plcircle(&["transport", &path, "--to", "3", "--basis", "2,3"]));
    assert_eq!(moved["circumference"], "3");
}

#[test]
fn suites_and_exit_codes() {
    let out = plcircle(&["suite", "nosuch"]);
    assert_eq!(out.status.code(), Some(2));

    let out = plcircle(&["suite", "thm2", "--bases", "3,5", "--k", "1"]);
    let report = json(&out);
    assert_eq!(report["summary"]["fail"], 0);

    let out = plcircle(&["suite", "thm1", "--m", "2..3", "--r", "1..2", "--q", "1..4", "--samples", "0"]);
    assert_eq!(json(&out)["summary"]["pass"], 16);

    let out = plcircle(&["suite", "thm2", "--bases", "2,4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_input_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"circumference":"1"}"#).unwrap();
    let out = plcircle(&["rho", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed JSON"));

    let out = plcircle(&["construct", "boshernitzan", "--l1", "0.5", "--l2", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = plcircle(&["construct", "boshernitzan", "--l1", "2", "--l2", "3"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_and_out_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"basis": "2,3", "r": "1"}"#).unwrap();
    let out = dir.path().join("fam.json");
    let res = plcircle(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "construct", "stein-family"]);
    assert!(res.status.success());
    assert!(res.stdout.is_empty());
    let fam: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(fam.as_array().unwrap().len(), 2);

    std::fs::write(&cfg, r#"{"basis": "2,4"}"#).unwrap();
    let res = plcircle(&["--config", cfg.to_str().unwrap(), "construct", "stein-family"]);
    assert_eq!(res.status.code(), Some(2));
    std::fs::write(&cfg, r#"{"colour": 1}"#).unwrap();
    let res = plcircle(&["--config", cfg.to_str().unwrap(), "construct", "stein-family"]);
    assert_eq!(res.status.code(), Some(2));

    let csv = dir.path().join("stairs.csv");
    let res = plcircle(&["--out", csv.to_str().unwrap(), "export-staircase", "--samples", "3", "--iters", "50"]);
    assert!(res.status.success());
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 4);
}
