use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn transquad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transquad")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("report JSON: {e}\n{}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn coords(v: &Value) -> Vec<f64> {
    v["coords"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn sum_geometric_gallery() {
    let o = transquad(&["sum", "--gallery", "geo-lambda0", "--tol", "1e-9"]);
    assert_eq!(code(&o), 0);
    let r = report(&o);
    assert_eq!(r["schema"], "transquad.report");
    assert_eq!(r["version"], 1);
    assert_eq!(r["status"], "certified");
    assert_eq!(r["result"]["summable"]["value"], "true");
    let total = &r["result"]["total"];
    let res = total["residual"].as_f64().unwrap();
    assert!(res <= 1e-9);
    assert!((coords(total)[0] - 2.0).abs() <= res + 1e-15);
}

#[test]
fn integrate_bounded_series_riemann() {
    let o = transquad(&["integrate", "--mapping", "gallery:ex41.g0", "--interval", "0", "1", "--mode", "riemann", "--tol", "1e-4"]);
    assert_eq!(code(&o), 0);
    let r = report(&o);
    assert_eq!(r["result"]["verdict"]["value"], "true");
    // the closed-form primitive takes the same value at both ends of [0, 1]
    let v = &r["result"]["integral"];
    let res = v["residual"].as_f64().unwrap();
    for c in coords(v) {
        assert!(c.abs() <= 1e-3 && c.abs() <= res, "coordinate {c}");
    }
}

#[test]
fn integrate_singular_series_not_riemann() {
    let o = transquad(&["integrate", "--mapping", "gallery:ex43.g^m", "--mode", "riemann"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["result"]["verdict"]["value"], "false");
    assert_eq!(r["result"]["verdicts"]["bochner"]["value"], "true");
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_formula = write(dir.path(), "bad.json", r#"{"set": {"kind": "dyadic"}, "value": "2^(-m)"}"#);
    let bad_json = write(dir.path(), "broken.json", "{");
    let missing = dir.path().join("missing.json");
    for args in [
        vec!["sum", "--spec", bad_formula.as_str()],
        vec!["sum", "--spec", bad_json.as_str()],
        vec!["sum", "--spec", missing.to_str().unwrap()],
        vec!["sum", "--gallery", "no-such-entry"],
        vec!["sum", "--gallery", "ex41.g0"],
        vec!["sum", "--gallery", "geo-lambda0", "--tol", "-1"],
        vec!["sum"],
        vec!["integrate", "--mapping", "gallery:ex41.g0", "--interval", "1", "0"],
        vec!["frobnicate"],
    ] {
        let o = transquad(&args);
        assert_eq!(code(&o), 1, "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
    assert_eq!(code(&transquad(&["--help"])), 0);
    assert_eq!(code(&transquad(&["--version"])), 0);
}

#[test]
fn heuristic_verdicts_exit_two() {
    let o = transquad(&["integrate-step", "--gallery", "ex1", "--mode", "hl"]);
    assert_eq!(code(&o), 2);
    assert_eq!(report(&o)["status"], "inconclusive");
}

#[test]
fn certified_step_integral() {
    let o = transquad(&["integrate-step", "--gallery", "ex0", "--mode", "bochner", "--format", "csv", "--grid", "3"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,f_1,residual"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.json");
    let p2 = dir.path().join("b.json");
    for p in [&p1, &p2] {
        let o = transquad(&["sum", "--gallery", "alt-lambda1", "--tol", "1e-6", "--report", p.to_str().unwrap()]);
        assert_ne!(code(&o), 1);
    }
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn family_spec_nested_sum() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "fam.json",
        r#"{"set": {"kind": "custom", "layers": [{"kind": "dyadic"}, {"kind": "dyadic"}]},
            "value": "2^(-n0) * 3^(-n1)",
            "remainder": "if(len == 2, 2^(-n0) * 3^(-n1) / 2, 1.5 * 2^(-n0))",
            "nonnegative": true}"#,
    );
    let csv = dir.path().join("table.csv");
    let o = transquad(&["sum", "--spec", &spec, "--tol", "1e-8", "--budget", "4", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let total = &report(&o)["result"]["total"];
    assert!((coords(total)[0] - 3.0).abs() <= total["residual"].as_f64().unwrap() + 1e-12);
    let table = std::fs::read_to_string(csv).unwrap();
    assert_eq!(
        table,
        "address,position,value_1,residual,exact\n\"(0,0)\",0,0,0,true\n\"(0,1)\",0.25,1,0,true\n\
         \"(0,2)\",0.375,1.3333333333333333,0,true\n\"(0,3)\",0.4375,1.4444444444444444,0,true\n"
    );
}

#[test]
fn lipschitz_formula_mapping() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sin.json", r#"{"domain": [0, 3.141592653589793], "value": "sin(t)", "lipschitz": 1}"#);
    let knots = dir.path().join("knots.csv");
    let prim = dir.path().join("prim.csv");
    let o = transquad(&[
        "integrate", "--mapping", &spec, "--mode", "riemann", "--tol", "1e-3",
        "--knots", knots.to_str().unwrap(), "--csv", prim.to_str().unwrap(), "--grid", "5",
    ]);
    assert_eq!(code(&o), 0);
    let v = &report(&o)["result"]["integral"];
    let res = v["residual"].as_f64().unwrap();
    assert!(res <= 1e-3);
    assert!((coords(v)[0] - 2.0).abs() <= res);
    let k = std::fs::read_to_string(knots).unwrap();
    assert!(k.starts_with("left,right,kind,bound\n0,"));
    let p = std::fs::read_to_string(prim).unwrap();
    let last = p.lines().last().unwrap();
    let f: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    let r: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
    assert!((f - 2.0).abs() <= r + 1e-3, "{last}");
}

#[test]
fn gauge_defect_table() {
    let o = transquad(&["gauge-check", "--gallery", "ex1", "--scales", "4,6", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["k", "s", "cells", "hl", "hk"]);
    assert_eq!(rows.len(), 3);
    let hl: Vec<f64> = rows[1..].iter().map(|r| r[3].parse().unwrap()).collect();
    let hk: Vec<f64> = rows[1..].iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(hl[1] < hl[0]);
    assert!(hk.iter().zip(&hl).all(|(k, l)| k <= l));
}

#[test]
fn impulsive_spec_exact_staircase() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "imp.json",
        r#"{"interval": [0, 1], "dim": 2, "forcing": {"value": "i", "primitive": "i*t"},
            "impulses": {"set": {"kind": "finite", "points": [0.25, 0.5]}, "value": "1/i"},
            "iteration": {"grid": 16}}"#,
    );
    let log = dir.path().join("log.csv");
    let o = transquad(&["impulsive-solve", "--spec", &spec, "--format", "csv", "--log", log.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,u_1,u_2,chain,side"));
    // u(t) = (t, 2t) + (1, 1/2) per impulse passed
    assert!(text.lines().any(|l| l == "1,3,3,lower,left"));
    assert!(text.lines().any(|l| l == "0.25,1.25,1,lower,right"));
    assert!(std::fs::read_to_string(log).unwrap().starts_with("chain,iteration,change\n"));
}

#[test]
fn thread_cap() {
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_transquad"))
            .args(["sum", "--gallery", "geo-lambda0"])
            .env("TRANSQUAD_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("1")), 0);
    assert_eq!(code(&run("zero")), 1);
}
