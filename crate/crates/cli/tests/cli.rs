use std::f64::consts::E;
use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn lightcone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lightcone"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(args: &[&str]) -> (i32, Value) {
    let out = lightcone(args);
    let text = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    (out.status.code().unwrap(), json)
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn conformal_report_at_the_poles() {
    let (code, r) = report(&["conformal", "report", "--n", "2", "--field", "x3", "--points", "poles"]);
    assert_eq!(code, 0);
    let keys: Vec<&str> = r.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    for key in ["command", "params", "results", "quadrature", "tolerances", "pass"] {
        assert!(keys.contains(&key), "{keys:?}");
    }
    assert_eq!(r["pass"], Value::Bool(true));
    let points = r["results"]["points"].as_array().unwrap();
    assert!((f(&points[0]["mean_curvature_sq"]) - 3.0 / (E * E)).abs() < 1e-12);
    assert!((f(&points[1]["mean_curvature_sq"]) + E * E).abs() < 1e-12);
    assert!(r.get("wall_time_s").is_some());
}

#[test]
fn torus_audit_passes() {
    let args = [
        "audit", "minkowski", "--example", "torus", "--R", "2", "--rho", "0.7", "--a", "1,0.3,0,0", "--grid", "256",
    ];
    let (code, r) = report(&args);
    assert_eq!(code, 0);
    assert!(f(&r["results"][0]["value"]).abs() < 1e-6);
    assert_eq!(r["pass"], Value::Bool(true));
}

#[test]
fn solve_lands_in_the_family() {
    let (code, r) = report(&["solve", "--k", "1", "--seed", "7", "--lmax", "32", "--quiet"]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["results"]["in_family"], Value::Bool(true));
    assert!(f(&r["results"]["independent_residual"]) < 1e-9);
    assert!((f(&r["results"]["classification"]["k_hat"]) - 1.0).abs() < 1e-6);
}

#[test]
fn saved_coefficients_classify_and_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.sh");
    let p = path.to_str().unwrap();
    let (code, _) = report(&["solve", "--k", "4", "--lmax", "16", "--field", "0.2*x1*x2", "--save-coeffs", p]);
    assert_eq!(code, 0);
    assert!(fs::read_to_string(&path).unwrap().starts_with("shcoeffs n=2 lmax=16"));
    let (code, r) = report(&["classify", "--coeffs", p]);
    assert_eq!(code, 0);
    assert!((f(&r["results"]["k_hat"]) - 4.0).abs() < 1e-6);
    let (code, r) = report(&["solve", "--k", "4", "--lmax", "16", "--coeffs", p]);
    assert_eq!(code, 0);
    assert!(r["results"]["diagnostics"]["iterations"].as_u64().unwrap() <= 1);
}

#[test]
fn obata_shaped_expression() {
    let pts = "0.6,0,0.8;-0.36,0.48,0.8;0,0,-1";
    let (_, expr) = report(&["field", "eval", "--field", "log(1/( -(-2) + 1.732*x1 ))", "--points", pts]);
    let (_, fam) = report(&["field", "eval", "--v", &format!("-2,{},0,0", 3f64.sqrt()), "--points", pts]);
    let (a, b) = (expr["results"]["points"].as_array().unwrap(), fam["results"]["points"].as_array().unwrap());
    for (p, q) in a.iter().zip(b) {
        let x1 = f(&p["point"][0]);
        assert!((f(&p["value"]) + (2.0 + 1.732 * x1).ln()).abs() < 1e-15);
        assert!((f(&p["value"]) - f(&q["value"])).abs() < 1e-4);
        assert!((f(&p["laplacian"]) - f(&q["laplacian"])).abs() < 1e-3);
    }
}

#[test]
fn syntax_errors_report_the_offset() {
    let out = lightcone(&["field", "eval", "--field", "exp("]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("offset 4"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["frobnicate"],
        vec!["audit", "minkowski", "--a", "1,x"],
        vec!["audit", "minkowski", "--example", "klein-bottle"],
        vec!["audit", "minkowski", "--example", "flat-cylinder"],
        vec!["conformal", "report", "--field", "x3", "--points", "1,2"],
        vec!["classify", "--field", "x3", "--v", "-1,0,0,0"],
        vec!["solve", "--field", "x4"],
    ] {
        let out = lightcone(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn failing_reports_exit_with_one() {
    let (code, r) = report(&["classify", "--field", "x3", "--quiet"]);
    assert_eq!(code, 1);
    assert_eq!(r["pass"], Value::Bool(false));
    assert!(f(&r["results"]["rho"]) > 1e-2);
}

#[test]
fn reports_are_deterministic_and_round_trip() {
    let args = ["embed", "report", "--example", "torus", "--points", "random:3", "--seed", "5", "--no-meta"];
    let a = lightcone(&args);
    let b = lightcone(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(!text.contains("wall_time"));
    let parsed: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", text);
}

#[test]
fn out_file_csv_and_quiet() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let out = lightcone(&[
        "field", "eval", "--field", "x1*x2", "--format", "csv", "--out", path.to_str().unwrap(), "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty() && out.stderr.is_empty());
    let csv = fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("key,value\n"));
    assert!(csv.contains("\ncommand,field eval\n") && csv.contains("\npass,true\n"));
    assert!(csv.contains("results.points.1.laplacian,"));
}

#[test]
fn catalog_reports() {
    for example in ["flat-cylinder", "poincare-halfplane", "euclid-graph", "round-graph", "torus"] {
        let (code, r) = report(&["embed", "report", "--example", example, "--quiet"]);
        assert_eq!(code, 0, "{example}: {r}");
    }
    let (code, r) = report(&["embed", "report", "--example", "snvr", "--v", "-1.25,0.75,0,0", "--r", "2", "--quiet"]);
    assert_eq!(code, 0);
    let a_eta = &r["results"]["points"][0]["a_eta"];
    assert!((f(&a_eta[0][0]) + 0.125).abs() < 1e-6);
}

#[test]
fn audit_kinds() {
    let (code, r) = report(&["audit", "parallel", "--example", "round-graph", "--grid", "12", "--quiet"]);
    assert_eq!(code, 0);
    assert_eq!(r["results"].as_array().unwrap().len(), 2);
    let (code, _) = report(&[
        "audit", "inequality", "--example", "obata-graph", "--v", "-1.25,0,0.75,0", "--k", "2", "--grid", "24",
    ]);
    assert_eq!(code, 0);
    let (code, r) = report(&[
        "audit", "beltrami", "--example", "snvr", "--v", "-1.25,0,0.75,0", "--a", "1,0.5,0,-2", "--grid", "16",
    ]);
    assert_eq!(code, 0);
    assert!(f(&r["results"][0]["pointwise"][0]["value"]) < 1e-5);
    let (code, r) = report(&[
        "audit", "minkowski", "--phi", "1 + 0.5*sin(u)", "--grid", "32", "--convergence", "--quiet",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["results"][0]["convergence"].as_array().unwrap().len(), 3);
}

#[test]
fn small_sweep() {
    let (code, r) = report(&["sweep", "--k", "0.5,2", "--seeds", "2", "--lmax", "16", "--quiet"]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["results"]["records"].as_array().unwrap().len(), 4);
    assert_eq!(r["results"]["summary"][1]["in_family"], 2);
}
