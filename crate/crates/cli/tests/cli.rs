use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

fn grunbaum(dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_grunbaum"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run grunbaum");
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn report(dir: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(dir.join("out").join(name)).expect("report");
    serde_json::from_str(&text).expect("json")
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

fn close(v: &Value, target: f64, tol: f64) -> bool {
    (v.as_f64().expect("number") - target).abs() <= tol
}

#[test]
fn cone_model_reaches_equality() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(grunbaum(d, &["models", "--out", "models"]).0, 0);
    for f in ["cone.json", "exponential.json", "neg_cone.json", "cylinder.json"] {
        assert!(d.join("models").join(f).exists(), "{f}");
    }
    let (code, stdout, _) = grunbaum(d, &["verify1d", "models/cone.json", "--class", "positive", "--n", "2", "--out", "out"]);
    assert_eq!(code, 0, "{stdout}");
    let r = report(d, "verify1d.json");
    assert_eq!(r["result"]["verification"]["equality"], true);
    assert!(close(&r["result"]["verification"]["left_mass"], 4.0 / 9.0, 1e-9));
}

#[test]
fn uniform_margin_is_one_eighteenth() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "u.json", r#"{"family": "uniform", "support": [-1, 1]}"#);
    let (code, ..) = grunbaum(d, &["verify1d", "u.json", "--class", "positive", "--n", "2", "--out", "out"]);
    assert_eq!(code, 0);
    let r = report(d, "verify1d.json");
    assert!(close(&r["result"]["verification"]["left_margin"], 1.0 / 18.0, 1e-12));
    assert!(close(&r["result"]["verification"]["right_margin"], 1.0 / 18.0, 1e-12));
}

#[test]
fn off_center_input_needs_recenter() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "u.json", r#"{"family": "uniform", "support": [0, 2]}"#);
    let args = ["verify1d", "u.json", "--class", "positive", "--n", "2", "--out", "out"];
    let (code, _, stderr) = grunbaum(d, &args);
    assert_eq!(code, 2);
    assert!(stderr.contains("--recenter"), "{stderr}");
    let mut with = args.to_vec();
    with.push("--recenter");
    assert_eq!(grunbaum(d, &with).0, 0);
}

#[test]
fn malformed_input_exits_two() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "bad.json", "{ not json");
    assert_eq!(grunbaum(d, &["verify1d", "bad.json", "--class", "log-concave"]).0, 2);
    assert_eq!(grunbaum(d, &["verify1d", "missing.json", "--class", "log-concave"]).0, 2);
    write(d, "u.json", r#"{"family": "uniform", "support": [-1, 1]}"#);
    assert_eq!(grunbaum(d, &["verify1d", "u.json", "--class", "positive"]).0, 2);
    assert_eq!(grunbaum(d, &["verify1d", "u.json", "--class", "log-concave", "--tol", "-1"]).0, 2);
}

#[test]
fn triangle_depth_defaults_to_barycenter() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "tri.json", r#"{"family": "uniform_simplex", "params": {"n": 2}}"#);
    let args = [
        "depth", "tri.json", "--s", "0.5", "--mc-samples", "200000", "--seed", "4", "--out", "out", "--format",
        "report,csv,svg",
    ];
    let (code, stdout, _) = grunbaum(d, &args);
    assert_eq!(code, 0, "{stdout}");
    let r = report(d, "depth.json");
    let v = &r["result"]["verification"];
    assert!(close(&v["report"]["depth"], 4.0 / 9.0, 0.01));
    assert!(close(&v["barycenter"][0], 1.0 / 3.0, 0.01) && close(&v["barycenter"][1], 1.0 / 3.0, 0.01));
    assert_eq!(r["config"]["seed"], 4);
    assert!(d.join("out/depth.csv").exists());
    let svg = std::fs::read_to_string(d.join("out/depth.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

#[test]
fn gaussian_depth_clears_inverse_e() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "g.json", r#"{"family": "gaussian_nd", "params": {"mean": [0, 0]}}"#);
    let (code, stdout, _) = grunbaum(d, &["depth", "g.json", "--s", "0", "--mc-samples", "200000", "--out", "out"]);
    assert_eq!(code, 0, "{stdout}");
    let r = report(d, "depth.json");
    let depth = r["result"]["verification"]["report"]["depth"].as_f64().unwrap();
    assert!(depth >= (-1f64).exp() && (depth - 0.5).abs() < 0.01, "{depth}");
}

#[test]
fn depth_at_a_given_point() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "pts.csv", "x,y\n0,0\n1,0\n0,1\n1,1\n");
    let (code, ..) = grunbaum(d, &["depth", "pts.csv", "--point", "0.5,0.5", "--out", "out"]);
    assert_eq!(code, 0);
    let r = report(d, "depth.json");
    assert!(close(&r["result"]["depth"]["depth"], 0.5, 1e-12));
}

#[test]
fn triangle_marginal_is_linear_concave() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "tri.json", r#"{"family": "grid_simplex", "params": {"n": 2, "cells": 200}}"#);
    let (code, stdout, _) = grunbaum(d, &["marginal", "tri.json", "--direction", "1,0", "--s", "0.5", "--out", "out"]);
    assert_eq!(code, 0, "{stdout}");
    let r = report(d, "marginal.json");
    assert_eq!(r["result"]["class_check"]["passed"], true);
}

#[test]
fn cylinder_product_is_balanced() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(grunbaum(d, &["models", "--out", "models"]).0, 0);
    let (code, ..) = grunbaum(d, &["product", "models/cylinder.json", "--out", "out"]);
    assert_eq!(code, 0);
    let r = report(d, "product.json");
    assert!(close(&r["result"]["verification"]["left_mass"], 0.5, 1e-10));
    assert!(close(&r["result"]["verification"]["right_mass"], 0.5, 1e-10));
}

fn needle_file(shift_fourth: bool) -> String {
    let needles: Vec<Value> = (0..16)
        .map(|i| {
            let support = if shift_fourth && i == 3 { [-0.5, 1.5] } else { [-1.0, 1.0] };
            serde_json::json!({
                "weight": 1.0 / 16.0,
                "fiber": i,
                "density": {"family": "uniform", "support": support},
            })
        })
        .collect();
    serde_json::json!({ "needles": needles }).to_string()
}

#[test]
fn injected_needle_fault_is_reported() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(grunbaum(d, &["models", "--out", "models"]).0, 0);
    write(d, "good.json", &needle_file(false));
    write(d, "bad.json", &needle_file(true));
    let (code, ..) = grunbaum(d, &["needles", "good.json", "--product", "models/cylinder.json", "--out", "out"]);
    assert_eq!(code, 0);
    let (code, stdout, _) = grunbaum(d, &["needles", "bad.json", "--product", "models/cylinder.json", "--out", "out"]);
    assert_eq!(code, 1);
    assert!(stdout.contains("[3]"), "{stdout}");
    let r = report(d, "needles.json");
    assert_eq!(r["result"]["verification"]["failing"], serde_json::json!([3]));
}

#[test]
fn uniform_stability_certificate() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "u.json", r#"{"family": "uniform", "support": [-1, 1]}"#);
    let (code, ..) = grunbaum(d, &["stability", "u.json", "--class", "positive", "--n", "2", "--out", "out"]);
    assert_eq!(code, 0);
    let r = report(d, "stability.json");
    let c = &r["result"]["certificate"];
    assert!(close(&c["epsilon"], 0.125, 1e-12));
    assert!(close(&c["lhs"], 0.125, 1e-6));
    assert!(close(&c["rhs"], 0.2289, 1e-3));
}

#[test]
fn needle_stability_selects_everything() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "n.json", &needle_file(false));
    let args = [
        "stability", "--needles", "n.json", "--class", "positive", "--n", "2", "--epsilon", "0.125", "--delta", "0.5",
        "--out", "out",
    ];
    let (code, ..) = grunbaum(d, &args);
    assert_eq!(code, 0);
    let r = report(d, "stability.json");
    let s = &r["result"]["needle_stability"];
    assert!(close(&s["selected_mass"], 1.0, 1e-12));
    assert!(close(&s["epsilon_prime"], 0.6875, 1e-15));
}

#[test]
fn config_file_and_reproducible_reports() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write(d, "tri.json", r#"{"family": "uniform_simplex", "params": {"n": 2}}"#);
    write(d, "cfg.json", r#"{"input": "tri.json", "s": 0.5, "mc_samples": 20000, "seed": 9, "directions": 90, "tol": 0.02}"#);
    let args = ["depth", "--config", "cfg.json", "--seed", "11", "--out", "out", "--reproducible"];
    assert_eq!(grunbaum(d, &args).0, 0);
    let first = std::fs::read(d.join("out/depth.json")).unwrap();
    assert_eq!(grunbaum(d, &args).0, 0);
    assert_eq!(first, std::fs::read(d.join("out/depth.json")).unwrap());
    let r = report(d, "depth.json");
    assert_eq!(r["config"]["seed"], 11);
    assert_eq!(r["config"]["directions"], 90);
    assert!(r.get("generated_unix").is_none());

    assert_eq!(grunbaum(d, &["depth", "--config", "cfg.json", "--out", "out"]).0, 0);
    assert!(report(d, "depth.json").get("generated_unix").is_some());
}
