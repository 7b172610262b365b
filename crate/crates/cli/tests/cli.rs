use std::process::{Command, Output};

use serde_json::Value;

fn vlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlab")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = vlab(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn analysis(v: &Value, i: usize) -> &Value {
    &v["analyses"][i]
}

#[test]
fn minvec_e8() {
    let v = json(&["minvec", "--catalog", "E8", "--verify"]);
    let l = &analysis(&v, 0)["layers"];
    assert_eq!(l["radii"][0], 2);
    assert_eq!(l["counts"][0], 240);
    assert_eq!(v["verified"], true);
}

#[test]
fn layers_a2() {
    let v = json(&["layers", "--catalog", "A2", "--bound", "8"]);
    assert_eq!(analysis(&v, 0)["layers"]["radii"], serde_json::json!([2, 6, 8]));
}

#[test]
fn asymmetric_form_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"dim": 2, "gram": [[1, 2], [0, 1]]}"#).unwrap();
    let out = vlab(&["minvec", "--file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not symmetric"));
}

#[test]
fn indefinite_form_reports_the_failing_minor() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("indef.json");
    std::fs::write(&path, r#"{"dim": 2, "gram": [[1, 2], [2, 1]]}"#).unwrap();
    let out = vlab(&["minvec", "--file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("minor of order 2"));
}

#[test]
fn node_budget_exit_code() {
    let out = Command::new(env!("CARGO_BIN_EXE_vlab"))
        .args(["layers", "--catalog", "E8", "--bound", "10"])
        .env("VLAB_NODE_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn extremality_verdicts() {
    let a2 = json(&["extremality", "--catalog", "A2", "--verify"]);
    assert_eq!(analysis(&a2, 0)["result"]["verdict"], "strictly_extreme");
    assert!(analysis(&a2, 0)["result"]["eutaxy"]["weights"].is_array());
    assert_eq!(a2["verified"], true);
    let z2 = json(&["extremality", "--catalog", "Z2", "--verify"]);
    assert_eq!(analysis(&z2, 0)["result"]["verdict"], "not_extreme");
    assert_eq!(analysis(&z2, 0)["result"]["subset_search"]["exhaustive"], true);
    let e8 = json(&["extremality", "--catalog", "E8", "--space", "dual-product", "--verify"]);
    assert_eq!(analysis(&e8, 0)["result"]["verdict"], "strictly_extreme");
    assert_eq!(e8["verified"], true);
    let d4 = json(&["dual-extreme", "--catalog", "D4"]);
    assert!(analysis(&d4, 0)["result"]["verdict"].is_string());
}

#[test]
fn invariant_and_exterior_spaces() {
    let v = json(&["extremality", "--catalog", "D4", "--space", "invariant", "--verify"]);
    assert_eq!(v["verified"], true);
    let v = json(&["extremality", "--catalog", "D4", "--space", "exterior", "--m", "2", "--verify"]);
    assert_eq!(analysis(&v, 0)["space"]["kind"], "exterior");
    assert_eq!(v["verified"], true);
}

#[test]
fn design_e8_layers() {
    let v = json(&["design", "--catalog", "E8", "--strength", "4", "--bound", "6", "--verify"]);
    let a = analysis(&v, 0);
    assert_eq!(a["all_hold"], true);
    assert_eq!(a["layers"].as_array().unwrap().len(), 3);
    assert_eq!(v["verified"], true);
}

#[test]
fn design_z2_fails_with_half() {
    let v = json(&["design", "--catalog", "Z2", "--strength", "2,2"]);
    let r = &analysis(&v, 0)["layers"][0]["verdict"]["residuals"];
    assert_eq!(r["S22[0,0]"], "1/2");
}

#[test]
fn monte_carlo_design_is_seeded() {
    let args = ["design", "--catalog", "D4", "--m", "2", "--strength", "2", "--samples", "4000", "--seed", "3", "--verify"];
    let a = vlab(&args);
    let b = vlab(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn zeta_hexagonal_value() {
    let v = json(&["zeta", "--catalog", "A2", "--s", "2", "--bound", "200"]);
    let r = &analysis(&v, 0)["result"];
    let value = r["value"].as_f64().unwrap();
    let tail = r["tail_estimate"].as_f64().unwrap();
    // 6 zeta(2) L(2, chi_-3) / 4 for the form with minimum 2
    let exact = 1.927_786_433_226_22;
    assert!(value < exact && exact - value <= tail);
    assert!(r["tail_model"].as_str().unwrap().contains("heuristic"));
}

#[test]
fn zeta_checkers_and_probe() {
    let v = json(&["zeta", "--catalog", "A2", "--check", "coulangeon", "--bound", "14", "--verify"]);
    assert_eq!(analysis(&v, 0)["result"]["holds_to_bound"], true);
    assert_eq!(v["verified"], true);
    let v = json(&["zeta", "--catalog", "Z2", "--check", "delone", "--bound", "10", "--verify"]);
    assert_eq!(analysis(&v, 0)["result"]["holds_to_bound"], false);
    assert_eq!(v["verified"], true);
    let v = json(&["zeta", "--catalog", "A2", "--s", "3", "--probe", "--directions", "3", "--bound", "100"]);
    assert_eq!(analysis(&v, 0)["result"]["all_second_differences_positive"], true);
    let out = vlab(&["zeta", "--catalog", "A2", "--s", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invariant_e8() {
    let v = json(&["invariant", "--catalog", "E8", "--verify"]);
    let r = &analysis(&v, 0)["result"];
    assert_eq!((r["fixed_dim_2"].as_u64(), r["fixed_dim_4"].as_u64()), (Some(1), Some(1)));
    assert_eq!(r["passes_fc4"], true);
    assert_eq!(v["verified"], true);
}

#[test]
fn invariant_rejects_non_isometry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gens.json");
    std::fs::write(&path, r#"{"dim": 2, "generators": [[[1, 1], [0, 1]]]}"#).unwrap();
    let out = vlab(&["invariant", "--catalog", "Z2", "--generators", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rankin_d4() {
    let v = json(&["rankin", "--catalog", "D4", "--m", "2"]);
    assert_eq!(analysis(&v, 0)["result"]["exact_value"], "3/2");
}

#[test]
fn catalog_lists_entries() {
    let v = json(&["catalog"]);
    let names: Vec<&str> = analysis(&v, 0)["entries"].as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    for n in ["Z2", "A2", "D4", "E6", "E7", "E8", "BW16"] {
        assert!(names.contains(&n));
    }
}

#[test]
fn report_round_trips_and_replays() {
    let first = vlab(&["report", "--catalog", "D4"]);
    assert!(first.status.success());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    std::fs::write(&path, &first.stdout).unwrap();
    let again = vlab(&["report", "--input", path.to_str().unwrap()]);
    assert_eq!(first.stdout, again.stdout);
    let v = json(&["report", "--input", path.to_str().unwrap(), "--verify"]);
    assert_eq!(v["verified"], true);
}

#[test]
fn tampered_certificate_fails_verification() {
    let first = json(&["extremality", "--catalog", "A2"]);
    let mut v = first.clone();
    v["analyses"][0]["result"]["perfection"]["rank"] = serde_json::json!(2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    let out = vlab(&["report", "--input", path.to_str().unwrap(), "--verify"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_is_deterministic() {
    let a = vlab(&["extremality", "--catalog", "D4"]);
    let b = vlab(&["extremality", "--catalog", "D4", "--threads", "1"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn text_format_and_timing() {
    let out = vlab(&["minvec", "--catalog", "A2", "--format", "text", "--timing"]);
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.contains("layer 2: 6 vectors"));
    assert!(s.contains("time:"));
    let v = json(&["minvec", "--catalog", "A2"]);
    assert!(v.get("timing_ms").is_none());
}
