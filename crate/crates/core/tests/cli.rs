use serde_json::Value;
use std::process::Command;

fn primeend(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_primeend")).args(args).output().expect("binary runs");
    let body = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), body)
}

#[test]
fn gallery_list_has_eleven_entries() {
    let (code, v) = primeend(&["gallery", "list"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"].as_array().unwrap().len(), 11);
    assert_eq!(v["tool"], "primeend");
}

#[test]
fn gallery_build_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap();
    let out = dir.path().to_str().unwrap();
    primeend(&["gallery", "build", "slit_disk", "--h", "0.02", "--out", out]);
    let (json, svg) = (read("slit_disk.json"), read("slit_disk.svg"));
    let (code, _) = primeend(&["gallery", "build", "slit_disk", "--h", "0.02", "--out", out]);
    assert_eq!(code, 0);
    assert_eq!(json, read("slit_disk.json"));
    assert_eq!(svg, read("slit_disk.svg"));
}

#[test]
fn analyze_slit_point_has_two_prime_ends() {
    let (code, v) = primeend(&["analyze", "slit_disk", "--h", "0.01", "--point=-0.5,0"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["prime_ends"]["count"], 2);
    let (_, v) = primeend(&["analyze", "unit_square", "--h", "0.01", "--point", "0.5,0"]);
    assert_eq!(v["result"]["prime_ends"]["count"], 1);
}

#[test]
fn modulus_from_plate_files() {
    let dir = tempfile::tempdir().unwrap();
    let e = dir.path().join("e.json");
    let f = dir.path().join("f.json");
    std::fs::write(&e, r#"{"disk": {"center": {"x": 0.0, "y": 0.0}, "r": 0.25}}"#).unwrap();
    std::fs::write(&f, r#""boundary""#).unwrap();
    let (code, v) =
        primeend(&["modulus", "disk", "--h", "0.015625", "--plates", e.to_str().unwrap(), f.to_str().unwrap()]);
    assert_eq!(code, 0);
    let value = v["result"]["value"].as_f64().unwrap();
    assert!((value - 4.532).abs() < 0.2, "{value}");
}

#[test]
fn errors_map_to_exit_codes() {
    let (code, v) = primeend(&["gallery", "build", "moebius"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "UnknownGallery");
    let (code, _) = primeend(&["gallery", "build", "topologist_comb", "--h", "0.1", "--depth", "8"]);
    assert_eq!(code, 3);
}

#[test]
fn john_assess_square() {
    let (code, v) = primeend(&["john", "unit_square", "--h", "0.03125", "assess"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["verdict"], "john");
}

#[test]
fn regress_subset_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let (code, _) = primeend(&["regress", "--only", "domain", "--report", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(v["result"]["total"], 1);
    assert_eq!(v["result"]["criteria"][0]["id"], 14);
}
