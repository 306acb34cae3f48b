use std::fs::File;
use std::process::{Command, Output};

use qfd_core::enumerate::read_bitmap;
use serde_json::Value;

fn qfd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfd")).args(args).env("QFD_THREADS", "2").output().expect("runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let o = qfd(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(&o)).expect("valid JSON")
}

#[test]
fn density_json() {
    let v = json(&["--json", "density", "x^2+y^2+z^2"]);
    assert_eq!(v["density"], "5/6");
    assert_eq!(v["factors"]["2"], "5/6");
    assert_eq!(v["case"], "product");
    let v = json(&["--json", "density", "x^2+y^2"]);
    assert_eq!(v["density"], "0/1");
    assert_eq!(v["case"], "anisotropic-binary-zero");
}

#[test]
fn coefficient_input_matches_expression() {
    let a = json(&["--json", "density", "--coeffs", "1,0,0,1,0,7"]);
    let b = json(&["--json", "density", "x^2+y^2+7*z^2"]);
    assert_eq!(a, b);
    let v = json(&["--json", "--float", "local", "--p", "2", "--coeffs", "1,0,-1"]);
    assert_eq!(v["density"], "3/4");
    assert_eq!(v["density_approx"], 0.75);
}

#[test]
fn table_example() {
    let v = json(&["--json", "table", "--p", "2", "x^2-4*y^2"]);
    let want: Vec<Value> = [0, 2, 0, 2, 5, 5, 5, 5].iter().map(|&x| Value::from(x)).collect();
    assert_eq!(v["v"], Value::Array(want));
    let v = json(&["--json", "table", "--p", "3", "x^2+y^2"]);
    assert_eq!(v["v"], serde_json::json!([0, 0, "inf", "inf"]));
}

#[test]
fn exceptions_listing() {
    let o = qfd(&["exceptions", "--limit", "50", "x^2+y^2+7*z^2+7*w^2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "3 6 21 42");
    let v = json(&["--json", "exceptions", "--limit", "200", "3*x^2+4*y^2+9*z^2"]);
    assert_eq!(v["exceptions"], serde_json::json!([1, 49, 169]));
}

#[test]
fn empirical_and_bitmap() {
    let dir = std::env::temp_dir().join(format!("qfd-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sq3.bin");
    let v = json(&["--json", "empirical", "--limit", "1000", "--bitmap", path.to_str().unwrap(), "x^2+y^2+z^2"]);
    assert_eq!(v["method"], "lattice-walk");
    let (limit, members) = read_bitmap(File::open(&path).unwrap()).unwrap();
    assert_eq!(limit, 1000);
    assert_eq!(members.len() as u64, v["count"].as_u64().unwrap());
    assert!(members.iter().all(|&m| m > 0) && !members.contains(&7) && members.contains(&6));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sieve_and_constructions() {
    let v = json(&["--json", "sieve", "--cutoff", "3", "x^2+y^2+z^2"]);
    assert_eq!(v["modulus"], "32");
    assert_eq!(v["density"], "23/32");
    let v = json(&["--json", "construct", "--alpha", "1/2", "--beta", "3/4"]);
    assert_eq!(v["interval"], serde_json::json!(["1/2", "3/4"]));
    assert!(v["primes"].as_array().unwrap().len() >= 1);
    let v = json(&["--json", "construct", "--v2", "3"]);
    assert_eq!(v["p"], 31);
    assert_eq!(v["density"], "40/93");
}

#[test]
fn check_report() {
    let v = json(&["--json", "check", "x^2+y^2+z^2"]);
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["applies"] == false || c["holds"] == true));
    let o = qfd(&["check", "x^2+y^2+z^2+w^2"]);
    assert!(stdout(&o).contains("density  1/1"));
}

#[test]
fn exit_codes() {
    assert_eq!(qfd(&["density", "x^2+"]).status.code(), Some(2));
    assert_eq!(qfd(&["density", "--coeffs", "1,2"]).status.code(), Some(2));
    assert_eq!(qfd(&["density", "x^2", "--coeffs", "1"]).status.code(), Some(2));
    assert_eq!(qfd(&["local", "--p", "4", "x^2+y^2"]).status.code(), Some(2));
    assert_eq!(qfd(&["empirical", "--limit", "0", "x^2+y^2"]).status.code(), Some(2));
    let o = qfd(&["exceptions", "--limit", "100", "x^2+y^2-z^2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("indefinite ternary"));
    assert_eq!(qfd(&["construct", "--alpha", "1/2", "--beta", "1/3"]).status.code(), Some(3));
}
