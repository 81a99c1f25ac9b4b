use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn heptad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heptad")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn write_heptagon(name: &str, lines: Value) -> PathBuf {
    let path = tmp(name);
    std::fs::write(&path, json!({ "field": "rational", "lines": lines }).to_string()).unwrap();
    path
}

/// Tangent lines `[1, t, t²]` to a conic, `t = 1..7`.
fn vandermonde() -> PathBuf {
    let lines: Vec<Value> = (1..=7).map(|t: i64| json!([1, t, t * t])).collect();
    write_heptagon("vandermonde.json", Value::Array(lines))
}

#[test]
fn ring_eval_and_scorza() {
    let o = heptad(&["ring", "eval", "-n", "7", "S(1,2)*S(2,3)*S(3,4)*S(4,5)*S(5,6)*S(6,7)*S(1,7)"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("degree = 4368"), "{}", stdout(&o));

    let o = heptad(&["ring", "scorza", "-n", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "48");

    let o = heptad(&["ring", "eval", "-n", "2", "x1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("degree undefined"));
}

#[test]
fn ring_parse_errors_exit_2() {
    let o = heptad(&["ring", "eval", "-n", "3", "S(1,2)*"]);
    assert_eq!(o.status.code(), Some(2));
    let o = heptad(&["ring", "eval", "-n", "3", "D(1,9)"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn walks_and_bound() {
    let o = heptad(&["walks", "--k", "7"]);
    assert_eq!(stdout(&o).trim(), "504");
    let o = heptad(&["bound"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["excluded_configurations"], "4032");
    assert_eq!(v["upper_bound"], "336");
    assert_eq!(v["per_quartic"], "864");
}

#[test]
fn adjoint_methods_agree() {
    let path = vandermonde();
    let o = heptad(&["adjoint", path.to_str().unwrap(), "--check-theta"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["methods_agree"], true);
    assert_eq!(v["kernel_dim"], 1);
    assert_eq!(v["residual_on_adjoint"], true);
    assert_eq!(v["residual_points"].as_array().unwrap().len(), 14);
    assert_eq!(v["formula"], v["nullspace"]);
    assert_eq!(v["theta_witness"]["valid"], true);
}

#[test]
fn svg_has_every_marker() {
    let path = vandermonde();
    let svg = tmp("vandermonde.svg");
    let o = heptad(&["adjoint", path.to_str().unwrap(), "--svg", svg.to_str().unwrap(), "--resolution", "128"]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    for (class, n) in [("inner", 7), ("outer", 7), ("vertex", 7), ("line", 7)] {
        assert_eq!(text.matches(&format!("class=\"{class}\"")).count(), n, "{class}");
    }
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["svg"]["curve_segments"].as_u64().unwrap() > 0);
}

#[test]
fn invalid_heptagons_exit_4() {
    let concurrent = write_heptagon(
        "concurrent.json",
        json!([[1, 0, 0], [0, 1, 0], [1, 1, 0], [1, 2, 3], [3, 1, 7], [2, 5, 1], [1, 9, 4]]),
    );
    let o = heptad(&["adjoint", concurrent.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));

    let six = write_heptagon("six.json", json!([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 2, 3], [3, 1, 7], [2, 5, 1]]));
    assert_eq!(heptad(&["adjoint", six.to_str().unwrap()]).status.code(), Some(4));

    let bad = tmp("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(heptad(&["adjoint", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn klein_certify_is_deterministic_and_exports_the_fiber() {
    let export = tmp("fiber.json");
    let first = heptad(&["klein", "certify", "--export", export.to_str().unwrap()]);
    // the reference closed forms of the coefficients do not match, so certification fails
    assert_eq!(first.status.code(), Some(5));
    let v: Value = serde_json::from_str(&stdout(&first)).unwrap();
    assert_eq!(v["group_order"], 168);
    assert_eq!(v["sylow7_subgroups"], 8);
    assert_eq!(v["fiber_size"], 336);
    assert_eq!(v["cyclic_classes_per_orbit"], json!([24, 24]));
    assert_eq!(v["base_rank"], 15);
    let failed: Vec<&str> = v["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["a_closed_forms"]);

    let second = heptad(&["klein", "certify"]);
    assert_eq!(stdout(&first), stdout(&second));

    let docs: Value = serde_json::from_str(&std::fs::read_to_string(&export).unwrap()).unwrap();
    let docs = docs.as_array().unwrap();
    assert_eq!(docs.len(), 336);
    let one = tmp("fiber_member.json");
    std::fs::write(&one, docs[17].to_string()).unwrap();
    let o = heptad(&["adjoint", one.to_str().unwrap(), "--method", "formula"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["field"], "klein-tower");
    assert_eq!(v["residual_on_adjoint"], true);
}

#[test]
fn unusable_prime_is_replaced() {
    let o = heptad(&["klein", "certify", "--modular-prime", "7"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_ne!(v["prime"], 7);
    let notes = v["notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n.as_str().unwrap().contains("retried with")), "{notes:?}");
}
