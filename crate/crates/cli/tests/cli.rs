//! End-to-end checks of the orfq binary: documented exit codes, the pinned
//! Lebesgue examples, and output stability.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str, content: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("orfq-cli-{}-{}", std::process::id(), name));
    std::fs::write(&path, content).unwrap();
    path
}

fn lebesgue() -> PathBuf {
    fixture("lebesgue.json", r#"{"type": "lebesgue", "M": 256}"#)
}

fn zero_poles(n: usize) -> PathBuf {
    let alphas: Vec<String> = (0..n).map(|_| r#"{"re": 0.0, "im": 0.0}"#.into()).collect();
    fixture(
        &format!("zeros{}.json", n),
        &format!(r#"{{"alphas": [{}], "side": "{}"}}"#, alphas.join(", "), "A".repeat(n)),
    )
}

fn mixed_poles() -> PathBuf {
    fixture(
        "mixed.json",
        r#"{
            "alphas": [
                {"re": 0.3, "im": 0.1},
                {"re": -0.2, "im": 0.35},
                {"re": 0.0, "im": 0.0},
                {"re": 0.15, "im": -0.4},
                {"re": -0.35, "im": -0.1}
            ],
            "side": "ABBAB"
        }"#,
    )
}

fn discrete_measure() -> PathBuf {
    fixture("disc.json", r#"{"type": "random_discrete", "seed": 11, "N": 48}"#)
}

fn orfq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orfq")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout must be valid JSON")
}

#[test]
fn lebesgue_zero_poles_quadrature_is_the_four_point_rule() {
    let poles = zero_poles(4);
    let measure = lebesgue();
    let out = orfq(&[
        "quad",
        "--poles",
        poles.to_str().unwrap(),
        "--measure",
        measure.to_str().unwrap(),
        "--n",
        "4",
        "--tau-turns",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let nodes = v["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 4);
    let expected = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
    for entry in nodes {
        let re = entry["node"]["re"].as_f64().unwrap();
        let im = entry["node"]["im"].as_f64().unwrap();
        let hit = expected
            .iter()
            .any(|&(er, ei)| ((re - er).powi(2) + (im - ei).powi(2)).sqrt() <= 1e-10);
        assert!(hit, "unexpected node {} + {}i", re, im);
        let w = entry["weight"].as_f64().unwrap();
        assert!((w - 0.25).abs() <= 1e-10, "weight {} != 1/4", w);
    }
    assert!((v["weight_sum"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
}

#[test]
fn recurrence_parameters_vanish_for_lebesgue() {
    let poles = zero_poles(3);
    let measure = lebesgue();
    let out = orfq(&[
        "orf",
        "--poles",
        poles.to_str().unwrap(),
        "--measure",
        measure.to_str().unwrap(),
        "--n",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    for row in v["rows"].as_array().unwrap().iter().skip(1) {
        let re = row["lambda"]["re"].as_f64().unwrap();
        let im = row["lambda"]["im"].as_f64().unwrap();
        assert!(re.abs() <= 1e-12 && im.abs() <= 1e-12, "lambda must vanish");
        assert!(row["e"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn malformed_pole_file_is_a_spec_error() {
    let poles = fixture("broken.json", "{ not json");
    let measure = lebesgue();
    let out = orfq(&[
        "orf",
        "--poles",
        poles.to_str().unwrap(),
        "--measure",
        measure.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty(), "spec errors must explain themselves");
}

#[test]
fn degree_beyond_the_pole_sequence_is_a_spec_error() {
    let poles = zero_poles(4);
    let measure = lebesgue();
    let out = orfq(&[
        "orf",
        "--poles",
        poles.to_str().unwrap(),
        "--measure",
        measure.to_str().unwrap(),
        "--n",
        "9",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn route_comparison_passes_on_a_clean_system() {
    let poles = mixed_poles();
    let measure = discrete_measure();
    let out = orfq(&[
        "quad",
        "--poles",
        poles.to_str().unwrap(),
        "--measure",
        measure.to_str().unwrap(),
        "--n",
        "5",
        "--tau-turns",
        "0.2",
        "--route",
        "both",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v["route_deviation"]["node"].as_f64().unwrap() <= 1e-6);
    assert!(v["route_deviation"]["weight"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn injected_perturbation_fails_verification() {
    let out = orfq(&["verify", "--inject-perturbation", "--json", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["injected_perturbation"], Value::Bool(true));
    assert_eq!(v["pass"], Value::Bool(false));
    let replay = v["groups"]
        .as_array()
        .unwrap()
        .iter()
        .find(|g| g["name"] == "recurrence_replay")
        .expect("replay group present");
    assert_eq!(replay["pass"], Value::Bool(false));
}

#[test]
fn verification_output_is_deterministic() {
    let a = orfq(&["verify", "--json", "--seed", "9"]);
    let b = orfq(&["verify", "--json", "--seed", "9"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout, "verification JSON must be bitwise stable");
}

#[test]
fn exhaustive_ordering_cap_is_a_spec_error() {
    let out = orfq(&["ampd", "--n", "16", "--exhaustive"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("--samples"), "cap message should point at --samples: {}", msg);
}

#[test]
fn csv_parameter_table_has_the_documented_header() {
    let poles = mixed_poles();
    let measure = discrete_measure();
    let out = orfq(&[
        "orf",
        "--poles",
        poles.to_str().unwrap(),
        "--measure",
        measure.to_str().unwrap(),
        "--n",
        "5",
        "--kind",
        "G",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "degree,side,lambda_re,lambda_im,lambda_inf,e,eta1_re,eta1_im"
    );
    assert_eq!(lines.count(), 5);
}

#[test]
fn para_orthogonal_roots_lie_on_the_circle() {
    let poles = mixed_poles();
    let measure = discrete_measure();
    let out = orfq(&[
        "roots",
        "--poles",
        poles.to_str().unwrap(),
        "--measure",
        measure.to_str().unwrap(),
        "--n",
        "5",
        "--tau-turns",
        "0.25",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["para_orthogonal"], Value::Bool(true));
    let roots = v["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 5);
    for r in roots {
        assert!((r["modulus"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn matrix_pattern_shows_the_five_diagonal_shape() {
    let poles = fixture(
        "alternating.json",
        r#"{
            "alphas": [
                {"re": 0.3, "im": 0.1},
                {"re": -0.2, "im": 0.35},
                {"re": 0.25, "im": -0.15},
                {"re": 0.15, "im": -0.4},
                {"re": -0.35, "im": -0.1},
                {"re": 0.1, "im": 0.3}
            ],
            "side": "ABABAB"
        }"#,
    );
    let measure = discrete_measure();
    let out = orfq(&[
        "matrix",
        "--poles",
        poles.to_str().unwrap(),
        "--measure",
        measure.to_str().unwrap(),
        "--n",
        "6",
        "--emit",
        "pattern",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<char>> = text
        .lines()
        .map(|l| l.split(' ').map(|t| t.chars().next().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    for (i, row) in rows.iter().enumerate() {
        for (j, &ch) in row.iter().enumerate() {
            if i.abs_diff(j) > 2 {
                assert_eq!(ch, '.', "entry ({}, {}) should be outside the band", i, j);
            }
        }
    }
}
