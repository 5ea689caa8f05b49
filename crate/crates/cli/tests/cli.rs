use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const WORKED_A: &str = r#"{"n": 2, "params": 1,
 "poles": [{"alpha": {"num": [{"exponents": [1], "coeff": 1}]},
            "principal": [[[0, -3], [0, 0]],
                          [[{"num": [{"exponents": [1], "coeff": 1}]}, 0],
                           [0, {"num": [{"exponents": [1], "coeff": 1}, {"exponents": [0], "coeff": -2}]}]]]}]}"#;

const WORKED_P: &str = r#"{"center": {"num": [{"exponents": [1], "coeff": 1}]}, "lowOrder": -2, "exact": true,
 "coeffs": [[[0, -1], [0, 0]], [[1, 0], [0, 0]], [[0, 0], [0, 0]], [[0, 0], [0, 1]]]}"#;

/// Two poles with commuting, traceless residues summing to zero.
const COMMUTING: &str = r#"{"n": 2, "params": 1,
 "poles": [{"alpha": 0, "principal": [[[0.25, 0], [0, -0.25]]]},
           {"alpha": 1, "principal": [[[-0.25, 0], [0, 0.25]]]}]}"#;

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Sandbox {
            dir: TempDir::new().unwrap(),
        }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monodromy"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn classify_worked_example() {
    let sb = Sandbox::new();
    let a = sb.file("a.json", WORKED_A);
    let p = sb.file("p.json", WORKED_P);
    let out = run(&["classify", "--input", s(&a), "--witness", s(&p), "--grid", "[[0.3], [-0.2]]"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let pole = &v["poles"][0];
    assert_eq!(pole["order"], 2);
    assert_eq!(pole["classification"][0], "RegularByWitness");
    assert_eq!(pole["classification"][1], "RegularByWitness");

    let out = run(&["classify", "--input", s(&a), "--grid", "[[0.3]]"]);
    assert_eq!(json_of(&out)["poles"][0]["classification"][0], "HigherOrderUnresolved");
}

#[test]
fn classify_zero_system() {
    let sb = Sandbox::new();
    let z = sb.file("z.json", r#"{"n": 2, "params": 1}"#);
    let out = run(&["classify", "--input", s(&z)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["poles"].as_array().unwrap().len(), 0);
}

#[test]
fn duplicate_poles_are_input_errors() {
    let sb = Sandbox::new();
    let d = sb.file(
        "d.json",
        r#"{"n": 1, "params": 1, "poles": [{"alpha": 0.5, "principal": [[[1]]]},
                                          {"alpha": 0.5, "principal": [[[2]]]}]}"#,
    );
    let out = run(&["classify", "--input", s(&d)]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "input");
    assert!(err["message"].as_str().unwrap().contains("collide"));
}

#[test]
fn malformed_input() {
    let sb = Sandbox::new();
    let bad = sb.file("bad.json", "{ not json");
    assert_eq!(run(&["monodromy", "--input", s(&bad)]).status.code(), Some(2));
    assert_eq!(run(&["monodromy", "--input", s(&sb.path("missing.json"))]).status.code(), Some(2));
    let a = sb.file("a.json", WORKED_A);
    assert_eq!(run(&["classify", "--input", s(&a), "--format", "csv"]).status.code(), Some(2));
    assert_eq!(run(&["classify", "--input", s(&a), "--grid", "[[0.1, 0.2]]"]).status.code(), Some(2));
    assert_eq!(run(&["rational", "--input", s(&a), "--candidate", "z1 +"]).status.code(), Some(2));
}

#[test]
fn monodromy_of_commuting_poles() {
    let sb = Sandbox::new();
    let c = sb.file("c.json", COMMUTING);
    let out = run(&["monodromy", "--input", s(&c), "--grid", "[[0.0]]", "--verify"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert!(v["productDeviation"].as_f64().unwrap() <= 1e-6);
    // first loop is around x = 1 seen from the default base (0.5 - 1.5i)
    let m = &v["matrices"][0][0];
    let want = std::f64::consts::FRAC_PI_2;
    let phase = m[0][0][1].as_f64().unwrap().atan2(m[0][0][0].as_f64().unwrap());
    assert!((phase.abs() - want).abs() < 1e-6, "{m}");

    let csv_out = sb.path("m.csv");
    let out = run(&["monodromy", "--input", s(&c), "--format", "csv", "--output", s(&csv_out)]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(csv_out).unwrap();
    assert!(text.starts_with("grid,t0_re,t0_im,loop,pole,row,col,re,im,error"));
    assert_eq!(text.lines().count(), 1 + 2 * 4);
}

#[test]
fn rhsolve_identity_targets() {
    let sb = Sandbox::new();
    let t = sb.file(
        "t.json",
        r#"{"poles": [0, 1], "basePoint": [0.5, -1.5], "grid": [[0.0]],
            "targets": [[[[1,0],[0,1]], [[1,0],[0,1]]]]}"#,
    );
    let out = run(&["rhsolve", "--input", s(&t), "--verify"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    for r in v["solution"]["residues"][0].as_array().unwrap() {
        for row in r.as_array().unwrap() {
            for z in row.as_array().unwrap() {
                assert_eq!(z[0].as_f64().unwrap().abs() + z[1].as_f64().unwrap().abs(), 0.0);
            }
        }
    }
    assert_eq!(v["solution"]["iterations"][0], 0);
}

#[test]
fn rhsolve_on_round_trip_targets() {
    let sb = Sandbox::new();
    let rt = sb.path("rt.json");
    let out = run(&["roundtrip", "--seed", "5", "--output", s(&rt)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&rt).unwrap()).unwrap();
    assert_eq!(v["seed"], 5);
    assert_eq!(v["verification"]["passed"], true);

    let target = sb.file("target.json", &v["target"].to_string());
    let out = run(&["rhsolve", "--input", s(&target), "--fit-tol", "1e-8", "--verify"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    for r in v["solution"]["fitResidual"].as_array().unwrap() {
        assert!(r.as_f64().unwrap() <= 1e-8);
    }
}

#[test]
fn rational_candidates() {
    let sb = Sandbox::new();
    let c = sb.file("c.json", COMMUTING);
    let out = run(&["rational", "--input", s(&c), "--candidate", "z11*z22", "--verify", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["seed"], 3);
    assert_eq!(v["report"]["invariant"], true);
    assert_eq!(v["report"]["m"], 0);

    let out = run(&["rational", "--input", s(&c), "--candidate", "z11", "--verify"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json_of(&out)["report"]["invariant"], false);
}

#[test]
fn normalform_with_verification() {
    let sb = Sandbox::new();
    let c = sb.file("c.json", COMMUTING);
    let out = run(&["normalform", "--input", s(&c), "--trunc", "6", "--verify", "--pole", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let res = &v["results"][0];
    assert_eq!(res["pole"], 1);
    assert!(res["recurrenceResidual"].as_f64().unwrap() < 1e-12);
    assert_eq!(res["normalForm"]["P"]["coeffs"].as_array().unwrap().len(), 7);

    let a = sb.file("a.json", WORKED_A);
    assert_eq!(run(&["normalform", "--input", s(&a)]).status.code(), Some(1));
    assert_eq!(run(&["normalform", "--input", s(&c), "--pole", "7"]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let sb = Sandbox::new();
    let c = sb.file("c.json", COMMUTING);
    let args = ["rational", "--input", s(&c), "--candidate", "z11/z22 * z22/z11", "--seed", "9"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let grid = r#"[{"start": -0.2, "stop": 0.2, "count": 3}]"#;
    let a = run(&["monodromy", "--input", s(&c), "--grid", grid]);
    let b = run(&["monodromy", "--input", s(&c), "--grid", grid]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn help_has_no_side_effects() {
    let sb = Sandbox::new();
    let out_file = sb.path("never.json");
    for cmd in ["classify", "normalform", "monodromy", "rhsolve", "rational", "roundtrip"] {
        let out = run(&[cmd, "--help", "--output", s(&out_file)]);
        assert_eq!(out.status.code(), Some(0), "{cmd}");
        assert!(!out.stdout.is_empty());
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert!(!out_file.exists());
}
