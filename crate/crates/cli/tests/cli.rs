use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn optkern(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optkern"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    assert_eq!(code(out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn values(v: &Value) -> Vec<f64> {
    v["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn epanechnikov_descriptor() {
    let v = json(&optkern(&["kernel", "--m", "1"]));
    let theta = v["theta"].as_f64().unwrap();
    assert!((theta - 5f64.sqrt()).abs() < 1e-14);
    let c = v["monomial_coefficients"].as_array().unwrap();
    assert!((c[0].as_f64().unwrap() - 3.0 / (4.0 * 5f64.sqrt())).abs() < 1e-14);
    assert!((v["v2"].as_f64().unwrap() - 0.2683281572999748).abs() < 1e-12);
}

#[test]
fn fractional_descriptor_at_two_matches_m_one() {
    let f = json(&optkern(&["kernel", "--beta", "2"]));
    let p = json(&optkern(&["kernel", "--m", "1"]));
    assert!((f["theta"].as_f64().unwrap() - p["theta"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&optkern(&["kernel", "--m", "1", "--beta", "2"])), 1);
    assert_eq!(code(&optkern(&["kernel"])), 1);
    assert_eq!(code(&optkern(&["kernel", "--m", "0"])), 1);
    assert_eq!(code(&optkern(&["mise", "--m", "1"])), 1);
    assert_eq!(code(&optkern(&["--help"])), 0);
}

#[test]
fn data_errors_exit_two() {
    let out = optkern(&[
        "estimate",
        "--m",
        "1",
        "--h",
        "1",
        "--input",
        "/nonexistent/data.csv",
    ]);
    assert_eq!(code(&out), 2);
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "x\n1.0\nabc\n");
    assert_eq!(
        code(&optkern(&[
            "estimate", "--m", "1", "--h", "1", "--input", &bad
        ])),
        2
    );
    let neg = write(dir.path(), "neg.csv", "1.0\n-2.0\n");
    assert_eq!(
        code(&optkern(&[
            "estimate",
            "--m",
            "1",
            "--h",
            "1",
            "--log-transform",
            "--input",
            &neg
        ])),
        2
    );
}

#[test]
fn verify_exit_codes() {
    assert_eq!(code(&optkern(&["verify", "--m", "1", "--trials", "40"])), 0);
    // the closed form for m = 2 leaves its second moment nonzero
    assert_eq!(code(&optkern(&["verify", "--m", "2", "--trials", "40"])), 3);
}

#[test]
fn single_observation_reproduces_the_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "one.csv", "0\n");
    let v = json(&optkern(&[
        "estimate",
        "--m",
        "1",
        "--h",
        "1",
        "--grid=-1:1:3",
        "--format",
        "json",
        "--input",
        &input,
    ]));
    let f = values(&v);
    assert!((f[1] - 3.0 / (4.0 * 5f64.sqrt())).abs() < 1e-15);
    assert_eq!(f[0], f[2]);
    assert_eq!(v["meta"]["n"], 1);
}

#[test]
fn recursive_with_fixed_bandwidth_matches_plain() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "d.csv", "value\n0.3\n-1.2\n0.8\n2.5\n-0.4\n");
    let common = [
        "estimate",
        "--m",
        "2",
        "--grid=-3:3:61",
        "--format",
        "json",
        "--input",
        &input,
    ];
    let plain = json(&optkern(&[&common[..], &["--h", "0.5"]].concat()));
    let rec = json(&optkern(
        &[&common[..], &["--recursive", "--h-rule", "fixed:0.5"]].concat(),
    ));
    for (a, b) in values(&plain).iter().zip(values(&rec)) {
        assert!((a - b).abs() < 1e-14, "{a} {b}");
    }
}

#[test]
fn log_transform_has_unit_mass() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "pos.csv", "0.5\n1.0\n1.7\n2.2\n3.9\n");
    let v = json(&optkern(&[
        "estimate",
        "--m",
        "1",
        "--h",
        "0.4",
        "--log-transform",
        "--format",
        "json",
        "--input",
        &input,
    ]));
    let x: Vec<f64> = v["grid"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let f = values(&v);
    let mass: f64 = x
        .windows(2)
        .zip(f.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
        .sum();
    assert!((mass - 1.0).abs() < 1e-3, "{mass}");
    assert!(x[0] > 0.0);
}

#[test]
fn tsv_output_layout() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "d.jsonl", "{\"x\": 0.1}\n{\"x\": -0.2}\n");
    let out = optkern(&[
        "estimate",
        "--beta",
        "1.5",
        "--h",
        "1",
        "--column",
        "x",
        "--grid=-1:1:5",
        "--input",
        &input,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# meta {"));
    assert_eq!(lines[1], "x\tfhat");
    assert_eq!(lines.len(), 7);
}

#[test]
fn mise_is_reproducible() {
    let args = [
        "mise",
        "--m",
        "1",
        "--seed",
        "5",
        "--n",
        "100,400",
        "--replications",
        "3",
    ];
    let a = optkern(&args);
    let b = optkern(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.lines().last().unwrap().starts_with("slope\t"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.cfg",
        "# defaults\nm = 1\nseed = 5\nn = 100,400\nreplications = 3\n",
    );
    let from_file = optkern(&["mise", "--config", &cfg]);
    let direct = optkern(&[
        "mise",
        "--m",
        "1",
        "--seed",
        "5",
        "--n",
        "100,400",
        "--replications",
        "3",
    ]);
    assert_eq!(
        code(&from_file),
        0,
        "{}",
        String::from_utf8_lossy(&from_file.stderr)
    );
    assert_eq!(from_file.stdout, direct.stdout);
    let overridden = optkern(&["mise", "--config", &cfg, "--seed", "6"]);
    assert_ne!(overridden.stdout, direct.stdout);
    assert_eq!(code(&optkern(&["mise", "--config", "/nonexistent.cfg"])), 1);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.json");
    let out = optkern(&["kernel", "--beta", "1.5", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["type"], "fractional");
}

#[test]
fn integer_only_flags_reject_beta() {
    assert_eq!(code(&optkern(&["kernel", "--beta", "2", "--r", "1"])), 1);
    assert_eq!(
        code(&optkern(&[
            "verify",
            "--beta",
            "2",
            "--paper-literal-theta"
        ])),
        1
    );
}
