//! End-to-end tests of the `reflexive` binary: exit-code contract, output
//! shapes, and byte-determinism of file outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reflexive"))
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).expect("write fixture");
    path
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).expect("output file exists"))
        .expect("output file is JSON")
}

const DUMBBELL_DATUM: &str = r#"{
  "genus": 2,
  "punctures": 0,
  "edges": ["a1", "a2", "b1", "b2"],
  "iota": {
    "a1": [1, 0, 0, 0],
    "a2": [0, 1, 0, 0],
    "b1": [0, 0, 1, 0],
    "b2": [0, 0, 0, 1]
  },
  "relations": [],
  "extra_linear_constraints": [[1.0, -1.0, 0.0, 0.0]],
  "tau": {"a1": "h", "a2": "h", "b1": "v", "b2": "v"},
  "sigma": {"a1": "a1", "a2": "a2", "b1": "b1", "b2": "b2"}
}"#;

/// Same datum with σ exchanging a horizontal and a vertical edge.
const TYPE_MIXING_DATUM: &str = r#"{
  "genus": 2,
  "punctures": 0,
  "edges": ["a1", "a2", "b1", "b2"],
  "iota": {
    "a1": [1, 0, 0, 0],
    "a2": [0, 1, 0, 0],
    "b1": [0, 0, 1, 0],
    "b2": [0, 0, 0, 1]
  },
  "tau": {"a1": "h", "a2": "h", "b1": "v", "b2": "v"},
  "sigma": {"a1": "b1", "b1": "a1", "a2": "a2", "b2": "b2"}
}"#;

const DUMBBELL_SPEC: &str = r#"{"family":"dumbbell","ell":0.5}"#;
const STACKED_SPEC: &str = r#"{"family":"stacked","w":2.0}"#;

#[test]
fn validate_distinguishes_valid_invalid_and_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", DUMBBELL_DATUM);
    let out = bin().arg("validate").arg(&good).output().unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["ok"], Value::Bool(true));

    let bad = write(dir.path(), "bad.json", TYPE_MIXING_DATUM);
    let out = bin().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(code(&out), 1);
    let report = stdout_json(&out);
    assert_eq!(report["ok"], Value::Bool(false));
    let failing: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == Value::Bool(false))
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failing.contains(&"tau_sigma_compat"), "failing: {failing:?}");

    let truncated = write(dir.path(), "trunc.json", "{\"genus\":");
    let out = bin().arg("validate").arg(&truncated).output().unwrap();
    assert_eq!(code(&out), 2);

    let out = bin()
        .arg("validate")
        .arg(dir.path().join("missing.json"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn audit_exit_codes_follow_the_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let dumbbell = write(dir.path(), "dumbbell.json", DUMBBELL_SPEC);
    let stacked = write(dir.path(), "stacked.json", STACKED_SPEC);

    let report_path = dir.path().join("all.json");
    let out = bin()
        .args(["audit"])
        .arg(&dumbbell)
        .args(["--hypothesis", "all", "--out"])
        .arg(&report_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&report_path);
    assert_eq!(doc["verdict"], "pass");
    assert_eq!(doc["reports"].as_array().unwrap().len(), 3);
    assert!(report_path
        .with_file_name("all.json.manifest.json")
        .exists());

    let report_path = dir.path().join("stacked_h1.json");
    let out = bin()
        .args(["audit"])
        .arg(&stacked)
        .args(["--hypothesis", "h1", "--out"])
        .arg(&report_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    let doc = read_json(&report_path);
    assert_eq!(doc["verdict"], "fail");
    assert_eq!(doc["reports"][0]["hypothesis"], "H1");

    // A threshold far above the sampled depths: rays grow but cannot
    // reach it, so the only outcome is inconclusive.
    let report_path = dir.path().join("shallow.json");
    let out = bin()
        .args(["audit"])
        .arg(&dumbbell)
        .args(["--hypothesis", "h2", "--blow-threshold", "1e6", "--out"])
        .arg(&report_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    let doc = read_json(&report_path);
    assert_eq!(doc["verdict"], "inconclusive");
}

#[test]
fn solve_certifies_the_balanced_point_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let dumbbell = write(dir.path(), "dumbbell.json", DUMBBELL_SPEC);
    let stacked = write(dir.path(), "stacked.json", STACKED_SPEC);

    let result_path = dir.path().join("solve.json");
    let trace_path = dir.path().join("trace.csv");
    let out = bin()
        .args(["solve"])
        .arg(&dumbbell)
        .args(["--start", "2.5,0.8", "--out"])
        .arg(&result_path)
        .arg("--trace")
        .arg(&trace_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&result_path);
    assert_eq!(doc["result"]["status"], "reflexive");
    assert_eq!(doc["certificate"]["certified"], Value::Bool(true));
    let balanced = (0.5 + 4.25f64.sqrt()) / 2.0;
    for i in 0..2 {
        let u = doc["result"]["u_star"][i].as_f64().unwrap();
        assert!((u - balanced).abs() < 1e-6, "u_star[{i}] = {u}");
    }
    let trace = fs::read_to_string(&trace_path).unwrap();
    assert!(trace.starts_with("iter,param_1,param_2,H,curve\n"));
    assert!(trace.lines().count() >= 2);

    let result_path = dir.path().join("stalled.json");
    let out = bin()
        .args(["solve"])
        .arg(&stacked)
        .args(["--start", "0.25,0.3,0.2,0.4", "--out"])
        .arg(&result_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    let doc = read_json(&result_path);
    assert_eq!(doc["result"]["status"], "stalled");
    assert_eq!(doc["certificate"]["certified"], Value::Bool(false));

    let out = bin()
        .args(["solve"])
        .arg(&dumbbell)
        .args(["--start", "0.2,0.8", "--out"])
        .arg(dir.path().join("oob.json"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("out_of_domain"));

    let out = bin()
        .args(["solve"])
        .arg(&dumbbell)
        .args(["--start", "1.0", "--out"])
        .arg(dir.path().join("short.json"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn scan_writes_deterministic_csv_with_argmin_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let dumbbell = write(dir.path(), "dumbbell.json", DUMBBELL_SPEC);

    let run = |name: &str| -> (PathBuf, i32) {
        let out_path = dir.path().join(name);
        let out = bin()
            .args(["scan"])
            .arg(&dumbbell)
            .args(["--box", "0.6,3,0.6,3", "--res", "25,25", "--out"])
            .arg(&out_path)
            .output()
            .unwrap();
        (out_path, code(&out))
    };
    let (first, c1) = run("scan_a.csv");
    let (second, c2) = run("scan_b.csv");
    assert_eq!((c1, c2), (0, 0));
    let bytes_a = fs::read(&first).unwrap();
    let bytes_b = fs::read(&second).unwrap();
    assert_eq!(bytes_a, bytes_b, "scan output is not byte-deterministic");

    let text = String::from_utf8(bytes_a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("param_1,param_2,m_alpha1,m_alpha2,H"));
    assert_eq!(text.lines().count(), 1 + 25 * 25);
    assert!(text.ends_with('\n'));

    let argmin = read_json(&dir.path().join("scan_a.csv.argmin.json"));
    let p = argmin["point"].as_array().unwrap();
    for v in p {
        let x = v.as_f64().unwrap();
        assert!((x - 1.3).abs() < 1e-12, "argmin coordinate {x}");
    }

    // Single-point grid degenerates to the lower corner.
    let out_path = dir.path().join("single.csv");
    let out = bin()
        .args(["scan"])
        .arg(&dumbbell)
        .args(["--box", "1.0,1.0,2.0,2.0", "--res", "1,1", "--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(&out_path).unwrap().lines().count(), 2);

    // A box entirely below the domain bound leaves no grid points.
    let out = bin()
        .args(["scan"])
        .arg(&dumbbell)
        .args(["--box", "0.1,0.4,0.1,0.4", "--res", "5,5", "--out"])
        .arg(dir.path().join("empty.csv"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn audit_reports_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let dumbbell = write(dir.path(), "dumbbell.json", DUMBBELL_SPEC);
    let run = |name: &str| -> Vec<u8> {
        let out_path = dir.path().join(name);
        let out = bin()
            .args(["audit"])
            .arg(&dumbbell)
            .args(["--hypothesis", "all", "--seed", "7", "--out"])
            .arg(&out_path)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        fs::read(&out_path).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn oracle_prints_the_estimate_and_rejects_tiny_grids() {
    let out = bin()
        .args(["oracle", "--w", "3.0", "--h", "1.5", "--n", "48"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let doc = stdout_json(&out);
    assert_eq!(doc["closed_form"].as_f64().unwrap(), 2.0);
    assert!(doc["relative_error"].as_f64().unwrap() < 1e-2);

    let out = bin()
        .args(["oracle", "--w", "3.0", "--h", "1.5", "--n", "2"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);

    let out = bin()
        .args(["oracle", "--w", "-1.0", "--h", "1.5"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn usage_errors_exit_with_code_2() {
    let out = bin().arg("nonsense").output().unwrap();
    assert_eq!(code(&out), 2);
    let out = bin()
        .args(["audit", "/nonexistent.json", "--hypothesis", "h9", "--out", "/tmp/x.json"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let out = bin().output().unwrap();
    assert_eq!(code(&out), 2);
}
