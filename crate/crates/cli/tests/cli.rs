use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_toric");

const CONSTRUCT_N2: &str = r#"{"n": 2, "gamma0": ["1/2", "-1/3"], "points": [2], "ram": [[1, 1]]}"#;
const LINE: &str = r#"{"components": [{"numer": [1]}, {"numer": [0, 1]}]}"#;

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn construct_example_verifies() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "in.json", CONSTRUCT_N2);
    let out = dir.path().join("out.json");
    let o = run(&["construct"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = read_json(&out);
    assert_eq!(r["ok"], Value::Bool(true));
    assert_eq!(r["singularities"].as_array().unwrap().len(), 3);
    assert_eq!(r["verification"]["degrees"]["ok"], Value::Bool(true));
    assert_eq!(r["verification"]["infinity"]["ok"], Value::Bool(true));
}

#[test]
fn construct_empty_ram_has_zero_and_infinity() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "in.json", r#"{"n": 2, "gamma0": ["1/2", "1/3"], "points": [], "ram": []}"#);
    let out = dir.path().join("out.json");
    let o = run(&["construct"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let pts: Vec<Value> = read_json(&out)["singularities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["point"].clone())
        .collect();
    assert_eq!(pts.len(), 2);
    assert_eq!(pts[0]["re"], "0/1");
    assert_eq!(pts[0]["im"], "0/1");
    assert_eq!(pts[1], "infinity");
}

#[test]
fn construct_rejects_gamma_at_most_minus_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "in.json", r#"{"n": 2, "gamma0": ["1/2", "-1/1"], "points": [], "ram": []}"#);
    let out = dir.path().join("out.json");
    let o = run(&["construct"], &cfg, &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gamma[2]"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn degenerate_ensemble_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "in.json",
        r#"{"forms": [[{"pole": 0, "residue": 1}], [{"pole": -1, "residue": 1}]]}"#,
    );
    let out = dir.path().join("curve.json");
    let o = run(&["ensemble"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Lambda_2"));
}

#[test]
fn scaled_ensemble_writes_curve() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "in.json",
        r#"{"forms": [[{"pole": 0, "residue": "1/2"}, {"pole": 1, "residue": "-1/2"}],
                      [{"pole": 0, "residue": 1}, {"pole": 1, "residue": -1}]]}"#,
    );
    let out = dir.path().join("curve.json");
    let o = run(&["ensemble"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read_json(&out)["components"].as_array().unwrap().len(), 3);
    let report = read_json(&dir.path().join("curve.json.report.json"));
    for p in report["poles"].as_array().unwrap() {
        assert_eq!(p["consistent"], Value::Bool(true));
    }
}

#[test]
fn malformed_json_exits_1() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "in.json", r#"{"forms": [[{"pole": 0, "residue": }]]"#);
    let o = run(&["ensemble"], &cfg, &dir.path().join("curve.json"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn same_path_twice_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "in.json", LINE);
    let o = run(&["classify"], &cfg, &cfg);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn classify_rational_normal_curve_is_empty() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "in.json",
        r#"{"components": [{"numer": [1]}, {"numer": [0, 1]}, {"numer": [0, 0, 1]}, {"numer": [0, 0, 0, 1]}]}"#,
    );
    let out = dir.path().join("out.json");
    let o = run(&["classify"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = read_json(&out);
    assert!(r["singularities"].as_array().unwrap().is_empty());
    assert_eq!(r["balance"]["ok"], Value::Bool(true));
}

#[test]
fn metrics_line_residual_column() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "in.json", LINE);
    let out = dir.path().join("grid.csv");
    let o = run(&["metrics", "--grid", "-1,1,-1,1,41,41"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let head: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(head, ["re", "im", "u_1", "eu_1", "res_1"]);
    let mut rows = 0;
    let mut worst = 0.0f64;
    for l in lines {
        let cols: Vec<&str> = l.split(',').collect();
        worst = worst.max(cols[4].parse::<f64>().unwrap().abs());
        rows += 1;
    }
    assert_eq!(rows, 41 * 41);
    assert!(worst <= 1e-5, "max residual {worst}");
    let report = read_json(&dir.path().join("grid.csv.report.json"));
    assert!(report["residual"]["relativeMax"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn rho_family_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "in.json", r#"{"family": {"a": "1/1", "lambdas": [1, 2], "k": [1], "genus": 0}}"#);
    let out = dir.path().join("out.json");
    let o = run(&["rho"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = read_json(&out);
    assert_eq!(r["aLambdaNIsNatural"], Value::Bool(true));
    assert_eq!(r["allIn4piN"], Value::Bool(true));
    assert_eq!(r["rho"]["in4piN"].as_array().unwrap().len(), 2);
}

#[test]
fn enumerate_contains_realized_degrees() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "in.json", CONSTRUCT_N2);
    let out = dir.path().join("out.json");
    let o = run(&["enumerate-infinity"], &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = read_json(&out);
    assert_eq!(r["realized"]["enumerated"], Value::Bool(true));
    assert_eq!(r["withinBound"], Value::Bool(true));
}

#[test]
fn outputs_are_deterministic_and_stamped() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "in.json", CONSTRUCT_N2);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = run(&["construct", "--seed", "7"], &cfg, out);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let r = read_json(&a);
    assert_eq!(r["inputSha256"].as_str().unwrap().len(), 64);
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));

    let line = write(&dir, "line.json", LINE);
    let (ca, cb) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&ca, &cb] {
        let o = run(&["metrics", "--grid", "-1,1,-1,1,11,11"], &line, out);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&ca).unwrap(), fs::read(&cb).unwrap());
}
