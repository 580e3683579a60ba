use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const GAUSS_ISO: &str = r#"{"type":"gaussian","mean":[0,0],"cov":[[1,0],[0,1]],"eps":0}"#;
const GAUSS_DRIFT: &str = r#"{"type":"gaussian","mean":[1,0],"cov":[[1,0],[0,1]]}"#;
const PM1_GRAPH: &str = r#"{"type":"graph1d","mu1":1,"y":{"type":"atoms1d","points":[1,-1],"probs":[0.5,0.5]},"eps":0}"#;
const FLAT: &str = r#"{"type":"atoms","points":[[1,1],[-1,-1]],"probs":[0.5,0.5]}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ldp-hull"));
    c.env_remove("LDP_HULL_THREADS");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn rate_isotropic_gaussian() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "gauss_iso.json", GAUSS_ISO);
    let v = json(&run(&["rate", "--dist", d.to_str().unwrap(), "--area", "1"]));
    let j = v["result"]["j_a"].as_f64().unwrap();
    assert!((j - std::f64::consts::PI).abs() < 1e-6);
    assert_eq!(v["config"]["area"], 1.0);
    assert_eq!(v["config"]["directions"], 256);
    assert_eq!(v["config"]["distribution"]["type"], "gaussian");
    assert_eq!(v["result"]["a_max"], Value::Null);
}

#[test]
fn out_of_range_exits_2_with_a_max() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "pm1graph.json", PM1_GRAPH);
    let out = run(&["rate", "--area", "0.3", "--dist", d.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "OutOfRange");
    assert_eq!(err["a_max"], 0.25);
}

#[test]
fn degenerate_law_needs_eps() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "flat.json", FLAT);
    let out = run(&["rate", "--dist", d.to_str().unwrap(), "--area", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "NotFullPlane");
    let v = json(&run(&["rate", "--dist", d.to_str().unwrap(), "--area", "0.1", "--eps", "0.1"]));
    assert_eq!(v["result"]["eps"], 0.1);
}

#[test]
fn io_and_parse_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["rate", "--dist", missing.to_str().unwrap(), "--area", "1"]).status.code(), Some(1));
    let bad = write(dir.path(), "bad.json", "{\"type\":\"cauchy\"}");
    let out = run(&["rate", "--dist", bad.to_str().unwrap(), "--area", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "Io");
    let unnormalized = write(dir.path(), "u.json", r#"{"type":"atoms","points":[[1,0],[0,1],[-1,-1]],"probs":[0.2,0.2,0.2]}"#);
    assert_eq!(run(&["rate", "--dist", unnormalized.to_str().unwrap(), "--area", "1"]).status.code(), Some(1));
    assert_eq!(run(&["rate", "--area", "1"]).status.code(), Some(1));
    assert_eq!(run(&["rate", "--dist", "x", "--area", "1", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn convexify_unit_square_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let sq = write(dir.path(), "square.csv", "x,y\n0,0\n1,0\n1,1\n0,1\n0,0\n");
    let out = run(&["convexify", "--input", sq.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let pts = ldp_hull::io::read_points(text.as_bytes()).unwrap();
    let expected: Vec<ldp_hull::Vec2> = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)].iter().map(|&(x, y)| ldp_hull::Vec2::new(x, y)).collect();
    assert_eq!(pts, expected);
    assert!(text.starts_with("x,y\n"));
}

#[test]
fn trajectory_writes_candidate_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "drift.json", GAUSS_DRIFT);
    let out_dir = dir.path().join("traj");
    let v = json(&run(&["trajectory", "--dist", d.to_str().unwrap(), "--area", "0.5", "--samples", "64", "--out-dir", out_dir.to_str().unwrap()]));
    let files = v["trajectories"].as_array().unwrap();
    assert_eq!(files.len(), v["result"]["candidates"].as_array().unwrap().len());
    let text = std::fs::read_to_string(files[0].as_str().unwrap()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,h1,h2,dh1,dh2,I"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 65);
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[64][0], 1.0);
    // 17 significant digits
    assert!(text.lines().nth(2).unwrap().split(',').all(|f| f.split('e').next().unwrap().trim_start_matches('-').len() == 18));
}

#[test]
fn levelset_polygon_and_arc() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "gauss_iso.json", GAUSS_ISO);
    let out = run(&["levelset", "--dist", d.to_str().unwrap(), "--alpha", "0.5", "--samples", "64"]);
    assert!(out.status.success());
    let pts = ldp_hull::io::read_points(out.stdout.as_slice()).unwrap();
    assert!(pts.iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
    let out = run(&["levelset", "--dist", d.to_str().unwrap(), "--alpha", "0.5", "--samples", "32", "--arc", "--ell", "1,0", "--tau", "-"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,gx,gy,dgx,dgy\n"));
    assert_eq!(text.lines().count(), 34);
}

#[test]
fn oracle_reports_energy_and_curve() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "gauss_iso.json", GAUSS_ISO);
    let curve = dir.path().join("curve.csv");
    let v = json(&run(&["oracle", "--dist", d.to_str().unwrap(), "--area", "1", "--segments", "32", "--curve", curve.to_str().unwrap()]));
    let e = v["energy"].as_f64().unwrap();
    assert!((std::f64::consts::PI - 1e-3..1.05 * std::f64::consts::PI).contains(&e));
    assert!(v["feasibility"].as_f64().unwrap() <= 1e-6);
    let pts = ldp_hull::io::read_points(std::fs::File::open(&curve).unwrap()).unwrap();
    assert_eq!(pts.len(), 33);
}

#[test]
fn simulate_zero_hits_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "pm1graph.json", PM1_GRAPH);
    let v = json(&run(&["simulate", "--dist", d.to_str().unwrap(), "--area", "0.24", "--steps", "30", "--samples", "1000", "--mode", "naive"]));
    assert_eq!(v["status"], "ZeroHits");
    assert_eq!(v["hits"], 0);
    assert_eq!(v["rate_estimate"], Value::Null);
}

#[test]
fn outputs_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "drift.json", GAUSS_DRIFT);
    let d = d.to_str().unwrap();
    let rate = |threads: &str| run(&["rate", "--dist", d, "--area", "0.7", "--threads", threads]).stdout;
    let one = rate("1");
    assert!(!one.is_empty());
    assert_eq!(one, rate("4"));
    assert_eq!(one, rate("1"));
    let sim = |threads: &str| {
        bin()
            .args(["simulate", "--dist", d, "--area", "0.2", "--steps", "20", "--samples", "5000", "--seed", "7"])
            .env("LDP_HULL_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    let s1 = sim("1");
    assert_eq!(s1, sim("3"));
    let v: Value = serde_json::from_slice(&s1).unwrap();
    assert_eq!(v["config"]["seed"], 7);
    assert!(v["rate_estimate"].as_f64().unwrap() > 0.0);
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "gauss_iso.json", GAUSS_ISO);
    let out = dir.path().join("rate.json");
    let o = run(&["rate", "--dist", d.to_str().unwrap(), "--area", "0.5", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!((v["result"]["j_a"].as_f64().unwrap() - 0.5 * std::f64::consts::PI).abs() < 1e-8);
}
