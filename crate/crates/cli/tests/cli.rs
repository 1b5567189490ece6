use std::path::{Path, PathBuf};
use std::process::Command;

use liouville::field::GridField;
use liouville::geometry::Point;
use serde_json::Value;
use tempfile::TempDir;

fn domain(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn disk(dir: &Path) -> PathBuf {
    domain(dir, "disk.txt", "# unit disk\nkind = circle\ncenter = 0 0\nradius = 1\n")
}

fn strip(dir: &Path) -> PathBuf {
    domain(dir, "strip.txt", "kind = strip\nx_min = 0\nx_max = 1\nhalf_height = 1\n")
}

fn run(args: &[&str], dom: &Path, out: &Path) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_liouville"))
        .args(args)
        .arg("--domain")
        .arg(dom)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
        .status;
    status.code().unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_on_disk_writes_fields() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&["solve", "--h-grid", "0.0625"], &disk(tmp.path()), &out), 0);
    let rep = json(out.join("solve_report.json"));
    assert_eq!(rep["converged"], Value::Bool(true));
    let v = GridField::read(out.join("v.field")).unwrap();
    assert!((v.sample(Point::ORIGIN) - 1.0).abs() < 1e-2);
}

#[test]
fn iteration_cap_is_non_convergence() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&["solve", "--h-grid", "0.0625", "--max-iters", "1"], &disk(tmp.path()), &out), 3);
    assert!(out.join("u.field").exists());
}

#[test]
fn malformed_domain_is_a_configuration_error() {
    let tmp = TempDir::new().unwrap();
    let dom = domain(tmp.path(), "bad.txt", "kind = circle\nradius = abc\n");
    assert_eq!(run(&["solve"], &dom, &tmp.path().join("out")), 2);
    let missing = tmp.path().join("nowhere.txt");
    assert_eq!(run(&["exact"], &missing, &tmp.path().join("out")), 2);
}

#[test]
fn exact_disk_profile() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&["exact", "--h-grid", "0.0625"], &disk(tmp.path()), &out), 0);
    let v = GridField::read(out.join("v.field")).unwrap();
    assert!((v.sample(Point::ORIGIN) - 1.0).abs() < 1e-12);
    let w = GridField::read(out.join("w.field")).unwrap();
    assert!(w.values.iter().filter(|x| x.is_finite()).all(|x| (x + 1.0).abs() < 1e-10));
}

#[test]
fn exact_rejects_ellipse() {
    let tmp = TempDir::new().unwrap();
    let dom = domain(tmp.path(), "e.txt", "kind = ellipse\ncenter = 0 0\na = 2\nb = 1\n");
    assert_eq!(run(&["exact"], &dom, &tmp.path().join("out")), 2);
}

#[test]
fn w0_traces() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("c.txt", "kind = circle\ncenter = 0 0\nradius = 2\n", -0.5),
        ("e.txt", "kind = ellipse\ncenter = 0 0\na = 2\nb = 1\n", -2.0),
        ("s.txt", "kind = strip\nx_min = 0\nx_max = 1\nhalf_height = 1\n", 0.0),
    ];
    for (name, body, trace) in cases {
        let out = tmp.path().join(name).with_extension("out");
        assert_eq!(run(&["w0", "--nt", "20"], &domain(tmp.path(), name, body), &out), 0);
        let rep = json(out.join("w0_report.json"));
        let got = rep["trace_at_base"].as_f64().unwrap();
        assert!((got - trace).abs() < 1e-3 * (1.0 + trace.abs()), "{name}: {got}");
        assert!(out.join("w0.collar").exists() && out.join("contraction.csv").exists());
    }
}

#[test]
fn verify_disk_passes_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let dom = disk(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run(&["verify", "--h-grid", "0.03125"], &dom, &a), 0);
    assert_eq!(run(&["verify", "--h-grid", "0.03125"], &dom, &b), 0);
    let ra = std::fs::read(a.join("report.json")).unwrap();
    assert_eq!(ra, std::fs::read(b.join("report.json")).unwrap());
    assert!(a.join("report.csv").exists() && a.join("metadata.json").exists());
    assert_eq!(json(a.join("report.json"))["overall"], "pass");
}

#[test]
fn verify_on_coarse_grid_reports_insufficient_resolution() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&["verify", "--h-grid", "0.125"], &disk(tmp.path()), &out), 4);
    let rep = json(out.join("report.json"));
    assert_eq!(rep["failed"], 0);
    let checks = rep["checks"].as_array().unwrap();
    for name in ["log_ratio_drift", "c2_regression"] {
        let c = checks.iter().find(|c| c["name"] == name).unwrap();
        assert_eq!(c["status"], "insufficient_resolution");
    }
}

#[test]
fn verify_strip_passes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run(&["verify", "--h-grid", "0.03125"], &strip(tmp.path()), &out), 0);
}

#[test]
fn convergence_table_on_disk() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let code = run(&["convergence", "--h-list", "0.0625,0.03125,0.015625"], &disk(tmp.path()), &out);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let two = run(&["convergence", "--h-list", "0.0625,0.03125"], &disk(tmp.path()), &out);
    assert_eq!(two, 2);
}
