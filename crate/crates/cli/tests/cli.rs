use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn feynprop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feynprop")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const CONSTANT: &str = "\
[measure]
dim = 1
atom = { re = 1.0, alpha = [0.0] }

[query]
x = [0.4]
x0 = [-0.1]
t = 1.3
g = 0.7
";

const STIFF: &str = "\
[measure]
dim = 1
atom = { re = 1.0, alpha = [1.0] }

[query]
x = [0.0]
x0 = [0.0]
t = 1.0
g = 40.0

[quadrature]
points = 8
samples = 1000
";

#[test]
fn morse_spectrum_rows() {
    let out = feynprop(&["morse", "spectrum", "--g", "2", "--gamma", "1", "--a", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["n,energy", "0,-1.125", "1,-0.125"]);
}

#[test]
fn propagate_json_for_constant_potential() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", CONSTANT);
    let out = feynprop(&["propagate", "--config", &cfg, "--tol", "1e-12", "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    let re = v["value"]["re"].as_f64().unwrap();
    let im = v["value"]["im"].as_f64().unwrap();
    // K0 · exp(-i g T)
    let (t, dx): (f64, f64) = (1.3, 0.5);
    let amp = (2.0 * std::f64::consts::PI * t).powf(-0.5);
    let phase = -std::f64::consts::FRAC_PI_4 + dx * dx / (2.0 * t) - 0.7 * t;
    assert!((re - amp * phase.cos()).abs() < 1e-10 && (im - amp * phase.sin()).abs() < 1e-10);
    assert!(v["terms"].as_array().unwrap().len() == v["order_used"].as_u64().unwrap() as usize + 1);
    assert!(v["tail_bound"].as_f64().unwrap() >= 0.0);
    assert!(v["quad_error"].as_f64().is_some());
}

#[test]
fn sweep_emits_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", CONSTANT);
    let out = feynprop(&["sweep", "--config", &cfg, "--param", "g", "--from", "0", "--to", "2", "--steps", "21"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("g,re,im"));
    let params: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(params.len(), 21);
    assert!(params.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(params[0], 0.0);
    assert_eq!(params[20], 2.0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let body = "\
[measure]
dim = 1
atom = { re = 1.0, alpha = [-2.0] }
atom = { re = -2.0, alpha = [-1.0] }

[query]
x = [0.2]
x0 = [0.0]
t = 0.5
g = 0.1

[quadrature]
points = 12
samples = 1000
switch_order = 3
";
    let cfg = write(dir.path(), "m.cfg", body);
    let args = ["propagate", "--config", cfg.as_str(), "--order", "4", "--json"];
    let a = feynprop(&args);
    let b = feynprop(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn output_path_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.csv");
    let body = format!("{CONSTANT}\n[output]\nformat = \"csv\"\npath = {:?}\n", target.to_string_lossy());
    let cfg = write(dir.path(), "c.cfg", &body);
    let out = feynprop(&["free", "--config", &cfg]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(target).unwrap();
    assert!(text.starts_with("quantity,re,im\nfree_kernel,"));
}

#[test]
fn malformed_config_exits_1_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "[measure]\ndim = 1\natom = { re = 1.0, alpha = [0.0, 1.0] }\n");
    let out = feynprop(&["propagate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn domain_error_exits_2() {
    let out = feynprop(&["morse", "green", "--g", "2", "--energy", "-1.125", "--x", "0.1", "--xp", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = feynprop(&["morse", "eigen", "--g", "2", "--n", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_exceeded_exits_3_with_partial_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.cfg", STIFF);
    let out = feynprop(&["propagate", "--config", &cfg, "--tol", "1e-12", "--json"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["order_used"], 30);
    assert_eq!(v["terms"].as_array().unwrap().len(), 31);
}

#[test]
fn heat_divergence_csv() {
    let dir = tempfile::tempdir().unwrap();
    let body = "\
[measure]
dim = 1
atom = { re = 1.0, alpha = [1.0] }

[query]
x = [0.0]
x0 = [0.0]
t = 1.0
g = 1.0

[quadrature]
points = 12
samples = 1000
";
    let cfg = write(dir.path(), "h.cfg", body);
    let out = feynprop(&["heat-divergence", "--config", &cfg, "--n-max", "3", "--csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,log10_abs_term,rel_error,log10_lower_bound");
    assert_eq!(lines.len(), 4);
    for l in &lines[1..] {
        let f: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(f[1] >= f[3], "{l}");
    }
}

#[test]
fn negative_values_parse() {
    let out = feynprop(&["morse", "eigen", "--g", "2", "--n", "0", "--from", "-5", "--to", "10", "--steps", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("-5.0,"));
}
