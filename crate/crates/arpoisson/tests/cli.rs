use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_arpoisson"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn report(out: &Path) -> Vec<Value> {
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    serde_json::from_str::<Value>(&text).unwrap().as_array().unwrap().clone()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn bm_m2_passes_and_reports_the_coefficient_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--suite", "bm", "--m", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let reps = report(dir.path());
    assert!(reps.iter().all(|r| r["pass"] == Value::Bool(true)));
    let table = reps.iter().find(|r| r["check"] == "display_m2.closed").unwrap()["table"].clone();
    let cols: Vec<&str> = table["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    assert_eq!(cols, ["a", "b", "x", "y", "pi_a_y", "pi_b_x", "pi_b_y", "pi_x_y"]);
    let rows = table["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 64);
    for r in rows {
        let v: Vec<f64> = r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        let (a, b, x) = (v[0], v[1], v[2]);
        assert!(1.0 - a * x > 0.05);
        assert_eq!(v[4], 1.0);
        assert!((v[5] - (1.0 - a * x)).abs() < 1e-12);
        assert!((v[6] - b * x).abs() < 1e-12);
        assert!((v[7] + x * x).abs() < 1e-12);
    }
    let (header, csv_rows) = read_csv(&dir.path().join("bm_coefficients_m2.csv"));
    assert_eq!(header.len(), 8);
    assert_eq!(csv_rows.len(), 64);
    assert!(dir.path().join("timings.json").exists());
}

#[test]
fn every_report_entry_has_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--suite", "groupoid"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    for r in report(dir.path()) {
        for key in ["suite", "check", "max_defect", "tolerance", "pass", "witness"] {
            assert!(r.get(key).is_some(), "{key} missing in {r}");
        }
        let (d, t) = (r["max_defect"].as_f64().unwrap(), r["tolerance"].as_f64().unwrap());
        assert_eq!(r["pass"].as_bool().unwrap(), d < t);
    }
}

#[test]
fn malformed_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    for text in ["{\"suite\": \"bm\", \"probes\": \"many\"}", "{\"sute\": \"bm\"}", "not json", "{\"probes\": 4}", "{\"tol_scale\": -1}"] {
        std::fs::write(&bad, text).unwrap();
        let out = run(&["verify", "--fixture", bad.to_str().unwrap()], dir.path());
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
        assert!(!dir.path().join("report.json").exists());
    }
    assert_eq!(run(&["verify", "--suite", "nope"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["verify", "--fixture", "/nonexistent.json"], dir.path()).status.code(), Some(2));
    assert_eq!(bin().output().unwrap().status.code(), Some(2));
}

#[test]
fn failing_checks_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--suite", "cosymplectic", "--tol-scale", "1e-30"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(report(dir.path()).iter().any(|r| r["pass"] == Value::Bool(false)));
}

#[test]
fn reports_are_deterministic() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["verify", "--suite", "desing", "--seed", "17", "--probes", "16"];
    assert_eq!(run(&args, d1.path()).status.code(), Some(0));
    assert_eq!(run(&args, d2.path()).status.code(), Some(0));
    let a = std::fs::read(d1.path().join("report.json")).unwrap();
    let b = std::fs::read(d2.path().join("report.json")).unwrap();
    assert_eq!(a, b);
    let c1 = std::fs::read(d1.path().join("desing_convergence_k1.csv")).unwrap();
    let c2 = std::fs::read(d2.path().join("desing_convergence_k1.csv")).unwrap();
    assert_eq!(c1, c2);
}

#[test]
fn flags_override_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture("bm3.json");
    let out = run(&["verify", "--fixture", f.to_str().unwrap(), "--suite", "groupoid", "--probes", "8"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("fixture bm3, seed 4"), "{stdout}");
    assert!(report(dir.path()).iter().all(|r| r["suite"] == "groupoid"));
}

#[test]
fn surface_alpha_for_x_squared() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["surface", "--quantity", "alpha", "--m", "2", "--nodes", "9"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = read_csv(&dir.path().join("alpha.csv"));
    assert_eq!(header, ["a", "x", "alpha"]);
    assert_eq!(rows.len(), 81);
    for r in rows {
        assert!((r[2] - (1.0 - r[0] * r[1])).abs() < 1e-12, "{r:?}");
    }
}

#[test]
fn surface_g_eps_vanishes_outside() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["surface", "--quantity", "g_eps", "--eps", "0.3,0.2", "--x-max", "0.2", "--nodes", "41"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("g_eps.csv"));
    assert_eq!(header, ["eps", "x", "g_eps"]);
    assert_eq!(rows.len(), 82);
    let mut inside = 0;
    for r in rows {
        if r[1].abs() >= r[0] * r[0] {
            assert_eq!(r[2], 0.0);
        } else {
            inside += 1;
            assert!(r[2] >= 0.0);
        }
    }
    assert!(inside > 10);
}

#[test]
fn surface_empty_grid_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    for (q, file, header) in [("alpha", "alpha.csv", "a,x,alpha\n"), ("pi", "pi.csv", "a,b,x,y,pi_a_y,pi_b_x,pi_b_y,pi_x_y\n")] {
        let out = run(&["surface", "--quantity", q, "--nodes", "0"], dir.path());
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(std::fs::read_to_string(dir.path().join(file)).unwrap(), header);
    }
}

#[test]
fn csv_floats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    run(&["surface", "--quantity", "pi", "--generator", "sine", "--nodes", "5"], dir.path());
    let text = std::fs::read_to_string(dir.path().join("pi.csv")).unwrap();
    for field in text.lines().skip(1).flat_map(|l| l.split(',')) {
        let v: f64 = field.parse().unwrap();
        assert_eq!(arpoisson::report::fmt_f64(v), field);
    }
}

#[test]
fn shipped_fixtures_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let cfg = arpoisson::config::RunConfig::from_file(&p).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.fixture, p.file_stem().unwrap().to_string_lossy());
        n += 1;
    }
    assert!(n >= 9);
}
