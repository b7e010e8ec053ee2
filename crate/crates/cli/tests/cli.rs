use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn stein(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stein"))
        .args(args)
        .env("STEIN_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn constants_report() {
    let o = stein(&["constants"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("x_star=1.360722"), "{s}");
    assert!(s.contains("c_xf=2.325"), "{s}");
    assert!(s.contains("coupling_k=11.56 recomputed=11.5596"), "{s}");

    let j: Value = serde_json::from_str(&stdout(&stein(&["constants", "--json"]))).unwrap();
    assert!(j["audit"].as_array().unwrap().iter().all(|c| c["conservative"] == true));
}

#[test]
fn bundled_study_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("geo.csv");
    let cfg = bundled("geom_rademacher.json");
    let args = ["study", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let o = stein(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = fs::read_to_string(&out).unwrap();
    assert!(first.starts_with("param,metric,empirical,error,bound_tag,bound,satisfied"));
    assert!(!first.contains(",false"));
    let side: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("geo.csv.json")).unwrap()).unwrap();
    assert!(side["version"].is_string());

    assert_eq!(stein(&args).status.code(), Some(0));
    assert_eq!(first, fs::read_to_string(&out).unwrap());
}

#[test]
fn study_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ \"seed\": 1, ").unwrap();
    let o = stein(&["study", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let text = fs::read_to_string(bundled("geom_rademacher.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["grid"] = serde_json::json!([1.5]);
    let p15 = dir.path().join("p15.json");
    fs::write(&p15, v.to_string()).unwrap();
    let o = stein(&["study", "--config", p15.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid[0]"), "{}", stderr(&o));

    let missing = dir.path().join("nope.json");
    assert_eq!(stein(&["study", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(stein(&["study"]).status.code(), Some(2));
}

#[test]
fn stein_check_families() {
    let o = stein(&["stein-check", "--class", "indicator", "--b", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
    let o = stein(&["stein-check", "--class", "lipschitz", "--b", "0.5", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let j: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(j["pass"], true);
    assert_eq!(stein(&["stein-check", "--class", "smooth", "--b", "2"]).status.code(), Some(0));
    assert_eq!(stein(&["stein-check", "--points", "0"]).status.code(), Some(2));
}

#[test]
fn bounds_and_metrics() {
    let o = stein(&["bounds", "--p", "0.01", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let j: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let wedfg = j["bounds"].as_array().unwrap().iter().find(|b| b["name"] == "wedfg").unwrap();
    assert!((wedfg["bound"].as_f64().unwrap() - 0.94219).abs() < 1e-5);

    let o = stein(&["bounds", "--n", "10", "--summand", r#"{"name":"uniform","params":{"c":1.0}}"#]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("thm888_dk"));
    assert_eq!(stein(&["bounds", "--p", "1.5"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let plot = dir.path().join("plot.csv");
    let o = stein(&["metrics", "--un", "2", "--json", "--out", plot.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let j: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((j["d_K"]["value"].as_f64().unwrap() - 0.153426).abs() < 1e-5);
    assert!(fs::read_to_string(&plot).unwrap().starts_with("x,series,cdf"));

    let o = stein(&["metrics", "--p", "0.05", "--seed", "3", "--replications", "20000"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("d_K"));
}

#[test]
fn usage_errors() {
    for verb in ["study", "constants", "stein-check", "bounds", "metrics"] {
        assert_eq!(stein(&[verb, "--help"]).status.code(), Some(0), "{verb}");
    }
    let o = stein(&["frobnicate"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("Usage"));
    assert_ne!(stein(&["constants", "--bogus"]).status.code(), Some(0));
}
