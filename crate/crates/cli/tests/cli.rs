use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn smoothnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smoothnet")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn experiment_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = smoothnet(&["experiment", "--function", "cubic", "--seeds", "1-3", "--steps", "300", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["spec.json", "dataset.csv", "summary.json", "seed_1/report.json", "seed_2/network.json", "seed_3/trace.csv", "seed_3/plot.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let meta = json(&a.join("metadata.json"));
    assert!(meta["created_unix"].as_u64().unwrap() > 0);
    let summary = json(&a.join("summary.json"));
    assert_eq!(summary["aggregate"]["runs"], 3);
    assert_eq!(summary["seeds"].as_array().unwrap().len(), 3);
    let rep = json(&a.join("seed_1/report.json"));
    assert_eq!(rep["units"].as_array().unwrap().len(), 10);
    assert!(rep["mode"] == "local" || rep["mode"] == "global");
    let trace = fs::read_to_string(a.join("seed_1/trace.csv")).unwrap();
    assert!(trace.starts_with("step,eps\n"));
    assert_eq!(trace.lines().count(), 302);
}

#[test]
fn report_rebuilds_the_same_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&smoothnet(&["experiment", "--function", "x^2", "--seeds", "4", "--steps", "100", "--out", out])), 0);
    let before = fs::read(dir.path().join("summary.json")).unwrap();
    fs::remove_file(dir.path().join("summary.json")).unwrap();
    assert_eq!(code(&smoothnet(&["report", "--out", out])), 0);
    assert_eq!(fs::read(dir.path().join("summary.json")).unwrap(), before);
}

#[test]
fn train_then_reanalyze_with_other_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&smoothnet(&["train", "--function", "cubic32", "--seeds", "1", "--steps", "200", "--out", out])), 0);
    assert!(!dir.path().join("seed_1/report.json").exists());
    let o = smoothnet(&["analyze", "--out", out, "--gamma3", "0.2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("seed_1/report.json").exists());
    assert_eq!(json(&dir.path().join("spec.json"))["thresholds"]["gamma3"], 0.2);
}

#[test]
fn analyze_stored_files() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.json");
    let data = dir.path().join("data.csv");
    fs::write(&net, r#"{"units":[{"w":[60.0],"b":-36.0,"lambda":2.0,"kind":"logistic"},{"w":[3.0],"b":-1.0,"lambda":0.0,"kind":"logistic"}],"output_bias":0.0}"#).unwrap();
    let mut csv = String::from("x1,y\n");
    for i in 0..=100 {
        let x = i as f64 / 100.0;
        let y = 2.0 / (1.0 + (-(60.0 * x - 36.0f64)).exp()) + 1e-3 * (37.0 * x).sin();
        csv += &format!("{x},{y}\n");
    }
    fs::write(&data, csv).unwrap();
    let out = dir.path().join("rep");
    let o = smoothnet(&["analyze", "--net", net.to_str().unwrap(), "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&out.join("report.json"));
    assert_eq!(rep["units"][0]["verdict"], "local");
    assert_eq!(rep["units"][1]["verdict"], "inactivated");
    assert_eq!(rep["mode"], "global");
    let plot = fs::read_to_string(out.join("plot.csv")).unwrap();
    assert!(plot.starts_with("series,unit,x1,x2,value\n"));
    assert!(plot.lines().any(|l| l.starts_with("marker,0,")));
}

#[test]
fn synthesize_cubic_spline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = smoothnet(&["synthesize", "--function", "5*sin(3*x)", "--pieces", "5", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let net = json(&dir.path().join("network.json"));
    assert_eq!(net["units"].as_array().unwrap().len(), 8);
    let c = json(&dir.path().join("construction.json"));
    assert_eq!(c["knots"].as_array().unwrap().len(), 4);
    assert!(c["l2_error"].as_f64().unwrap() < 1e-3);
    for key in ["rho", "gamma", "c_k", "zero_part_l2"] {
        assert!(c["knots"][0][key].is_number(), "{key}");
    }
    let s = json(&dir.path().join("spline.json"));
    assert_eq!(s["m"], 3);
    assert_eq!(s["knots"].as_array().unwrap().len(), 4);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"function":"cubic","seeds":[]}"#).unwrap();
    assert_eq!(code(&smoothnet(&["experiment", "--spec", spec.to_str().unwrap(), "--out", out])), 2);
    let o = smoothnet(&["experiment", "--function", "x^^3", "--out", out]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error at 2"));
    assert_eq!(code(&smoothnet(&["experiment", "--out", out])), 2);
    assert_eq!(code(&smoothnet(&["experiment", "--function", "x", "--dim", "3"])), 2);
    assert_eq!(code(&smoothnet(&["experiment", "--function", "x", "--gamma1", "1.5", "--out", out])), 2);
    assert_eq!(code(&smoothnet(&["frobnicate"])), 2);
}

#[test]
fn unreachable_tolerance_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = smoothnet(&["synthesize", "--function", "exp(8*x)", "--pieces", "2", "--degree", "1", "--out", out]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn divergence_keeps_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = smoothnet(&["experiment", "--function", "1e3*x", "--lr", "1e6", "--seeds", "1", "--steps", "500", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let st = json(&dir.path().join("seed_1/status.json"));
    assert_eq!(st["ok"], false);
    assert_eq!(st["artifacts"]["trace.csv"], "ok (partial)");
    assert!(st["artifacts"]["network.json"].as_str().unwrap().contains("diverged"));
    let summary = json(&dir.path().join("summary.json"));
    assert_eq!(summary["aggregate"]["succeeded"], 0);
}
