use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const A3: &str = r#"{
  "vertices": ["1", "2", "3"],
  "arrows": [{"id": "a1", "tail": "1", "head": "2"}, {"id": "a2", "tail": "2", "head": "3"}],
  "d": {"1": 1, "2": 8, "3": 1},
  "io": {"inputs": ["1"], "outputs": ["3"]}
}"#;

fn quivernet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quivernet")).args(args).output().expect("binary runs")
}

fn fixtures(dir: &Path) -> (String, String) {
    let q = dir.join("a3.json");
    fs::write(&q, A3).unwrap();
    let mut csv = String::from("x,y\n");
    for k in 0..64 {
        let x = k as f64 / 63.0;
        csv.push_str(&format!("{x},{}\n", (2.0 * std::f64::consts::PI * x).sin()));
    }
    let d = dir.join("sin.csv");
    fs::write(&d, csv).unwrap();
    (q.to_str().unwrap().into(), d.to_str().unwrap().into())
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_runs_the_metric_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let (q, _) = fixtures(tmp.path());
    let out = tmp.path().join("out");
    let o = quivernet(&["verify", "--quiver", &q, "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out.join("verify_report.json"));
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["pass"], true);
    assert_eq!(r["suite"]["samples"], 100);
}

#[test]
fn topology_sweep_emits_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("topo");
    let o = quivernet(&[
        "topology", "--chain", "A", "--k", "3", "--d", "600,m,m,m,10", "--sweep", "1..64", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("kind,m,D,logchi\n"));
    assert_eq!(csv.lines().count(), 65);
    let r = report(&out.join("topology_report.json"));
    assert_eq!(r["routes_agree"], true);
    assert_eq!(r["palindromic"], true);

    let both = tmp.path().join("both");
    let o = quivernet(&["topology", "--k", "3", "--d", "600,m,m,m,10", "--out", both.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let chi = fs::read_to_string(both.join("chi.csv")).unwrap();
    assert!(chi.starts_with("D,logchi_A,logchi_Aprime\n"));
    assert!(chi.lines().count() > 1);
}

#[test]
fn train_report_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let (q, d) = fixtures(tmp.path());
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = quivernet(&["train", "--quiver", &q, "--data", &d, "--steps", "5000", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let b = run("b");
    let r = report(&a.join("train_report.json"));
    assert_eq!(r["loss_trace"].as_array().unwrap().len(), 5001);
    assert!(r["final_loss"].as_f64().unwrap() < r["initial_loss"].as_f64().unwrap());
    assert_eq!(fs::read(a.join("train_report.json")).unwrap(), fs::read(b.join("train_report.json")).unwrap());
    assert!(fs::read_to_string(a.join("loss_trace.csv")).unwrap().starts_with("step,loss,grad_norm\n"));
    assert!(a.join("timing.json").exists());
}

#[test]
fn approx_reports_error_components() {
    let o = quivernet(&["approx", "--stdout"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let results = r["results"].as_array().unwrap();
    assert_eq!(results.len(), 3);
    for res in results {
        for key in ["step_function", "tropical_tail", "wall_mass"] {
            assert!(res["components"][key].is_number());
        }
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let (q, d) = fixtures(tmp.path());
    assert_eq!(quivernet(&["bogus"]).status.code(), Some(1));
    assert_eq!(quivernet(&["topology", "--k", "2", "--d", "600,m,m,m,10", "--stdout"]).status.code(), Some(1));
    assert_eq!(quivernet(&["verify", "--quiver", "does-not-exist.json"]).status.code(), Some(2));
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"vertices": ["1"], "arrows": [], "d": {"2": 1}}"#).unwrap();
    assert_eq!(quivernet(&["verify", "--quiver", bad.to_str().unwrap(), "--stdout"]).status.code(), Some(2));
    let o = quivernet(&["train", "--quiver", &q, "--data", &d, "--lr=-1", "--stdout"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(quivernet(&["--help"]).status.success());
}
