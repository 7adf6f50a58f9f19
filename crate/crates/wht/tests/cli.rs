use std::path::{Path, PathBuf};
use std::process::Command;

use proptest::prelude::*;
use serde_json::Value;
use wht::config::{ColorConfig, ModelConfig, RunConfig, ScalarMode, Task};
use wht::suites::{self, Status};
use wht_core::oracle::tables_for;

const SMALL: &str = r#"{
  "model": { "num": [{ "u": "1" }], "p": ["1/2", "1/3"], "q": ["1", "2/3"] },
  "oracle": { "d_max": 4, "connected": true },
  "spectral": { "T": 4 },
  "toprec": { "t_value": [0.001, 0.0], "g_max": 1, "n_max": 2, "tol": 1e-6, "depth_margin": 4 },
  "output": { "dir": "unused", "formats": ["json", "csv"] }
}"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn wht(args: &[&str], cfg: &Path, out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_wht"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .env("WHT_THREADS", "2")
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned())
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn with_model(model: &str, extra: &str) -> String {
    format!(r#"{{ "model": {model}, "oracle": {{ "d_max": 3, "connected": true }}, "spectral": {{ "T": 4 }}{extra} }}"#)
}

#[test]
fn default_config_passes_every_suite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (code, stdout) = wht(&["verify", "--parallel"], &cfg, dir.path());
    assert_eq!(code, 0, "{stdout}");
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["failed"], 0);
    let suites: Vec<&str> = report["checks"].as_array().unwrap().iter().map(|c| c["suite"].as_str().unwrap()).collect();
    for t in Task::ALL {
        assert!(suites.contains(&t.name()), "{} missing", t.name());
    }
}

#[test]
fn degenerate_model_skips_recursion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &with_model(r#"{ "num": [{ "u": "1" }], "p": ["1", "1/2"], "q": ["1"] }"#, ""));
    let (code, stdout) = wht(&["verify"], &cfg, dir.path());
    assert_eq!(code, 0, "{stdout}");
    let report = read_json(&dir.path().join("report.json"));
    for c in report["checks"].as_array().unwrap() {
        let expect = if c["suite"] == "tr" { "SKIP" } else { "PASS" };
        assert_eq!(c["status"], expect, "{c}");
    }
    assert!(stdout.contains("AssumptionViolation"));
    let (code, _) = wht(&["tr"], &cfg, dir.path());
    assert_eq!(code, 3);
    let (code, _) = wht(&["curve"], &cfg, dir.path());
    assert_eq!(code, 3);
}

#[test]
fn corrupted_q_fails_the_disk_check() {
    let cfg = RunConfig::from_json(SMALL).unwrap();
    let params = cfg.params().unwrap();
    let tables = tables_for(suites::shape_of(&params), 3, 0).unwrap();
    let clean = suites::w01(&params, &params, &tables, 3);
    assert!(clean.iter().all(|c| c.status == Status::Pass));
    let mut corrupt = params.clone();
    corrupt.q[1] = wht::config::parse_rational("3/4").unwrap();
    let checks = suites::w01(&params, &corrupt, &tables, 3);
    assert!(checks.iter().all(|c| c.status == Status::Fail), "{checks:?}");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["{", r#"{"model": {"num": [{"u": "0"}], "p": ["1"], "q": ["1"]}}"#] {
        let cfg = write_config(dir.path(), text);
        assert_eq!(wht(&["table"], &cfg, dir.path()).0, 2);
    }
    let missing = dir.path().join("absent.json");
    assert_eq!(wht(&["verify"], &missing, dir.path()).0, 2);
}

#[test]
fn table_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let one = with_model(r#"{ "num": [{ "u": "1" }], "p": ["1"], "q": ["1"] }"#, "")
        .replace(r#""d_max": 3"#, r#""d_max": 1"#);
    let cfg = write_config(dir.path(), &one);
    assert_eq!(wht(&["table"], &cfg, dir.path()).0, 0);
    let rows = read_json(&dir.path().join("table.json"));
    assert_eq!(
        rows,
        serde_json::json!([{"lambda": [1], "mu": [1], "ell": [0], "ell_exp": null, "connected": true, "genus": 0, "count": "1"}])
    );

    let two = one.replace(r#""d_max": 1"#, r#""d_max": 2"#);
    let cfg = write_config(dir.path(), &two);
    assert_eq!(wht(&["table"], &cfg, dir.path()).0, 0);
    let rows = read_json(&dir.path().join("table.json"));
    let find = |lambda: &[u32], mu: &[u32], ell: u32| {
        rows.as_array().unwrap().iter().find(|r| {
            r["lambda"] == serde_json::json!(lambda) && r["mu"] == serde_json::json!(mu) && r["ell"] == serde_json::json!([ell])
        })
    };
    assert_eq!(find(&[2], &[1, 1], 1).unwrap()["count"], "1");
    assert_eq!(find(&[2], &[2], 0).unwrap()["count"], "1");
    assert_eq!(find(&[2], &[2], 0).unwrap()["genus"], 0);

    let first = std::fs::read(dir.path().join("table.json")).unwrap();
    let other = tempfile::tempdir().unwrap();
    assert_eq!(wht(&["table", "--parallel"], &cfg, other.path()).0, 0);
    assert_eq!(first, std::fs::read(other.path().join("table.json")).unwrap());
}

#[test]
fn curve_exports() {
    let dir = tempfile::tempdir().unwrap();
    // p ≡ 0: A = 1 + u Q(tz) exactly
    let text = with_model(r#"{ "num": [{ "u": "2" }], "p": ["0"], "q": ["1", "1/3"] }"#, "");
    let cfg = write_config(dir.path(), &text);
    assert_eq!(wht(&["curve"], &cfg, dir.path()).0, 0);
    let sd = read_json(&dir.path().join("spectral.json"));
    let a = &sd["colors"][0]["A"];
    assert_eq!(a[0]["t"], serde_json::json!(["1", "0", "0", "0", "0"]));
    assert_eq!(a[1]["t"], serde_json::json!(["0", "2", "0", "0", "0"]));
    assert_eq!(a[2]["t"], serde_json::json!(["0", "0", "2/3", "0", "0"]));
    let curve = read_json(&dir.path().join("curve.json"));
    assert_eq!(curve["branchpoints"]["initial"].as_array().unwrap().len(), 2);
    let t = 1e-3;
    for (a, b) in curve["branchpoints"]["initial"]
        .as_array()
        .unwrap()
        .iter()
        .zip(curve["branchpoints"]["numeric"]["points"].as_array().unwrap())
    {
        let (ar, br) = (a[0].as_f64().unwrap(), b[0].as_f64().unwrap());
        assert!((br * t - ar).abs() <= 1e-12 * ar.abs());
    }
    let csv = std::fs::read_to_string(dir.path().join("branchpoints.csv")).unwrap_or_default();
    assert!(csv.is_empty(), "csv not requested");

    let text = with_model(r#"{ "num": [{ "u": "1/2" }], "u_exp": "1", "p": ["1/3"], "q": ["1", "1/2"] }"#, r#", "output": {"dir": "x", "formats": ["json", "csv"]}"#);
    let cfg = write_config(dir.path(), &text);
    assert_eq!(wht(&["curve"], &cfg, dir.path()).0, 0);
    let sd = read_json(&dir.path().join("spectral.json"));
    assert!(sd["eta"].is_array() && sd["theta"].is_array());
    let csv = std::fs::read_to_string(dir.path().join("branchpoints.csv")).unwrap();
    assert!(csv.starts_with("i,re_a,im_a,re_b,im_b\n"));
    assert_eq!(csv.lines().count(), 1 + 4);
}

#[test]
fn recursion_export_has_pole_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (code, stdout) = wht(&["tr"], &cfg, dir.path());
    assert_eq!(code, 0, "{stdout}");
    let omega = read_json(&dir.path().join("omega.json"));
    let w03 = omega.as_array().unwrap().iter().find(|o| o["g"] == 0 && o["n"] == 3).unwrap();
    for term in w03["terms"].as_array().unwrap() {
        let idx = term["multi_index"].as_array().unwrap();
        assert_eq!(idx.len(), 3);
        assert!(idx.iter().all(|p| p[1] == 2));
        assert_eq!(term["coeff"].as_array().unwrap().len(), 2);
    }
    let cmp = read_json(&dir.path().join("compare.json"));
    assert!(cmp["comparisons"].as_array().unwrap().iter().all(|c| c["samples"].as_array().unwrap().len() == 5));
}

fn rational() -> impl Strategy<Value = String> {
    (-9i64..=9, 1i64..=5).prop_filter("nonzero", |(n, _)| *n != 0).prop_map(|(n, d)| format!("{n}/{d}"))
}

proptest! {
    #[test]
    fn config_round_trip(
        num in prop::collection::vec((rational(), 1u64..3), 0..3),
        den in prop::collection::vec(rational(), 0..2),
        exp in prop::option::of(rational()),
        p in prop::collection::vec(rational(), 1..3),
        q in prop::collection::vec(rational(), 1..3),
        d_max in 1usize..6,
        order in 1usize..10,
        tasks in prop::sample::subsequence(Task::ALL.to_vec(), 0..8),
        numeric in any::<bool>(),
    ) {
        prop_assume!(!num.is_empty() || !den.is_empty() || exp.is_some());
        let mut cfg = RunConfig::from_json(SMALL).unwrap();
        cfg.model = ModelConfig {
            num: num.into_iter().map(|(u, mult)| ColorConfig { u, mult }).collect(),
            den: den.into_iter().map(|u| ColorConfig { u, mult: 1 }).collect(),
            u_exp: exp,
            p,
            q,
            scalar_mode: if numeric { ScalarMode::Numeric } else { ScalarMode::Exact },
        };
        cfg.oracle.d_max = d_max;
        cfg.spectral.order = order;
        cfg.tasks = tasks;
        let text = cfg.to_json();
        let back = RunConfig::from_json(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_json(), text);
    }
}
