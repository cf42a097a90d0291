use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use percmon_core::diagnosability::{syndrome_set, brute_force_kappa, KappaOptions};
use percmon_core::graph::{
    build_graph, FailureKind, FailureModeDoc, GraphDoc, ModuleDoc, SystemDoc, TestDoc, GRAPH_DOC_VERSION,
};
use percmon_core::harness::{to_ndjson, DatasetSample, Split};
use percmon_core::{DiagnosticGraph, FaultState, Syndrome};
use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    json: Value,
}

fn percmon(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_percmon"))
        .args(args)
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let json = serde_json::from_str(stdout.trim()).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {stdout}"));
    Run {
        code: out.status.code().unwrap(),
        json,
    }
}

fn ok(args: &[&str]) -> Value {
    let r = percmon(args);
    assert_eq!(r.code, 0, "{args:?} failed: {}", r.json);
    assert_eq!(r.json["status"], "ok");
    r.json
}

fn err(args: &[&str]) -> (i32, String, Value) {
    let r = percmon(args);
    assert_ne!(r.code, 0, "{args:?} unexpectedly succeeded");
    assert_eq!(r.json["status"], "error");
    let code = r.json["error"]["code"].as_str().unwrap().to_string();
    (r.code, code, r.json)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn lines(p: &Path) -> usize {
    fs::read_to_string(p).unwrap().lines().count()
}

fn generate(dir: &Path, name: &str, kind: &str, count: usize, seed: u64) -> PathBuf {
    let out = dir.join(name);
    ok(&[
        "generate",
        "--kind",
        kind,
        "--count",
        &count.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        s(&out),
    ]);
    out
}

fn graph_doc(n: usize, scopes: &[&[usize]], semantics: &str) -> GraphDoc {
    GraphDoc {
        version: GRAPH_DOC_VERSION,
        system: SystemDoc {
            modules: vec![ModuleDoc {
                id: "m".into(),
                name: String::new(),
            }],
            ..Default::default()
        },
        failure_modes: (0..n)
            .map(|i| FailureModeDoc {
                id: format!("f{i}"),
                host: "m".into(),
                kind: FailureKind::Unknown,
            })
            .collect(),
        tests: scopes
            .iter()
            .enumerate()
            .map(|(j, scope)| TestDoc {
                id: format!("t{j}"),
                scope: scope.iter().map(|i| format!("f{i}")).collect(),
                semantics: semantics.into(),
                p_detect: None,
                p_false_alarm: None,
                temporal_span: 1,
            })
            .collect(),
        apriori: Vec::new(),
    }
}

fn write_graph(dir: &Path, name: &str, g: &DiagnosticGraph) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, g.to_json()).unwrap();
    p
}

#[test]
fn generate_writes_eighty_ten_ten_splits() {
    let dir = TempDir::new().unwrap();
    let out = generate(dir.path(), "d", "regular", 1650, 1);
    assert_eq!(lines(&out.join("train.ndjson")), 1320);
    assert_eq!(lines(&out.join("test.ndjson")), 165);
    assert_eq!(lines(&out.join("validation.ndjson")), 165);
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["seed"], 1);
    assert_eq!(m["counts"]["train"], 1320);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));

    let small = generate(dir.path(), "small", "regular", 10, 1);
    let counts: Vec<usize> = ["train", "test", "validation"]
        .iter()
        .map(|sp| lines(&small.join(format!("{sp}.ndjson"))))
        .collect();
    assert_eq!(counts, [8, 1, 1]);
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = TempDir::new().unwrap();
    let a = generate(dir.path(), "a", "temporal", 120, 9);
    let b = dir.path().join("a-again");
    fs::rename(&a, &b).unwrap();
    let a = generate(dir.path(), "a", "temporal", 120, 9);
    for f in ["train.ndjson", "test.ndjson", "validation.ndjson", "scenario.json", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = generate(dir.path(), "c", "temporal", 120, 10);
    assert_ne!(fs::read(a.join("train.ndjson")).unwrap(), fs::read(c.join("train.ndjson")).unwrap());
}

#[test]
fn errors_use_the_envelope() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope");
    let (code, kind, json) = err(&["fit", "--dataset", s(&missing), "--out", s(dir.path())]);
    assert_eq!((code, kind.as_str()), (1, "not_found"));
    assert!(json["error"]["message"].as_str().unwrap().contains("nope"));
    assert_eq!(json["error"]["details"]["path"], s(&missing));

    let (code, kind, _) = err(&["infer", "--bogus"]);
    assert_eq!((code, kind.as_str()), (2, "usage"));

    let data = generate(dir.path(), "d", "regular", 40, 1);
    let (_, kind, _) = err(&["infer", "--dataset", s(&data), "--algo", "factor-graph", "--out", s(dir.path())]);
    assert_eq!(kind, "missing_parameter");
    let (_, kind, _) = err(&["infer", "--dataset", s(&data), "--algo", "svm", "--out", s(dir.path())]);
    assert_eq!(kind, "invalid_argument");
    let (_, kind, _) = err(&["infer", "--dataset", s(&data), "--kind", "temporal", "--out", s(dir.path())]);
    assert_eq!(kind, "malformed_dataset");
}

#[test]
fn config_file_overrides_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"seed": 5, "count": 20}"#).unwrap();
    let out = dir.path().join("d");
    ok(&["generate", "--seed", "1", "--count", "500", "--out", s(&out), "--config", s(&cfg)]);
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["seed"], 5);
    assert_eq!(m["counts"]["train"], 16);

    fs::write(&cfg, r#"{"sed": 5}"#).unwrap();
    let (_, kind, _) = err(&["generate", "--out", s(&out), "--config", s(&cfg)]);
    assert_eq!(kind, "parse_error");
}

#[test]
fn pipeline_and_report_layout() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let mut runs = Vec::new();
    for kind in ["regular", "temporal"] {
        let data = generate(p, &format!("{kind}-data"), kind, 300, 2);
        let fit_dir = p.join(format!("{kind}-fit"));
        let fit = ok(&["fit", "--kind", kind, "--dataset", s(&data), "--out", s(&fit_dir)]);
        assert_eq!(fit["train_samples"], 240);
        for algo in ["factor-graph", "baseline"] {
            let out = p.join(format!("{kind}-{algo}"));
            let params = fit_dir.join("params.json");
            let r = ok(&[
                "infer", "--kind", kind, "--algo", algo, "--dataset", s(&data), "--params", s(&params), "--out", s(&out),
            ]);
            assert_eq!(r["samples"], 30);
            assert_eq!(lines(&out.join("predictions.ndjson")), 30);
            assert_eq!(lines(&out.join("metrics.csv")), 4);
            assert!(read_json(&out.join("timing.json"))["mean_ms"].as_f64().unwrap() < 100.0);
            runs.push(out);
        }
    }
    let report_dir = p.join("report");
    let mut args = vec!["report", "--out", s(&report_dir)];
    args.extend(runs.iter().map(|r| s(r)));
    assert_eq!(ok(&args)["rows"], 4);
    assert_eq!(lines(&report_dir.join("report.csv")), 5);
    let one = p.join("report-one");
    assert_eq!(ok(&["report", "--out", s(&one), s(&runs[0])])["rows"], 1);

    // A run on a different graph cannot be merged.
    let g = build_graph(&graph_doc(16, &[&[0, 1]], "weak_or")).unwrap();
    let gp = write_graph(p, "other.json", &g);
    let other = p.join("other-run");
    let data = p.join("regular-data");
    let (_, kind, _) = err(&["infer", "--graph", s(&gp), "--dataset", s(&data), "--algo", "baseline", "--out", s(&other)]);
    // 16 modes but one test: the syndrome length does not fit.
    assert_eq!(kind, "length_mismatch");
    let other = p.join("weak-run");
    ok(&["infer", "--semantics", "weak-or", "--dataset", s(&data), "--algo", "deterministic", "--out", s(&other)]);
    let (_, kind, _) = err(&["report", "--out", s(&p.join("r2")), s(&runs[0]), s(&other)]);
    assert_eq!(kind, "conflicting_manifests");
}

#[test]
fn baseline_on_all_pass_predicts_nothing() {
    let dir = TempDir::new().unwrap();
    let samples: Vec<DatasetSample> = (0..10)
        .map(|i| DatasetSample {
            timestamp: i as f64 * 0.3,
            syndrome: Syndrome::all_pass(18),
            labels: FaultState::zeros(16),
            split: if i < 8 { Split::Train } else { Split::Test },
            slices: 1,
        })
        .collect();
    let data = dir.path().join("pass.ndjson");
    fs::write(&data, to_ndjson(&samples)).unwrap();
    let out = dir.path().join("run");
    let r = ok(&["infer", "--algo", "baseline", "--dataset", s(&data), "--out", s(&out)]);
    assert_eq!(r["accuracy"], 1.0);
    let preds = fs::read_to_string(out.join("predictions.ndjson")).unwrap();
    for line in preds.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["predicted"].as_array().unwrap().iter().all(|b| b == 0));
    }
}

#[test]
fn deterministic_replay_within_kappa_is_exact() {
    let dir = TempDir::new().unwrap();
    // Every pair of five modes is tested.
    let pairs: Vec<Vec<usize>> = (0..5).flat_map(|a| (a + 1..5).map(move |b| vec![a, b])).collect();
    let scopes: Vec<&[usize]> = pairs.iter().map(Vec::as_slice).collect();
    let g = build_graph(&graph_doc(5, &scopes, "weak_or")).unwrap();
    let kappa = brute_force_kappa(&g, &KappaOptions::default()).unwrap().kappa;
    assert!(kappa >= 1);
    let mut samples = Vec::new();
    for mask in 0u64..32 {
        let f = FaultState::from_mask(5, mask);
        if f.cardinality() > kappa {
            continue;
        }
        for syn in syndrome_set(&g, &f).unwrap() {
            samples.push(DatasetSample {
                timestamp: samples.len() as f64,
                syndrome: syn,
                labels: f.clone(),
                split: Split::Test,
                slices: 1,
            });
        }
    }
    let data = dir.path().join("replay.ndjson");
    fs::write(&data, to_ndjson(&samples)).unwrap();
    let gp = write_graph(dir.path(), "k5.json", &g);
    let out = dir.path().join("run");
    let r = ok(&["infer", "--graph", s(&gp), "--algo", "deterministic", "--dataset", s(&data), "--out", s(&out)]);
    assert_eq!(r["accuracy"], 1.0);
    assert_eq!(r["samples"], samples.len());
}

#[test]
fn diagnosability_examples() {
    let dir = TempDir::new().unwrap();
    let p = dir.path();
    let kappa_of = |name: &str, g: &DiagnosticGraph, extra: &[&str]| -> Value {
        let gp = write_graph(p, name, g);
        let out = p.join(format!("{name}-out"));
        let mut args = vec!["diagnosability", "--graph", s(&gp), "--out", s(&out)];
        args.extend_from_slice(extra);
        let r = ok(&args);
        assert!(out.join("diagnosability.json").exists());
        r
    };
    let triangle = build_graph(&graph_doc(3, &[&[0, 1], &[1, 2], &[0, 2]], "deterministic_or")).unwrap();
    assert_eq!(kappa_of("triangle.json", &triangle, &[])["kappa"], 1);
    let singles = build_graph(&graph_doc(4, &[&[0], &[1], &[2], &[3]], "deterministic_or")).unwrap();
    assert_eq!(kappa_of("singles.json", &singles, &[])["kappa"], 4);

    let gp = write_graph(p, "singles2.json", &singles);
    let (_, kind, json) = err(&["diagnosability", "--graph", s(&gp), "--budget", "3", "--out", s(&p.join("b"))]);
    assert_eq!(kind, "budget_exceeded");
    assert!(json["error"]["details"]["partial_kappa"].is_u64());

    // PAC bounds over the delta grid from a labeled dataset.
    let data = generate(p, "d", "regular", 100, 3);
    let out = p.join("pac");
    let r = ok(&[
        "diagnosability", "--dataset", s(&data), "--algo", "baseline", "--delta", "0.07", "--out", s(&out),
    ]);
    assert!(r["pac_bound"].as_f64().unwrap() >= r["empirical_hamming"].as_f64().unwrap());
    assert_eq!(lines(&out.join("pac.csv")), 9);
}
