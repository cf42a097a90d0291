use std::path::Path;
use std::time::Instant;

use percmon_core::diagnosability::{
    check_sufficient_conditions, empirical_hamming, kappa_under_policies, pac_bound, KappaOptions, PacBound,
};
use percmon_core::eval::{metrics, Algorithm, DeterministicIdentifier, Identifier, MetricsReport, Slice};
use percmon_core::factor::{fit_params, LearnedParams};
use percmon_core::harness::{generate_dataset, to_ndjson, ScenarioConfig, Split};
use percmon_core::par;
use percmon_core::{DiagnosticGraph, FaultState};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{
    load_dataset, read_json, read_text, resolve_graph, split_file, write_json, write_text, Manifest, MANIFEST,
};

/// PAC bounds are always reported at these confidence levels, plus
/// `--delta` when given.
const DELTA_GRID: [f64; 7] = [0.2, 0.1, 0.05, 0.01, 1e-3, 1e-6, 1e-12];

/// The part of the config that determines the results: output location
/// and worker count do not.
fn hashed(config: &RunConfig) -> RunConfig {
    RunConfig {
        out: None,
        workers: None,
        ..config.clone()
    }
}

pub fn generate(c: &RunConfig) -> Result<Value> {
    let out = c.out()?;
    let scenario = match &c.scenario {
        Some(p) => ScenarioConfig::from_json(&read_text(p)?)?,
        None => ScenarioConfig::default(),
    };
    let kind = c.kind()?;
    let count = c.count.unwrap_or(1650);
    let data = generate_dataset(&scenario, kind, count, c.seed(), c.exec())?;
    let mut m = Manifest::new("generate", c, &json!({ "run": hashed(c), "scenario": scenario }));
    for split in Split::ALL {
        let file = split_file(out, split);
        write_text(&file, &to_ndjson(data.split(split)))?;
        m.counts.insert(split.to_string(), data.len(split));
        m.outputs.push(format!("{split}.ndjson"));
    }
    write_text(&out.join("scenario.json"), &scenario.to_json())?;
    m.outputs.push("scenario.json".into());
    m.write(out)?;
    Ok(json!({ "command": "generate", "out": out, "counts": m.counts }))
}

pub fn fit(c: &RunConfig) -> Result<Value> {
    let out = c.out()?;
    let (graph, info) = resolve_graph(c)?;
    let data = load_dataset(c.dataset()?, c.kind()?)?;
    let train = data.pairs(Split::Train);
    let params = fit_params(&graph, train.iter().map(|(s, f)| (s, f)))?;
    write_text(&out.join("params.json"), &params.to_json())?;
    let mut m = Manifest::new("fit", c, &hashed(c));
    m.graph = Some(info);
    m.counts.insert("train".into(), train.len());
    m.outputs.push("params.json".into());
    m.write(out)?;
    Ok(json!({ "command": "fit", "out": out, "train_samples": train.len() }))
}

fn load_params(c: &RunConfig, graph: &DiagnosticGraph, algo: Algorithm) -> Result<LearnedParams> {
    match (&c.params, algo) {
        (Some(p), _) => Ok(LearnedParams::from_json(&read_text(p)?)?),
        (None, Algorithm::FactorGraph) => Err(percmon_core::Error::MissingParameter(
            "the factor-graph algorithm needs --params".into(),
        )
        .into()),
        // Unused by the other algorithms.
        (None, _) => Ok(LearnedParams::uniform_priors(graph, 0.5)),
    }
}

fn identifier(c: &RunConfig, graph: &DiagnosticGraph) -> Result<Box<dyn Identifier>> {
    let algo = c.algo()?;
    let params = load_params(c, graph, algo)?;
    if algo == Algorithm::Deterministic {
        let budget = c.budget.map(|b| b as usize);
        let mut id = DeterministicIdentifier::new(graph, budget);
        // A syndrome with no explanation within the budget counts as a
        // miss rather than aborting the run.
        id.zeros_when_infeasible = true;
        return Ok(Box::new(id));
    }
    Ok(algo.identifier(graph, &params)?)
}

#[derive(Serialize)]
struct Prediction<'a> {
    timestamp: f64,
    predicted: &'a FaultState,
    labels: &'a FaultState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub samples: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
}

fn metrics_csv(report: &MetricsReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "slice",
        "accuracy",
        "precision",
        "recall",
        "detection_accuracy",
        "tp",
        "fp",
        "tn",
        "fn",
    ])?;
    for m in &report.slices {
        let c = m.confusion;
        w.write_record([
            m.slice.name().to_string(),
            m.accuracy.to_string(),
            m.precision.to_string(),
            m.recall.to_string(),
            m.detection_accuracy.to_string(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            c.fn_.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8"))
}

pub fn infer(c: &RunConfig) -> Result<Value> {
    let out = c.out()?;
    let (graph, info) = resolve_graph(c)?;
    let data = load_dataset(c.dataset()?, c.kind()?)?;
    let split = c.split()?;
    let samples: Vec<_> = data.split(split).collect();
    if samples.is_empty() {
        return Err(percmon_core::Error::EmptyDataset.into());
    }
    let id = identifier(c, &graph)?;
    let timed = par::map(c.exec(), &samples, |s| {
        let start = Instant::now();
        let r = id.identify(&s.syndrome);
        (r, start.elapsed().as_secs_f64() * 1e3)
    });
    let mut preds = Vec::with_capacity(samples.len());
    let mut times = Vec::with_capacity(samples.len());
    for (r, ms) in timed {
        preds.push(r?);
        times.push(ms);
    }
    let labels: Vec<FaultState> = samples.iter().map(|s| s.labels.clone()).collect();
    let report = metrics(&graph, &preds, &labels)?;

    let mut lines = String::new();
    for (s, p) in samples.iter().zip(&preds) {
        let row = Prediction {
            timestamp: s.timestamp,
            predicted: p,
            labels: &s.labels,
        };
        lines.push_str(&serde_json::to_string(&row).expect("predictions serialize"));
        lines.push('\n');
    }
    write_text(&out.join("predictions.ndjson"), &lines)?;
    write_json(&out.join("metrics.json"), &report)?;
    write_text(&out.join("metrics.csv"), &metrics_csv(&report)?)?;
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
    let timing = Timing {
        samples: times.len(),
        mean_ms: mean,
        std_ms: var.sqrt(),
    };
    write_json(&out.join("timing.json"), &timing)?;

    let mut m = Manifest::new("infer", c, &hashed(c));
    m.graph = Some(info);
    m.counts.insert(split.to_string(), samples.len());
    m.outputs = ["predictions.ndjson", "metrics.json", "metrics.csv", "timing.json"]
        .map(String::from)
        .to_vec();
    m.write(out)?;
    let all = report.slice(Slice::All);
    Ok(json!({
        "command": "infer",
        "out": out,
        "algorithm": c.algo()?.name(),
        "samples": samples.len(),
        "accuracy": all.accuracy,
        "mean_ms": timing.mean_ms,
    }))
}

#[derive(Serialize)]
struct PacRow {
    delta: f64,
    bound: f64,
    empirical_hamming: f64,
    n_failure_modes: usize,
    samples: usize,
}

impl From<PacBound> for PacRow {
    fn from(b: PacBound) -> Self {
        PacRow {
            delta: b.delta,
            bound: b.bound,
            empirical_hamming: b.empirical_hamming,
            n_failure_modes: b.n_failure_modes,
            samples: b.sample_count,
        }
    }
}

pub fn diagnosability(c: &RunConfig) -> Result<Value> {
    let out = c.out()?;
    let (graph, info) = resolve_graph(c)?;
    let deterministic = graph.without_probabilistic_apriori();
    let mut opts = KappaOptions {
        exec: c.exec(),
        ..KappaOptions::default()
    };
    if let Some(b) = c.budget {
        opts.pair_budget = b;
    }
    let kappa = kappa_under_policies(&deterministic, &opts)?;
    // The conditions only speak about Weak-OR graphs; elsewhere they are
    // reported as not applicable.
    let sufficient: Option<Vec<usize>> = (1..=graph.n_modes() / 2)
        .map(|k| check_sufficient_conditions(&deterministic, k).map(|ok| (k, ok)))
        .collect::<std::result::Result<Vec<_>, _>>()
        .ok()
        .map(|v| v.into_iter().filter(|&(_, ok)| ok).map(|(k, _)| k).collect());
    write_json(
        &out.join("diagnosability.json"),
        &json!({ "kappa": kappa, "sufficient_conditions_hold_for": sufficient }),
    )?;
    let mut m = Manifest::new("diagnosability", c, &hashed(c));
    m.graph = Some(info);
    m.outputs.push("diagnosability.json".into());

    let mut summary = json!({
        "command": "diagnosability",
        "out": out,
        "kappa": kappa.full.kappa,
        "kappa_outputs_only": kappa.outputs_only.kappa,
    });
    if let Some(path) = &c.dataset {
        let data = load_dataset(path, c.kind()?)?;
        let split = c.split()?;
        let pairs = data.pairs(split);
        if pairs.is_empty() {
            return Err(percmon_core::Error::EmptyDataset.into());
        }
        let id = identifier(c, &graph)?;
        let h = empirical_hamming(id.as_ref(), pairs.iter().map(|(s, f)| (s, f)))?;
        let mut deltas: Vec<f64> = DELTA_GRID.to_vec();
        if let Some(d) = c.delta {
            if !deltas.contains(&d) {
                deltas.push(d);
            }
        }
        deltas.sort_by(|a, b| b.total_cmp(a));
        let rows = deltas
            .iter()
            .map(|&d| pac_bound(h, graph.n_modes(), pairs.len(), d).map(PacRow::from))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &rows {
            w.serialize(r)?;
        }
        let text = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8");
        write_text(&out.join("pac.csv"), &text)?;
        write_json(&out.join("pac.json"), &rows)?;
        m.counts.insert(split.to_string(), pairs.len());
        m.outputs.extend(["pac.csv".to_string(), "pac.json".to_string()]);
        let at = c.delta.unwrap_or(0.05);
        summary["empirical_hamming"] = json!(h);
        summary["pac_bound"] = json!(pac_bound(h, graph.n_modes(), pairs.len(), at)?.bound);
        summary["delta"] = json!(at);
    }
    m.write(out)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct ReportRow {
    run: String,
    algorithm: String,
    kind: String,
    split: String,
    samples: usize,
    all_accuracy: f64,
    all_precision: f64,
    all_recall: f64,
    outputs_accuracy: f64,
    outputs_precision: f64,
    outputs_recall: f64,
    modules_accuracy: f64,
    modules_precision: f64,
    modules_recall: f64,
    detection_accuracy: f64,
    mean_ms: Option<f64>,
}

fn report_row(dir: &Path) -> Result<(Manifest, ReportRow)> {
    let manifest_path = dir.join(MANIFEST);
    if !manifest_path.exists() {
        return Err(CliError::MissingInput(format!("{} has no {MANIFEST}", dir.display())));
    }
    let m: Manifest = read_json(&manifest_path)?;
    if m.command != "infer" {
        return Err(CliError::MissingInput(format!(
            "{} holds `{}` output, not inference results",
            dir.display(),
            m.command
        )));
    }
    let report: MetricsReport = read_json(&dir.join("metrics.json"))?;
    let timing_path = dir.join("timing.json");
    let timing: Option<Timing> = if timing_path.exists() {
        Some(read_json(&timing_path)?)
    } else {
        None
    };
    let s = |slice| report.slice(slice);
    let row = ReportRow {
        run: dir.display().to_string(),
        algorithm: m.config.algo.clone().unwrap_or_else(|| "factor-graph".into()),
        kind: m.config.kind.clone().unwrap_or_else(|| "regular".into()),
        split: m.config.split.clone().unwrap_or_else(|| "test".into()),
        samples: report.samples,
        all_accuracy: s(Slice::All).accuracy,
        all_precision: s(Slice::All).precision,
        all_recall: s(Slice::All).recall,
        outputs_accuracy: s(Slice::Outputs).accuracy,
        outputs_precision: s(Slice::Outputs).precision,
        outputs_recall: s(Slice::Outputs).recall,
        modules_accuracy: s(Slice::Modules).accuracy,
        modules_precision: s(Slice::Modules).precision,
        modules_recall: s(Slice::Modules).recall,
        detection_accuracy: s(Slice::All).detection_accuracy,
        mean_ms: timing.map(|t| t.mean_ms),
    };
    Ok((m, row))
}

pub fn report(c: &RunConfig) -> Result<Value> {
    let out = c.out()?;
    if c.inputs.is_empty() {
        return Err(CliError::Usage("report needs at least one run directory".into()));
    }
    let mut rows = Vec::new();
    let mut base: Option<(String, Option<String>)> = None;
    for dir in &c.inputs {
        let (m, row) = report_row(dir)?;
        let g = m
            .graph
            .ok_or_else(|| CliError::MissingInput(format!("{} does not record its graph", dir.display())))?;
        let key = (g.source, g.semantics);
        match &base {
            None => base = Some(key),
            Some(b) if *b != key => {
                return Err(CliError::ConflictingManifests(format!(
                    "{} uses graph {} ({}) but the first run uses {} ({})",
                    dir.display(),
                    key.0,
                    key.1.as_deref().unwrap_or("own semantics"),
                    b.0,
                    b.1.as_deref().unwrap_or("own semantics"),
                )))
            }
            Some(_) => {}
        }
        rows.push(row);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    let text = String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8");
    write_text(&out.join("report.csv"), &text)?;
    write_json(&out.join("report.json"), &rows)?;
    let mut m = Manifest::new("report", c, &hashed(c));
    m.counts.insert("runs".into(), rows.len());
    m.outputs = vec!["report.csv".into(), "report.json".into()];
    m.write(out)?;
    Ok(json!({ "command": "report", "out": out, "rows": rows.len() }))
}
