use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use percmon_core::eval::Algorithm;
use percmon_core::harness::{GraphKind, Split};
use percmon_core::par::Execution;
use percmon_core::TestSemantics;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Options shared by every command. Each one may also be set in the JSON
/// file given by `--config`; values from the file win.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Builtin graph name or path to a graph JSON document.
    #[arg(long, global = true)]
    pub graph: Option<String>,
    /// Dataset directory written by `generate`, or one NDJSON file.
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    /// deterministic, weaker-or, factor-graph, baseline or baseline-rel.
    #[arg(long, global = true)]
    pub algo: Option<String>,
    /// regular or temporal.
    #[arg(long, global = true)]
    pub kind: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Cardinality budget for deterministic inference; fault-set pair
    /// budget for `diagnosability`.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Confidence parameter of the PAC bound.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Number of records to generate.
    #[arg(long, global = true)]
    pub count: Option<usize>,
    /// Scenario config JSON for `generate`.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Learned parameters written by `fit`.
    #[arg(long, global = true)]
    pub params: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Split to evaluate: train, test or validation.
    #[arg(long, global = true)]
    pub split: Option<String>,
    /// Replace every test's semantics: deterministic-or, weak-or or
    /// weaker-or.
    #[arg(long, global = true)]
    pub semantics: Option<String>,
    /// Run directories merged by `report`.
    #[arg(global = true)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<PathBuf>,
}

impl RunConfig {
    /// Fields set in `file` replace those in `self`.
    pub fn overridden_by(self, file: RunConfig) -> RunConfig {
        RunConfig {
            graph: file.graph.or(self.graph),
            dataset: file.dataset.or(self.dataset),
            algo: file.algo.or(self.algo),
            kind: file.kind.or(self.kind),
            seed: file.seed.or(self.seed),
            out: file.out.or(self.out),
            budget: file.budget.or(self.budget),
            delta: file.delta.or(self.delta),
            count: file.count.or(self.count),
            scenario: file.scenario.or(self.scenario),
            params: file.params.or(self.params),
            workers: file.workers.or(self.workers),
            split: file.split.or(self.split),
            semantics: file.semantics.or(self.semantics),
            inputs: if file.inputs.is_empty() { self.inputs } else { file.inputs },
        }
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| CliError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn kind(&self) -> Result<GraphKind> {
        Ok(self.kind.as_deref().unwrap_or("regular").parse()?)
    }

    pub fn algo(&self) -> Result<Algorithm> {
        Ok(self.algo.as_deref().unwrap_or("factor-graph").parse()?)
    }

    pub fn split(&self) -> Result<Split> {
        match self.split.as_deref().unwrap_or("test") {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            "validation" => Ok(Split::Validation),
            other => Err(CliError::Usage(format!("unknown split `{other}`"))),
        }
    }

    pub fn semantics(&self) -> Result<Option<TestSemantics>> {
        self.semantics
            .as_deref()
            .map(|s| match s {
                "deterministic-or" => Ok(TestSemantics::DeterministicOr),
                "weak-or" => Ok(TestSemantics::WeakOr),
                "weaker-or" => Ok(TestSemantics::WeakerOr),
                other => Err(CliError::Usage(format!("unknown semantics `{other}`"))),
            })
            .transpose()
    }

    pub fn exec(&self) -> Execution {
        Execution::from_workers(self.workers.unwrap_or(0))
    }

    pub fn out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Usage("--out is required".into()))
    }

    pub fn dataset(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| CliError::Usage("--dataset is required".into()))
    }
}

/// SHA-256 of `value`'s JSON encoding, hex encoded.
pub fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config values serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
