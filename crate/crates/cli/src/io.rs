use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use percmon_core::graph::{apollo_temporal, builtin_graph, graph_from_json, BuiltinGraph};
use percmon_core::harness::{from_ndjson, Dataset, DatasetSample, GraphKind, Split};
use percmon_core::{DiagnosticGraph, TestSemantics};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{hash_json, RunConfig};
use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("outputs serialize");
    text.push('\n');
    write_text(path, &text)
}

pub fn split_file(dir: &Path, split: Split) -> PathBuf {
    dir.join(format!("{split}.ndjson"))
}

/// A directory holds one file per split; a single file carries the split
/// in every record.
pub fn load_dataset(path: &Path, kind: GraphKind) -> Result<Dataset> {
    let mut samples: Vec<DatasetSample> = Vec::new();
    if path.is_dir() {
        for split in Split::ALL {
            let file = split_file(path, split);
            if file.exists() {
                samples.extend(from_ndjson(&read_text(&file)?)?);
            }
        }
    } else {
        samples = from_ndjson(&read_text(path)?)?;
    }
    if samples.is_empty() {
        return Err(CliError::MissingInput(format!("no samples in {}", path.display())));
    }
    if let Some(s) = samples.iter().find(|s| s.slices != kind.slices()) {
        return Err(percmon_core::Error::MalformedDataset(format!(
            "sample at {} has {} slices but the graph kind is {kind}",
            s.timestamp, s.slices
        ))
        .into());
    }
    Ok(Dataset { kind, samples })
}

/// Where a graph came from, recorded in manifests so `report` can tell
/// whether runs are comparable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphInfo {
    /// `builtin:<name>` or the SHA-256 of the graph file.
    pub source: String,
    pub semantics: Option<String>,
    pub kind: String,
    pub n_modes: usize,
    pub n_tests: usize,
}

pub fn resolve_graph(config: &RunConfig) -> Result<(DiagnosticGraph, GraphInfo)> {
    let kind = config.kind()?;
    let semantics = config.semantics()?;
    let spec = config.graph.as_deref().unwrap_or(BuiltinGraph::ApolloObstacle.name());
    let builtin = spec.parse::<BuiltinGraph>().is_ok();
    let (graph, source) = match (builtin, kind) {
        (true, GraphKind::Regular) => (builtin_graph(spec)?, format!("builtin:{spec}")),
        (true, GraphKind::Temporal) if spec == BuiltinGraph::ApolloObstacle.name() => {
            let s = semantics.clone().unwrap_or(TestSemantics::WeakerOr);
            (apollo_temporal(&s, true)?.into_flat(), format!("builtin:{spec}"))
        }
        (true, GraphKind::Temporal) => {
            return Err(CliError::Usage(format!(
                "builtin `{spec}` has no temporal form; pass a stacked graph file"
            )))
        }
        // Graph files are used as given; a temporal one must already be
        // stacked.
        (false, _) => {
            let text = read_text(Path::new(spec))?;
            (graph_from_json(&text)?, format!("sha256:{}", hash_json(&text)))
        }
    };
    let graph = match &semantics {
        Some(s) => graph.with_semantics(s),
        None => graph,
    };
    let info = GraphInfo {
        source,
        semantics: semantics.map(|s| s.tag().to_string()),
        kind: kind.to_string(),
        n_modes: graph.n_modes(),
        n_tests: graph.n_tests(),
    };
    Ok((graph, info))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// SHA-256 of the effective configuration.
    pub config_hash: String,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphInfo>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub counts: BTreeMap<String, usize>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, hashed: &impl Serialize) -> Manifest {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: config.seed(),
            config_hash: hash_json(hashed),
            config: config.clone(),
            graph: None,
            counts: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST), self)
    }
}
