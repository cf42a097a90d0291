use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::sim::{Frame, Scenario};
use crate::bits::{FaultState, Syndrome};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    Validation,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Test, Split::Validation];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Validation => "validation",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    #[default]
    Regular,
    /// Two stacked consecutive ticks with cross-time tests.
    Temporal,
}

impl GraphKind {
    pub fn name(self) -> &'static str {
        match self {
            GraphKind::Regular => "regular",
            GraphKind::Temporal => "temporal",
        }
    }

    pub fn slices(self) -> usize {
        match self {
            GraphKind::Regular => 1,
            GraphKind::Temporal => 2,
        }
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(GraphKind::Regular),
            "temporal" => Ok(GraphKind::Temporal),
            _ => Err(Error::InvalidArgument(format!("unknown graph kind `{s}`"))),
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSample {
    pub timestamp: f64,
    pub syndrome: Syndrome,
    pub labels: FaultState,
    pub split: Split,
    #[serde(default = "one")]
    pub slices: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: GraphKind,
    pub samples: Vec<DatasetSample>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &DatasetSample> {
        self.samples.iter().filter(move |s| s.split == split)
    }

    pub fn len(&self, split: Split) -> usize {
        self.split(split).count()
    }

    /// `(syndrome, labels)` pairs of one split.
    pub fn pairs(&self, split: Split) -> Vec<(Syndrome, FaultState)> {
        self.split(split)
            .map(|s| (s.syndrome.clone(), s.labels.clone()))
            .collect()
    }
}

/// One JSON object per line.
pub fn to_ndjson<'a>(samples: impl IntoIterator<Item = &'a DatasetSample>) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serde_json::to_string(s).expect("samples always serialize"));
        out.push('\n');
    }
    out
}

/// Parses newline-delimited samples; blank lines are skipped. All samples
/// must agree on syndrome and label lengths.
pub fn from_ndjson(text: &str) -> Result<Vec<DatasetSample>> {
    let mut samples: Vec<DatasetSample> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let s: DatasetSample =
            serde_json::from_str(line).map_err(|e| Error::MalformedDataset(format!("line {}: {e}", n + 1)))?;
        if let Some(first) = samples.first() {
            if s.syndrome.len() != first.syndrome.len() || s.labels.len() != first.labels.len() {
                return Err(Error::MalformedDataset(format!("line {}: inconsistent lengths", n + 1)));
            }
        }
        samples.push(s);
    }
    Ok(samples)
}

/// `(train, test, validation)`: test and validation get `floor(n / 10)`
/// each, train the rest.
pub fn split_sizes(n: usize) -> Result<[usize; 3]> {
    if n < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 samples, got {n}")));
    }
    let tenth = n / 10;
    Ok([n - 2 * tenth, tenth, tenth])
}

fn scene_seed(seed: u64, scene: u64) -> u64 {
    // splitmix64 finalizer over the pair.
    let mut z = seed ^ scene.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn records(sc: &Scenario, kind: GraphKind, offset: f64, frames: &[Frame]) -> Vec<(f64, Syndrome, FaultState)> {
    match kind {
        GraphKind::Regular => frames
            .iter()
            .map(|f| (offset + f.time, sc.syndrome(f), sc.labels(f)))
            .collect(),
        GraphKind::Temporal => frames
            .windows(2)
            .map(|w| {
                let syndrome = Syndrome::concat(&[sc.syndrome(&w[0]), sc.syndrome(&w[1]), sc.cross_syndrome(&w[0], &w[1])]);
                let labels = FaultState::concat(&[sc.labels(&w[0]), sc.labels(&w[1])]);
                (offset + w[1].time, syndrome, labels)
            })
            .collect(),
    }
}

/// Simulates independent scenes until `count` records exist, then splits
/// them into contiguous train, test and validation blocks in time order.
/// Each scene has its own seed, so the result does not depend on `exec`.
pub fn generate_dataset(
    config: &ScenarioConfig,
    kind: GraphKind,
    count: usize,
    seed: u64,
    exec: Execution,
) -> Result<Dataset> {
    let [train, test, _] = split_sizes(count)?;
    let sc = Scenario::new(config)?;
    let frames_per_scene = sc.simulate(config.scene_duration, scene_seed(seed, 0))?.len();
    let per_scene = match kind {
        GraphKind::Regular => frames_per_scene,
        GraphKind::Temporal => frames_per_scene - 1,
    };
    let n_scenes = count.div_ceil(per_scene);
    let scenes = par::map_range(exec, n_scenes, |i| -> Result<_> {
        let frames = sc.simulate(config.scene_duration, scene_seed(seed, i as u64))?;
        Ok(records(&sc, kind, i as f64 * config.scene_duration, &frames))
    });
    let mut samples = Vec::with_capacity(count);
    for scene in scenes {
        for (timestamp, syndrome, labels) in scene? {
            if samples.len() == count {
                break;
            }
            let split = match samples.len() {
                i if i < train => Split::Train,
                i if i < train + test => Split::Test,
                _ => Split::Validation,
            };
            samples.push(DatasetSample {
                timestamp,
                syndrome,
                labels,
                split,
                slices: kind.slices(),
            });
        }
    }
    Ok(Dataset { kind, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_rule() {
        assert_eq!(split_sizes(1650).unwrap(), [1320, 165, 165]);
        assert_eq!(split_sizes(1590).unwrap(), [1272, 159, 159]);
        assert_eq!(split_sizes(10).unwrap(), [8, 1, 1]);
        assert_eq!(split_sizes(19).unwrap(), [17, 1, 1]);
        assert!(split_sizes(9).is_err());
    }

    #[test]
    fn shapes_and_splits() {
        let c = ScenarioConfig::default();
        let d = generate_dataset(&c, GraphKind::Regular, 120, 5, Execution::Parallel).unwrap();
        assert_eq!(d.samples.len(), 120);
        assert_eq!([d.len(Split::Train), d.len(Split::Test), d.len(Split::Validation)], [96, 12, 12]);
        assert!(d.samples.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
        assert!(d.samples.windows(2).all(|w| w[0].split <= w[1].split));
        assert!(d.samples.iter().all(|s| s.syndrome.len() == 18 && s.labels.len() == 16));

        let t = generate_dataset(&c, GraphKind::Temporal, 60, 5, Execution::Sequential).unwrap();
        assert!(t.samples.iter().all(|s| s.syndrome.len() == 54 && s.labels.len() == 32 && s.slices == 2));
    }

    #[test]
    fn execution_mode_does_not_change_data() {
        let c = ScenarioConfig::default();
        let a = generate_dataset(&c, GraphKind::Regular, 200, 9, Execution::Parallel).unwrap();
        let b = generate_dataset(&c, GraphKind::Regular, 200, 9, Execution::Sequential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ndjson_round_trip() {
        let d = generate_dataset(&ScenarioConfig::default(), GraphKind::Regular, 20, 1, Execution::Sequential).unwrap();
        let text = to_ndjson(&d.samples);
        assert_eq!(text.lines().count(), 20);
        assert_eq!(from_ndjson(&text).unwrap(), d.samples);
        let first = text.lines().next().unwrap();
        let v: serde_json::Value = serde_json::from_str(first).unwrap();
        assert_eq!(v["split"], "train");
        assert!(v["syndrome"].as_array().unwrap().iter().all(|b| b == 0 || b == 1));
        assert!(matches!(from_ndjson("{\"timestamp\": 1}"), Err(Error::MalformedDataset(_))));
    }
}
