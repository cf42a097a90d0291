//! Perception-system and diagnostic-graph data model.
//!
//! A [`DiagnosticGraph`] is bipartite: failure-mode variables on one side,
//! test-driven and a-priori relations on the other. Failure modes and tests
//! are indexed in document order and those indices never change once the
//! graph is built.

mod builtin;
mod doc;
mod temporal;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use builtin::{
    apollo_obstacle, apollo_temporal, builtin_graph, fig2_example, fig2_example4,
    lidar_egomotion_example, BuiltinGraph, Fig2Options, FusionRelation, APOLLO_MODULES, APOLLO_OUTPUTS,
    APOLLO_PAIRS, OUTPUT_FAILURE_KINDS,
};
pub use doc::{
    AprioriDoc, FailureModeDoc, GraphDoc, ModuleDoc, OutputDoc, PredicateDoc, SystemDoc,
    SystemEdgeDoc, TestDoc, GRAPH_DOC_VERSION,
};
pub use temporal::{stack_temporal, SliceRef, TemporalDiagnosticGraph, TemporalTestDef, TemporalTransitionDef};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleDesc {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputDesc {
    pub id: String,
    pub name: String,
    /// Index into [`PerceptionSystem::modules`].
    pub producer: usize,
}

/// Produce (`module -> output`) or consume (`output -> module`) link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemEdge {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PerceptionSystem {
    pub modules: Vec<ModuleDesc>,
    pub outputs: Vec<OutputDesc>,
    pub edges: Vec<SystemEdge>,
}

impl PerceptionSystem {
    pub fn module_index(&self, id: &str) -> Option<usize> {
        self.modules.iter().position(|m| m.id == id)
    }

    pub fn output_index(&self, id: &str) -> Option<usize> {
        self.outputs.iter().position(|o| o.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Host {
    Module(usize),
    Output(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    OutOfDistribution,
    Misdetection,
    Misposition,
    Misclassification,
    Misassociation,
    TooManyOutliers,
    FewFeatures,
    SuboptimalSolution,
    WrongRelativePose,
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailureMode {
    pub id: String,
    pub host: Host,
    pub kind: FailureKind,
}

/// Per-scope-member detection and false-alarm probabilities of a Noisy-OR test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyOrParams {
    pub p_detect: Vec<f64>,
    pub p_false_alarm: Vec<f64>,
}

impl NoisyOrParams {
    pub fn new(p_detect: Vec<f64>, p_false_alarm: Vec<f64>) -> Self {
        NoisyOrParams {
            p_detect,
            p_false_alarm,
        }
    }

    pub fn uniform(len: usize, p_detect: f64, p_false_alarm: f64) -> Self {
        NoisyOrParams {
            p_detect: vec![p_detect; len],
            p_false_alarm: vec![p_false_alarm; len],
        }
    }

    pub fn len(&self) -> usize {
        self.p_detect.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_detect.is_empty()
    }
}

/// The deterministic test models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeterministicModel {
    Or,
    WeakOr,
    WeakerOr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TestSemantics {
    DeterministicOr,
    WeakOr,
    WeakerOr,
    NoisyOr(NoisyOrParams),
}

impl TestSemantics {
    pub fn deterministic(&self) -> Option<DeterministicModel> {
        match self {
            TestSemantics::DeterministicOr => Some(DeterministicModel::Or),
            TestSemantics::WeakOr => Some(DeterministicModel::WeakOr),
            TestSemantics::WeakerOr => Some(DeterministicModel::WeakerOr),
            TestSemantics::NoisyOr(_) => None,
        }
    }

    pub fn from_model(model: DeterministicModel) -> Self {
        match model {
            DeterministicModel::Or => TestSemantics::DeterministicOr,
            DeterministicModel::WeakOr => TestSemantics::WeakOr,
            DeterministicModel::WeakerOr => TestSemantics::WeakerOr,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            TestSemantics::DeterministicOr => "deterministic_or",
            TestSemantics::WeakOr => "weak_or",
            TestSemantics::WeakerOr => "weaker_or",
            TestSemantics::NoisyOr(_) => "noisy_or",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticTest {
    pub id: String,
    /// Failure-mode indices, in the order the document lists them.
    pub scope: Vec<usize>,
    pub semantics: TestSemantics,
    /// Number of time slices the scope crosses; 1 for regular tests.
    pub temporal_span: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AprioriKind {
    /// The module fails if any attached output fails; with `iff`, also the
    /// converse.
    ModuleOutputImplication {
        module: Vec<usize>,
        outputs: Vec<usize>,
        iff: bool,
    },
    /// Activation probability of a single failure mode.
    Prior { rho: f64 },
    /// `P(to | from)` between two failure modes in consecutive slices.
    Transition { p_activate: f64, p_persist: f64 },
    /// At most one mode in scope is active.
    MutualExclusion,
    /// Any active premise forces at least one active conclusion.
    Implication {
        premise: Vec<usize>,
        conclusion: Vec<usize>,
    },
}

impl AprioriKind {
    pub fn is_probabilistic(&self) -> bool {
        matches!(self, AprioriKind::Prior { .. } | AprioriKind::Transition { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AprioriRelation {
    pub id: String,
    /// Every failure mode the predicate touches. For `Transition` this is
    /// `[from, to]`; for `Prior` a single index.
    pub scope: Vec<usize>,
    pub kind: AprioriKind,
}

impl AprioriRelation {
    pub fn is_probabilistic(&self) -> bool {
        self.kind.is_probabilistic()
    }
}

/// Immutable, validated diagnostic graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticGraph {
    system: PerceptionSystem,
    failure_modes: Vec<FailureMode>,
    tests: Vec<DiagnosticTest>,
    apriori: Vec<AprioriRelation>,
    mode_lookup: HashMap<String, usize>,
}

impl DiagnosticGraph {
    pub(crate) fn from_parts(
        system: PerceptionSystem,
        failure_modes: Vec<FailureMode>,
        tests: Vec<DiagnosticTest>,
        apriori: Vec<AprioriRelation>,
    ) -> Self {
        let mode_lookup = failure_modes
            .iter()
            .enumerate()
            .map(|(i, m)| (m.id.clone(), i))
            .collect();
        DiagnosticGraph {
            system,
            failure_modes,
            tests,
            apriori,
            mode_lookup,
        }
    }

    pub fn system(&self) -> &PerceptionSystem {
        &self.system
    }

    pub fn failure_modes(&self) -> &[FailureMode] {
        &self.failure_modes
    }

    pub fn tests(&self) -> &[DiagnosticTest] {
        &self.tests
    }

    pub fn apriori(&self) -> &[AprioriRelation] {
        &self.apriori
    }

    pub fn n_modes(&self) -> usize {
        self.failure_modes.len()
    }

    pub fn n_tests(&self) -> usize {
        self.tests.len()
    }

    pub fn mode_index(&self, id: &str) -> Option<usize> {
        self.mode_lookup.get(id).copied()
    }

    pub fn test_index(&self, id: &str) -> Option<usize> {
        self.tests.iter().position(|t| t.id == id)
    }

    /// Module responsible for a failure mode: its host module, or the
    /// producer of its host output.
    pub fn responsible_module(&self, mode: usize) -> usize {
        match self.failure_modes[mode].host {
            Host::Module(m) => m,
            Host::Output(o) => self.system.outputs[o].producer,
        }
    }

    pub fn is_module_mode(&self, mode: usize) -> bool {
        matches!(self.failure_modes[mode].host, Host::Module(_))
    }

    /// `true` at indices of failure modes hosted by modules.
    pub fn module_mask(&self) -> Vec<bool> {
        (0..self.n_modes()).map(|i| self.is_module_mode(i)).collect()
    }

    pub fn output_mask(&self) -> Vec<bool> {
        (0..self.n_modes()).map(|i| !self.is_module_mode(i)).collect()
    }

    /// Failure modes hosted directly by module `m`.
    pub fn modes_of_module(&self, m: usize) -> Vec<usize> {
        (0..self.n_modes())
            .filter(|&i| self.failure_modes[i].host == Host::Module(m))
            .collect()
    }

    /// Failure modes hosted by outputs that module `m` produces.
    pub fn modes_of_module_outputs(&self, m: usize) -> Vec<usize> {
        (0..self.n_modes())
            .filter(|&i| match self.failure_modes[i].host {
                Host::Output(o) => self.system.outputs[o].producer == m,
                Host::Module(_) => false,
            })
            .collect()
    }

    pub fn has_probabilistic_relations(&self) -> bool {
        self.apriori.iter().any(|r| r.is_probabilistic())
            || self
                .tests
                .iter()
                .any(|t| matches!(t.semantics, TestSemantics::NoisyOr(_)))
    }

    /// Copy with every test retyped to `semantics`. Noisy-OR parameters
    /// are sized to each scope when `semantics` is Noisy-OR with a single
    /// entry per vector.
    pub fn with_semantics(&self, semantics: &TestSemantics) -> DiagnosticGraph {
        let mut g = self.clone();
        for t in &mut g.tests {
            t.semantics = match semantics {
                TestSemantics::NoisyOr(p) if p.len() != t.scope.len() => {
                    let d = p.p_detect.first().copied().unwrap_or(1.0);
                    let a = p.p_false_alarm.first().copied().unwrap_or(0.0);
                    TestSemantics::NoisyOr(NoisyOrParams::uniform(t.scope.len(), d, a))
                }
                s => s.clone(),
            };
        }
        g
    }

    /// Copy without `Prior`/`Transition` relations.
    pub fn without_probabilistic_apriori(&self) -> DiagnosticGraph {
        let mut g = self.clone();
        g.apriori.retain(|r| !r.is_probabilistic());
        g
    }

    /// Sub-graph over output failure modes only. Module-hosted modes are
    /// removed, test scopes are restricted to the remaining modes (tests
    /// left empty are dropped), and a-priori relations touching a removed
    /// mode are dropped.
    pub fn outputs_only(&self) -> DiagnosticGraph {
        let keep: Vec<usize> = (0..self.n_modes()).filter(|&i| !self.is_module_mode(i)).collect();
        let mut remap = vec![None; self.n_modes()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = Some(new);
        }
        let failure_modes = keep.iter().map(|&i| self.failure_modes[i].clone()).collect();
        let tests = self
            .tests
            .iter()
            .filter_map(|t| {
                let kept: Vec<(usize, usize)> = t
                    .scope
                    .iter()
                    .enumerate()
                    .filter_map(|(pos, &i)| remap[i].map(|n| (pos, n)))
                    .collect();
                if kept.is_empty() {
                    return None;
                }
                let semantics = match &t.semantics {
                    TestSemantics::NoisyOr(p) => TestSemantics::NoisyOr(NoisyOrParams::new(
                        kept.iter().map(|&(pos, _)| p.p_detect[pos]).collect(),
                        kept.iter().map(|&(pos, _)| p.p_false_alarm[pos]).collect(),
                    )),
                    s => s.clone(),
                };
                Some(DiagnosticTest {
                    id: t.id.clone(),
                    scope: kept.iter().map(|&(_, n)| n).collect(),
                    semantics,
                    temporal_span: t.temporal_span,
                })
            })
            .collect();
        let map_all = |v: &[usize]| -> Option<Vec<usize>> { v.iter().map(|&i| remap[i]).collect() };
        let apriori = self
            .apriori
            .iter()
            .filter_map(|r| {
                let scope = map_all(&r.scope)?;
                let kind = match &r.kind {
                    AprioriKind::ModuleOutputImplication { module, outputs, iff } => {
                        AprioriKind::ModuleOutputImplication {
                            module: map_all(module)?,
                            outputs: map_all(outputs)?,
                            iff: *iff,
                        }
                    }
                    AprioriKind::Implication {
                        premise,
                        conclusion,
                    } => AprioriKind::Implication {
                        premise: map_all(premise)?,
                        conclusion: map_all(conclusion)?,
                    },
                    k => k.clone(),
                };
                Some(AprioriRelation {
                    id: r.id.clone(),
                    scope,
                    kind,
                })
            })
            .collect();
        DiagnosticGraph::from_parts(self.system.clone(), failure_modes, tests, apriori)
    }

    /// Structural mode-count sanity: every relation scope is inside the
    /// failure-mode index range.
    pub fn scopes_in_range(&self) -> bool {
        let n = self.n_modes();
        self.tests.iter().all(|t| t.scope.iter().all(|&i| i < n))
            && self.apriori.iter().all(|r| r.scope.iter().all(|&i| i < n))
    }
}

/// Parses and validates a graph definition document.
pub fn build_graph(doc: &GraphDoc) -> Result<DiagnosticGraph> {
    doc::build(doc)
}

pub fn graph_from_json(json: &str) -> Result<DiagnosticGraph> {
    let doc: GraphDoc = serde_json::from_str(json)?;
    build_graph(&doc)
}

impl DiagnosticGraph {
    pub fn to_doc(&self) -> GraphDoc {
        doc::serialize(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("graph documents always serialize")
    }
}

pub(crate) fn check_probability(id: &str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::MalformedProbability {
            id: id.to_string(),
            value,
        })
    }
}
