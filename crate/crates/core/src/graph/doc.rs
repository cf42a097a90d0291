//! Versioned JSON graph definition document.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{
    check_probability, AprioriKind, AprioriRelation, DiagnosticGraph, DiagnosticTest,
    FailureKind, FailureMode, Host, ModuleDesc, NoisyOrParams, OutputDesc, PerceptionSystem,
    SystemEdge, TestSemantics,
};
use crate::error::{Error, Result};

pub const GRAPH_DOC_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub version: u32,
    pub system: SystemDoc,
    pub failure_modes: Vec<FailureModeDoc>,
    #[serde(default)]
    pub tests: Vec<TestDoc>,
    #[serde(default)]
    pub apriori: Vec<AprioriDoc>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SystemDoc {
    #[serde(default)]
    pub modules: Vec<ModuleDoc>,
    #[serde(default)]
    pub outputs: Vec<OutputDoc>,
    #[serde(default)]
    pub edges: Vec<SystemEdgeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleDoc {
    pub id: String,
    #[serde(default)]
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDoc {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub producer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemEdgeDoc {
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureModeDoc {
    pub id: String,
    pub host: String,
    pub kind: FailureKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestDoc {
    pub id: String,
    pub scope: Vec<String>,
    /// One of `deterministic_or`, `weak_or`, `weaker_or`, `noisy_or`.
    pub semantics: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_detect: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_false_alarm: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub temporal_span: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriDoc {
    pub id: String,
    #[serde(flatten)]
    pub predicate: PredicateDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredicateDoc {
    ModuleOutputImplication {
        module: Vec<String>,
        outputs: Vec<String>,
        #[serde(default)]
        iff: bool,
    },
    Prior {
        mode: String,
        rho: f64,
    },
    Transition {
        from: String,
        to: String,
        p_activate: f64,
        p_persist: f64,
    },
    MutualExclusion {
        scope: Vec<String>,
    },
    Implication {
        premise: Vec<String>,
        conclusion: Vec<String>,
    },
}

pub(super) fn build(doc: &GraphDoc) -> Result<DiagnosticGraph> {
    if doc.version != GRAPH_DOC_VERSION {
        return Err(Error::MalformedGraph(format!(
            "unsupported version {} (expected {GRAPH_DOC_VERSION})",
            doc.version
        )));
    }
    let system = build_system(&doc.system)?;

    let mut lookup: HashMap<&str, usize> = HashMap::new();
    let mut failure_modes = Vec::with_capacity(doc.failure_modes.len());
    for (i, m) in doc.failure_modes.iter().enumerate() {
        if lookup.insert(m.id.as_str(), i).is_some() {
            return Err(Error::DuplicateId(m.id.clone()));
        }
        let host = if let Some(k) = system.module_index(&m.host) {
            Host::Module(k)
        } else if let Some(k) = system.output_index(&m.host) {
            Host::Output(k)
        } else {
            return Err(Error::DanglingReference(m.host.clone()));
        };
        failure_modes.push(FailureMode {
            id: m.id.clone(),
            host,
            kind: m.kind,
        });
    }

    let resolve = |owner: &str, ids: &[String]| -> Result<Vec<usize>> {
        if ids.is_empty() {
            return Err(Error::EmptyScope(owner.to_string()));
        }
        let mut seen = HashSet::new();
        ids.iter()
            .map(|id| {
                let i = *lookup
                    .get(id.as_str())
                    .ok_or_else(|| Error::DanglingReference(id.clone()))?;
                if !seen.insert(i) {
                    return Err(Error::DuplicateId(id.clone()));
                }
                Ok(i)
            })
            .collect()
    };

    let mut relation_ids = HashSet::new();
    let mut tests = Vec::with_capacity(doc.tests.len());
    for t in &doc.tests {
        if !relation_ids.insert(t.id.as_str()) {
            return Err(Error::DuplicateId(t.id.clone()));
        }
        let scope = resolve(&t.id, &t.scope)?;
        let semantics = match t.semantics.as_str() {
            "deterministic_or" => TestSemantics::DeterministicOr,
            "weak_or" => TestSemantics::WeakOr,
            "weaker_or" => TestSemantics::WeakerOr,
            "noisy_or" => {
                let (Some(d), Some(a)) = (&t.p_detect, &t.p_false_alarm) else {
                    return Err(Error::MalformedGraph(format!(
                        "noisy_or test `{}` needs p_detect and p_false_alarm",
                        t.id
                    )));
                };
                if d.len() != scope.len() || a.len() != scope.len() {
                    return Err(Error::MalformedGraph(format!(
                        "noisy_or parameters of `{}` not aligned with scope",
                        t.id
                    )));
                }
                for &p in d.iter().chain(a) {
                    check_probability(&t.id, p)?;
                }
                TestSemantics::NoisyOr(NoisyOrParams::new(d.clone(), a.clone()))
            }
            other => {
                return Err(Error::MalformedGraph(format!(
                    "unknown semantics `{other}` in `{}`",
                    t.id
                )))
            }
        };
        if t.temporal_span == 0 {
            return Err(Error::MalformedGraph(format!("temporal_span of `{}` is 0", t.id)));
        }
        tests.push(DiagnosticTest {
            id: t.id.clone(),
            scope,
            semantics,
            temporal_span: t.temporal_span,
        });
    }

    let mut apriori = Vec::with_capacity(doc.apriori.len());
    for r in &doc.apriori {
        if !relation_ids.insert(r.id.as_str()) {
            return Err(Error::DuplicateId(r.id.clone()));
        }
        let (scope, kind) = match &r.predicate {
            PredicateDoc::ModuleOutputImplication {
                module,
                outputs,
                iff,
            } => {
                let module = resolve(&r.id, module)?;
                let outputs = resolve(&r.id, outputs)?;
                let scope = union(&module, &outputs);
                (
                    scope,
                    AprioriKind::ModuleOutputImplication {
                        module,
                        outputs,
                        iff: *iff,
                    },
                )
            }
            PredicateDoc::Prior { mode, rho } => {
                check_probability(&r.id, *rho)?;
                (
                    resolve(&r.id, std::slice::from_ref(mode))?,
                    AprioriKind::Prior { rho: *rho },
                )
            }
            PredicateDoc::Transition {
                from,
                to,
                p_activate,
                p_persist,
            } => {
                check_probability(&r.id, *p_activate)?;
                check_probability(&r.id, *p_persist)?;
                (
                    resolve(&r.id, &[from.clone(), to.clone()])?,
                    AprioriKind::Transition {
                        p_activate: *p_activate,
                        p_persist: *p_persist,
                    },
                )
            }
            PredicateDoc::MutualExclusion { scope } => {
                (resolve(&r.id, scope)?, AprioriKind::MutualExclusion)
            }
            PredicateDoc::Implication {
                premise,
                conclusion,
            } => {
                let premise = resolve(&r.id, premise)?;
                let conclusion = resolve(&r.id, conclusion)?;
                (
                    union(&premise, &conclusion),
                    AprioriKind::Implication {
                        premise,
                        conclusion,
                    },
                )
            }
        };
        apriori.push(AprioriRelation {
            id: r.id.clone(),
            scope,
            kind,
        });
    }

    Ok(DiagnosticGraph::from_parts(system, failure_modes, tests, apriori))
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = a.to_vec();
    for &x in b {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn build_system(doc: &SystemDoc) -> Result<PerceptionSystem> {
    let mut ids = HashSet::new();
    let mut modules = Vec::new();
    for m in &doc.modules {
        if !ids.insert(m.id.as_str()) {
            return Err(Error::DuplicateId(m.id.clone()));
        }
        modules.push(ModuleDesc {
            id: m.id.clone(),
            name: m.name.clone(),
        });
    }
    let mut outputs = Vec::new();
    for o in &doc.outputs {
        if !ids.insert(o.id.as_str()) {
            return Err(Error::DuplicateId(o.id.clone()));
        }
        let producer = modules
            .iter()
            .position(|m| m.id == o.producer)
            .ok_or_else(|| Error::DanglingReference(o.producer.clone()))?;
        outputs.push(OutputDesc {
            id: o.id.clone(),
            name: o.name.clone(),
            producer,
        });
    }
    let mut edges = Vec::new();
    for e in &doc.edges {
        let from_module = modules.iter().position(|m| m.id == e.from);
        let from_output = outputs.iter().position(|o| o.id == e.from);
        let to_module = modules.iter().position(|m| m.id == e.to);
        let to_output = outputs.iter().position(|o| o.id == e.to);
        match (from_module, from_output, to_module, to_output) {
            (Some(m), _, _, Some(o)) => {
                if outputs[o].producer != m {
                    return Err(Error::MalformedGraph(format!(
                        "output `{}` already produced by `{}`",
                        e.to, modules[outputs[o].producer].id
                    )));
                }
            }
            (_, Some(_), Some(_), _) => {}
            (None, None, _, _) => return Err(Error::DanglingReference(e.from.clone())),
            (_, _, None, None) => return Err(Error::DanglingReference(e.to.clone())),
            _ => {
                return Err(Error::MalformedGraph(format!(
                    "edge {} -> {} must link a module and an output",
                    e.from, e.to
                )))
            }
        }
        edges.push(SystemEdge {
            from: e.from.clone(),
            to: e.to.clone(),
        });
    }
    Ok(PerceptionSystem {
        modules,
        outputs,
        edges,
    })
}

pub(super) fn serialize(g: &DiagnosticGraph) -> GraphDoc {
    let sys = g.system();
    let system = SystemDoc {
        modules: sys
            .modules
            .iter()
            .map(|m| ModuleDoc {
                id: m.id.clone(),
                name: m.name.clone(),
            })
            .collect(),
        outputs: sys
            .outputs
            .iter()
            .map(|o| OutputDoc {
                id: o.id.clone(),
                name: o.name.clone(),
                producer: sys.modules[o.producer].id.clone(),
            })
            .collect(),
        edges: sys
            .edges
            .iter()
            .map(|e| SystemEdgeDoc {
                from: e.from.clone(),
                to: e.to.clone(),
            })
            .collect(),
    };
    let name = |i: usize| g.failure_modes()[i].id.clone();
    let names = |v: &[usize]| v.iter().map(|&i| name(i)).collect::<Vec<_>>();
    let failure_modes = g
        .failure_modes()
        .iter()
        .map(|m| FailureModeDoc {
            id: m.id.clone(),
            host: match m.host {
                Host::Module(k) => sys.modules[k].id.clone(),
                Host::Output(k) => sys.outputs[k].id.clone(),
            },
            kind: m.kind,
        })
        .collect();
    let tests = g
        .tests()
        .iter()
        .map(|t| {
            let (p_detect, p_false_alarm) = match &t.semantics {
                TestSemantics::NoisyOr(p) => (Some(p.p_detect.clone()), Some(p.p_false_alarm.clone())),
                _ => (None, None),
            };
            TestDoc {
                id: t.id.clone(),
                scope: names(&t.scope),
                semantics: t.semantics.tag().to_string(),
                p_detect,
                p_false_alarm,
                temporal_span: t.temporal_span,
            }
        })
        .collect();
    let apriori = g
        .apriori()
        .iter()
        .map(|r| AprioriDoc {
            id: r.id.clone(),
            predicate: match &r.kind {
                AprioriKind::ModuleOutputImplication {
                    module,
                    outputs,
                    iff,
                } => PredicateDoc::ModuleOutputImplication {
                    module: names(module),
                    outputs: names(outputs),
                    iff: *iff,
                },
                AprioriKind::Prior { rho } => PredicateDoc::Prior {
                    mode: name(r.scope[0]),
                    rho: *rho,
                },
                AprioriKind::Transition {
                    p_activate,
                    p_persist,
                } => PredicateDoc::Transition {
                    from: name(r.scope[0]),
                    to: name(r.scope[1]),
                    p_activate: *p_activate,
                    p_persist: *p_persist,
                },
                AprioriKind::MutualExclusion => PredicateDoc::MutualExclusion {
                    scope: names(&r.scope),
                },
                AprioriKind::Implication {
                    premise,
                    conclusion,
                } => PredicateDoc::Implication {
                    premise: names(premise),
                    conclusion: names(conclusion),
                },
            },
        })
        .collect();
    GraphDoc {
        version: GRAPH_DOC_VERSION,
        system,
        failure_modes,
        tests,
        apriori,
    }
}
