//! Stacking regular diagnostic graphs into a temporal diagnostic graph.

use super::doc::{AprioriDoc, GraphDoc, PredicateDoc, SystemDoc, TestDoc};
use super::{build_graph, DiagnosticGraph, TestSemantics, GRAPH_DOC_VERSION};
use crate::error::{Error, Result};

/// A failure mode of a specific slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceRef {
    pub slice: usize,
    pub mode: String,
}

impl SliceRef {
    pub fn new(slice: usize, mode: impl Into<String>) -> Self {
        SliceRef {
            slice,
            mode: mode.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TemporalTestDef {
    pub id: String,
    pub scope: Vec<SliceRef>,
    pub semantics: TestSemantics,
}

#[derive(Debug, Clone)]
pub struct TemporalTransitionDef {
    pub id: String,
    pub from: SliceRef,
    pub to: SliceRef,
    pub p_activate: f64,
    pub p_persist: f64,
}

/// `K` slices plus cross-slice tests and transitions. Inference runs on
/// [`flat`](Self::flat), whose failure-mode index space is the disjoint
/// union of the slice index spaces in slice order; its tests are all slice
/// tests in slice order followed by the temporal tests.
#[derive(Debug, Clone)]
pub struct TemporalDiagnosticGraph {
    slices: Vec<DiagnosticGraph>,
    temporal_tests: Vec<TemporalTestDef>,
    temporal_apriori: Vec<TemporalTransitionDef>,
    flat: DiagnosticGraph,
}

impl TemporalDiagnosticGraph {
    pub fn slices(&self) -> &[DiagnosticGraph] {
        &self.slices
    }

    pub fn temporal_tests(&self) -> &[TemporalTestDef] {
        &self.temporal_tests
    }

    pub fn temporal_apriori(&self) -> &[TemporalTransitionDef] {
        &self.temporal_apriori
    }

    pub fn flat(&self) -> &DiagnosticGraph {
        &self.flat
    }

    pub fn into_flat(self) -> DiagnosticGraph {
        self.flat
    }

    /// Offset of slice `k` in the flattened failure-mode index space.
    pub fn mode_offset(&self, k: usize) -> usize {
        self.slices[..k].iter().map(|s| s.n_modes()).sum()
    }
}

pub(crate) fn prefixed(slice: usize, id: &str) -> String {
    format!("t{slice}/{id}")
}

pub fn stack_temporal(
    slices: Vec<DiagnosticGraph>,
    temporal_tests: Vec<TemporalTestDef>,
    temporal_apriori: Vec<TemporalTransitionDef>,
) -> Result<TemporalDiagnosticGraph> {
    if slices.is_empty() {
        return Err(Error::InvalidArgument("temporal stack needs at least one slice".into()));
    }
    let check_ref = |r: &SliceRef| -> Result<()> {
        let slice = slices
            .get(r.slice)
            .ok_or_else(|| Error::DanglingReference(format!("slice {} of {}", r.slice, r.mode)))?;
        slice
            .mode_index(&r.mode)
            .map(|_| ())
            .ok_or_else(|| Error::DanglingReference(prefixed(r.slice, &r.mode)))
    };

    let mut doc = GraphDoc {
        version: GRAPH_DOC_VERSION,
        system: SystemDoc::default(),
        failure_modes: Vec::new(),
        tests: Vec::new(),
        apriori: Vec::new(),
    };
    for (k, slice) in slices.iter().enumerate() {
        let d = slice.to_doc();
        for mut m in d.system.modules {
            m.id = prefixed(k, &m.id);
            doc.system.modules.push(m);
        }
        for mut o in d.system.outputs {
            o.id = prefixed(k, &o.id);
            o.producer = prefixed(k, &o.producer);
            doc.system.outputs.push(o);
        }
        for mut e in d.system.edges {
            e.from = prefixed(k, &e.from);
            e.to = prefixed(k, &e.to);
            doc.system.edges.push(e);
        }
        for mut f in d.failure_modes {
            f.id = prefixed(k, &f.id);
            f.host = prefixed(k, &f.host);
            doc.failure_modes.push(f);
        }
        for mut t in d.tests {
            t.id = prefixed(k, &t.id);
            t.scope = t.scope.iter().map(|s| prefixed(k, s)).collect();
            doc.tests.push(t);
        }
        for mut r in d.apriori {
            r.id = prefixed(k, &r.id);
            let p = |v: &mut Vec<String>| v.iter_mut().for_each(|s| *s = prefixed(k, s));
            match &mut r.predicate {
                PredicateDoc::ModuleOutputImplication { module, outputs, .. } => {
                    p(module);
                    p(outputs);
                }
                PredicateDoc::Prior { mode, .. } => *mode = prefixed(k, mode),
                PredicateDoc::Transition { from, to, .. } => {
                    *from = prefixed(k, from);
                    *to = prefixed(k, to);
                }
                PredicateDoc::MutualExclusion { scope } => p(scope),
                PredicateDoc::Implication {
                    premise,
                    conclusion,
                } => {
                    p(premise);
                    p(conclusion);
                }
            }
            doc.apriori.push(r);
        }
    }

    for t in &temporal_tests {
        if t.scope.is_empty() {
            return Err(Error::EmptyScope(t.id.clone()));
        }
        t.scope.iter().try_for_each(check_ref)?;
        let lo = t.scope.iter().map(|r| r.slice).min().unwrap_or(0);
        let hi = t.scope.iter().map(|r| r.slice).max().unwrap_or(0);
        if hi - lo > 1 {
            return Err(Error::InvalidArgument(format!(
                "temporal test `{}` spans non-adjacent slices {lo}..{hi}",
                t.id
            )));
        }
        let (p_detect, p_false_alarm) = match &t.semantics {
            TestSemantics::NoisyOr(p) => (Some(p.p_detect.clone()), Some(p.p_false_alarm.clone())),
            _ => (None, None),
        };
        doc.tests.push(TestDoc {
            id: t.id.clone(),
            scope: t.scope.iter().map(|r| prefixed(r.slice, &r.mode)).collect(),
            semantics: t.semantics.tag().to_string(),
            p_detect,
            p_false_alarm,
            temporal_span: hi - lo + 1,
        });
    }
    for r in &temporal_apriori {
        check_ref(&r.from)?;
        check_ref(&r.to)?;
        if r.to.slice != r.from.slice + 1 {
            return Err(Error::InvalidArgument(format!(
                "transition `{}` must link consecutive slices",
                r.id
            )));
        }
        doc.apriori.push(AprioriDoc {
            id: r.id.clone(),
            predicate: PredicateDoc::Transition {
                from: prefixed(r.from.slice, &r.from.mode),
                to: prefixed(r.to.slice, &r.to.mode),
                p_activate: r.p_activate,
                p_persist: r.p_persist,
            },
        });
    }

    let flat = build_graph(&doc)?;
    Ok(TemporalDiagnosticGraph {
        slices,
        temporal_tests,
        temporal_apriori,
        flat,
    })
}
