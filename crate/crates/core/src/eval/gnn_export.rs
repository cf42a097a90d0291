use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bits::{Outcome, Syndrome};
use crate::error::{Error, Result};
use crate::graph::DiagnosticGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GnnNodeKind {
    FailureMode,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnNode {
    pub id: String,
    pub kind: GnnNodeKind,
    pub features: [f64; 2],
}

/// Undirected edge between node indices, `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GnnEdge {
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnnExportGraph {
    /// Failure modes in index order, then tests in index order.
    pub nodes: Vec<GnnNode>,
    pub edges: Vec<GnnEdge>,
}

impl GnnExportGraph {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("export graphs always serialize")
    }
}

fn clique(nodes: &[usize], edges: &mut BTreeSet<GnnEdge>) {
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            edges.insert(GnnEdge {
                a: a.min(b),
                b: a.max(b),
            });
        }
    }
}

/// Undirected graph for node classification: each test node forms a clique
/// with its scope, and each a-priori relation scope forms a clique.
/// Failure-mode features are `(1 - rho, rho)`; test features are the
/// one-hot outcome `(PASS, FAIL)`.
pub fn gnn_export(graph: &DiagnosticGraph, syndrome: &Syndrome, priors: &BTreeMap<String, f64>) -> Result<GnnExportGraph> {
    syndrome.check_len(graph.n_tests())?;
    let n = graph.n_modes();
    let mut nodes = Vec::with_capacity(n + graph.n_tests());
    for m in graph.failure_modes() {
        let rho = *priors
            .get(&m.id)
            .ok_or_else(|| Error::MissingParameter(format!("prior of `{}`", m.id)))?;
        nodes.push(GnnNode {
            id: m.id.clone(),
            kind: GnnNodeKind::FailureMode,
            features: [1.0 - rho, rho],
        });
    }
    let mut edges = BTreeSet::new();
    for (j, t) in graph.tests().iter().enumerate() {
        nodes.push(GnnNode {
            id: t.id.clone(),
            kind: GnnNodeKind::Test,
            features: match syndrome.get(j) {
                Outcome::Pass => [1.0, 0.0],
                Outcome::Fail => [0.0, 1.0],
            },
        });
        let mut members = t.scope.clone();
        members.push(n + j);
        clique(&members, &mut edges);
    }
    for r in graph.apriori() {
        clique(&r.scope, &mut edges);
    }
    Ok(GnnExportGraph {
        nodes,
        edges: edges.into_iter().collect(),
    })
}
