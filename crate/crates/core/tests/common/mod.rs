//! Graph and factor-graph generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use percmon_core::factor::FactorGraph;
use percmon_core::graph::{build_graph, FailureKind, FailureModeDoc, GraphDoc, ModuleDoc, SystemDoc, TestDoc, GRAPH_DOC_VERSION};
use percmon_core::DiagnosticGraph;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn mode_id(i: usize) -> String {
    format!("f{}", i + 1)
}

/// One module hosting `n` failure modes `f1..fn`, with the given test
/// scopes and semantics tags. Noisy-OR tests get `p_d = 0.9`, `p_a = 0.05`.
pub fn graph_with(n: usize, tests: &[(Vec<usize>, &str)]) -> DiagnosticGraph {
    let doc = GraphDoc {
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
                id: mode_id(i),
                host: "m".into(),
                kind: FailureKind::Unknown,
            })
            .collect(),
        tests: tests
            .iter()
            .enumerate()
            .map(|(j, (scope, semantics))| {
                let noisy = *semantics == "noisy_or";
                TestDoc {
                    id: format!("t{}", j + 1),
                    scope: scope.iter().map(|&i| mode_id(i)).collect(),
                    semantics: semantics.to_string(),
                    p_detect: noisy.then(|| vec![0.9; scope.len()]),
                    p_false_alarm: noisy.then(|| vec![0.05; scope.len()]),
                    temporal_span: 1,
                }
            })
            .collect(),
        apriori: Vec::new(),
    };
    build_graph(&doc).expect("generated graphs are well formed")
}

pub fn uniform_graph(n: usize, scopes: &[Vec<usize>], semantics: &str) -> DiagnosticGraph {
    let tests: Vec<(Vec<usize>, &str)> = scopes.iter().map(|s| (s.clone(), semantics)).collect();
    graph_with(n, &tests)
}

/// `count` distinct scopes over `n` modes, each of size drawn from
/// `sizes`.
pub fn random_scopes(n: usize, count: usize, sizes: &[usize], rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut seen = BTreeSet::new();
    let all: Vec<usize> = (0..n).collect();
    while seen.len() < count {
        let k = *sizes.choose(rng).unwrap();
        let mut s: Vec<usize> = all.choose_multiple(rng, k).copied().collect();
        s.sort_unstable();
        seen.insert(s);
    }
    let mut v: Vec<Vec<usize>> = seen.into_iter().collect();
    v.shuffle(rng);
    v
}

/// Every pair of modes becomes a test with probability `density`.
pub fn random_pair_scopes(n: usize, density: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                out.push(vec![a, b]);
            }
        }
    }
    out
}

fn random_table(arity: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..1usize << arity).map(|_| rng.gen_range(-2.5..2.5)).collect()
}

/// A random factor tree over `n` variables: a random spanning tree of
/// factors of arity 2 or 3, plus unary factors on some variables.
pub fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> FactorGraph {
    let mut fg = FactorGraph::new(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut placed = vec![order[0]];
    let mut i = 1;
    while i < n {
        let anchor = *placed.choose(rng).unwrap();
        let width = if i + 1 < n && rng.gen_bool(0.3) { 2 } else { 1 };
        let mut vars = vec![anchor];
        vars.extend_from_slice(&order[i..i + width]);
        vars.shuffle(rng);
        let table = random_table(vars.len(), rng);
        fg.add_log_factor(format!("pair{i}"), vars, table).unwrap();
        placed.extend_from_slice(&order[i..i + width]);
        i += width;
    }
    for v in 0..n {
        if rng.gen_bool(0.5) {
            fg.add_log_factor(format!("unary{v}"), vec![v], random_table(1, rng)).unwrap();
        }
    }
    fg
}

/// A tree whose tables are all equal, so every assignment ties.
pub fn flat_tree(n: usize) -> FactorGraph {
    let mut fg = FactorGraph::new(n);
    for v in 1..n {
        fg.add_log_factor(format!("e{v}"), vec![v - 1, v], vec![0.0; 4]).unwrap();
    }
    fg
}
