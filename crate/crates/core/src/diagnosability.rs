//! Deterministic and probabilistic diagnosability.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bits::{FaultState, Outcome, Syndrome};
use crate::error::{check_len, Error, Result};
use crate::eval::Identifier;
use crate::graph::{DiagnosticGraph, TestSemantics};
use crate::par::{self, Execution};
use crate::semantics::{apriori_admits, test_outcomes, OutcomeSet};

/// Largest test count [`syndrome_set`] expands.
pub const SYNDROME_ENUMERATION_CAP: usize = 24;

/// Syndrome set of a fault set, stored as one admissible-outcome set per
/// test. Syndrome sets are always such products, so two of them intersect
/// iff they intersect on every test.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SyndromeCube {
    /// Bit `j` set when test `j` has a single admissible outcome.
    fixed: Vec<u64>,
    /// The fixed outcome (1 = FAIL) where `fixed` is set.
    value: Vec<u64>,
    n_tests: usize,
}

impl SyndromeCube {
    fn from_sets(sets: &[OutcomeSet]) -> Self {
        let words = sets.len().div_ceil(64).max(1);
        let mut fixed = vec![0u64; words];
        let mut value = vec![0u64; words];
        for (j, s) in sets.iter().enumerate() {
            if !s.is_ambiguous() {
                fixed[j / 64] |= 1 << (j % 64);
                if s.contains(Outcome::Fail) {
                    value[j / 64] |= 1 << (j % 64);
                }
            }
        }
        SyndromeCube {
            fixed,
            value,
            n_tests: sets.len(),
        }
    }

    pub fn is_disjoint(&self, other: &SyndromeCube) -> bool {
        self.fixed
            .iter()
            .zip(&self.value)
            .zip(other.fixed.iter().zip(&other.value))
            .any(|((fa, va), (fb, vb))| fa & fb & (va ^ vb) != 0)
    }

    pub fn contains(&self, s: &Syndrome) -> bool {
        (0..self.n_tests).all(|j| {
            let bit = 1u64 << (j % 64);
            self.fixed[j / 64] & bit == 0 || (self.value[j / 64] & bit != 0) == s.get(j).is_fail()
        })
    }

    pub fn ambiguous_tests(&self) -> usize {
        self.n_tests - self.fixed.iter().map(|w| w.count_ones() as usize).sum::<usize>()
    }

    /// Every syndrome in the cube, in lexicographic order.
    pub fn syndromes(&self) -> Vec<Syndrome> {
        let free: Vec<usize> = (0..self.n_tests)
            .filter(|&j| self.fixed[j / 64] & 1 << (j % 64) == 0)
            .collect();
        let base: Vec<bool> = (0..self.n_tests)
            .map(|j| self.value[j / 64] & 1 << (j % 64) != 0)
            .collect();
        let k = free.len();
        (0..1u64 << k)
            .map(|m| {
                let mut bits = base.clone();
                for (i, &j) in free.iter().enumerate() {
                    bits[j] = m >> (k - 1 - i) & 1 == 1;
                }
                Syndrome::from_bits(&bits)
            })
            .collect()
    }
}

fn require_deterministic(graph: &DiagnosticGraph) -> Result<()> {
    match graph
        .tests()
        .iter()
        .find(|t| matches!(t.semantics, TestSemantics::NoisyOr(_)))
    {
        Some(t) => Err(Error::ProbabilisticRelation(t.id.clone())),
        None => Ok(()),
    }
}

/// `None` when `apriori_filter` is set and the fault set violates a
/// deterministic a-priori relation.
pub fn syndrome_cube(graph: &DiagnosticGraph, faults: &FaultState, apriori_filter: bool) -> Result<Option<SyndromeCube>> {
    faults.check_len(graph.n_modes())?;
    if apriori_filter && !apriori_admits(graph, faults) {
        return Ok(None);
    }
    let sets = graph
        .tests()
        .iter()
        .map(|t| test_outcomes(t, faults))
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(SyndromeCube::from_sets(&sets)))
}

/// All syndromes `faults` can produce. Fault sets rejected by a
/// deterministic a-priori relation produce none.
pub fn syndrome_set(graph: &DiagnosticGraph, faults: &FaultState) -> Result<BTreeSet<Syndrome>> {
    require_deterministic(graph)?;
    if graph.n_tests() > SYNDROME_ENUMERATION_CAP {
        return Err(Error::CapExceeded {
            size: graph.n_tests(),
            cap: SYNDROME_ENUMERATION_CAP,
        });
    }
    Ok(syndrome_cube(graph, faults, true)?
        .map(|c| c.syndromes().into_iter().collect())
        .unwrap_or_default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BruteForce,
    SufficientConditions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosabilityReport {
    pub kappa: usize,
    pub method: Method,
    /// Two fault sets (failure-mode indices) of size at most `kappa + 1`
    /// whose syndrome sets overlap.
    pub counterexample: Option<(Vec<usize>, Vec<usize>)>,
    pub apriori_filter: bool,
    pub n_failure_modes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KappaOptions {
    /// Upper limit on the reported kappa; `None` means `N_f`.
    pub max_k: Option<usize>,
    /// Skip fault sets that violate deterministic a-priori relations.
    pub apriori_filter: bool,
    /// Maximum number of fault-set pairs compared.
    pub pair_budget: u64,
    pub exec: Execution,
}

impl Default for KappaOptions {
    fn default() -> Self {
        KappaOptions {
            max_k: None,
            apriori_filter: true,
            pair_budget: 2_000_000_000,
            exec: Execution::default(),
        }
    }
}

/// Fault sets of exactly `size` modes out of `n`, in lexicographic order.
pub(crate) fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..size).collect();
    if size > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..size).rev().find(|&i| cur[i] != i + n - size) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..size {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Largest `kappa` for which every two distinct fault sets of size at most
/// `kappa` have disjoint syndrome sets.
///
/// Fault sets are visited by increasing size, lexicographically within a
/// size. The counterexample is the colliding pair whose later member comes
/// first in that order, ties broken by the earlier member.
pub fn brute_force_kappa(graph: &DiagnosticGraph, opts: &KappaOptions) -> Result<DiagnosabilityReport> {
    require_deterministic(graph)?;
    let n = graph.n_modes();
    let max_k = opts.max_k.unwrap_or(n).min(n);
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut cubes: Vec<SyndromeCube> = Vec::new();
    let mut pairs: u64 = 0;
    let report = |kappa, counterexample| DiagnosabilityReport {
        kappa,
        method: Method::BruteForce,
        counterexample,
        apriori_filter: opts.apriori_filter,
        n_failure_modes: n,
    };

    // Level k verifies pairs whose larger member has size k; it can only
    // fail for k >= 1, so kappa >= 0 always holds.
    for k in 0..=max_k {
        let mut level_sets = Vec::new();
        let mut level_cubes = Vec::new();
        for s in combinations(n, k) {
            if let Some(c) = syndrome_cube(graph, &FaultState::from_active(n, s.iter().copied()), opts.apriori_filter)? {
                level_sets.push(s);
                level_cubes.push(c);
            }
        }
        let before = cubes.len() as u64;
        let m = level_cubes.len() as u64;
        pairs = pairs.saturating_add(m * before + m * m.saturating_sub(1) / 2);
        if pairs > opts.pair_budget {
            return Err(Error::BudgetExceeded {
                partial_kappa: k.saturating_sub(1),
            });
        }
        let base = cubes.len();
        cubes.extend(level_cubes);
        let hits: Vec<Option<usize>> = par::map_range(opts.exec, level_sets.len(), |b| {
            let cube = &cubes[base + b];
            (0..base + b).find(|&a| !cubes[a].is_disjoint(cube))
        });
        let first = hits.iter().enumerate().find_map(|(b, a)| a.map(|a| (a, base + b)));
        sets.extend(level_sets);
        if let Some((a, b)) = first {
            return Ok(report(k - 1, Some((sets[a].clone(), sets[b].clone()))));
        }
    }
    Ok(report(max_k, None))
}

/// Kappa under both inclusion policies: the full graph, and the graph
/// restricted to output failure modes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyKappa {
    pub full: DiagnosabilityReport,
    pub outputs_only: DiagnosabilityReport,
}

pub fn kappa_under_policies(graph: &DiagnosticGraph, opts: &KappaOptions) -> Result<PolicyKappa> {
    Ok(PolicyKappa {
        full: brute_force_kappa(graph, opts)?,
        outputs_only: brute_force_kappa(&graph.outputs_only(), opts)?,
    })
}

/// Tests involving each failure mode.
fn tests_of(graph: &DiagnosticGraph) -> Vec<Vec<usize>> {
    let mut h = vec![Vec::new(); graph.n_modes()];
    for (j, t) in graph.tests().iter().enumerate() {
        for &i in &t.scope {
            h[i].push(j);
        }
    }
    h
}

/// Failure modes sharing a test with each mode, as bitmasks.
fn neighbours(graph: &DiagnosticGraph) -> Vec<u64> {
    let mut g = vec![0u64; graph.n_modes()];
    for t in graph.tests() {
        for &i in &t.scope {
            for &j in &t.scope {
                if i != j {
                    g[i] |= 1 << j;
                }
            }
        }
    }
    g
}

/// Sufficient topological conditions for kappa-diagnosability of graphs
/// whose tests are all Weak-OR over two modes.
pub fn check_sufficient_conditions(graph: &DiagnosticGraph, kappa: usize) -> Result<bool> {
    if let Some(t) = graph
        .tests()
        .iter()
        .find(|t| t.semantics != TestSemantics::WeakOr || t.scope.len() != 2)
    {
        return Err(Error::WrongSemantics(format!(
            "test `{}` must be weak_or over exactly two modes",
            t.id
        )));
    }
    let n = graph.n_modes();
    if n > 63 {
        return Err(Error::CapExceeded { size: n, cap: 63 });
    }
    // (i)
    if n == 0 || 2 * kappa > n - 1 {
        return Ok(false);
    }
    // (ii)
    if tests_of(graph).iter().any(|h| h.len() < kappa) {
        return Ok(false);
    }
    // (iii)
    let gamma = neighbours(graph);
    for q in 0..kappa {
        let size = n - 2 * kappa + q;
        for x in combinations(n, size) {
            let mask = x.iter().fold(0u64, |m, &i| m | 1 << i);
            let g = x.iter().fold(0u64, |m, &i| m | gamma[i]) & !mask;
            if g.count_ones() as usize <= q {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Lower bound on the kappa of a stack of graphs with the given kappas.
pub fn temporal_kappa_lower_bound(slice_kappas: &[usize]) -> Result<usize> {
    slice_kappas
        .iter()
        .copied()
        .min()
        .ok_or_else(|| Error::InvalidArgument("no slice kappas".into()))
}

pub fn hamming(a: &FaultState, b: &FaultState) -> Result<usize> {
    check_len(a.len(), b.len())?;
    Ok(a.bits().iter().zip(b.bits()).filter(|(x, y)| x != y).count())
}

/// Mean Hamming distance between identified and true fault states.
pub fn empirical_hamming<'a, I>(identifier: &(dyn Identifier + 'a), samples: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a Syndrome, &'a FaultState)>,
{
    let samples: Vec<(&Syndrome, &FaultState)> = samples.into_iter().collect();
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let distances = par::try_map(Execution::default(), &samples, |(s, f)| {
        hamming(&identifier.identify(s)?, f)
    })?;
    Ok(distances.iter().sum::<usize>() as f64 / samples.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacBound {
    pub empirical_hamming: f64,
    pub n_failure_modes: usize,
    pub sample_count: usize,
    pub delta: f64,
    pub bound: f64,
}

/// Hoeffding bound on the expected Hamming distance holding with
/// probability at least `1 - delta`.
pub fn pac_bound(empirical_hamming: f64, n_failure_modes: usize, sample_count: usize, delta: f64) -> Result<PacBound> {
    if sample_count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 2]")));
    }
    if !empirical_hamming.is_finite() || empirical_hamming < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "empirical hamming {empirical_hamming}"
        )));
    }
    let slack = n_failure_modes as f64 * ((2.0 / delta).ln() / (2.0 * sample_count as f64)).sqrt();
    Ok(PacBound {
        empirical_hamming,
        n_failure_modes,
        sample_count,
        delta,
        bound: empirical_hamming + slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacConfidence {
    /// `1 - 2 exp(-2 ((gamma - h) / N_f)^2 |W|)`; may be negative.
    pub raw: f64,
    pub clamped: f64,
}

pub fn pac_confidence(gamma: f64, empirical_hamming: f64, n_failure_modes: usize, sample_count: usize) -> Result<PacConfidence> {
    if gamma < empirical_hamming {
        return Err(Error::InvalidArgument(format!(
            "gamma {gamma} below empirical hamming {empirical_hamming}"
        )));
    }
    if n_failure_modes == 0 {
        return Err(Error::InvalidArgument("no failure modes".into()));
    }
    let eps = (gamma - empirical_hamming) / n_failure_modes as f64;
    let raw = 1.0 - 2.0 * (-2.0 * eps * eps * sample_count as f64).exp();
    Ok(PacConfidence {
        raw,
        clamped: raw.clamp(0.0, 1.0),
    })
}
