//! Minimal-cardinality fault identification over deterministic relations.
//!
//! Relations are compiled to a small set of pseudo-boolean constraints and
//! solved by depth-first branch and bound. Variables are branched in index
//! order with 0 tried before 1, so solutions are visited in lexicographic
//! order and the first optimum found is the lexicographically smallest.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bits::{FaultState, Outcome, Syndrome};
use crate::error::{Error, Result};
use crate::graph::{AprioriKind, DeterministicModel, DiagnosticGraph, Host, TestSemantics};

pub const DEFAULT_ENUMERATION_CAP: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// All zeros when infeasible.
    pub assignment: FaultState,
    pub cardinality: usize,
}

impl SolveResult {
    fn infeasible(n: usize) -> Self {
        SolveResult {
            status: SolveStatus::Infeasible,
            assignment: FaultState::zeros(n),
            cardinality: 0,
        }
    }

    fn optimal(bits: Vec<bool>) -> Self {
        let assignment = FaultState::from_bits(bits);
        SolveResult {
            status: SolveStatus::Optimal,
            cardinality: assignment.cardinality(),
            assignment,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn into_assignment(self) -> Result<FaultState> {
        match self.status {
            SolveStatus::Optimal => Ok(self.assignment),
            SolveStatus::Infeasible => Err(Error::Infeasible),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Constraint {
    AtLeastOne(Vec<usize>),
    AllZero(Vec<usize>),
    /// Either every variable is 0 or every variable is 1.
    AllOrNone(Vec<usize>),
    AtMostOne(Vec<usize>),
    /// Any active premise requires an active conclusion.
    Implies(Vec<usize>, Vec<usize>),
    /// `sum(coef * x) >= rhs`.
    Linear(Vec<(usize, i64)>, i64),
}

const UNSET: u8 = 2;

#[derive(Debug, Clone)]
pub(crate) struct Problem {
    n: usize,
    constraints: Vec<Constraint>,
    /// Constraints touching each variable.
    watch: Vec<Vec<usize>>,
}

impl Problem {
    pub(crate) fn new(n: usize, constraints: Vec<Constraint>) -> Self {
        let mut watch = vec![Vec::new(); n];
        for (c, con) in constraints.iter().enumerate() {
            let mut vars: Vec<usize> = match con {
                Constraint::AtLeastOne(v)
                | Constraint::AllZero(v)
                | Constraint::AllOrNone(v)
                | Constraint::AtMostOne(v) => v.clone(),
                Constraint::Implies(p, q) => p.iter().chain(q).copied().collect(),
                Constraint::Linear(t, _) => t.iter().map(|&(v, _)| v).collect(),
            };
            vars.sort_unstable();
            vars.dedup();
            for v in vars {
                watch[v].push(c);
            }
        }
        Problem {
            n,
            constraints,
            watch,
        }
    }

    /// Unit propagation to a fixpoint. Returns `false` on conflict; `trail`
    /// collects every variable assigned here.
    fn propagate(&self, a: &mut [u8], queue: &mut Vec<usize>, trail: &mut Vec<usize>) -> bool {
        while let Some(c) = queue.pop() {
            let mut forced: Vec<(usize, u8)> = Vec::new();
            if !self.check(&self.constraints[c], a, &mut forced) {
                return false;
            }
            for (v, val) in forced {
                if a[v] == UNSET {
                    a[v] = val;
                    trail.push(v);
                    queue.extend(self.watch[v].iter().copied());
                } else if a[v] != val {
                    return false;
                }
            }
        }
        true
    }

    fn check(&self, con: &Constraint, a: &[u8], forced: &mut Vec<(usize, u8)>) -> bool {
        let count = |v: &[usize], val: u8| v.iter().filter(|&&i| a[i] == val).count();
        let fill = |v: &[usize], val: u8, forced: &mut Vec<(usize, u8)>| {
            forced.extend(v.iter().filter(|&&i| a[i] == UNSET).map(|&i| (i, val)))
        };
        match con {
            Constraint::AtLeastOne(v) => at_least_one(v, a, forced),
            Constraint::AllZero(v) => {
                if count(v, 1) > 0 {
                    return false;
                }
                fill(v, 0, forced);
                true
            }
            Constraint::AllOrNone(v) => {
                let (ones, zeros) = (count(v, 1), count(v, 0));
                if ones > 0 && zeros > 0 {
                    return false;
                }
                if ones > 0 {
                    fill(v, 1, forced);
                } else if zeros > 0 {
                    fill(v, 0, forced);
                }
                true
            }
            Constraint::AtMostOne(v) => {
                let ones = count(v, 1);
                if ones > 1 {
                    return false;
                }
                if ones == 1 {
                    fill(v, 0, forced);
                }
                true
            }
            Constraint::Implies(p, q) => {
                if count(p, 1) > 0 {
                    return at_least_one(q, a, forced);
                }
                if count(q, 0) == q.len() {
                    fill(p, 0, forced);
                }
                true
            }
            Constraint::Linear(terms, rhs) => {
                let max: i64 = terms
                    .iter()
                    .map(|&(v, c)| match a[v] {
                        1 => c,
                        UNSET => c.max(0),
                        _ => 0,
                    })
                    .sum();
                if max < *rhs {
                    return false;
                }
                for &(v, c) in terms {
                    if a[v] != UNSET {
                        continue;
                    }
                    if c > 0 && max - c < *rhs {
                        forced.push((v, 1));
                    } else if c < 0 && max + c < *rhs {
                        forced.push((v, 0));
                    }
                }
                true
            }
        }
    }

    /// Lower bound on additional ones: a greedy set of pairwise disjoint
    /// unsatisfied at-least-one requirements.
    fn lower_bound(&self, a: &[u8], used: &mut [bool]) -> usize {
        used.iter_mut().for_each(|u| *u = false);
        let mut lb = 0;
        for con in &self.constraints {
            let need: &[usize] = match con {
                Constraint::AtLeastOne(v) => v,
                Constraint::Implies(p, q) if p.iter().any(|&i| a[i] == 1) => q,
                _ => continue,
            };
            if need.iter().any(|&i| a[i] == 1) {
                continue;
            }
            if need.iter().any(|&i| a[i] == UNSET && used[i]) {
                continue;
            }
            for &i in need {
                if a[i] == UNSET {
                    used[i] = true;
                }
            }
            lb += 1;
        }
        lb
    }

    fn initial(&self) -> Option<Vec<u8>> {
        let mut a = vec![UNSET; self.n];
        let mut queue: Vec<usize> = (0..self.constraints.len()).collect();
        let mut trail = Vec::new();
        self.propagate(&mut a, &mut queue, &mut trail).then_some(a)
    }

    /// Lexicographically smallest assignment of minimum cardinality, subject
    /// to at most `budget` ones.
    pub(crate) fn minimize(&self, budget: Option<usize>) -> Option<Vec<bool>> {
        let mut a = self.initial()?;
        let mut best: Option<Vec<bool>> = None;
        let mut bound = budget.map_or(usize::MAX, |b| b.saturating_add(1));
        let mut used = vec![false; self.n];
        self.branch(0, &mut a, &mut best, &mut bound, &mut used);
        best
    }

    fn branch(
        &self,
        start: usize,
        a: &mut [u8],
        best: &mut Option<Vec<bool>>,
        bound: &mut usize,
        used: &mut [bool],
    ) {
        let ones = a.iter().filter(|&&x| x == 1).count();
        if ones + self.lower_bound(a, used) >= *bound {
            return;
        }
        let Some(v) = (start..self.n).find(|&i| a[i] == UNSET) else {
            debug_assert!(self.satisfied(a));
            *bound = ones;
            *best = Some(a.iter().map(|&x| x == 1).collect());
            return;
        };
        for val in [0u8, 1] {
            let mut trail = vec![v];
            a[v] = val;
            let mut queue = self.watch[v].clone();
            if self.propagate(a, &mut queue, &mut trail) {
                self.branch(v + 1, a, best, bound, used);
            }
            for t in trail {
                a[t] = UNSET;
            }
        }
    }

    /// Every satisfying assignment with at most `budget` ones, in
    /// lexicographic order.
    pub(crate) fn enumerate(&self, budget: Option<usize>) -> Vec<Vec<bool>> {
        let mut out = Vec::new();
        if let Some(mut a) = self.initial() {
            self.enumerate_from(0, &mut a, budget.unwrap_or(usize::MAX), &mut out);
        }
        out
    }

    fn enumerate_from(&self, start: usize, a: &mut [u8], budget: usize, out: &mut Vec<Vec<bool>>) {
        if a.iter().filter(|&&x| x == 1).count() > budget {
            return;
        }
        let Some(v) = (start..self.n).find(|&i| a[i] == UNSET) else {
            debug_assert!(self.satisfied(a));
            out.push(a.iter().map(|&x| x == 1).collect());
            return;
        };
        for val in [0u8, 1] {
            let mut trail = vec![v];
            a[v] = val;
            let mut queue = self.watch[v].clone();
            if self.propagate(a, &mut queue, &mut trail) {
                self.enumerate_from(v + 1, a, budget, out);
            }
            for t in trail {
                a[t] = UNSET;
            }
        }
    }

    fn satisfied(&self, a: &[u8]) -> bool {
        let mut scratch = Vec::new();
        self.constraints.iter().all(|c| {
            scratch.clear();
            self.check(c, a, &mut scratch) && scratch.is_empty()
        })
    }
}

fn at_least_one(v: &[usize], a: &[u8], forced: &mut Vec<(usize, u8)>) -> bool {
    if v.iter().any(|&i| a[i] == 1) {
        return true;
    }
    let mut free = v.iter().copied().filter(|&i| a[i] == UNSET);
    match (free.next(), free.next()) {
        (None, _) => false,
        (Some(i), None) => {
            forced.push((i, 1));
            true
        }
        _ => true,
    }
}

fn test_constraint(model: DeterministicModel, scope: &[usize], outcome: Outcome) -> Option<Constraint> {
    use DeterministicModel::*;
    let s = scope.to_vec();
    match (model, outcome) {
        (_, Outcome::Fail) => Some(Constraint::AtLeastOne(s)),
        (Or, Outcome::Pass) => Some(Constraint::AllZero(s)),
        (WeakOr, Outcome::Pass) => Some(Constraint::AllOrNone(s)),
        (WeakerOr, Outcome::Pass) => None,
    }
}

pub(crate) fn compile(graph: &DiagnosticGraph, syndrome: &Syndrome) -> Result<Problem> {
    syndrome.check_len(graph.n_tests())?;
    let mut constraints = Vec::new();
    for (t, &o) in graph.tests().iter().zip(syndrome.outcomes()) {
        let model = t
            .semantics
            .deterministic()
            .ok_or_else(|| Error::ProbabilisticRelation(t.id.clone()))?;
        constraints.extend(test_constraint(model, &t.scope, o));
    }
    compile_apriori(graph, &mut constraints)?;
    Ok(Problem::new(graph.n_modes(), constraints))
}

pub(crate) fn compile_apriori(graph: &DiagnosticGraph, constraints: &mut Vec<Constraint>) -> Result<()> {
    for r in graph.apriori() {
        match &r.kind {
            AprioriKind::ModuleOutputImplication {
                module,
                outputs,
                iff,
            } => {
                for &m in module {
                    constraints.push(Constraint::Implies(outputs.clone(), vec![m]));
                }
                if *iff {
                    constraints.push(Constraint::Implies(module.clone(), outputs.clone()));
                }
            }
            AprioriKind::MutualExclusion => constraints.push(Constraint::AtMostOne(r.scope.clone())),
            AprioriKind::Implication {
                premise,
                conclusion,
            } => constraints.push(Constraint::Implies(premise.clone(), conclusion.clone())),
            AprioriKind::Prior { .. } | AprioriKind::Transition { .. } => {
                return Err(Error::ProbabilisticRelation(r.id.clone()))
            }
        }
    }
    Ok(())
}

/// Minimum-cardinality fault state consistent with `syndrome` and every
/// a-priori relation, optionally with at most `budget` active modes.
pub fn solve_min_cardinality(
    graph: &DiagnosticGraph,
    syndrome: &Syndrome,
    budget: Option<usize>,
) -> Result<SolveResult> {
    let problem = compile(graph, syndrome)?;
    Ok(match problem.minimize(budget) {
        Some(bits) => SolveResult::optimal(bits),
        None => SolveResult::infeasible(graph.n_modes()),
    })
}

pub fn enumerate_feasible(
    graph: &DiagnosticGraph,
    syndrome: &Syndrome,
    budget: Option<usize>,
) -> Result<BTreeSet<FaultState>> {
    enumerate_feasible_capped(graph, syndrome, budget, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_feasible_capped(
    graph: &DiagnosticGraph,
    syndrome: &Syndrome,
    budget: Option<usize>,
    cap: usize,
) -> Result<BTreeSet<FaultState>> {
    if graph.n_modes() > cap {
        return Err(Error::CapExceeded {
            size: graph.n_modes(),
            cap,
        });
    }
    let problem = compile(graph, syndrome)?;
    Ok(problem
        .enumerate(budget)
        .into_iter()
        .map(FaultState::from_bits)
        .collect())
}

/// Weaker-OR identification: every failed test needs an active mode in its
/// scope, and for every output `o` of module `m`,
/// `|F(o)| * |active modes of m| >= |active modes of o|`.
pub fn solve_weaker_or(graph: &DiagnosticGraph, syndrome: &Syndrome) -> Result<SolveResult> {
    syndrome.check_len(graph.n_tests())?;
    if let Some(t) = graph
        .tests()
        .iter()
        .find(|t| t.semantics != TestSemantics::WeakerOr)
    {
        return Err(Error::WrongSemantics(format!(
            "test `{}` is {}, expected weaker_or",
            t.id,
            t.semantics.tag()
        )));
    }
    if let Some(r) = graph
        .apriori()
        .iter()
        .find(|r| !matches!(r.kind, AprioriKind::ModuleOutputImplication { .. }))
    {
        return Err(Error::WrongSemantics(format!(
            "a-priori relation `{}` is not a module-output implication",
            r.id
        )));
    }
    let mut constraints: Vec<Constraint> = graph
        .tests()
        .iter()
        .zip(syndrome.outcomes())
        .filter(|(_, o)| o.is_fail())
        .map(|(t, _)| Constraint::AtLeastOne(t.scope.clone()))
        .collect();
    for m in 0..graph.system().modules.len() {
        let module_modes = graph.modes_of_module(m);
        if module_modes.is_empty() {
            continue;
        }
        for (o, out) in graph.system().outputs.iter().enumerate() {
            if out.producer != m {
                continue;
            }
            let output_modes: Vec<usize> = (0..graph.n_modes())
                .filter(|&i| graph.failure_modes()[i].host == Host::Output(o))
                .collect();
            if output_modes.is_empty() {
                continue;
            }
            let weight = output_modes.len() as i64;
            let terms = module_modes
                .iter()
                .map(|&i| (i, weight))
                .chain(output_modes.iter().map(|&i| (i, -1)))
                .collect();
            constraints.push(Constraint::Linear(terms, 0));
        }
    }
    let problem = Problem::new(graph.n_modes(), constraints);
    Ok(match problem.minimize(None) {
        Some(bits) => SolveResult::optimal(bits),
        None => SolveResult::infeasible(graph.n_modes()),
    })
}
