//! Test models and relation evaluation.

use rand::Rng;

use crate::bits::{FaultState, Outcome, Syndrome};
use crate::error::{check_len, Error, Result};
use crate::graph::{
    AprioriKind, AprioriRelation, DeterministicModel, DiagnosticGraph, DiagnosticTest,
    NoisyOrParams, TestSemantics,
};
use crate::rng::{stream, Stream};

/// Non-empty subset of {PASS, FAIL}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OutcomeSet {
    pass: bool,
    fail: bool,
}

impl OutcomeSet {
    pub const PASS: OutcomeSet = OutcomeSet {
        pass: true,
        fail: false,
    };
    pub const FAIL: OutcomeSet = OutcomeSet {
        pass: false,
        fail: true,
    };
    pub const EITHER: OutcomeSet = OutcomeSet {
        pass: true,
        fail: true,
    };

    pub fn contains(self, o: Outcome) -> bool {
        match o {
            Outcome::Pass => self.pass,
            Outcome::Fail => self.fail,
        }
    }

    pub fn is_ambiguous(self) -> bool {
        self.pass && self.fail
    }

    pub fn is_subset(self, other: OutcomeSet) -> bool {
        (!self.pass || other.pass) && (!self.fail || other.fail)
    }

    pub fn outcomes(self) -> impl Iterator<Item = Outcome> {
        [(self.pass, Outcome::Pass), (self.fail, Outcome::Fail)]
            .into_iter()
            .filter(|(keep, _)| *keep)
            .map(|(_, o)| o)
    }
}

pub fn eval_deterministic(model: DeterministicModel, bits: &[bool]) -> OutcomeSet {
    let active = bits.iter().filter(|&&b| b).count();
    match model {
        DeterministicModel::Or if active == 0 => OutcomeSet::PASS,
        DeterministicModel::Or => OutcomeSet::FAIL,
        DeterministicModel::WeakOr if active == 0 => OutcomeSet::PASS,
        DeterministicModel::WeakOr if active == bits.len() => OutcomeSet::EITHER,
        DeterministicModel::WeakOr => OutcomeSet::FAIL,
        DeterministicModel::WeakerOr if active == 0 => OutcomeSet::PASS,
        DeterministicModel::WeakerOr => OutcomeSet::EITHER,
    }
}

/// Admissible outcomes of a deterministic test given the full fault state.
pub fn test_outcomes(test: &DiagnosticTest, faults: &FaultState) -> Result<OutcomeSet> {
    let model = test
        .semantics
        .deterministic()
        .ok_or_else(|| Error::ProbabilisticRelation(test.id.clone()))?;
    Ok(eval_deterministic(model, &faults.project(&test.scope)))
}

/// Natural log of the Noisy-OR PASS probability.
pub fn noisy_or_log_pass(params: &NoisyOrParams, bits: &[bool]) -> Result<f64> {
    check_len(params.p_detect.len(), bits.len())?;
    check_len(params.p_false_alarm.len(), bits.len())?;
    Ok(bits
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let p = if b {
                params.p_detect[i]
            } else {
                params.p_false_alarm[i]
            };
            (-p).ln_1p()
        })
        .sum())
}

pub fn noisy_or_pass_prob(params: &NoisyOrParams, bits: &[bool]) -> Result<f64> {
    noisy_or_log_pass(params, bits).map(f64::exp)
}

/// Probability of `outcome` under a Noisy-OR test.
pub fn noisy_or_outcome_prob(params: &NoisyOrParams, bits: &[bool], outcome: Outcome) -> Result<f64> {
    let pass = noisy_or_pass_prob(params, bits)?;
    Ok(match outcome {
        Outcome::Pass => pass,
        Outcome::Fail => 1.0 - pass,
    })
}

/// Result of evaluating a relation on an assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Satisfaction {
    Indicator(bool),
    Likelihood(f64),
}

impl Satisfaction {
    /// The value as a potential: 0/1 for indicators.
    pub fn value(self) -> f64 {
        match self {
            Satisfaction::Indicator(b) => f64::from(u8::from(b)),
            Satisfaction::Likelihood(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum RelationRef<'a> {
    Test(&'a DiagnosticTest),
    Apriori(&'a AprioriRelation),
}

pub fn relation_satisfied(
    relation: RelationRef<'_>,
    faults: &FaultState,
    outcome: Option<Outcome>,
) -> Result<Satisfaction> {
    match relation {
        RelationRef::Test(t) => {
            let outcome = outcome.ok_or_else(|| Error::MissingOutcome(t.id.clone()))?;
            let bits = faults.project(&t.scope);
            match &t.semantics {
                TestSemantics::NoisyOr(p) => {
                    noisy_or_outcome_prob(p, &bits, outcome).map(Satisfaction::Likelihood)
                }
                s => {
                    let model = s.deterministic().expect("non-noisy semantics are deterministic");
                    Ok(Satisfaction::Indicator(
                        eval_deterministic(model, &bits).contains(outcome),
                    ))
                }
            }
        }
        RelationRef::Apriori(r) => Ok(apriori_value(&r.kind, &r.scope, faults)),
    }
}

pub(crate) fn apriori_value(kind: &AprioriKind, scope: &[usize], f: &FaultState) -> Satisfaction {
    let any = |v: &[usize]| v.iter().any(|&i| f.get(i));
    match kind {
        AprioriKind::ModuleOutputImplication {
            module,
            outputs,
            iff,
        } => {
            let forward = !any(outputs) || module.iter().all(|&m| f.get(m));
            let backward = !*iff || !any(module) || any(outputs);
            Satisfaction::Indicator(forward && backward)
        }
        AprioriKind::Prior { rho } => {
            Satisfaction::Likelihood(if f.get(scope[0]) { *rho } else { 1.0 - rho })
        }
        AprioriKind::Transition {
            p_activate,
            p_persist,
        } => {
            let p_on = if f.get(scope[0]) { *p_persist } else { *p_activate };
            Satisfaction::Likelihood(if f.get(scope[1]) { p_on } else { 1.0 - p_on })
        }
        AprioriKind::MutualExclusion => {
            Satisfaction::Indicator(scope.iter().filter(|&&i| f.get(i)).count() <= 1)
        }
        AprioriKind::Implication {
            premise,
            conclusion,
        } => Satisfaction::Indicator(!any(premise) || any(conclusion)),
    }
}

/// Whether `faults` can produce `syndrome` under deterministic tests and
/// satisfies every deterministic a-priori relation. Probabilistic a-priori
/// relations are ignored; Noisy-OR tests are an error.
pub fn is_consistent(graph: &DiagnosticGraph, faults: &FaultState, syndrome: &Syndrome) -> Result<bool> {
    faults.check_len(graph.n_modes())?;
    syndrome.check_len(graph.n_tests())?;
    for (t, o) in graph.tests().iter().zip(syndrome.outcomes()) {
        if !test_outcomes(t, faults)?.contains(*o) {
            return Ok(false);
        }
    }
    Ok(apriori_admits(graph, faults))
}

/// Deterministic a-priori relations all hold.
pub fn apriori_admits(graph: &DiagnosticGraph, faults: &FaultState) -> bool {
    graph
        .apriori()
        .iter()
        .filter(|r| !r.is_probabilistic())
        .all(|r| apriori_value(&r.kind, &r.scope, faults) == Satisfaction::Indicator(true))
}

/// Forward-simulates a syndrome. Ambiguous deterministic outcomes are drawn
/// uniformly; Noisy-OR tests fail with their model probability.
pub fn sample_syndrome(graph: &DiagnosticGraph, faults: &FaultState, seed: u64) -> Result<Syndrome> {
    sample_syndrome_with(graph, faults, &mut stream(seed, Stream::WeakOrAmbiguity))
}

pub fn sample_syndrome_with<R: Rng + ?Sized>(
    graph: &DiagnosticGraph,
    faults: &FaultState,
    rng: &mut R,
) -> Result<Syndrome> {
    faults.check_len(graph.n_modes())?;
    let mut out = Vec::with_capacity(graph.n_tests());
    for t in graph.tests() {
        let bits = faults.project(&t.scope);
        let o = match &t.semantics {
            TestSemantics::NoisyOr(p) => {
                let fail = 1.0 - noisy_or_pass_prob(p, &bits)?;
                Outcome::from_bit(rng.gen::<f64>() < fail)
            }
            s => {
                let set = eval_deterministic(s.deterministic().expect("deterministic"), &bits);
                if set.is_ambiguous() {
                    Outcome::from_bit(rng.gen_bool(0.5))
                } else if set.contains(Outcome::Fail) {
                    Outcome::Fail
                } else {
                    Outcome::Pass
                }
            }
        };
        out.push(o);
    }
    Ok(Syndrome::from_outcomes(out))
}
