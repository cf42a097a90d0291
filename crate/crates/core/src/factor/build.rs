use super::{FactorGraph, LearnedParams};
use crate::bits::{FaultState, Syndrome};
use crate::error::{Error, Result};
use crate::graph::{AprioriKind, DiagnosticGraph, NoisyOrParams, TestSemantics};
use crate::semantics::{apriori_value, eval_deterministic, noisy_or_outcome_prob};

/// Table over `vars` whose entry for each local assignment is `value(bits)`.
fn table(vars: &[usize], value: impl Fn(&[bool]) -> f64) -> Vec<f64> {
    (0..1usize << vars.len())
        .map(|a| {
            let bits: Vec<bool> = (0..vars.len()).map(|k| a >> k & 1 == 1).collect();
            value(&bits).ln()
        })
        .collect()
}

fn learned_noisy_or(graph: &DiagnosticGraph, test: usize, params: &LearnedParams) -> Result<Option<NoisyOrParams>> {
    let t = &graph.tests()[test];
    let Some(tp) = params.tests.get(&t.id) else {
        return Ok(None);
    };
    let lookup = |map: &std::collections::BTreeMap<String, f64>, what: &str, i: usize| {
        let id = &graph.failure_modes()[i].id;
        map.get(id)
            .copied()
            .ok_or_else(|| Error::MissingParameter(format!("{what} of `{id}` in test `{}`", t.id)))
    };
    let p_detect = t
        .scope
        .iter()
        .map(|&i| lookup(&tp.p_detect, "p_detect", i))
        .collect::<Result<_>>()?;
    let p_false_alarm = t
        .scope
        .iter()
        .map(|&i| lookup(&tp.p_false_alarm, "p_false_alarm", i))
        .collect::<Result<_>>()?;
    Ok(Some(NoisyOrParams::new(p_detect, p_false_alarm)))
}

/// One factor per test (the likelihood of its observed outcome), one per
/// a-priori relation, and one activation prior per failure mode.
///
/// Test likelihoods use learned Noisy-OR parameters when `params` has an
/// entry for the test, the graph's own Noisy-OR parameters otherwise, and a
/// 0/1 indicator for deterministic tests. Learned transition
/// probabilities override the graph's. Every failure mode needs a prior in
/// `params` unless the graph carries a `Prior` relation for it.
pub fn to_factor_graph(graph: &DiagnosticGraph, syndrome: &Syndrome, params: &LearnedParams) -> Result<FactorGraph> {
    syndrome.check_len(graph.n_tests())?;
    let mut fg = FactorGraph::new(graph.n_modes());
    for (i, t) in graph.tests().iter().enumerate() {
        let outcome = syndrome.get(i);
        let noisy = match learned_noisy_or(graph, i, params)? {
            Some(p) => Some(p),
            None => match &t.semantics {
                TestSemantics::NoisyOr(p) => Some(p.clone()),
                _ => None,
            },
        };
        let log_table = match (&noisy, t.semantics.deterministic()) {
            (Some(p), _) => table(&t.scope, |bits| {
                noisy_or_outcome_prob(p, bits, outcome).expect("parameters sized to scope")
            }),
            (None, Some(model)) => table(&t.scope, |bits| {
                f64::from(u8::from(eval_deterministic(model, bits).contains(outcome)))
            }),
            (None, None) => unreachable!("noisy tests always carry parameters"),
        };
        fg.add_log_factor(t.id.clone(), t.scope.clone(), log_table)?;
    }

    let mut has_prior_relation = vec![false; graph.n_modes()];
    for r in graph.apriori() {
        let kind = match (&r.kind, params.transitions.get(&r.id)) {
            (AprioriKind::Transition { .. }, Some(tp)) => AprioriKind::Transition {
                p_activate: tp.p_activate,
                p_persist: tp.p_persist,
            },
            (AprioriKind::Prior { .. }, _) => {
                has_prior_relation[r.scope[0]] = true;
                r.kind.clone()
            }
            (k, _) => k.clone(),
        };
        let log_table = table(&r.scope, |bits| {
            let mut f = FaultState::zeros(graph.n_modes());
            for (k, &v) in r.scope.iter().enumerate() {
                f.set(v, bits[k]);
            }
            apriori_value(&kind, &r.scope, &f).value()
        });
        fg.add_log_factor(r.id.clone(), r.scope.clone(), log_table)?;
    }

    for (i, m) in graph.failure_modes().iter().enumerate() {
        match params.priors.get(&m.id) {
            Some(&rho) => {
                crate::graph::check_probability(&m.id, rho)?;
                fg.add_factor(format!("prior/{}", m.id), vec![i], &[1.0 - rho, rho])?;
            }
            None if has_prior_relation[i] => {}
            None => return Err(Error::MissingParameter(format!("prior of `{}`", m.id))),
        }
    }
    Ok(fg)
}
