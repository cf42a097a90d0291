//! Noisy-OR, prior and transition parameters estimated from labeled data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bits::{FaultState, Syndrome};
use crate::error::{Error, Result};
use crate::graph::{AprioriKind, DiagnosticGraph};

pub(crate) const PROB_FLOOR: f64 = 1e-6;

fn clamp(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// Laplace-smoothed frequency with `alpha = 1`.
fn smoothed(hits: usize, total: usize) -> f64 {
    (hits as f64 + 1.0) / (total as f64 + 2.0)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TestParams {
    /// Keyed by failure-mode id.
    pub p_detect: BTreeMap<String, f64>,
    pub p_false_alarm: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionParams {
    pub p_activate: f64,
    pub p_persist: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LearnedParams {
    /// Keyed by test id.
    #[serde(default)]
    pub tests: BTreeMap<String, TestParams>,
    /// Activation prior keyed by failure-mode id.
    #[serde(default)]
    pub priors: BTreeMap<String, f64>,
    /// Keyed by transition relation id.
    #[serde(default)]
    pub transitions: BTreeMap<String, TransitionParams>,
}

impl LearnedParams {
    /// The same prior for every failure mode and no test parameters.
    pub fn uniform_priors(graph: &DiagnosticGraph, rho: f64) -> Self {
        LearnedParams {
            priors: graph
                .failure_modes()
                .iter()
                .map(|m| (m.id.clone(), rho))
                .collect(),
            ..Default::default()
        }
    }

    /// The same Noisy-OR parameters for every test member, plus uniform priors.
    pub fn uniform(graph: &DiagnosticGraph, p_detect: f64, p_false_alarm: f64, rho: f64) -> Self {
        let mut p = Self::uniform_priors(graph, rho);
        for t in graph.tests() {
            let ids = t.scope.iter().map(|&i| graph.failure_modes()[i].id.clone());
            p.tests.insert(
                t.id.clone(),
                TestParams {
                    p_detect: ids.clone().map(|id| (id, p_detect)).collect(),
                    p_false_alarm: ids.map(|id| (id, p_false_alarm)).collect(),
                },
            );
        }
        p
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameters always serialize")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

/// Estimates parameters by counting over `(syndrome, labels)` pairs.
///
/// For a test over `k` modes, the false-alarm rate `r_a` observed with all
/// scope modes inactive is split evenly, `p_a = 1 - (1 - r_a)^(1/k)`. The
/// FAIL rate `r_i` observed with only mode `i` active is corrected for the
/// other members' false alarms, `p_d,i = 1 - (1 - r_i) / prod_{j != i}(1 - p_a,j)`.
/// Without any such sample, `p_d,i` falls back to the test's FAIL rate over
/// all samples with some scope mode active. All rates are Laplace-smoothed
/// and clamped to `[1e-6, 1 - 1e-6]`.
pub fn fit_params<'a, I>(graph: &DiagnosticGraph, samples: I) -> Result<LearnedParams>
where
    I: IntoIterator<Item = (&'a Syndrome, &'a FaultState)>,
{
    let samples: Vec<(&Syndrome, &FaultState)> = samples.into_iter().collect();
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for (s, f) in &samples {
        s.check_len(graph.n_tests())?;
        f.check_len(graph.n_modes())?;
    }
    let n = samples.len();
    let name = |i: usize| graph.failure_modes()[i].id.clone();

    let mut params = LearnedParams::default();
    for (t_idx, t) in graph.tests().iter().enumerate() {
        let k = t.scope.len();
        let (mut idle, mut idle_fail) = (0, 0);
        let (mut busy, mut busy_fail) = (0, 0);
        let mut single = vec![(0usize, 0usize); k];
        for (s, f) in &samples {
            let fail = s.get(t_idx).is_fail();
            let active: Vec<usize> = (0..k).filter(|&j| f.get(t.scope[j])).collect();
            match active.as_slice() {
                [] => {
                    idle += 1;
                    idle_fail += usize::from(fail);
                }
                rest => {
                    busy += 1;
                    busy_fail += usize::from(fail);
                    if let [j] = rest {
                        single[*j].0 += 1;
                        single[*j].1 += usize::from(fail);
                    }
                }
            }
        }
        let r_a = smoothed(idle_fail, idle);
        let p_a = clamp(1.0 - (1.0 - r_a).powf(1.0 / k as f64));
        let mut tp = TestParams::default();
        for (j, &(count, fails)) in single.iter().enumerate() {
            let p_d = if count == 0 {
                smoothed(busy_fail, busy)
            } else {
                let r_d = smoothed(fails, count);
                let others = (1.0 - p_a).powi(k as i32 - 1);
                1.0 - (1.0 - r_d) / others
            };
            tp.p_detect.insert(name(t.scope[j]), clamp(p_d));
            tp.p_false_alarm.insert(name(t.scope[j]), p_a);
        }
        params.tests.insert(t.id.clone(), tp);
    }

    for i in 0..graph.n_modes() {
        let active = samples.iter().filter(|(_, f)| f.get(i)).count();
        params.priors.insert(name(i), clamp(smoothed(active, n)));
    }

    for r in graph.apriori() {
        if let AprioriKind::Transition { .. } = r.kind {
            let (from, to) = (r.scope[0], r.scope[1]);
            let (mut off, mut off_on, mut on, mut on_on) = (0, 0, 0, 0);
            for (_, f) in &samples {
                if f.get(from) {
                    on += 1;
                    on_on += usize::from(f.get(to));
                } else {
                    off += 1;
                    off_on += usize::from(f.get(to));
                }
            }
            params.transitions.insert(
                r.id.clone(),
                TransitionParams {
                    p_activate: clamp(smoothed(off_on, off)),
                    p_persist: clamp(smoothed(on_on, on)),
                },
            );
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{apollo_temporal, graph_from_json, TestSemantics};
    use crate::rng::{stream, Stream};
    use crate::semantics::sample_syndrome_with;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn pair_graph(p_d: f64, p_a: f64) -> DiagnosticGraph {
        graph_from_json(&format!(
            r#"{{"version":1,"system":{{"modules":[{{"id":"m"}}]}},
            "failure_modes":[{{"id":"f1","host":"m","kind":"unknown"}},
                             {{"id":"f2","host":"m","kind":"unknown"}}],
            "tests":[{{"id":"t","scope":["f1","f2"],"semantics":"noisy_or",
                       "p_detect":[{p_d},{p_d}],"p_false_alarm":[{p_a},{p_a}]}}]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn never_active_prior_is_smoothed() {
        let g = pair_graph(0.9, 0.0);
        let s = Syndrome::all_pass(1);
        let f = FaultState::zeros(2);
        let data = vec![(s, f); 8];
        let p = fit_params(&g, data.iter().map(|(s, f)| (s, f))).unwrap();
        assert_abs_diff_eq!(p.priors["f1"], 1.0 / 10.0, epsilon = 1e-15);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let g = pair_graph(0.9, 0.1);
        assert!(matches!(fit_params(&g, std::iter::empty()), Err(Error::EmptyDataset)));
    }

    #[test]
    fn recovers_known_parameters() {
        let g = pair_graph(0.9, 0.1);
        let mut rng = stream(1, Stream::Sampling);
        let mut data = Vec::new();
        for _ in 0..30_000 {
            let f = FaultState::from_bits(vec![rng.gen_bool(0.4), rng.gen_bool(0.3)]);
            let s = sample_syndrome_with(&g, &f, &mut rng).unwrap();
            data.push((s, f));
        }
        let eligible = data.iter().filter(|(_, f)| f.bits() == [true, false]).count();
        // P([1,0]) = 0.4 * 0.7, so about 8400 are expected.
        assert!(eligible >= 8_000);
        let p = fit_params(&g, data.iter().map(|(s, f)| (s, f))).unwrap();
        let t = &p.tests["t"];
        assert!((t.p_detect["f1"] - 0.9).abs() < 0.02, "{}", t.p_detect["f1"]);
        assert!((t.p_false_alarm["f1"] - 0.1).abs() < 0.02, "{}", t.p_false_alarm["f1"]);
        assert!((p.priors["f1"] - 0.4).abs() < 0.02);
    }

    #[test]
    fn falls_back_without_single_active_samples() {
        let g = pair_graph(0.9, 0.1);
        let both = FaultState::from_bits(vec![true, true]);
        let data = [(Syndrome::from_bits(&[true]), both.clone()),
            (Syndrome::from_bits(&[false]), both)];
        let p = fit_params(&g, data.iter().map(|(s, f)| (s, f))).unwrap();
        assert_abs_diff_eq!(p.tests["t"].p_detect["f1"], smoothed(1, 2), epsilon = 1e-15);
    }

    #[test]
    fn transitions_are_bigram_counts() {
        let t = apollo_temporal(&TestSemantics::WeakerOr, true).unwrap();
        let g = t.flat();
        let from = g.mode_index("t0/lidar_detector.ood").unwrap();
        let to = g.mode_index("t1/lidar_detector.ood").unwrap();
        let s = Syndrome::all_pass(g.n_tests());
        let data = [(s.clone(), FaultState::from_active(g.n_modes(), [from, to])),
            (s.clone(), FaultState::from_active(g.n_modes(), [from])),
            (s.clone(), FaultState::zeros(g.n_modes()))];
        let p = fit_params(g, data.iter().map(|(s, f)| (s, f))).unwrap();
        let tr = p.transitions["x/lidar_detector.transition"];
        assert_abs_diff_eq!(tr.p_persist, 2.0 / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(tr.p_activate, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let g = pair_graph(0.9, 0.1);
        let p = LearnedParams::uniform(&g, 0.9, 0.1, 0.2);
        assert_eq!(LearnedParams::from_json(&p.to_json()).unwrap(), p);
    }
}
