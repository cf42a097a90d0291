use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::baselines::{baseline_all_active, baseline_reliability, DEFAULT_RELIABILITY_RANKING};
use super::Identifier;
use crate::bits::{FaultState, Syndrome};
use crate::error::{Error, Result};
use crate::factor::{max_product, to_factor_graph, BpOptions, LearnedParams};
use crate::graph::DiagnosticGraph;
use crate::solver::{solve_min_cardinality, solve_weaker_or, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Deterministic,
    WeakerOr,
    FactorGraph,
    Baseline,
    BaselineRel,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Deterministic,
        Algorithm::WeakerOr,
        Algorithm::FactorGraph,
        Algorithm::Baseline,
        Algorithm::BaselineRel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Deterministic => "deterministic",
            Algorithm::WeakerOr => "weaker-or",
            Algorithm::FactorGraph => "factor-graph",
            Algorithm::Baseline => "baseline",
            Algorithm::BaselineRel => "baseline-rel",
        }
    }

    /// Identifier with default options. Only the factor-graph algorithm
    /// reads `params`; the reliability baseline uses the default ranking.
    pub fn identifier(self, graph: &DiagnosticGraph, params: &LearnedParams) -> Result<Box<dyn Identifier>> {
        Ok(match self {
            Algorithm::Deterministic => Box::new(DeterministicIdentifier::new(graph, None)),
            Algorithm::WeakerOr => Box::new(WeakerOrIdentifier::new(graph)),
            Algorithm::FactorGraph => Box::new(FactorGraphIdentifier::new(graph, params.clone(), BpOptions::default())),
            Algorithm::Baseline => Box::new(BaselineAllActive::new(graph)),
            Algorithm::BaselineRel => Box::new(BaselineReliability::new(graph, &DEFAULT_RELIABILITY_RANKING)),
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm `{s}`")))
    }
}

/// Minimal-cardinality solving. Probabilistic a-priori relations are
/// dropped before solving.
pub struct DeterministicIdentifier {
    graph: DiagnosticGraph,
    budget: Option<usize>,
    /// Report infeasible syndromes as all-inactive instead of failing.
    pub zeros_when_infeasible: bool,
}

impl DeterministicIdentifier {
    pub fn new(graph: &DiagnosticGraph, budget: Option<usize>) -> Self {
        DeterministicIdentifier {
            graph: graph.without_probabilistic_apriori(),
            budget,
            zeros_when_infeasible: false,
        }
    }
}

impl Identifier for DeterministicIdentifier {
    fn name(&self) -> &str {
        Algorithm::Deterministic.name()
    }

    fn identify(&self, syndrome: &Syndrome) -> Result<FaultState> {
        let r = solve_min_cardinality(&self.graph, syndrome, self.budget)?;
        if r.status == SolveStatus::Infeasible && self.zeros_when_infeasible {
            return Ok(FaultState::zeros(self.graph.n_modes()));
        }
        r.into_assignment()
    }
}

pub struct WeakerOrIdentifier {
    graph: DiagnosticGraph,
}

impl WeakerOrIdentifier {
    pub fn new(graph: &DiagnosticGraph) -> Self {
        WeakerOrIdentifier {
            graph: graph.without_probabilistic_apriori(),
        }
    }
}

impl Identifier for WeakerOrIdentifier {
    fn name(&self) -> &str {
        Algorithm::WeakerOr.name()
    }

    fn identify(&self, syndrome: &Syndrome) -> Result<FaultState> {
        solve_weaker_or(&self.graph, syndrome)?.into_assignment()
    }
}

/// MAP estimate by max-product on the factor graph of each syndrome.
pub struct FactorGraphIdentifier {
    graph: DiagnosticGraph,
    params: LearnedParams,
    opts: BpOptions,
}

impl FactorGraphIdentifier {
    pub fn new(graph: &DiagnosticGraph, params: LearnedParams, opts: BpOptions) -> Self {
        FactorGraphIdentifier {
            graph: graph.clone(),
            params,
            opts,
        }
    }
}

impl Identifier for FactorGraphIdentifier {
    fn name(&self) -> &str {
        Algorithm::FactorGraph.name()
    }

    fn identify(&self, syndrome: &Syndrome) -> Result<FaultState> {
        let fg = to_factor_graph(&self.graph, syndrome, &self.params)?;
        Ok(max_product(&fg, &self.opts).assignment)
    }
}

pub struct BaselineAllActive {
    graph: DiagnosticGraph,
}

impl BaselineAllActive {
    pub fn new(graph: &DiagnosticGraph) -> Self {
        BaselineAllActive {
            graph: graph.clone(),
        }
    }
}

impl Identifier for BaselineAllActive {
    fn name(&self) -> &str {
        Algorithm::Baseline.name()
    }

    fn identify(&self, syndrome: &Syndrome) -> Result<FaultState> {
        baseline_all_active(&self.graph, syndrome)
    }
}

pub struct BaselineReliability {
    graph: DiagnosticGraph,
    ranking: Vec<String>,
}

impl BaselineReliability {
    pub fn new(graph: &DiagnosticGraph, ranking: &[&str]) -> Self {
        BaselineReliability {
            graph: graph.clone(),
            ranking: ranking.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Identifier for BaselineReliability {
    fn name(&self) -> &str {
        Algorithm::BaselineRel.name()
    }

    fn identify(&self, syndrome: &Syndrome) -> Result<FaultState> {
        let ranking: Vec<&str> = self.ranking.iter().map(String::as_str).collect();
        baseline_reliability(&self.graph, syndrome, &ranking)
    }
}

/// Wraps a closure.
pub struct FnIdentifier<F> {
    name: String,
    f: F,
}

impl<F> FnIdentifier<F>
where
    F: Fn(&Syndrome) -> Result<FaultState> + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnIdentifier { name: name.into(), f }
    }
}

impl<F> Identifier for FnIdentifier<F>
where
    F: Fn(&Syndrome) -> Result<FaultState> + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn identify(&self, syndrome: &Syndrome) -> Result<FaultState> {
        (self.f)(syndrome)
    }
}
