//! Discrete factor graphs over binary failure-mode variables.
//!
//! Potentials are stored as natural-log tables. Entry `a` of a table over
//! `vars` is the potential of the assignment where `vars[k]` takes bit `k`
//! of `a`.

mod bp;
mod build;
mod learn;

use serde::{Deserialize, Serialize};

use crate::bits::FaultState;
use crate::error::{Error, Result};

pub use bp::{max_product, sum_product, BpOptions, BpResult, MapResult, MessageState};
pub use build::to_factor_graph;
pub use learn::{fit_params, LearnedParams, TestParams, TransitionParams};

/// Largest variable count [`brute_force_posterior`] accepts.
pub const BRUTE_FORCE_CAP: usize = 20;

const MAX_FACTOR_ARITY: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub vars: Vec<usize>,
    pub log_table: Vec<f64>,
}

impl Factor {
    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub(crate) fn index_of(&self, state: &[bool]) -> usize {
        self.vars
            .iter()
            .enumerate()
            .fold(0, |a, (k, &v)| if state[v] { a | 1 << k } else { a })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FactorGraph {
    n_vars: usize,
    factors: Vec<Factor>,
}

impl FactorGraph {
    pub fn new(n_vars: usize) -> Self {
        FactorGraph {
            n_vars,
            factors: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Adds a factor from a table of nonnegative potentials.
    pub fn add_factor(&mut self, label: impl Into<String>, vars: Vec<usize>, table: &[f64]) -> Result<()> {
        let label = label.into();
        if let Some(&bad) = table.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "factor `{label}` has potential {bad}"
            )));
        }
        let log_table = table.iter().map(|p| p.ln()).collect();
        self.add_log_factor(label, vars, log_table)
    }

    pub fn add_log_factor(&mut self, label: impl Into<String>, vars: Vec<usize>, log_table: Vec<f64>) -> Result<()> {
        let label = label.into();
        if vars.is_empty() || vars.len() > MAX_FACTOR_ARITY {
            return Err(Error::InvalidArgument(format!(
                "factor `{label}` has arity {}",
                vars.len()
            )));
        }
        if let Some(&v) = vars.iter().find(|&&v| v >= self.n_vars) {
            return Err(Error::InvalidArgument(format!(
                "factor `{label}` references variable {v} of {}",
                self.n_vars
            )));
        }
        let mut sorted = vars.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != vars.len() {
            return Err(Error::InvalidArgument(format!(
                "factor `{label}` repeats a variable"
            )));
        }
        if log_table.len() != 1 << vars.len() {
            return Err(Error::LengthMismatch {
                expected: 1 << vars.len(),
                got: log_table.len(),
            });
        }
        if log_table.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
            return Err(Error::InvalidArgument(format!("factor `{label}` has a NaN entry")));
        }
        self.factors.push(Factor {
            label,
            vars,
            log_table,
        });
        Ok(())
    }

    /// Unnormalized log-probability of a full assignment.
    pub fn log_weight(&self, state: &[bool]) -> f64 {
        self.factors
            .iter()
            .map(|f| f.log_table[f.index_of(state)])
            .sum()
    }

    /// Factors touching each variable, with the variable's position in the
    /// factor.
    pub(crate) fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n_vars];
        for (f, factor) in self.factors.iter().enumerate() {
            for (k, &v) in factor.vars.iter().enumerate() {
                adj[v].push((f, k));
            }
        }
        adj
    }

    /// Whether the bipartite variable/factor graph contains a cycle.
    pub fn has_cycle(&self) -> bool {
        let n = self.n_vars + self.factors.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (f, factor) in self.factors.iter().enumerate() {
            for &v in &factor.vars {
                let (a, b) = (find(&mut parent, v), find(&mut parent, self.n_vars + f));
                if a == b {
                    return true;
                }
                parent[a] = b;
            }
        }
        false
    }
}

pub(crate) fn log_sum_exp2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub(crate) fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    /// `P(x_v = 1)` per variable.
    pub marginals: Vec<f64>,
    pub log_z: f64,
    /// Most likely assignment; the lexicographically smallest among ties.
    pub map: FaultState,
}

/// Exact marginals, partition function and MAP by enumerating all
/// assignments. A model with zero total mass is reported as
/// [`Error::Infeasible`].
pub fn brute_force_posterior(fg: &FactorGraph) -> Result<Posterior> {
    let n = fg.n_vars();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::CapExceeded {
            size: n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let total = 1usize << n;
    let mut weights = Vec::with_capacity(total);
    let mut best: Option<(f64, usize)> = None;
    let mut state = vec![false; n];
    // `s` counts in lexicographic order: variable 0 is the most significant bit.
    for s in 0..total {
        for (i, b) in state.iter_mut().enumerate() {
            *b = s >> (n - 1 - i) & 1 == 1;
        }
        let w = fg.log_weight(&state);
        if w > f64::NEG_INFINITY && best.is_none_or(|(bw, _)| w > bw) {
            best = Some((w, s));
        }
        weights.push(w);
    }
    let log_z = log_sum_exp(weights.iter().copied());
    let Some((_, best_s)) = best else {
        return Err(Error::Infeasible);
    };
    let marginals = (0..n)
        .map(|i| {
            let on = log_sum_exp(
                weights
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| s >> (n - 1 - i) & 1 == 1)
                    .map(|(_, &w)| w),
            );
            (on - log_z).exp()
        })
        .collect();
    let map = FaultState::from_bits((0..n).map(|i| best_s >> (n - 1 - i) & 1 == 1).collect());
    Ok(Posterior {
        marginals,
        log_z,
        map,
    })
}
