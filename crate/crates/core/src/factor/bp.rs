//! Flooding-schedule belief propagation in the log domain.

use serde::{Deserialize, Serialize};

use super::{log_sum_exp, log_sum_exp2, FactorGraph};
use crate::bits::FaultState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpOptions {
    pub max_iters: usize,
    pub tolerance: f64,
    /// Weight of the previous message when the graph has a cycle; trees are
    /// never damped.
    pub damping: f64,
}

impl Default for BpOptions {
    fn default() -> Self {
        BpOptions {
            max_iters: 100,
            tolerance: 1e-6,
            damping: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpResult {
    /// `P(x_v = 1)` per variable.
    pub marginals: Vec<f64>,
    pub log_z: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub assignment: FaultState,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Semiring {
    SumProduct,
    MaxProduct,
}

/// Normalized log messages on every edge, indexed `[factor][position]`.
#[derive(Debug, Clone)]
pub struct MessageState {
    /// Variable to factor.
    pub q: Vec<Vec<[f64; 2]>>,
    /// Factor to variable.
    pub r: Vec<Vec<[f64; 2]>>,
    pub iteration: usize,
    pub residual: f64,
}

fn normalize(m: [f64; 2], semiring: Semiring) -> [f64; 2] {
    let z = match semiring {
        Semiring::SumProduct => log_sum_exp2(m[0], m[1]),
        Semiring::MaxProduct => m[0].max(m[1]),
    };
    if z == f64::NEG_INFINITY {
        // Contradictory evidence: fall back to an uninformative message.
        return [0.0, 0.0];
    }
    [m[0] - z, m[1] - z]
}

struct Engine<'a> {
    fg: &'a FactorGraph,
    adj: Vec<Vec<(usize, usize)>>,
    semiring: Semiring,
    damping: f64,
}

impl<'a> Engine<'a> {
    fn new(fg: &'a FactorGraph, semiring: Semiring, opts: &BpOptions) -> Self {
        Engine {
            fg,
            adj: fg.adjacency(),
            semiring,
            damping: if fg.has_cycle() { opts.damping } else { 0.0 },
        }
    }

    fn init(&self) -> MessageState {
        let zeros: Vec<Vec<[f64; 2]>> = self
            .fg
            .factors()
            .iter()
            .map(|f| vec![[0.0, 0.0]; f.arity()])
            .collect();
        MessageState {
            q: zeros.clone(),
            r: zeros,
            iteration: 0,
            residual: f64::INFINITY,
        }
    }

    fn var_to_factor(&self, r: &[Vec<[f64; 2]>], q: &mut [Vec<[f64; 2]>]) {
        for edges in &self.adj {
            for &(f, k) in edges {
                let mut m = [0.0, 0.0];
                for &(g, j) in edges {
                    if g != f {
                        m[0] += r[g][j][0];
                        m[1] += r[g][j][1];
                    }
                }
                q[f][k] = normalize(m, self.semiring);
            }
        }
    }

    fn factor_to_var(&self, f: usize, q: &[Vec<[f64; 2]>]) -> Vec<[f64; 2]> {
        let factor = &self.fg.factors()[f];
        let arity = factor.arity();
        let mut out = vec![[f64::NEG_INFINITY; 2]; arity];
        for (a, &t) in factor.log_table.iter().enumerate() {
            if t == f64::NEG_INFINITY {
                continue;
            }
            let total: f64 = t + (0..arity).map(|j| q[f][j][a >> j & 1]).sum::<f64>();
            for (k, slot) in out.iter_mut().enumerate() {
                let x = a >> k & 1;
                let v = total - q[f][k][x];
                slot[x] = match self.semiring {
                    Semiring::SumProduct => log_sum_exp2(slot[x], v),
                    Semiring::MaxProduct => slot[x].max(v),
                };
            }
        }
        out.into_iter().map(|m| normalize(m, self.semiring)).collect()
    }

    fn run(&self, opts: &BpOptions) -> (MessageState, bool) {
        let mut st = self.init();
        let nf = self.fg.factors().len();
        let mut converged = nf == 0;
        while !converged && st.iteration < opts.max_iters {
            self.var_to_factor(&st.r, &mut st.q);
            let mut residual: f64 = 0.0;
            for f in 0..nf {
                let new = self.factor_to_var(f, &st.q);
                for (k, mut m) in new.into_iter().enumerate() {
                    let old = st.r[f][k];
                    if self.damping > 0.0 {
                        let mix = |x: usize| {
                            log_sum_exp2(
                                (1.0 - self.damping).ln() + m[x],
                                self.damping.ln() + old[x],
                            )
                        };
                        m = normalize([mix(0), mix(1)], self.semiring);
                    }
                    for x in 0..2 {
                        residual = residual.max((m[x].exp() - old[x].exp()).abs());
                    }
                    st.r[f][k] = m;
                }
            }
            st.iteration += 1;
            st.residual = residual;
            converged = residual < opts.tolerance;
        }
        self.var_to_factor(&st.r, &mut st.q);
        (st, converged)
    }

    /// Unnormalized log beliefs per variable.
    fn beliefs(&self, st: &MessageState) -> Vec<[f64; 2]> {
        self.adj
            .iter()
            .map(|edges| {
                edges.iter().fold([0.0, 0.0], |b, &(f, k)| {
                    [b[0] + st.r[f][k][0], b[1] + st.r[f][k][1]]
                })
            })
            .collect()
    }

    /// Bethe estimate of `log Z`; exact on trees.
    fn log_z(&self, st: &MessageState, beliefs: &[[f64; 2]]) -> f64 {
        let mut total = 0.0;
        for (f, factor) in self.fg.factors().iter().enumerate() {
            let z_f = log_sum_exp(factor.log_table.iter().enumerate().map(|(a, &t)| {
                t + (0..factor.arity()).map(|j| st.q[f][j][a >> j & 1]).sum::<f64>()
            }));
            if z_f == f64::NEG_INFINITY {
                return z_f;
            }
            total += z_f;
            for k in 0..factor.arity() {
                let z_vf = log_sum_exp2(st.q[f][k][0] + st.r[f][k][0], st.q[f][k][1] + st.r[f][k][1]);
                if z_vf == f64::NEG_INFINITY {
                    return z_vf;
                }
                total -= z_vf;
            }
        }
        for b in beliefs {
            let z_v = log_sum_exp2(b[0], b[1]);
            if z_v == f64::NEG_INFINITY {
                return z_v;
            }
            total += z_v;
        }
        total
    }
}

/// Marginals and `log Z` by sum-product. Exact on trees; loopy graphs are
/// damped and iterate until the largest message change drops below the
/// tolerance or `max_iters` is reached.
pub fn sum_product(fg: &FactorGraph, opts: &BpOptions) -> BpResult {
    let engine = Engine::new(fg, Semiring::SumProduct, opts);
    let (st, converged) = engine.run(opts);
    let beliefs = engine.beliefs(&st);
    let log_z = engine.log_z(&st, &beliefs);
    let marginals = beliefs
        .iter()
        .map(|b| {
            let z = log_sum_exp2(b[0], b[1]);
            if z == f64::NEG_INFINITY {
                0.5
            } else {
                (b[1] - z).exp()
            }
        })
        .collect();
    BpResult {
        marginals,
        log_z,
        converged,
        iterations: st.iteration,
    }
}

const TIE_EPS: f64 = 1e-9;

/// MAP assignment by max-product. A variable whose max-beliefs tie is
/// clamped to 0 and the messages recomputed, so the decoded assignment is
/// consistent; on trees it is the lexicographically smallest MAP state.
pub fn max_product(fg: &FactorGraph, opts: &BpOptions) -> MapResult {
    let mut work = fg.clone();
    let mut converged = true;
    let mut iterations = 0;
    let mut decided: Vec<Option<bool>> = vec![None; fg.n_vars()];
    loop {
        let engine = Engine::new(&work, Semiring::MaxProduct, opts);
        let (st, ok) = engine.run(opts);
        converged &= ok;
        iterations += st.iteration;
        let beliefs = engine.beliefs(&st);
        let mut tie = None;
        for (v, b) in beliefs.iter().enumerate() {
            if decided[v].is_some() {
                continue;
            }
            let tied = if b[0].is_finite() && b[1].is_finite() {
                (b[1] - b[0]).abs() <= TIE_EPS * b[0].abs().max(b[1].abs()).max(1.0)
            } else {
                b[0] == b[1]
            };
            if tied {
                tie = Some(v);
                break;
            }
        }
        match tie {
            Some(v) => {
                decided[v] = Some(false);
                work.add_log_factor("clamp", vec![v], vec![0.0, f64::NEG_INFINITY])
                    .expect("clamp factor is well formed");
            }
            None => {
                let bits = beliefs
                    .iter()
                    .enumerate()
                    .map(|(v, b)| decided[v].unwrap_or(b[1] > b[0]))
                    .collect();
                return MapResult {
                    assignment: FaultState::from_bits(bits),
                    converged,
                    iterations,
                };
            }
        }
    }
}
