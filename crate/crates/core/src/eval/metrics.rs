use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::bits::FaultState;
use crate::error::{check_len, Error, Result};
use crate::graph::DiagnosticGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slice {
    All,
    Outputs,
    Modules,
}

impl Slice {
    pub const ALL: [Slice; 3] = [Slice::All, Slice::Outputs, Slice::Modules];

    pub fn name(self) -> &'static str {
        match self {
            Slice::All => "all",
            Slice::Outputs => "outputs",
            Slice::Modules => "modules",
        }
    }

    fn mask(self, graph: &DiagnosticGraph) -> Vec<bool> {
        match self {
            Slice::All => vec![true; graph.n_modes()],
            Slice::Outputs => graph.output_mask(),
            Slice::Modules => graph.module_mask(),
        }
    }
}

pub fn detect(f: &FaultState) -> bool {
    f.any()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub all: bool,
    pub outputs: bool,
    pub modules: bool,
}

pub fn detect_sliced(graph: &DiagnosticGraph, f: &FaultState) -> Result<Detection> {
    f.check_len(graph.n_modes())?;
    let any = |mask: Vec<bool>| f.bits().iter().zip(mask).any(|(&b, m)| b && m);
    Ok(Detection {
        all: f.any(),
        outputs: any(graph.output_mask()),
        modules: any(graph.module_mask()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Correct bits over all bits; 1 when empty.
    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// `tp / (tp + fp)` with `0/0 = 1`.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `tp / (tp + fn)` with `0/0 = 1`.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

impl Add for Confusion {
    type Output = Confusion;

    fn add(self, o: Confusion) -> Confusion {
        Confusion {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl AddAssign for Confusion {
    fn add_assign(&mut self, o: Confusion) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceMetrics {
    pub slice: Slice,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    /// Fraction of samples where detection on this slice agrees with the
    /// labels.
    pub detection_accuracy: f64,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: usize,
    pub slices: Vec<SliceMetrics>,
    /// Per failure mode, in index order.
    pub per_mode: Vec<Confusion>,
    /// How `0/0` precision and recall are reported.
    pub zero_division: f64,
}

impl MetricsReport {
    pub fn slice(&self, s: Slice) -> &SliceMetrics {
        self.slices
            .iter()
            .find(|m| m.slice == s)
            .expect("every slice is reported")
    }
}

/// Bitwise confusion of `predictions` against `labels`, split by host kind.
pub fn metrics(graph: &DiagnosticGraph, predictions: &[FaultState], labels: &[FaultState]) -> Result<MetricsReport> {
    check_len(labels.len(), predictions.len())?;
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = graph.n_modes();
    let mut per_mode = vec![Confusion::default(); n];
    for (p, l) in predictions.iter().zip(labels) {
        p.check_len(n)?;
        l.check_len(n)?;
        for (i, c) in per_mode.iter_mut().enumerate() {
            c.record(p.get(i), l.get(i));
        }
    }
    let slices = Slice::ALL
        .iter()
        .map(|&s| {
            let mask = s.mask(graph);
            let confusion = per_mode
                .iter()
                .zip(&mask)
                .filter(|(_, &m)| m)
                .fold(Confusion::default(), |a, (c, _)| a + *c);
            let any = |f: &FaultState| f.bits().iter().zip(&mask).any(|(&b, &m)| b && m);
            let agree = predictions
                .iter()
                .zip(labels)
                .filter(|(p, l)| any(p) == any(l))
                .count();
            SliceMetrics {
                slice: s,
                accuracy: confusion.accuracy(),
                precision: confusion.precision(),
                recall: confusion.recall(),
                detection_accuracy: agree as f64 / labels.len() as f64,
                confusion,
            }
        })
        .collect();
    Ok(MetricsReport {
        samples: labels.len(),
        slices,
        per_mode,
        zero_division: 1.0,
    })
}
