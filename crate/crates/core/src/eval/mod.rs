//! Identification algorithms, fault detection, metrics and graph export.

mod baselines;
mod gnn_export;
mod identifiers;
mod metrics;

use crate::bits::{FaultState, Syndrome};
use crate::error::Result;
use crate::par::{self, Execution};

pub use baselines::{baseline_all_active, baseline_reliability, base_module_id, DEFAULT_RELIABILITY_RANKING};
pub use gnn_export::{gnn_export, GnnEdge, GnnExportGraph, GnnNode, GnnNodeKind};
pub use identifiers::{
    Algorithm, BaselineAllActive, BaselineReliability, DeterministicIdentifier, FactorGraphIdentifier,
    FnIdentifier, WeakerOrIdentifier,
};
pub use metrics::{detect, detect_sliced, metrics, Confusion, Detection, MetricsReport, Slice, SliceMetrics};

/// Maps a syndrome to an estimated fault state.
pub trait Identifier: Sync {
    fn name(&self) -> &str;

    fn identify(&self, syndrome: &Syndrome) -> Result<FaultState>;
}

/// Runs `id` over every syndrome, in input order.
pub fn identify_all(id: &dyn Identifier, syndromes: &[Syndrome], exec: Execution) -> Result<Vec<FaultState>> {
    par::try_map(exec, syndromes, |s| id.identify(s))
}
