//! Fault detection and identification for perception pipelines.
//!
//! Failure modes and diagnostic tests are arranged in a [`DiagnosticGraph`];
//! observed test outcomes (a [`Syndrome`]) are turned into an estimate of
//! the active failure modes either by minimal-cardinality solving
//! ([`solver`]) or by belief propagation on a factor graph ([`factor`]).
//! [`diagnosability`] bounds how many simultaneous faults a graph can
//! identify, and [`harness`] produces labeled synthetic data.

pub mod bits;
pub mod diagnosability;
pub mod error;
pub mod eval;
pub mod factor;
pub mod graph;
pub mod harness;
pub mod par;
pub mod rng;
pub mod semantics;
pub mod solver;

pub use bits::{FaultState, Outcome, Syndrome};
pub use error::{Error, Result};
pub use graph::{DiagnosticGraph, TestSemantics};
