//! Fault-state and syndrome vectors.
//!
//! Both are plain bit vectors keyed by the stable indices a
//! [`DiagnosticGraph`](crate::graph::DiagnosticGraph) assigns in document
//! order. On the wire they are arrays of `0`/`1`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_len, Result};

/// Outcome of a single diagnostic test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Outcome::Fail
        } else {
            Outcome::Pass
        }
    }

    pub fn is_fail(self) -> bool {
        self == Outcome::Fail
    }
}

/// Activation state of every failure mode; `true` is ACTIVE.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FaultState(Vec<bool>);

impl FaultState {
    pub fn zeros(len: usize) -> Self {
        FaultState(vec![false; len])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        FaultState(bits)
    }

    /// Builds a state of length `len` with the given indices active.
    pub fn from_active(len: usize, active: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = vec![false; len];
        for i in active {
            bits[i] = true;
        }
        FaultState(bits)
    }

    /// Low `len` bits of `mask`, bit `i` of the mask mapping to index `i`.
    pub fn from_mask(len: usize, mask: u64) -> Self {
        FaultState((0..len).map(|i| mask >> i & 1 == 1).collect())
    }

    pub fn to_mask(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        self.0
            .iter()
            .enumerate()
            .fold(0, |m, (i, &b)| if b { m | 1 << i } else { m })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn cardinality(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&b| b)
    }

    /// Bits at the given indices, in order.
    pub fn project(&self, indices: &[usize]) -> Vec<bool> {
        indices.iter().map(|&i| self.0[i]).collect()
    }

    pub fn concat(parts: &[FaultState]) -> Self {
        FaultState(parts.iter().flat_map(|p| p.0.iter().copied()).collect())
    }

    pub fn check_len(&self, expected: usize) -> Result<()> {
        check_len(expected, self.0.len())
    }
}

impl fmt::Debug for FaultState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", *b as u8)?;
        }
        write!(f, ")")
    }
}

/// Outcomes of all diagnostic tests at one instant.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Syndrome(Vec<Outcome>);

impl Syndrome {
    pub fn all_pass(len: usize) -> Self {
        Syndrome(vec![Outcome::Pass; len])
    }

    pub fn from_outcomes(outcomes: Vec<Outcome>) -> Self {
        Syndrome(outcomes)
    }

    /// `true` bits are FAIL.
    pub fn from_bits(bits: &[bool]) -> Self {
        Syndrome(bits.iter().map(|&b| Outcome::from_bit(b)).collect())
    }

    pub fn from_mask(len: usize, mask: u64) -> Self {
        Syndrome((0..len).map(|i| Outcome::from_bit(mask >> i & 1 == 1)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Outcome {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, outcome: Outcome) {
        self.0[i] = outcome;
    }

    pub fn failed(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_fail())
            .map(|(i, _)| i)
    }

    pub fn concat(parts: &[Syndrome]) -> Self {
        Syndrome(parts.iter().flat_map(|p| p.0.iter().copied()).collect())
    }

    pub fn check_len(&self, expected: usize) -> Result<()> {
        check_len(expected, self.0.len())
    }
}

impl fmt::Debug for Syndrome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, o) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", if o.is_fail() { "F" } else { "P" })?;
        }
        write!(f, "]")
    }
}

fn serialize_bits<S: Serializer>(bits: impl Iterator<Item = bool>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(bits.map(u8::from))
}

fn deserialize_bits<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
    let raw = Vec::<u8>::deserialize(d)?;
    raw.into_iter()
        .map(|b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(serde::de::Error::custom(format!("bit out of range: {other}"))),
        })
        .collect()
}

impl Serialize for FaultState {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_bits(self.0.iter().copied(), s)
    }
}

impl<'de> Deserialize<'de> for FaultState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        deserialize_bits(d).map(FaultState)
    }
}

impl Serialize for Syndrome {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_bits(self.0.iter().map(|o| o.is_fail()), s)
    }
}

impl<'de> Deserialize<'de> for Syndrome {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        deserialize_bits(d).map(|bits| Syndrome::from_bits(&bits))
    }
}
