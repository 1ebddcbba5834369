//! Extended-star hypertrees and observed infection patterns.
//!
//! Only overlap sizes are stored. Infection state lives on hyperedges, so
//! the identities of the individuals inside each hyperedge never matter:
//! arm `i` is the list `v_{i,1}, ..., v_{i,k_i}` where `v_{i,1}` is the
//! overlap between the hub and the first hyperedge of the arm and `v_{i,j}`
//! is the overlap between hyperedges `j - 1` and `j`.

mod generate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{Generator, OverlapMode};

/// One arm of the star: overlap sizes of successive hops, hub outward.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Arm {
    overlaps: Vec<u32>,
}

impl Arm {
    pub fn new(overlaps: Vec<u32>) -> Result<Self> {
        Self::checked(overlaps, 0)
    }

    fn checked(overlaps: Vec<u32>, arm: usize) -> Result<Self> {
        if overlaps.is_empty() {
            return Err(Error::EmptyArm { arm });
        }
        if let Some(hop) = overlaps.iter().position(|&v| v == 0) {
            return Err(Error::ZeroOverlap { arm, hop: hop + 1 });
        }
        Ok(Self { overlaps })
    }

    /// Arm of `len` hops with every overlap equal to 1.
    pub fn unit(len: usize) -> Self {
        assert!(len >= 1, "an arm has at least one hyperedge");
        Self { overlaps: vec![1; len] }
    }

    /// Number of hyperedges `k_i`.
    pub fn len(&self) -> usize {
        self.overlaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.overlaps.is_empty()
    }

    pub fn overlaps(&self) -> &[u32] {
        &self.overlaps
    }

    /// Overlap entering hyperedge `j` (1-based), i.e. `v_{i,j}`.
    pub fn overlap(&self, j: usize) -> u32 {
        self.overlaps[j - 1]
    }

    pub(crate) fn overlaps_mut(&mut self) -> &mut Vec<u32> {
        &mut self.overlaps
    }
}

/// Weighted arm length `w_i = sum_j 1/v_{i,j}`.
///
/// A hop whose overlap has `v` members crosses `v` times faster than a single
/// shared member, so it counts as `1/v` of an ordinary edge.
pub fn weighted_length(arm: &Arm) -> f64 {
    arm.overlaps.iter().map(|&v| 1.0 / f64::from(v)).sum()
}

/// Weighted distance from the hub to hyperedge `j` of the arm.
///
/// # Panics
///
/// If `j` is not in `1..=arm.len()`.
pub fn cumulative_position(arm: &Arm, j: usize) -> f64 {
    assert!(
        (1..=arm.len()).contains(&j),
        "position {j} outside arm of length {}",
        arm.len()
    );
    arm.overlaps[..j].iter().map(|&v| 1.0 / f64::from(v)).sum()
}

/// Hub hyperedge plus `m >= 2` arms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawStar")]
pub struct HypertreeStar {
    arms: Vec<Arm>,
}

/// An observed snapshot: the hub plus the infected prefix of each arm.
///
/// The infected region of a single-source SI process on an extended star is
/// itself an extended star, so a pattern is stored as one.
pub type InfectionPattern = HypertreeStar;

#[derive(Deserialize)]
struct RawStar {
    arms: Vec<Vec<u32>>,
}

impl TryFrom<RawStar> for HypertreeStar {
    type Error = Error;

    fn try_from(raw: RawStar) -> Result<Self> {
        Self::from_overlaps(raw.arms)
    }
}

impl HypertreeStar {
    pub fn new(arms: Vec<Arm>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::TooFewArms(arms.len()));
        }
        Ok(Self { arms })
    }

    pub fn from_overlaps(arms: Vec<Vec<u32>>) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::TooFewArms(arms.len()));
        }
        let arms = arms
            .into_iter()
            .enumerate()
            .map(|(i, overlaps)| Arm::checked(overlaps, i + 1))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { arms })
    }

    /// All overlaps 1, with the given hop counts.
    pub fn unit(hop_counts: &[usize]) -> Result<Self> {
        Self::from_overlaps(hop_counts.iter().map(|&k| vec![1; k]).collect())
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    /// Arm `i`, 1-based as in [`SourceEstimate`].
    pub fn arm(&self, i: usize) -> &Arm {
        &self.arms[i - 1]
    }

    pub fn arm_count(&self) -> usize {
        self.arms.len()
    }

    pub fn hop_counts(&self) -> Vec<usize> {
        self.arms.iter().map(Arm::len).collect()
    }

    pub fn weighted_lengths(&self) -> Vec<f64> {
        self.arms.iter().map(weighted_length).collect()
    }

    /// Hub plus every arm hyperedge.
    pub fn hyperedge_count(&self) -> usize {
        1 + self.arms.iter().map(Arm::len).sum::<usize>()
    }

    /// 1-based index of the arm with the largest weighted length; ties go to
    /// the lowest index.
    pub fn longest_arm(&self) -> usize {
        argmax_lowest(&self.weighted_lengths()) + 1
    }

    pub fn contains(&self, source: SourceEstimate) -> bool {
        match source.arm {
            0 => source.index == 0,
            a if a <= self.arms.len() => (1..=self.arms[a - 1].len()).contains(&source.index),
            _ => false,
        }
    }

    /// Every hyperedge as a candidate source: hub first, then each arm from
    /// the hub outward. The position in this list is the candidate ordinal.
    pub fn candidates(&self) -> Vec<SourceEstimate> {
        let mut out = Vec::with_capacity(self.hyperedge_count());
        out.push(SourceEstimate::HUB);
        for (i, arm) in self.arms.iter().enumerate() {
            out.extend((1..=arm.len()).map(|j| SourceEstimate::on_arm(i + 1, j)));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pattern serialization cannot fail")
    }

    pub(crate) fn arms_mut(&mut self) -> &mut Vec<Arm> {
        &mut self.arms
    }
}

/// Index of the maximum, preferring the lowest index among values within
/// [`crate::TIE_EPS`] of it.
pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .position(|&w| w >= max - crate::TIE_EPS)
        .expect("argmax of an empty slice")
}

/// A hyperedge: `arm = 0` is the hub (then `index = 0`), otherwise
/// `E_{arm,index}` with both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceEstimate {
    pub arm: usize,
    pub index: usize,
}

impl SourceEstimate {
    pub const HUB: Self = Self { arm: 0, index: 0 };

    pub fn on_arm(arm: usize, index: usize) -> Self {
        assert!(arm >= 1 && index >= 1, "arm hyperedges are 1-based");
        Self { arm, index }
    }

    pub fn is_hub(&self) -> bool {
        self.arm == 0
    }
}

impl fmt::Display for SourceEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_hub() {
            write!(f, "hub")
        } else {
            write!(f, "{}:{}", self.arm, self.index)
        }
    }
}

impl std::str::FromStr for SourceEstimate {
    type Err = Error;

    /// Accepts `hub`, `0`, or `ARM:INDEX`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("hub") || s == "0" || s == "0:0" {
            return Ok(Self::HUB);
        }
        let bad = || Error::InvalidParameter(format!("source must be `hub` or ARM:INDEX, got `{s}`"));
        let (arm, index) = s.split_once(':').ok_or_else(bad)?;
        let arm: usize = arm.parse().map_err(|_| bad())?;
        let index: usize = index.parse().map_err(|_| bad())?;
        if arm == 0 || index == 0 {
            return Err(bad());
        }
        Ok(Self { arm, index })
    }
}
