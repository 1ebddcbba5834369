//! Random infection patterns.
//!
//! Three ensembles of increasing realism. All ranges are inclusive and every
//! draw is uniform.
//!
//! - unconstrained: 2..=6 arms, each 1..=50 hyperedges long.
//! - constrained: one randomly placed arm of 31..=50 hyperedges, the others
//!   11..=30.
//! - typical: one arm of 31..=50, the others 21..=30; then every arm other
//!   than the weighted-shortest and weighted-longest is cut back just past
//!   the shortest weighted length, so the non-longest arms look like a
//!   typical growth pattern.
//!
//! Overlaps are drawn from 1..=6 in [`OverlapMode::Multiple`] and fixed at 1
//! in [`OverlapMode::Single`].

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{weighted_length, Arm, HypertreeStar, InfectionPattern};
use crate::error::Error;

pub const ARM_COUNT: RangeInclusive<usize> = 2..=6;
pub const OVERLAP: RangeInclusive<u32> = 1..=6;
const UNCONSTRAINED_LEN: RangeInclusive<usize> = 1..=50;
const LONG_LEN: RangeInclusive<usize> = 31..=50;
const CONSTRAINED_SHORT_LEN: RangeInclusive<usize> = 11..=30;
const TYPICAL_SHORT_LEN: RangeInclusive<usize> = 21..=30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMode {
    Single,
    Multiple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Unconstrained,
    Constrained,
    Typical,
}

impl OverlapMode {
    pub const ALL: [OverlapMode; 2] = [OverlapMode::Single, OverlapMode::Multiple];

    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> u32 {
        match self {
            OverlapMode::Single => 1,
            OverlapMode::Multiple => rng.random_range(OVERLAP),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OverlapMode::Single => "single",
            OverlapMode::Multiple => "multiple",
        }
    }
}

impl Generator {
    pub const ALL: [Generator; 3] = [Generator::Unconstrained, Generator::Constrained, Generator::Typical];

    /// Draws the arm count from 2..=6, then the pattern.
    pub fn generate<R: Rng + ?Sized>(self, rng: &mut R, mode: OverlapMode) -> InfectionPattern {
        let m = rng.random_range(ARM_COUNT);
        self.generate_with_arms(rng, mode, m)
    }

    /// Same ensemble with the arm count fixed to `m` (at least 2).
    pub fn generate_with_arms<R: Rng + ?Sized>(
        self,
        rng: &mut R,
        mode: OverlapMode,
        m: usize,
    ) -> InfectionPattern {
        assert!(m >= 2, "an extended star needs at least two arms");
        let hop_counts: Vec<usize> = match self {
            Generator::Unconstrained => (0..m).map(|_| rng.random_range(UNCONSTRAINED_LEN)).collect(),
            Generator::Constrained => one_long_arm(rng, m, CONSTRAINED_SHORT_LEN),
            Generator::Typical => one_long_arm(rng, m, TYPICAL_SHORT_LEN),
        };
        let arms = hop_counts
            .into_iter()
            .map(|k| Arm { overlaps: (0..k).map(|_| mode.draw(rng)).collect() })
            .collect();
        let mut star = HypertreeStar { arms };
        if self == Generator::Typical {
            truncate_to_typical(&mut star);
        }
        star
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Generator::Unconstrained => "unconstrained",
            Generator::Constrained => "constrained",
            Generator::Typical => "typical",
        }
    }
}

fn one_long_arm<R: Rng + ?Sized>(rng: &mut R, m: usize, short: RangeInclusive<usize>) -> Vec<usize> {
    let long = rng.random_range(0..m);
    (0..m)
        .map(|i| {
            if i == long {
                rng.random_range(LONG_LEN)
            } else {
                rng.random_range(short.clone())
            }
        })
        .collect()
}

/// Cuts every arm except the (lowest-indexed) weighted-shortest and
/// weighted-longest immediately after the first hyperedge whose running
/// weighted length strictly exceeds the shortest weighted length.
pub(crate) fn truncate_to_typical(star: &mut HypertreeStar) {
    let w = star.weighted_lengths();
    let w_min = w.iter().copied().fold(f64::INFINITY, f64::min);
    let w_max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_arm = w.iter().position(|&x| x <= w_min + crate::TIE_EPS).unwrap();
    let max_arm = w.iter().position(|&x| x >= w_max - crate::TIE_EPS).unwrap();
    for (i, arm) in star.arms.iter_mut().enumerate() {
        if i == min_arm || i == max_arm {
            continue;
        }
        let mut running = 0.0;
        let cut = arm.overlaps.iter().position(|&v| {
            running += 1.0 / f64::from(v);
            running > w_min + crate::TIE_EPS
        });
        if let Some(j) = cut {
            arm.overlaps.truncate(j + 1);
        }
    }
    debug_assert!(star.arms.iter().all(|a| weighted_length(a) > 0.0));
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for OverlapMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "unconstrained" => Ok(Generator::Unconstrained),
            "constrained" => Ok(Generator::Constrained),
            "typical" => Ok(Generator::Typical),
            _ => Err(Error::InvalidParameter(format!("unknown generator `{s}`"))),
        }
    }
}

impl FromStr for OverlapMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(OverlapMode::Single),
            "multiple" => Ok(OverlapMode::Multiple),
            _ => Err(Error::InvalidParameter(format!("unknown overlap mode `{s}`"))),
        }
    }
}
