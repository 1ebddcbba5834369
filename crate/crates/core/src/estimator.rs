//! Closed-form source estimators.
//!
//! On an extended star the likelihood-maximising source sits on the longest
//! arm, roughly half the excess of that arm over the average of the others
//! away from the hub:
//!
//! ```text
//! ell = (k_1 - (k_2 + ... + k_m) / (m - 1)) / 2
//! ```
//!
//! On a hypertree the hop counts become weighted lengths `w_i` (a hop with
//! overlap `v` counts `1/v`), and the target is a weighted position along the
//! weighted-longest arm. A small offset can be added to the longest arm's
//! length before applying the formula.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypertree::{argmax_lowest, Arm, InfectionPattern, SourceEstimate};
use crate::TIE_EPS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormResult {
    /// 1-based index of the (weighted-)longest arm.
    pub longest_arm: usize,
    /// Target position along the longest arm, in weighted hops from the hub.
    pub ell: f64,
    pub estimate: SourceEstimate,
}

/// Estimator for an ordinary extended star, from hop counts alone.
///
/// Arms of length 0 are allowed and count toward the average. Rounding is
/// to the nearest node with exact halves going toward the hub, and `ell` at
/// or below one half selects the hub.
pub fn graph_estimate(hop_counts: &[usize]) -> Result<ClosedFormResult> {
    let m = hop_counts.len();
    if m < 2 {
        return Err(Error::TooFewArms(m));
    }
    let (longest, &k1) = hop_counts
        .iter()
        .enumerate()
        .rev()
        .max_by_key(|&(_, k)| k)
        .expect("at least two arms");
    let rest: usize = hop_counts.iter().sum::<usize>() - k1;
    let ell = (k1 as f64 - rest as f64 / (m - 1) as f64) / 2.0;

    // ell = num / den exactly; round half down in integers.
    let num = ((m - 1) * k1) as i64 - rest as i64;
    let den = 2 * (m - 1) as i64;
    let shifted = 2 * num - den;
    let rounded = -((-shifted).div_euclid(2 * den));
    let index = rounded.clamp(0, k1 as i64) as usize;
    let estimate = if index == 0 { SourceEstimate::HUB } else { SourceEstimate::on_arm(longest + 1, index) };
    Ok(ClosedFormResult { longest_arm: longest + 1, ell, estimate })
}

/// Weighted estimator for an extended-star hypertree.
///
/// The longest arm is chosen by weighted length (ties to the lowest index),
/// `offset` is added to that arm's length only, and the resulting `ell` is
/// mapped to a hyperedge by [`position_snap`].
pub fn hyper_estimate(pattern: &InfectionPattern, offset: f64) -> Result<ClosedFormResult> {
    if !(offset >= 0.0 && offset.is_finite()) {
        return Err(Error::InvalidParameter(format!("offset must be finite and nonnegative, got {offset}")));
    }
    let m = pattern.arm_count();
    if m < 2 {
        return Err(Error::TooFewArms(m));
    }
    let w = pattern.weighted_lengths();
    let longest = argmax_lowest(&w);
    let rest: f64 = w.iter().enumerate().filter(|&(i, _)| i != longest).map(|(_, x)| x).sum();
    let ell = (w[longest] + offset - rest / (m - 1) as f64) / 2.0;
    let estimate = position_snap(&pattern.arms()[longest], longest + 1, ell);
    Ok(ClosedFormResult { longest_arm: longest + 1, ell, estimate })
}

/// Hyperedge of arm number `arm_number` whose weighted position is nearest
/// to `ell`, with the hub at position 0.
///
/// Exact ties resolve toward the hub and positions past the arm's end clamp
/// to its last hyperedge.
pub fn position_snap(arm: &Arm, arm_number: usize, ell: f64) -> SourceEstimate {
    let mut best = 0;
    let mut best_dist = ell.abs();
    let mut position = 0.0;
    for (j, &v) in arm.overlaps().iter().enumerate() {
        position += 1.0 / f64::from(v);
        let dist = (position - ell).abs();
        if dist < best_dist - TIE_EPS {
            best = j + 1;
            best_dist = dist;
        } else if position > ell {
            break;
        }
    }
    if best == 0 || ell <= 0.0 {
        SourceEstimate::HUB
    } else {
        SourceEstimate::on_arm(arm_number, best)
    }
}
