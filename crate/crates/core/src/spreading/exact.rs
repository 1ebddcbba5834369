//! Exact likelihoods by summing over infection orderings.
//!
//! The probability of one ordering is the product, over its steps, of the
//! chosen hop's rate divided by the total frontier rate at that step; hops
//! leaving the target region count in every denominator but are never taken.
//! Orderings sharing a prefix are summed once through memoization on the
//! infected region, which keeps the sum exact while avoiding the factorial
//! blow-up of listing orderings one by one.

use std::collections::HashMap;

use super::{ExitRule, Region};
use crate::error::{Error, Result};
use crate::hypertree::{HypertreeStar, InfectionPattern, SourceEstimate};

/// Largest region, in hyperedges, the enumeration accepts.
pub const ENUMERATION_LIMIT: usize = 14;

/// Probability that spreading from `source` on `structure` passes through
/// exactly `target` when `target.size()` hyperedges are infected.
pub fn region_probability(structure: &HypertreeStar, source: SourceEstimate, target: &Region) -> Result<f64> {
    let size = target.size();
    if size > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge { size, limit: ENUMERATION_LIMIT });
    }
    if !target.fits(structure) {
        return Err(Error::RegionMismatch);
    }
    let start = Region::seed(structure, source)?;
    if !target.contains(source) {
        return Ok(0.0);
    }
    let mut memo = HashMap::new();
    Ok(reach(structure, target, start, &mut memo))
}

fn reach(structure: &HypertreeStar, target: &Region, state: Region, memo: &mut HashMap<Region, f64>) -> f64 {
    if state == *target {
        return 1.0;
    }
    if let Some(&p) = memo.get(&state) {
        return p;
    }
    let frontier = state.frontier(structure);
    let total: f64 = frontier.iter().map(|&(_, r)| r).sum();
    let mut p = 0.0;
    for &(step, rate) in &frontier {
        if target.contains(state.target(step)) {
            let mut next = state.clone();
            next.apply(step);
            p += rate / total * reach(structure, target, next, memo);
        }
    }
    memo.insert(state, p);
    p
}

/// `P(pattern | source = candidate)` with the unobserved continuation of
/// each arm given by `exit`.
pub fn exact_pattern_likelihood(pattern: &InfectionPattern, candidate: SourceEstimate, exit: ExitRule) -> Result<f64> {
    region_probability(&exit.extend(pattern), candidate, &Region::full(pattern))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spreading::Span;

    #[test]
    fn forced_outcome_when_structure_is_the_pattern() {
        let s = HypertreeStar::unit(&[1, 1]).unwrap();
        let p = region_probability(&s, SourceEstimate::HUB, &Region::full(&s)).unwrap();
        assert_eq!(p, 1.0);
    }

    // Hand enumeration: hub source, unit arms, each arm continues past the
    // pattern so the frontier from the hub always has two unit hops.
    // Pattern: arm 1 has 2 infected, arm 2 has 1. Orderings of the three
    // steps {a, a, b}: aab, aba, baa, each with probability (1/2)^3.
    #[test]
    fn hand_enumerated_two_one_pattern() {
        let s = HypertreeStar::unit(&[4, 4]).unwrap();
        let target = Region { hub: true, spans: vec![Span::prefix(2), Span::prefix(1)] };
        let p = region_probability(&s, SourceEstimate::HUB, &target).unwrap();
        assert!((p - 3.0 / 8.0).abs() < 1e-15, "{p}");

        // From E_{1,1}: the frontier is {outward on arm 1, hub}, both rate 1.
        // Needed: E_{1,2} and the hub, then E_{2,1}. Orderings:
        //   out, hub, b : (1/2)(1/2)(1/2)       frontiers 2, 2, 2
        //   hub, out, b : (1/2)(1/2)(1/2)       frontiers 2, 2, 2
        //   hub, b, out : (1/2)(1/2)(1/2)
        let p = region_probability(&s, SourceEstimate::on_arm(1, 1), &target).unwrap();
        assert!((p - 3.0 / 8.0).abs() < 1e-15, "{p}");
    }

    #[test]
    fn rates_weight_the_orderings() {
        // Hub source, arms [1] and [3] (each continuing with the same overlap);
        // N = 2: arm 2 wins first with probability 3/4.
        let s = HypertreeStar::from_overlaps(vec![vec![1, 1], vec![3, 3]]).unwrap();
        let target = Region { hub: true, spans: vec![Span::EMPTY, Span::prefix(1)] };
        let p = region_probability(&s, SourceEstimate::HUB, &target).unwrap();
        assert!((p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn mirror_candidates_have_equal_likelihood() {
        let p = HypertreeStar::from_overlaps(vec![vec![2, 1, 3], vec![2, 1, 3]]).unwrap();
        for j in 1..=3 {
            let a = exact_pattern_likelihood(&p, SourceEstimate::on_arm(1, j), ExitRule::LastOverlap).unwrap();
            let b = exact_pattern_likelihood(&p, SourceEstimate::on_arm(2, j), ExitRule::LastOverlap).unwrap();
            assert!((a - b).abs() <= 1e-15 * a.max(b));
        }
    }

    #[test]
    fn guard_and_mismatch() {
        let p = HypertreeStar::unit(&[7, 7]).unwrap();
        assert_eq!(
            exact_pattern_likelihood(&p, SourceEstimate::HUB, ExitRule::Unit),
            Err(Error::EnumerationTooLarge { size: 15, limit: ENUMERATION_LIMIT })
        );
        let s = HypertreeStar::unit(&[1, 1]).unwrap();
        let too_long = Region { hub: true, spans: vec![Span::prefix(2), Span::EMPTY] };
        assert_eq!(region_probability(&s, SourceEstimate::HUB, &too_long), Err(Error::RegionMismatch));
    }

    #[test]
    fn unreachable_target_has_zero_probability() {
        let s = HypertreeStar::unit(&[3, 3]).unwrap();
        let t = Region { hub: false, spans: vec![Span { lo: 2, hi: 3 }, Span::EMPTY] };
        assert_eq!(region_probability(&s, SourceEstimate::HUB, &t).unwrap(), 0.0);
    }
}
