//! Continuous-time SI dynamics on an extended-star hypertree.
//!
//! Every hyperedge is either susceptible or infected. A susceptible
//! hyperedge sharing `v` members with an infected one becomes infected after
//! an exponential wait of rate `v` (mean `1/v`; the time unit is fixed to 1).
//! Only the order of infections matters for snapshot statistics: by
//! memorylessness the next infection is a frontier hop picked with
//! probability proportional to its rate.
//!
//! Three likelihood routes live here:
//!
//! - [`exact`]: sums over every infection ordering. Exact, small patterns.
//! - [`transient`]: integrates the probability of sitting in the observed
//!   state over time. Deterministic and linear in the pattern size.
//! - [`mc_mle`]: counts exact reproductions of the pattern in simulated runs.

pub mod exact;
pub mod transient;

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypertree::{Arm, HypertreeStar, InfectionPattern, SourceEstimate};
use crate::rng;

pub use exact::{exact_pattern_likelihood, region_probability, ENUMERATION_LIMIT};
pub use transient::{pattern_likelihoods, time_domain_mle, LikelihoodMle, TransientOptions};

/// Exponential rate of a hop through an overlap of `v` members.
///
/// # Panics
///
/// If `v == 0`.
pub fn transmission_rate(v: u32) -> f64 {
    assert!(v >= 1, "overlap sizes are at least 1");
    f64::from(v)
}

/// Infected hyperedges of one arm, `lo..=hi` (1-based). Empty when `hi < lo`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub lo: usize,
    pub hi: usize,
}

impl Span {
    pub const EMPTY: Span = Span { lo: 1, hi: 0 };

    pub fn prefix(len: usize) -> Self {
        Span { lo: 1, hi: len }
    }

    pub fn len(&self) -> usize {
        (self.hi + 1).saturating_sub(self.lo)
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn contains(&self, j: usize) -> bool {
        self.lo <= j && j <= self.hi
    }
}

/// A set of infected hyperedges: hub flag plus one span per arm.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    pub hub: bool,
    pub spans: Vec<Span>,
}

/// Where the next infection lands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Hub,
    /// Away from the hub along an arm (0-based arm index).
    Outward(usize),
    /// Toward the hub along the source arm.
    Inward(usize),
}

impl Region {
    /// Only `source` infected.
    pub fn seed(structure: &HypertreeStar, source: SourceEstimate) -> Result<Self> {
        if !structure.contains(source) {
            return Err(Error::SourceOutOfRange(source));
        }
        let mut spans = vec![Span::EMPTY; structure.arm_count()];
        if !source.is_hub() {
            spans[source.arm - 1] = Span { lo: source.index, hi: source.index };
        }
        Ok(Self { hub: source.is_hub(), spans })
    }

    /// The hub and every hyperedge of the pattern.
    pub fn full(pattern: &InfectionPattern) -> Self {
        Self { hub: true, spans: pattern.arms().iter().map(|a| Span::prefix(a.len())).collect() }
    }

    pub fn size(&self) -> usize {
        usize::from(self.hub) + self.spans.iter().map(Span::len).sum::<usize>()
    }

    pub fn contains(&self, e: SourceEstimate) -> bool {
        if e.is_hub() {
            self.hub
        } else {
            self.spans.get(e.arm - 1).is_some_and(|s| s.contains(e.index))
        }
    }

    /// Whether this region is exactly the full pattern (the hub plus every
    /// observed hyperedge and nothing else).
    pub fn reproduces(&self, hop_counts: &[usize]) -> bool {
        self.hub
            && self.spans.len() == hop_counts.len()
            && self.spans.iter().zip(hop_counts).all(|(s, &k)| s.lo == 1 && s.hi == k)
    }

    pub(crate) fn fits(&self, structure: &HypertreeStar) -> bool {
        self.spans.len() == structure.arm_count()
            && self
                .spans
                .iter()
                .zip(structure.arms())
                .all(|(s, a)| s.is_empty() || (s.lo >= 1 && s.hi <= a.len()))
    }

    /// Frontier hops with their rates.
    pub fn frontier(&self, structure: &HypertreeStar) -> Vec<(Step, f64)> {
        let mut out = Vec::with_capacity(self.spans.len() + 1);
        self.for_each_frontier(structure.arms(), |step, v| out.push((step, transmission_rate(v))));
        out
    }

    fn for_each_frontier(&self, arms: &[Arm], mut f: impl FnMut(Step, u32)) {
        for (i, (s, arm)) in self.spans.iter().zip(arms).enumerate() {
            if s.is_empty() {
                if self.hub {
                    f(Step::Outward(i), arm.overlap(1));
                }
                continue;
            }
            if s.hi < arm.len() {
                f(Step::Outward(i), arm.overlap(s.hi + 1));
            }
            if s.lo > 1 {
                f(Step::Inward(i), arm.overlap(s.lo));
            } else if !self.hub {
                f(Step::Hub, arm.overlap(1));
            }
        }
    }

    /// Hyperedge infected by `step`.
    pub fn target(&self, step: Step) -> SourceEstimate {
        match step {
            Step::Hub => SourceEstimate::HUB,
            Step::Outward(i) => SourceEstimate::on_arm(i + 1, self.spans[i].hi + 1),
            Step::Inward(i) => SourceEstimate::on_arm(i + 1, self.spans[i].lo - 1),
        }
    }

    pub fn apply(&mut self, step: Step) {
        match step {
            Step::Hub => self.hub = true,
            Step::Outward(i) => {
                let s = &mut self.spans[i];
                if s.is_empty() {
                    *s = Span { lo: 1, hi: 1 };
                } else {
                    s.hi += 1;
                }
            }
            Step::Inward(i) => self.spans[i].lo -= 1,
        }
    }

    /// The observed pattern this region would produce, when it includes the
    /// hub: the infected prefix of every arm that has one. Returns `None`
    /// when the hub is uninfected or fewer than two arms are reached.
    pub fn to_pattern(&self, structure: &HypertreeStar) -> Option<InfectionPattern> {
        if !self.hub {
            return None;
        }
        let arms: Vec<Vec<u32>> = self
            .spans
            .iter()
            .zip(structure.arms())
            .filter(|(s, _)| !s.is_empty())
            .map(|(s, a)| a.overlaps()[..s.hi].to_vec())
            .collect();
        HypertreeStar::from_overlaps(arms).ok()
    }
}

/// Runs the jump chain from `source` until `n_infected` hyperedges are
/// infected.
pub fn simulate_spread<R: Rng + ?Sized>(
    structure: &HypertreeStar,
    source: SourceEstimate,
    n_infected: usize,
    rng: &mut R,
) -> Result<Region> {
    if n_infected == 0 {
        return Err(Error::NothingInfected);
    }
    let available = structure.hyperedge_count();
    if n_infected > available {
        return Err(Error::TooManyInfected { requested: n_infected, available });
    }
    let mut region = Region::seed(structure, source)?;
    let mut frontier = Vec::with_capacity(structure.arm_count() + 1);
    for _ in 1..n_infected {
        frontier.clear();
        region.for_each_frontier(structure.arms(), |s, v| frontier.push((s, v)));
        let step = pick(&frontier, rng);
        region.apply(step);
    }
    Ok(region)
}

fn pick<R: Rng + ?Sized>(frontier: &[(Step, u32)], rng: &mut R) -> Step {
    let total: u32 = frontier.iter().map(|&(_, v)| v).sum();
    let mut u = rng.random_range(0..total);
    for &(step, v) in frontier {
        if u < v {
            return step;
        }
        u -= v;
    }
    unreachable!("draw below the total rate always lands on a hop")
}

/// Probability of one breakdown of `K = sum(counts)` equiprobable choices
/// among `counts.len()` options:
/// `K! / (k_1! ... k_n! * n^K)`, evaluated in log space.
pub fn breakdown_probability(counts: &[u64]) -> f64 {
    assert!(!counts.is_empty(), "need at least one choice");
    let k: u64 = counts.iter().sum();
    let log_p = ln_factorial(k) - counts.iter().map(|&c| ln_factorial(c)).sum::<f64>()
        - k as f64 * (counts.len() as f64).ln();
    log_p.exp()
}

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Rate of the unobserved hop beyond each arm's last infected hyperedge.
///
/// A snapshot shows where the infection has reached, not what lies past it,
/// yet the hop that would extend each arm competes with the observed hops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ExitRule {
    /// Repeat the arm's last observed overlap.
    LastOverlap,
    /// A single shared member, i.e. a plain edge at the base rate.
    #[default]
    Unit,
    /// A fixed overlap for every arm.
    Overlap(u32),
}

impl ExitRule {
    pub fn overlap(self, arm: &Arm) -> u32 {
        match self {
            ExitRule::LastOverlap => *arm.overlaps().last().expect("arms are nonempty"),
            ExitRule::Unit => 1,
            ExitRule::Overlap(v) => v.max(1),
        }
    }

    /// The pattern with one more hyperedge on every arm.
    pub fn extend(self, pattern: &InfectionPattern) -> HypertreeStar {
        let mut out = pattern.clone();
        for arm in out.arms_mut() {
            let v = self.overlap(arm);
            arm.overlaps_mut().push(v);
        }
        out
    }
}

impl fmt::Display for ExitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExitRule::LastOverlap => f.write_str("last-overlap"),
            ExitRule::Unit => f.write_str("unit"),
            ExitRule::Overlap(v) => write!(f, "overlap-{v}"),
        }
    }
}

impl std::str::FromStr for ExitRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "last-overlap" | "last" => Ok(ExitRule::LastOverlap),
            "unit" => Ok(ExitRule::Unit),
            _ => s
                .strip_prefix("overlap-")
                .and_then(|v| v.parse().ok())
                .filter(|&v| v >= 1)
                .map(ExitRule::Overlap)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown exit rule `{s}`"))),
        }
    }
}

/// Monte Carlo likelihood estimate for every candidate source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McMle {
    pub estimate: SourceEstimate,
    pub candidates: Vec<SourceEstimate>,
    /// Runs that reproduced the pattern, per candidate.
    pub matches: Vec<u64>,
    pub trials_per_candidate: u64,
}

impl McMle {
    pub fn match_fraction(&self, ordinal: usize) -> f64 {
        self.matches[ordinal] as f64 / self.trials_per_candidate as f64
    }
}

pub const DEFAULT_MC_TRIALS: u64 = 10_000;

/// Simulation-based maximum likelihood source.
///
/// For every candidate hyperedge, spreads from it on the pattern extended by
/// one hop per arm (see [`ExitRule`]) until the pattern's size is reached
/// and counts the runs that reproduce the pattern exactly. Candidate `c`
/// draws from stream `c` of `seed` (ordinals as in
/// [`HypertreeStar::candidates`]), so results do not depend on thread
/// scheduling. Ties go to the hub, then the lowest arm, then the lowest index.
pub fn mc_mle(pattern: &InfectionPattern, trials_per_candidate: u64, seed: u64, exit: ExitRule) -> Result<McMle> {
    if trials_per_candidate == 0 {
        return Err(Error::InvalidParameter("trials_per_candidate must be at least 1".into()));
    }
    let extended = exit.extend(pattern);
    let hop_counts = pattern.hop_counts();
    let n = pattern.hyperedge_count();
    let candidates = pattern.candidates();
    let matches: Vec<u64> = candidates
        .par_iter()
        .enumerate()
        .map(|(ordinal, &source)| {
            let mut rng = rng::stream(seed, ordinal as u64);
            (0..trials_per_candidate)
                .filter(|_| stays_within(&extended, &hop_counts, source, n, &mut rng))
                .count() as u64
        })
        .collect();
    let best = matches.iter().copied().max().unwrap_or(0);
    let winner = matches.iter().position(|&c| c == best).unwrap_or(0);
    Ok(McMle { estimate: candidates[winner], candidates, matches, trials_per_candidate })
}

/// One jump-chain run that aborts as soon as it leaves the pattern.
fn stays_within<R: Rng + ?Sized>(
    extended: &HypertreeStar,
    hop_counts: &[usize],
    source: SourceEstimate,
    n: usize,
    rng: &mut R,
) -> bool {
    let mut region = Region::seed(extended, source).expect("candidates lie in the pattern");
    let mut frontier = Vec::with_capacity(hop_counts.len() + 1);
    for _ in 1..n {
        frontier.clear();
        region.for_each_frontier(extended.arms(), |s, v| frontier.push((s, v)));
        let step = pick(&frontier, rng);
        if let Step::Outward(i) = step {
            if region.spans[i].hi == hop_counts[i] {
                return false;
            }
        }
        region.apply(step);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates() {
        assert_eq!(transmission_rate(1), 1.0);
        assert_eq!(transmission_rate(4), 4.0);
        let (a, b) = (transmission_rate(1), transmission_rate(3));
        assert_eq!(b / (a + b), 0.75);
    }

    #[test]
    fn breakdown_examples() {
        assert!((breakdown_probability(&[1, 1]) - 0.5).abs() < 1e-15);
        assert!((breakdown_probability(&[2, 0]) - 0.25).abs() < 1e-15);
        let mut total = 0.0;
        for a in 0..=4u64 {
            for b in 0..=4 - a {
                total += breakdown_probability(&[a, b, 4 - a - b]);
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_infection_is_the_source() {
        let s = HypertreeStar::unit(&[3, 3]).unwrap();
        let src = SourceEstimate::on_arm(2, 2);
        let r = simulate_spread(&s, src, 1, &mut rng::seeded(0)).unwrap();
        assert_eq!(r.size(), 1);
        assert!(r.contains(src));
    }

    #[test]
    fn spread_errors() {
        let s = HypertreeStar::unit(&[1, 1]).unwrap();
        let mut r = rng::seeded(0);
        assert_eq!(
            simulate_spread(&s, SourceEstimate::HUB, 4, &mut r),
            Err(Error::TooManyInfected { requested: 4, available: 3 })
        );
        assert_eq!(simulate_spread(&s, SourceEstimate::HUB, 0, &mut r), Err(Error::NothingInfected));
        assert!(matches!(
            simulate_spread(&s, SourceEstimate::on_arm(3, 1), 1, &mut r),
            Err(Error::SourceOutOfRange(_))
        ));
    }

    #[test]
    fn full_structure_fill_reproduces_everything() {
        let s = HypertreeStar::from_overlaps(vec![vec![1, 2], vec![3], vec![1, 1, 1]]).unwrap();
        for src in s.candidates() {
            let r = simulate_spread(&s, src, s.hyperedge_count(), &mut rng::seeded(5)).unwrap();
            assert!(r.reproduces(&s.hop_counts()));
            assert_eq!(r.to_pattern(&s).unwrap(), s);
        }
    }

    #[test]
    fn exit_rules() {
        let p = HypertreeStar::from_overlaps(vec![vec![1, 4], vec![3]]).unwrap();
        assert_eq!(ExitRule::LastOverlap.extend(&p).arm(1).overlaps(), &[1, 4, 4]);
        assert_eq!(ExitRule::Unit.extend(&p).arm(2).overlaps(), &[3, 1]);
        assert_eq!("overlap-2".parse::<ExitRule>().unwrap(), ExitRule::Overlap(2));
        assert_eq!(ExitRule::LastOverlap.to_string().parse::<ExitRule>().unwrap(), ExitRule::LastOverlap);
    }

    #[test]
    fn mc_mle_is_seed_deterministic() {
        let p = HypertreeStar::unit(&[4, 1, 1]).unwrap();
        let a = mc_mle(&p, 500, 11, ExitRule::Unit).unwrap();
        let b = mc_mle(&p, 500, 11, ExitRule::Unit).unwrap();
        assert_eq!(a, b);
        assert!(mc_mle(&p, 0, 11, ExitRule::Unit).is_err());
    }
}
