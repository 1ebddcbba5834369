//! Likelihood of an observed pattern by integrating over time.
//!
//! Let `R` be the total rate of the hops leaving the pattern (one per arm,
//! from the [`ExitRule`]). Every ordering that ends in the pattern leaves it
//! through one of those hops, and the time spent in the pattern state is
//! exponential with rate `R`. Hence
//!
//! ```text
//! P(pattern | source) = R * integral_0^inf P(X(t) = pattern | source) dt.
//! ```
//!
//! On a star the right-hand side factorises. From the hub, each arm grows
//! independently, so `P(X(t) = pattern)` is the product over arms of
//! `q_i(t)`, the probability that arm `i` is exactly full at time `t`.
//! From `E_{a,l}` the outward part of arm `a` grows on its own, while every
//! other arm starts once the inward path reaches the hub after a sum of
//! exponential hops `D_l`:
//!
//! ```text
//! P(X(t) = pattern) = out_{a,l}(t) * E[ prod_{i != a} q_i(t - D_l) ].
//! ```
//!
//! Both factors obey one-step recursions. Prepending a hop of rate `v` to a
//! chain maps `f` to `g = v e^{-vt} * f` (convolution), i.e. `g' = v (f - g)`,
//! so `out_{a,l}` is built from `out_{a,l+1}` and the delayed product for `l`
//! from the one for `l - 1`. Each recursion step costs one pass over a time
//! grid, giving every candidate's likelihood in `O(N * grid)` total.
//!
//! The grid recursion and the trapezoid rule are both second order with a
//! smooth error expansion, so the result is evaluated at steps `h` and `h/2`
//! and Richardson-extrapolated to fourth order.

use serde::{Deserialize, Serialize};

use super::ExitRule;
use crate::hypertree::{InfectionPattern, SourceEstimate};

/// Grid controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransientOptions {
    /// Grid step times the largest rate in the pattern.
    pub step_scale: f64,
    /// Relative likelihood gap below which candidates count as tied.
    pub tie_rtol: f64,
}

impl Default for TransientOptions {
    fn default() -> Self {
        Self { step_scale: 0.05, tie_rtol: 1e-6 }
    }
}

/// Likelihood of `pattern` under every candidate source, in
/// [`crate::HypertreeStar::candidates`] order.
pub fn pattern_likelihoods(pattern: &InfectionPattern, exit: ExitRule, opts: TransientOptions) -> Vec<f64> {
    let arms: Vec<Vec<f64>> = pattern
        .arms()
        .iter()
        .map(|a| a.overlaps().iter().map(|&v| f64::from(v)).collect())
        .collect();
    let exits: Vec<f64> = pattern.arms().iter().map(|a| f64::from(exit.overlap(a))).collect();
    let coarse = Grid::for_pattern(&arms, &exits, opts.step_scale);
    let fine = coarse.halved();
    let rough = likelihoods_on(&coarse, &arms, &exits);
    likelihoods_on(&fine, &arms, &exits)
        .into_iter()
        .zip(rough)
        .map(|(f, c)| ((4.0 * f - c) / 3.0).max(0.0))
        .collect()
}

fn likelihoods_on(grid: &Grid, arms: &[Vec<f64>], exits: &[f64]) -> Vec<f64> {
    let total_exit: f64 = exits.iter().sum();

    // out[i][l]: arm i, growing outward from hyperedge l (0 = hub), is
    // exactly full at time t
    let out: Vec<Vec<Vec<f64>>> = arms
        .iter()
        .zip(exits)
        .map(|(rates, &exit)| {
            let mut chain = vec![Vec::new(); rates.len() + 1];
            chain[rates.len()] = grid.times().map(|t| (-exit * t).exp()).collect();
            for l in (0..rates.len()).rev() {
                chain[l] = grid.prepend_hop(rates[l], &chain[l + 1]);
            }
            chain
        })
        .collect();

    let mut likelihoods = Vec::with_capacity(1 + arms.iter().map(Vec::len).sum::<usize>());
    let full: Vec<&[f64]> = out.iter().map(|c| c[0].as_slice()).collect();
    likelihoods.push(total_exit * grid.integrate(&product(&full, None)));

    for (a, rates) in arms.iter().enumerate() {
        // delayed: the other arms' product, shifted by the inward path from
        // hyperedge l to the hub
        let mut delayed = product(&full, Some(a));
        for l in 1..=rates.len() {
            delayed = grid.prepend_hop(rates[l - 1], &delayed);
            let integrand: Vec<f64> = out[a][l].iter().zip(&delayed).map(|(x, y)| x * y).collect();
            likelihoods.push(total_exit * grid.integrate(&integrand));
        }
    }
    likelihoods
}

fn product(factors: &[&[f64]], skip: Option<usize>) -> Vec<f64> {
    let len = factors[0].len();
    let mut acc = vec![1.0; len];
    for (i, f) in factors.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        for (a, &x) in acc.iter_mut().zip(f.iter()) {
            *a *= x;
        }
    }
    acc
}

struct Grid {
    step: f64,
    points: usize,
}

impl Grid {
    fn for_pattern(arms: &[Vec<f64>], exits: &[f64], step_scale: f64) -> Self {
        let max_rate = arms.iter().flatten().chain(exits).copied().fold(0.0, f64::max);
        let total_exit: f64 = exits.iter().sum();
        // mean and variance of each arm's traversal time
        let mut stats: Vec<(f64, f64)> = arms
            .iter()
            .map(|r| (r.iter().map(|v| 1.0 / v).sum(), r.iter().map(|v| 1.0 / (v * v)).sum()))
            .collect();
        stats.sort_by(|x, y| y.0.total_cmp(&x.0));
        // the slowest source-to-leaf path runs from one arm's end to another's
        let (mean, var) = stats.iter().take(2).fold((0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
        let horizon = mean + 12.0 * var.sqrt() + 40.0 / total_exit + 2.0;
        let step = step_scale / max_rate;
        Self { step, points: (horizon / step).ceil() as usize + 1 }
    }

    fn halved(&self) -> Self {
        Self { step: self.step / 2.0, points: 2 * self.points - 1 }
    }

    fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(move |n| n as f64 * self.step)
    }

    /// `g(t) = int_0^t v e^{-vs} f(t - s) ds`, exact for piecewise-linear `f`.
    fn prepend_hop(&self, rate: f64, f: &[f64]) -> Vec<f64> {
        let x = rate * self.step;
        let decay = (-x).exp();
        let gain = -(-x).exp_m1();
        let late = 1.0 - gain / x;
        let early = gain - late;
        let mut g = Vec::with_capacity(f.len());
        let mut y = 0.0;
        g.push(y);
        for w in f.windows(2) {
            y = decay * y + early * w[0] + late * w[1];
            if y < 1e-280 {
                y = 0.0;
            }
            g.push(y);
        }
        g
    }

    /// Trapezoid rule.
    fn integrate(&self, f: &[f64]) -> f64 {
        let inner: f64 = f[1..f.len() - 1].iter().sum();
        self.step * (inner + 0.5 * (f[0] + f[f.len() - 1]))
    }
}

/// Likelihood-maximising source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodMle {
    pub estimate: SourceEstimate,
    pub candidates: Vec<SourceEstimate>,
    pub likelihoods: Vec<f64>,
}

/// Maximum likelihood source from [`pattern_likelihoods`]. Candidates within
/// `opts.tie_rtol` of the maximum are tied; ties go to the hub, then the
/// lowest arm, then the lowest index.
pub fn time_domain_mle(pattern: &InfectionPattern, exit: ExitRule, opts: TransientOptions) -> LikelihoodMle {
    let likelihoods = pattern_likelihoods(pattern, exit, opts);
    let candidates = pattern.candidates();
    let best = likelihoods.iter().copied().fold(0.0, f64::max);
    let winner = likelihoods.iter().position(|&l| l >= best * (1.0 - opts.tie_rtol)).unwrap_or(0);
    LikelihoodMle { estimate: candidates[winner], candidates, likelihoods }
}
