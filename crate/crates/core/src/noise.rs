//! Observation noise: arms or hyperedges missing from the reported pattern.
//!
//! Four kinds, split by whether the damage hits the weighted-longest arm
//! (the one the estimator places the source on) or another arm:
//!
//! | kind                      | expected effect on the estimate           |
//! |---------------------------|-------------------------------------------|
//! | missing arm, non-longest  | zero-mean jitter, shrinking with `m`      |
//! | missing step, non-longest | small outward move, order `1/m`           |
//! | missing arm, longest      | source arm lost entirely                  |
//! | missing step, longest     | inward move of half the hop weight        |
//!
//! A missing step deletes one hyperedge and splices its neighbours: the arm
//! loses the overlap entering that hyperedge and the later overlaps close
//! ranks.

use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::hyper_estimate;
use crate::hypertree::{Generator, InfectionPattern, OverlapMode};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    MissingArmNonlongest,
    MissingArmLongest,
    MissingStepNonlongest,
    MissingStepLongest,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [
        NoiseKind::MissingArmNonlongest,
        NoiseKind::MissingArmLongest,
        NoiseKind::MissingStepNonlongest,
        NoiseKind::MissingStepLongest,
    ];

    fn removes_arm(self) -> bool {
        matches!(self, NoiseKind::MissingArmNonlongest | NoiseKind::MissingArmLongest)
    }

    fn hits_longest(self) -> bool {
        matches!(self, NoiseKind::MissingArmLongest | NoiseKind::MissingStepLongest)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseKind::MissingArmNonlongest => "missing_arm_nonlongest",
            NoiseKind::MissingArmLongest => "missing_arm_longest",
            NoiseKind::MissingStepNonlongest => "missing_step_nonlongest",
            NoiseKind::MissingStepLongest => "missing_step_longest",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown noise kind `{s}`")))
    }
}

/// What to remove. Unset targets are drawn uniformly from the admissible
/// arms (and hyperedges).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// 1-based arm.
    pub arm: Option<usize>,
    /// 1-based hyperedge within the arm (step kinds only).
    pub step: Option<usize>,
}

impl NoiseSpec {
    pub fn random(kind: NoiseKind) -> Self {
        Self { kind, arm: None, step: None }
    }
}

/// A perturbed pattern and what was removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseOutcome {
    pub pattern: InfectionPattern,
    /// Arm that lost a hyperedge, or was deleted (1-based, original numbering).
    pub arm: usize,
    /// Removed hyperedge index and the overlap entering it, for step kinds.
    pub step: Option<(usize, u32)>,
}

impl NoiseOutcome {
    /// Original number of arm `a` of the perturbed pattern.
    pub fn original_arm(&self, a: usize) -> usize {
        if self.step.is_none() && a >= self.arm {
            a + 1
        } else {
            a
        }
    }
}

pub fn apply_noise<R: Rng + ?Sized>(pattern: &InfectionPattern, spec: NoiseSpec, rng: &mut R) -> Result<InfectionPattern> {
    apply_noise_traced(pattern, spec, rng).map(|o| o.pattern)
}

pub fn apply_noise_traced<R: Rng + ?Sized>(
    pattern: &InfectionPattern,
    spec: NoiseSpec,
    rng: &mut R,
) -> Result<NoiseOutcome> {
    let m = pattern.arm_count();
    let longest = pattern.longest_arm();
    let inadmissible = |why: String| Err(Error::InadmissibleNoise(why));
    if spec.kind.removes_arm() && m < 3 {
        return inadmissible(format!("removing an arm needs at least 3 arms, pattern has {m}"));
    }
    let min_len = if spec.kind.removes_arm() { 1 } else { 2 };
    let eligible: Vec<usize> = (1..=m)
        .filter(|&a| (a == longest) == spec.kind.hits_longest())
        .filter(|&a| pattern.arm(a).len() >= min_len)
        .collect();
    let arm = match spec.arm {
        Some(a) if eligible.contains(&a) => a,
        Some(a) => return inadmissible(format!("arm {a} is not a valid target for {}", spec.kind)),
        None => match eligible.choose(rng) {
            Some(&a) => a,
            None => return inadmissible(format!("no arm of the pattern admits {}", spec.kind)),
        },
    };

    let mut noisy = pattern.clone();
    if spec.kind.removes_arm() {
        noisy.arms_mut().remove(arm - 1);
        return Ok(NoiseOutcome { pattern: noisy, arm, step: None });
    }
    let k = pattern.arm(arm).len();
    let step = match spec.step {
        Some(j) if (1..=k).contains(&j) => j,
        Some(j) => return inadmissible(format!("arm {arm} has no hyperedge {j}")),
        None => rng.random_range(1..=k),
    };
    let removed = noisy.arms_mut()[arm - 1].overlaps_mut().remove(step - 1);
    Ok(NoiseOutcome { pattern: noisy, arm, step: Some((step, removed)) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityConfig {
    pub generator: Generator,
    pub mode: OverlapMode,
    /// Fixed arm count; drawn per pattern when `None`.
    pub arm_count: Option<usize>,
    pub offset: f64,
    pub trials: usize,
    pub seed: u64,
    pub kinds: Vec<NoiseKind>,
}

impl SensitivityConfig {
    pub fn new(generator: Generator, mode: OverlapMode) -> Self {
        Self {
            generator,
            mode,
            arm_count: None,
            offset: 0.0,
            trials: 1000,
            seed: crate::experiments::DEFAULT_SEED,
            kinds: NoiseKind::ALL.to_vec(),
        }
    }
}

/// Estimate shifts for one noise kind.
///
/// `shift` is `ell` after minus `ell` before, in weighted hops along the
/// longest arm, taken over trials where the longest arm kept its identity;
/// positive is outward. Trials where another arm became the longest are
/// counted as arm changes instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindStats {
    pub kind: NoiseKind,
    pub arm_count: Option<usize>,
    pub trials: u64,
    /// Trials where the noise could not be applied (e.g. too few arms).
    pub skipped: u64,
    pub arm_changes: u64,
    pub arm_change_rate: f64,
    pub shifted: u64,
    pub mean_shift: f64,
    pub std_shift: f64,
    pub mean_abs_shift: f64,
    pub seed: u64,
}

impl KindStats {
    pub fn direction(&self) -> &'static str {
        if self.shifted == 0 || self.mean_shift.abs() < 1e-12 {
            "none"
        } else if self.mean_shift > 0.0 {
            "outward"
        } else {
            "inward"
        }
    }
}

enum TrialOutcome {
    Skipped,
    ArmChange,
    Shift(f64),
}

pub fn sensitivity_report(config: &SensitivityConfig) -> Result<Vec<KindStats>> {
    if config.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if let Some(m) = config.arm_count {
        if m < 2 {
            return Err(Error::TooFewArms(m));
        }
    }
    Ok(config.kinds.iter().enumerate().map(|(ki, &kind)| kind_stats(config, ki as u64, kind)).collect())
}

fn kind_stats(config: &SensitivityConfig, kind_ordinal: u64, kind: NoiseKind) -> KindStats {
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(config.seed, (kind_ordinal << 32) | t as u64);
            let pattern = match config.arm_count {
                Some(m) => config.generator.generate_with_arms(&mut rng, config.mode, m),
                None => config.generator.generate(&mut rng, config.mode),
            };
            let Ok(noisy) = apply_noise_traced(&pattern, NoiseSpec::random(kind), &mut rng) else {
                return TrialOutcome::Skipped;
            };
            let before = hyper_estimate(&pattern, config.offset).expect("valid pattern");
            let after = hyper_estimate(&noisy.pattern, config.offset).expect("noise keeps patterns valid");
            let same_arm = kind != NoiseKind::MissingArmLongest
                && noisy.original_arm(after.longest_arm) == before.longest_arm;
            if same_arm {
                TrialOutcome::Shift(after.ell - before.ell)
            } else {
                TrialOutcome::ArmChange
            }
        })
        .collect();

    let skipped = outcomes.iter().filter(|o| matches!(o, TrialOutcome::Skipped)).count() as u64;
    let arm_changes = outcomes.iter().filter(|o| matches!(o, TrialOutcome::ArmChange)).count() as u64;
    let shifts: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| if let TrialOutcome::Shift(s) = o { Some(*s) } else { None })
        .collect();
    let n = shifts.len() as f64;
    let applied = config.trials as u64 - skipped;
    let (mean, std, mean_abs) = if shifts.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let mean = shifts.iter().sum::<f64>() / n;
        let var = shifts.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (mean, var.sqrt(), shifts.iter().map(|s| s.abs()).sum::<f64>() / n)
    };
    KindStats {
        kind,
        arm_count: config.arm_count,
        trials: config.trials as u64,
        skipped,
        arm_changes,
        arm_change_rate: if applied == 0 { 0.0 } else { arm_changes as f64 / applied as f64 },
        shifted: shifts.len() as u64,
        mean_shift: mean,
        std_shift: std,
        mean_abs_shift: mean_abs,
        seed: config.seed,
    }
}

pub const SENSITIVITY_CSV_HEADER: &str = "kind,m,mean_shift,std_shift,direction,arm_change_rate,trials,skipped,seed";

pub fn sensitivity_csv(stats: &[KindStats], meta_line: &str) -> String {
    let mut s = format!("# {meta_line}\n{SENSITIVITY_CSV_HEADER}\n");
    for k in stats {
        let m = k.arm_count.map_or_else(|| "random".to_string(), |m| m.to_string());
        s.push_str(&format!(
            "{},{},{:.6},{:.6},{},{:.6},{},{},{}\n",
            k.kind,
            m,
            k.mean_shift,
            k.std_shift,
            k.direction(),
            k.arm_change_rate,
            k.trials,
            k.skipped,
            k.seed
        ));
    }
    s
}
