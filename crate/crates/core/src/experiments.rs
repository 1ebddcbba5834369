//! Ensemble experiments comparing the closed-form estimator against a
//! likelihood-based reference.
//!
//! Each trial draws a pattern, runs [`hyper_estimate`] and the reference
//! maximum likelihood estimator, and compares the two. Four metrics
//! summarise an ensemble:
//!
//! - arm error: the two pick different arms (the hub counts as arm 0);
//! - node error: same arm, different hyperedge (rate over arm matches);
//! - error size: mean index distance over node errors;
//! - positivity: share of node errors where the closed form lies further
//!   from the hub than the reference.
//!
//! Trial `t` of generator `g` and mode `o` draws from stream
//! `(g, o, t)` of the master seed, independent of the offset. Ensembles for
//! different offsets therefore share their patterns, and results do not
//! depend on the number of worker threads.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimator::{graph_estimate, hyper_estimate, ClosedFormResult};
use crate::hypertree::{Generator, InfectionPattern, OverlapMode, SourceEstimate};
use crate::rng::{self, RNG_ALGORITHM};
use crate::spreading::{mc_mle, time_domain_mle, ExitRule, TransientOptions, DEFAULT_MC_TRIALS};
use crate::ARTIFACT_VERSION;

pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_SEED: u64 = 20_210_301;
pub const DEFAULT_OFFSETS: [f64; 5] = [0.0, 0.125, 0.16, 0.25, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Exact likelihood of every candidate by time integration.
    #[default]
    TimeDomain,
    /// Exact-match counting over simulated runs.
    MonteCarlo,
}

impl std::str::FromStr for ReferenceKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "time-domain" | "td" => Ok(ReferenceKind::TimeDomain),
            "monte-carlo" | "mc" => Ok(ReferenceKind::MonteCarlo),
            _ => Err(crate::Error::InvalidParameter(format!("unknown reference `{s}`"))),
        }
    }
}

impl std::fmt::Display for ReferenceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReferenceKind::TimeDomain => "time-domain",
            ReferenceKind::MonteCarlo => "monte-carlo",
        })
    }
}

/// How the reference estimate is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConfig {
    pub kind: ReferenceKind,
    pub mc_trials_per_candidate: u64,
    pub exit: ExitRule,
    pub transient: TransientOptions,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            kind: ReferenceKind::TimeDomain,
            mc_trials_per_candidate: DEFAULT_MC_TRIALS,
            exit: ExitRule::default(),
            transient: TransientOptions::default(),
        }
    }
}

impl ReferenceConfig {
    pub fn estimate(&self, pattern: &InfectionPattern, seed: u64) -> SourceEstimate {
        match self.kind {
            ReferenceKind::TimeDomain => time_domain_mle(pattern, self.exit, self.transient).estimate,
            ReferenceKind::MonteCarlo => {
                mc_mle(pattern, self.mc_trials_per_candidate, seed, self.exit)
                    .expect("trial count validated at configuration")
                    .estimate
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator: Generator,
    pub overlap_mode: OverlapMode,
    pub offset: f64,
    pub trials: usize,
    pub reference: ReferenceConfig,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(generator: Generator, overlap_mode: OverlapMode) -> Self {
        Self {
            generator,
            overlap_mode,
            offset: 0.0,
            trials: DEFAULT_TRIALS,
            reference: ReferenceConfig::default(),
            seed: DEFAULT_SEED,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.trials == 0 {
            return Err(crate::Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.offset >= 0.0 && self.offset.is_finite()) {
            return Err(crate::Error::InvalidParameter(format!("offset must be nonnegative, got {}", self.offset)));
        }
        if self.reference.kind == ReferenceKind::MonteCarlo && self.reference.mc_trials_per_candidate == 0 {
            return Err(crate::Error::InvalidParameter("mc trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// One compared trial. Carries the full pattern so that audits and
/// re-analysis need no re-simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub generator: Generator,
    pub mode: OverlapMode,
    pub offset: f64,
    pub trial: usize,
    /// Stream number of the master seed this trial drew from.
    pub stream: u64,
    pub pattern: InfectionPattern,
    pub closed_form: ClosedFormResult,
    pub reference: SourceEstimate,
}

impl TrialRecord {
    pub fn arm_error(&self) -> bool {
        self.closed_form.estimate.arm != self.reference.arm
    }

    pub fn node_error(&self) -> bool {
        !self.arm_error() && self.closed_form.estimate.index != self.reference.index
    }
}

/// One table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub generator: Generator,
    pub mode: OverlapMode,
    pub offset: f64,
    pub trials: u64,
    pub seed: u64,
    pub arm_errors: u64,
    pub node_errors: u64,
    pub error_hops: u64,
    pub positive_errors: u64,
    pub arm_error_rate: f64,
    pub node_error_rate: f64,
    pub mean_error_size: f64,
    pub positivity_rate: f64,
}

impl MetricsRow {
    pub fn from_records(records: &[TrialRecord], generator: Generator, mode: OverlapMode, offset: f64, seed: u64) -> Self {
        let trials = records.len() as u64;
        let mut arm_errors = 0u64;
        let mut node_errors = 0u64;
        let mut error_hops = 0u64;
        let mut positive_errors = 0u64;
        for r in records {
            if r.arm_error() {
                arm_errors += 1;
            } else if r.node_error() {
                node_errors += 1;
                let (a, b) = (r.closed_form.estimate.index, r.reference.index);
                error_hops += a.abs_diff(b) as u64;
                positive_errors += u64::from(a > b);
            }
        }
        let ratio = |n: u64, d: u64| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        Self {
            generator,
            mode,
            offset,
            trials,
            seed,
            arm_errors,
            node_errors,
            error_hops,
            positive_errors,
            arm_error_rate: ratio(arm_errors, trials),
            node_error_rate: ratio(node_errors, trials - arm_errors),
            mean_error_size: ratio(error_hops, node_errors),
            positivity_rate: ratio(positive_errors, node_errors),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub metrics: MetricsRow,
    pub records: Vec<TrialRecord>,
}

/// A drawn pattern with its reference estimate; shared across offsets.
#[derive(Debug, Clone, PartialEq)]
struct ReferenceTrial {
    trial: usize,
    stream: u64,
    pattern: InfectionPattern,
    reference: SourceEstimate,
}

fn stream_id(generator: Generator, mode: OverlapMode, trial: usize) -> u64 {
    let g = generator as u64;
    let o = mode as u64;
    ((g * 2 + o) << 32) | trial as u64
}

fn reference_trials(
    generator: Generator,
    mode: OverlapMode,
    trials: usize,
    seed: u64,
    reference: &ReferenceConfig,
) -> Vec<ReferenceTrial> {
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let stream = stream_id(generator, mode, trial);
            let mut rng = rng::stream(seed, stream);
            let pattern = generator.generate(&mut rng, mode);
            let reference = reference.estimate(&pattern, rng.random());
            ReferenceTrial { trial, stream, pattern, reference }
        })
        .collect()
}

fn score(trials: &[ReferenceTrial], generator: Generator, mode: OverlapMode, offset: f64) -> Vec<TrialRecord> {
    trials
        .iter()
        .map(|t| {
            let closed_form = hyper_estimate(&t.pattern, offset).expect("generated patterns are valid");
            if mode == OverlapMode::Single && offset == 0.0 {
                debug_assert_eq!(Ok(closed_form), graph_estimate(&t.pattern.hop_counts()));
            }
            TrialRecord {
                generator,
                mode,
                offset,
                trial: t.trial,
                stream: t.stream,
                pattern: t.pattern.clone(),
                closed_form,
                reference: t.reference,
            }
        })
        .collect()
}

/// Runs one configuration.
pub fn run_experiment(config: &ExperimentConfig) -> crate::Result<ExperimentResult> {
    config.validate()?;
    let trials =
        reference_trials(config.generator, config.overlap_mode, config.trials, config.seed, &config.reference);
    let records = score(&trials, config.generator, config.overlap_mode, config.offset);
    let metrics = MetricsRow::from_records(&records, config.generator, config.overlap_mode, config.offset, config.seed);
    Ok(ExperimentResult { config: *config, metrics, records })
}

/// Every generator and overlap mode at every offset: six rows per offset,
/// ordered offset-major, then generator, then mode. The reference estimate
/// of each pattern is computed once and reused across offsets.
pub fn table_suite(
    offsets: &[f64],
    trials: usize,
    seed: u64,
    reference: &ReferenceConfig,
) -> crate::Result<Vec<ExperimentResult>> {
    let base = ExperimentConfig { trials, seed, reference: *reference, ..ExperimentConfig::new(Generator::Typical, OverlapMode::Single) };
    for &offset in offsets {
        ExperimentConfig { offset, ..base }.validate()?;
    }
    let ensembles: Vec<(Generator, OverlapMode, Vec<ReferenceTrial>)> = Generator::ALL
        .iter()
        .flat_map(|&g| OverlapMode::ALL.iter().map(move |&o| (g, o)))
        .map(|(g, o)| (g, o, reference_trials(g, o, trials, seed, reference)))
        .collect();
    let mut out = Vec::with_capacity(offsets.len() * ensembles.len());
    for &offset in offsets {
        for (g, o, trials) in &ensembles {
            let records = score(trials, *g, *o, offset);
            let metrics = MetricsRow::from_records(&records, *g, *o, offset, seed);
            let config = ExperimentConfig { generator: *g, overlap_mode: *o, offset, ..base };
            out.push(ExperimentResult { config, metrics, records });
        }
    }
    Ok(out)
}

/// Run metadata embedded in every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    pub rng: String,
    pub seed: u64,
    pub trials: usize,
    pub reference: ReferenceConfig,
}

impl RunMeta {
    pub fn new(seed: u64, trials: usize, reference: ReferenceConfig) -> Self {
        Self { version: ARTIFACT_VERSION.to_string(), rng: RNG_ALGORITHM.to_string(), seed, trials, reference }
    }

    fn comment(&self) -> String {
        let r = &self.reference;
        format!(
            "# {}; rng={}; seed={}; trials={}; reference={}; exit={}; mc_trials={}; step_scale={}; tie_rtol={}\n",
            self.version,
            self.rng,
            self.seed,
            self.trials,
            r.kind,
            r.exit,
            r.mc_trials_per_candidate,
            r.transient.step_scale,
            r.transient.tie_rtol
        )
    }
}

pub const CSV_HEADER: &str = "generator,mode,offset,arm_error,node_error,error_size,positivity,trials,seed";

/// CSV with one row per configuration, preceded by a `#` metadata line.
pub fn metrics_csv(rows: &[MetricsRow], meta: &RunMeta) -> String {
    let mut s = meta.comment();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{},{},{:.6},{:.6},{:.4},{:.6},{},{}",
            r.generator,
            r.mode,
            r.offset,
            r.arm_error_rate,
            r.node_error_rate,
            r.mean_error_size,
            r.positivity_rate,
            r.trials,
            r.seed
        )
        .unwrap();
    }
    s
}

#[derive(Serialize)]
struct MetricsDoc<'a> {
    meta: &'a RunMeta,
    rows: &'a [MetricsRow],
}

pub fn metrics_json(rows: &[MetricsRow], meta: &RunMeta) -> String {
    serde_json::to_string_pretty(&MetricsDoc { meta, rows }).expect("metrics serialize")
}

/// One JSON object per trial.
pub fn records_jsonl(records: &[TrialRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("records serialize"));
        s.push('\n');
    }
    s
}

/// Human-readable table in percent, one block per offset.
pub fn format_tables(rows: &[MetricsRow]) -> String {
    let mut s = String::new();
    let mut last_offset = None;
    for r in rows {
        if last_offset != Some(r.offset) {
            last_offset = Some(r.offset);
            writeln!(s, "\noffset {}", r.offset).unwrap();
            writeln!(s, "{:<24} {:>10} {:>10} {:>10} {:>10}", "", "arm error", "node error", "error size", "positivity").unwrap();
        }
        writeln!(
            s,
            "{:<24} {:>9.2}% {:>9.2}% {:>10.2} {:>9.2}%",
            format!("{} ({})", r.generator, r.mode),
            100.0 * r.arm_error_rate,
            100.0 * r.node_error_rate,
            r.mean_error_size,
            100.0 * r.positivity_rate
        )
        .unwrap();
    }
    s
}

/// Known tie configurations, identified from hop counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieCase {
    /// The two longest arms have `n + 1` and `n` hyperedges: the hub and the
    /// first hyperedge of the longer arm are equally likely.
    AdjacentLongest,
    /// Two arms share the maximum hop count.
    TiedLongest,
    /// Two arms with an odd total: the centre falls between two hyperedges.
    CenterSplit,
}

pub fn classify_tie(pattern: &InfectionPattern) -> Option<TieCase> {
    let mut k = pattern.hop_counts();
    k.sort_unstable_by(|a, b| b.cmp(a));
    if k[0] == k[1] {
        Some(TieCase::TiedLongest)
    } else if k[0] == k[1] + 1 {
        Some(TieCase::AdjacentLongest)
    } else if k.len() == 2 && (k[0] + k[1]) % 2 == 1 {
        Some(TieCase::CenterSplit)
    } else {
        None
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TieAudit {
    pub arm_errors: u64,
    pub arm_error_ties: u64,
    pub node_errors: u64,
    pub node_error_ties: u64,
    pub adjacent_longest: u64,
    pub tied_longest: u64,
    pub center_split: u64,
}

impl TieAudit {
    /// Share of arm errors explained by ties; `None` without arm errors.
    pub fn arm_coverage(&self) -> Option<f64> {
        (self.arm_errors > 0).then(|| self.arm_error_ties as f64 / self.arm_errors as f64)
    }

    pub fn node_coverage(&self) -> Option<f64> {
        (self.node_errors > 0).then(|| self.node_error_ties as f64 / self.node_errors as f64)
    }
}

/// Splits the errors in `records` into tie cases and genuine disagreements.
///
/// The hop-count tie cases are exact only for unit overlaps; on
/// multiple-overlap records the audit is expected to explain only part of
/// the errors.
pub fn tie_audit(records: &[TrialRecord]) -> TieAudit {
    let mut audit = TieAudit::default();
    for r in records {
        let (arm, node) = (r.arm_error(), r.node_error());
        if !arm && !node {
            continue;
        }
        let case = classify_tie(&r.pattern);
        match case {
            Some(TieCase::AdjacentLongest) => audit.adjacent_longest += 1,
            Some(TieCase::TiedLongest) => audit.tied_longest += 1,
            Some(TieCase::CenterSplit) => audit.center_split += 1,
            None => {}
        }
        if arm {
            audit.arm_errors += 1;
            audit.arm_error_ties += u64::from(case.is_some());
        } else {
            audit.node_errors += 1;
            audit.node_error_ties += u64::from(case.is_some());
        }
    }
    audit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::HypertreeStar;

    fn record(closed: SourceEstimate, reference: SourceEstimate) -> TrialRecord {
        let pattern = HypertreeStar::unit(&[5, 2]).unwrap();
        TrialRecord {
            generator: Generator::Typical,
            mode: OverlapMode::Single,
            offset: 0.0,
            trial: 0,
            stream: 0,
            pattern,
            closed_form: ClosedFormResult { longest_arm: 1, ell: 0.0, estimate: closed },
            reference,
        }
    }

    #[test]
    fn metrics_counting() {
        let recs = vec![
            record(SourceEstimate::HUB, SourceEstimate::HUB),
            record(SourceEstimate::HUB, SourceEstimate::on_arm(1, 1)),
            record(SourceEstimate::on_arm(1, 3), SourceEstimate::on_arm(1, 1)),
            record(SourceEstimate::on_arm(1, 1), SourceEstimate::on_arm(1, 2)),
            record(SourceEstimate::on_arm(1, 2), SourceEstimate::on_arm(1, 2)),
        ];
        let m = MetricsRow::from_records(&recs, Generator::Typical, OverlapMode::Single, 0.0, 1);
        assert_eq!((m.arm_errors, m.node_errors, m.error_hops, m.positive_errors), (1, 2, 3, 1));
        assert_eq!(m.arm_error_rate, 0.2);
        assert_eq!(m.node_error_rate, 0.5);
        assert_eq!(m.mean_error_size, 1.5);
        assert_eq!(m.positivity_rate, 0.5);
    }

    #[test]
    fn empty_error_sets_are_guarded() {
        let recs = vec![record(SourceEstimate::HUB, SourceEstimate::HUB)];
        let m = MetricsRow::from_records(&recs, Generator::Typical, OverlapMode::Single, 0.0, 1);
        assert_eq!((m.node_error_rate, m.mean_error_size, m.positivity_rate), (0.0, 0.0, 0.0));
    }

    #[test]
    fn single_trial_is_reproducible() {
        let cfg = ExperimentConfig { trials: 1, ..ExperimentConfig::new(Generator::Unconstrained, OverlapMode::Multiple) };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.metrics.trials, 1);
        assert!(a.metrics.mean_error_size == 0.0 || a.metrics.mean_error_size >= 1.0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = ExperimentConfig::new(Generator::Typical, OverlapMode::Single);
        assert!(run_experiment(&ExperimentConfig { trials: 0, ..base }).is_err());
        assert!(run_experiment(&ExperimentConfig { offset: -1.0, ..base }).is_err());
    }

    #[test]
    fn tie_classification() {
        let c = |k: &[usize]| classify_tie(&HypertreeStar::unit(k).unwrap());
        assert_eq!(c(&[7, 7, 2]), Some(TieCase::TiedLongest));
        assert_eq!(c(&[3, 8, 7]), Some(TieCase::AdjacentLongest));
        assert_eq!(c(&[9, 4]), Some(TieCase::CenterSplit));
        assert_eq!(c(&[9, 5]), None);
        assert_eq!(c(&[9, 4, 1]), None);
    }

    #[test]
    fn csv_layout() {
        let cfg = ExperimentConfig { trials: 3, ..ExperimentConfig::new(Generator::Typical, OverlapMode::Single) };
        let res = run_experiment(&cfg).unwrap();
        let csv = metrics_csv(&[res.metrics], &RunMeta::new(cfg.seed, 3, cfg.reference));
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# hyperstar ") && lines[0].contains("rng=ChaCha8Rng"));
        assert_eq!(lines[1], CSV_HEADER);
        assert!(lines[2].starts_with("typical,single,0,"), "{}", lines[2]);
        assert!(lines[2].ends_with(&format!(",3,{}", DEFAULT_SEED)));
    }
}
