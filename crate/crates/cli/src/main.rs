//! `hyperstar` command-line tool.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 invalid input.

use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperstar::experiments::{
    self, ExperimentConfig, ReferenceConfig, ReferenceKind, RunMeta, DEFAULT_OFFSETS, DEFAULT_SEED, DEFAULT_TRIALS,
};
use hyperstar::noise::{self, NoiseKind, SensitivityConfig};
use hyperstar::rng::{self, RNG_ALGORITHM};
use hyperstar::spreading::{simulate_spread, DEFAULT_MC_TRIALS};
use hyperstar::{
    hyper_estimate, ExitRule, Generator, HypertreeStar, InfectionPattern, OverlapMode, SourceEstimate,
    ARTIFACT_VERSION,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "hyperstar", version, about = "Source estimation for SI spreading on extended-star hypertrees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spread an infection over a structure and print the infected pattern.
    Simulate(SimulateArgs),
    /// Closed-form source estimate for an observed pattern.
    Estimate(EstimateArgs),
    /// Compare the closed form against the reference for one configuration.
    Experiment(ExperimentArgs),
    /// Every generator and overlap mode at every offset.
    Tables(TablesArgs),
    /// Estimate shifts under missing-data noise.
    Sensitivity(SensitivityArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Size of the worker pool; defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Structure JSON: a file path, inline `{"arms": ...}`, or `-` for stdin.
    structure: String,
    /// Source hyperedge: `hub` or `ARM:INDEX`.
    #[arg(long, default_value = "hub")]
    source: SourceEstimate,
    /// Number of infected hyperedges, hub included.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct EstimateArgs {
    /// Pattern JSON: a file path, inline `{"arms": ...}`, or `-` for stdin.
    pattern: String,
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ReferenceArgs {
    /// `time-domain` (exact likelihoods) or `monte-carlo`.
    #[arg(long, default_value = "time-domain")]
    reference: ReferenceKind,
    /// Monte Carlo runs per candidate source.
    #[arg(long, default_value_t = DEFAULT_MC_TRIALS)]
    mc_trials: u64,
    /// Rate of the unobserved hop past each arm: `unit`, `last-overlap` or `overlap-N`.
    #[arg(long, default_value = "unit")]
    exit: ExitRule,
}

impl ReferenceArgs {
    fn config(&self) -> ReferenceConfig {
        ReferenceConfig { kind: self.reference, mc_trials_per_candidate: self.mc_trials, exit: self.exit, ..Default::default() }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value = "typical")]
    generator: Generator,
    #[arg(long, default_value = "single")]
    mode: OverlapMode,
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    reference: ReferenceArgs,
    /// Also write per-trial records as JSON lines.
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TablesArgs {
    /// Comma-separated offsets.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_OFFSETS.to_vec())]
    offsets: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    reference: ReferenceArgs,
    /// Also write per-trial records as JSON lines.
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SensitivityArgs {
    #[arg(long, default_value = "typical")]
    generator: Generator,
    #[arg(long, default_value = "single")]
    mode: OverlapMode,
    /// Fix the number of arms; drawn per pattern otherwise.
    #[arg(long)]
    arms: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Comma-separated noise kinds; all four by default.
    #[arg(long, value_delimiter = ',')]
    kinds: Vec<NoiseKind>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_input_error(&e) {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn is_input_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| c.is::<hyperstar::Error>() || c.is::<serde_json::Error>())
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Simulate(a) => with_pool(&a.output, || simulate(&a)),
        Command::Estimate(a) => with_pool(&a.output, || estimate(&a)),
        Command::Experiment(a) => with_pool(&a.output, || experiment(&a)),
        Command::Tables(a) => with_pool(&a.output, || tables(&a)),
        Command::Sensitivity(a) => with_pool(&a.output, || sensitivity(&a)),
    }
}

fn with_pool(output: &Output, f: impl FnOnce() -> anyhow::Result<String> + Send) -> anyhow::Result<()> {
    let text = match output.threads {
        Some(0) => bail!(hyperstar::Error::InvalidParameter("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build().context("starting worker pool")?.install(f)?,
        None => f()?,
    };
    match &output.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn read_star(source: &str) -> anyhow::Result<HypertreeStar> {
    let text = if source.trim_start().starts_with('{') {
        source.to_string()
    } else if source == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading stdin")?;
        s
    } else {
        fs::read_to_string(source).with_context(|| format!("reading {source}"))?
    };
    serde_json::from_str(&text).context("parsing pattern JSON")
}

fn simulate(a: &SimulateArgs) -> anyhow::Result<String> {
    let structure = read_star(&a.structure)?;
    let mut rng = rng::seeded(a.seed);
    let region = simulate_spread(&structure, a.source, a.n, &mut rng)?;
    let mut doc = json!({
        "meta": {
            "version": ARTIFACT_VERSION,
            "rng": RNG_ALGORITHM,
            "seed": a.seed,
            "source": a.source.to_string(),
            "n": a.n,
            "structure": structure,
        },
        "region": region,
    });
    // Only a hub-rooted infection with at least two infected arms is a
    // pattern the estimator accepts.
    if let Some(pattern) = region.to_pattern(&structure) {
        doc["arms"] = serde_json::to_value(&pattern)?["arms"].take();
    }
    Ok(format!("{}\n", serde_json::to_string_pretty(&doc)?))
}

fn estimate(a: &EstimateArgs) -> anyhow::Result<String> {
    let pattern: InfectionPattern = read_star(&a.pattern)?;
    let r = hyper_estimate(&pattern, a.offset)?;
    let w = pattern.weighted_lengths();
    Ok(match a.format {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&json!({
                "meta": { "version": ARTIFACT_VERSION, "offset": a.offset },
                "estimate": r.estimate.to_string(),
                "arm": r.estimate.arm,
                "index": r.estimate.index,
                "longest_arm": r.longest_arm,
                "ell": r.ell,
                "weighted_lengths": w,
            }))?
        ),
        Format::Text | Format::Csv => {
            let w: Vec<String> = w.iter().map(|x| format!("{x:.6}")).collect();
            format!(
                "# {ARTIFACT_VERSION}; offset={}\nestimate {}\narm {}\nindex {}\nell {:.6}\nweighted_lengths {}\n",
                a.offset,
                r.estimate,
                r.estimate.arm,
                r.estimate.index,
                r.ell,
                w.join(" ")
            )
        }
    })
}

fn write_records(path: &Option<PathBuf>, results: &[experiments::ExperimentResult]) -> anyhow::Result<()> {
    if let Some(path) = path {
        let mut f = io::BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
        for r in results {
            f.write_all(experiments::records_jsonl(&r.records).as_bytes())?;
        }
        f.flush()?;
    }
    Ok(())
}

fn render_metrics(format: Format, results: &[experiments::ExperimentResult], meta: &RunMeta) -> String {
    let rows: Vec<_> = results.iter().map(|r| r.metrics.clone()).collect();
    match format {
        Format::Csv => experiments::metrics_csv(&rows, meta),
        Format::Json => format!("{}\n", experiments::metrics_json(&rows, meta)),
        Format::Text => experiments::format_tables(&rows),
    }
}

fn experiment(a: &ExperimentArgs) -> anyhow::Result<String> {
    let reference = a.reference.config();
    let config = ExperimentConfig {
        generator: a.generator,
        overlap_mode: a.mode,
        offset: a.offset,
        trials: a.trials,
        reference,
        seed: a.seed,
    };
    let result = experiments::run_experiment(&config)?;
    let results = [result];
    write_records(&a.records, &results)?;
    Ok(render_metrics(a.format, &results, &RunMeta::new(a.seed, a.trials, reference)))
}

fn tables(a: &TablesArgs) -> anyhow::Result<String> {
    let reference = a.reference.config();
    if reference.kind == ReferenceKind::MonteCarlo && reference.mc_trials_per_candidate == 0 {
        bail!(hyperstar::Error::InvalidParameter("--mc-trials must be at least 1".into()));
    }
    let results = experiments::table_suite(&a.offsets, a.trials, a.seed, &reference)?;
    write_records(&a.records, &results)?;
    Ok(render_metrics(a.format, &results, &RunMeta::new(a.seed, a.trials, reference)))
}

fn sensitivity(a: &SensitivityArgs) -> anyhow::Result<String> {
    let config = SensitivityConfig {
        generator: a.generator,
        mode: a.mode,
        arm_count: a.arms,
        offset: a.offset,
        trials: a.trials,
        seed: a.seed,
        kinds: if a.kinds.is_empty() { NoiseKind::ALL.to_vec() } else { a.kinds.clone() },
    };
    let stats = noise::sensitivity_report(&config)?;
    Ok(match a.format {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&json!({
                "meta": { "version": ARTIFACT_VERSION, "rng": RNG_ALGORITHM, "config": config },
                "kinds": stats,
            }))?
        ),
        Format::Csv | Format::Text => {
            let m = a.arms.map_or_else(|| "random".to_string(), |m| m.to_string());
            let meta = format!(
                "{ARTIFACT_VERSION}; rng={RNG_ALGORITHM}; seed={}; trials={}; generator={}; mode={}; m={m}; offset={}",
                a.seed, a.trials, a.generator, a.mode, a.offset
            );
            noise::sensitivity_csv(&stats, &meta)
        }
    })
}
