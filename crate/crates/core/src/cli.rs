//! Command-line front end. Exit codes: 0 success, 1 usage, 2 I/O or data,
//! 3 internal failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::fair_rank::FairnessVariant;
use crate::metrics::{evaluate_query_sequence, EvalConfig, Estimate, DEFAULT_SEQUENCE_LENGTH};
use crate::model::{load_corpus, save_corpus, Corpus};
use crate::outlier::{DetectorConfig, DetectorMethod};
use crate::pipeline::{
    detect_corpus, position_histogram, rank_corpus, read_outliers, read_policies, run_sweep, with_thread_pool,
    write_json, write_outliers, write_policies, write_sweep_csv, Method, PipelineError, PolicyRecord, RankConfig,
    RankSummary, SweepParam,
};
use crate::synthetic::{generate_synthetic, SyntheticConfig};

#[derive(Debug, Parser)]
#[command(name = "omit-rank", version, about = "Fair stochastic rankings that keep outliers out of the top positions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted outliers.
    Gen(GenArgs),
    /// Score outliers in every query.
    Detect(DetectArgs),
    /// Build a stochastic ranking policy per query.
    Rank(RankArgs),
    /// Evaluate policies over a simulated query stream.
    Eval(EvalArgs),
    /// Re-run the pipeline over several context sizes or cut-offs.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = 200)]
    queries: usize,
    #[arg(long, default_value_t = 20)]
    items: usize,
    #[arg(long, default_value_t = 0.1)]
    outlier_fraction: f64,
    #[arg(long, default_value_t = 50.0)]
    outlier_magnitude: f64,
    #[arg(long, default_value_t = 0.1)]
    relevant_fraction: f64,
    #[arg(long, default_value_t = 0.5)]
    group_balance: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output corpus (JSONL).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DetectorArgs {
    #[arg(long, default_value = "copod")]
    detector: DetectorMethod,
    /// Number of leading items of the utility ranking that are scored (default: all).
    #[arg(long)]
    context_n: Option<usize>,
    #[arg(long, default_value_t = 3.5)]
    mad_threshold: f64,
    #[arg(long, default_value_t = 5)]
    knn_k: usize,
    #[arg(long, default_value_t = 0.1)]
    contamination: f64,
    /// Keep raw scores instead of dividing by the largest flagged score.
    #[arg(long)]
    no_normalize: bool,
    /// Use the larger tail in COPOD instead of choosing it by skewness.
    #[arg(long)]
    no_skew_correction: bool,
}

impl DetectorArgs {
    fn config(&self) -> DetectorConfig {
        let mut c = DetectorConfig::new(self.detector);
        if let Some(n) = self.context_n {
            c.context_n = n;
        }
        c.mad_threshold = self.mad_threshold;
        c.knn_k = self.knn_k;
        c.contamination = self.contamination;
        c.normalize = !self.no_normalize;
        c.copod_skew_correction = !self.no_skew_correction;
        c
    }
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// Corpus (JSONL).
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    detector: DetectorArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[command(flatten)]
    detector: DetectorArgs,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long, default_value_t = 2.0)]
    attention_base: f64,
    /// Weight of the outlierness term.
    #[arg(long, default_value_t = 1.0)]
    lambda_o: f64,
    /// Penalty on column-sum violations in soft mode.
    #[arg(long, default_value_t = 10.0)]
    lambda_s: f64,
    #[arg(long, default_value = "dtr-exact")]
    fairness_variant: FairnessVariant,
}

impl SolverArgs {
    fn config(&self, method: Method) -> RankConfig {
        RankConfig {
            method,
            detector: self.detector.config(),
            top_k: self.top_k,
            attention_base: self.attention_base,
            lambda_o: self.lambda_o,
            lambda_s: self.lambda_s,
            fairness_variant: self.fairness_variant,
        }
    }
}

#[derive(Debug, Args)]
struct RankArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "utility")]
    method: Method,
    /// Outlier vectors from `detect`; detected on the fly when omitted.
    #[arg(long)]
    outliers: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SamplingArgs {
    #[arg(long, default_value_t = DEFAULT_SEQUENCE_LENGTH)]
    sequence_length: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    policies: PathBuf,
    #[arg(long)]
    outliers: PathBuf,
    /// Policies of a reference run; adds relative-improvement columns.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long, default_value_t = 2.0)]
    attention_base: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    input: PathBuf,
    /// context-n or top-k.
    #[arg(long)]
    param: SweepParam,
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
    #[arg(long, default_value = "omit-soft")]
    method: Method,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = std::panic::catch_unwind(|| with_thread_pool(|| dispatch(cli.command)).and_then(|r| r));
    match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("error: internal failure");
            3
        }
    }
}

fn dispatch(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Gen(a) => cmd_gen(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

fn load(path: &Path) -> Result<Corpus, PipelineError> {
    load_corpus(path).map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))
}

fn out_dir(path: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(path).map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))
}

fn cmd_gen(a: GenArgs) -> Result<(), PipelineError> {
    let config = SyntheticConfig {
        num_queries: a.queries,
        items_per_query: a.items,
        outlier_fraction: a.outlier_fraction,
        outlier_magnitude: a.outlier_magnitude,
        outlier_relevant_fraction: a.relevant_fraction,
        group_balance: a.group_balance,
        seed: a.seed,
    };
    config.validate().map_err(PipelineError::Usage)?;
    let corpus = generate_synthetic(&config);
    save_corpus(&corpus, &a.out).map_err(|e| PipelineError::Data(format!("{}: {e}", a.out.display())))
}

fn cmd_detect(a: DetectArgs) -> Result<(), PipelineError> {
    let config = a.detector.config();
    config.validate()?;
    let corpus = load(&a.input)?;
    let outliers = detect_corpus(&corpus, &config)?;
    out_dir(&a.out)?;
    write_outliers(&a.out.join("outliers.jsonl"), &corpus, &outliers)?;
    let mut csv = Vec::new();
    writeln!(csv, "position,flagged")?;
    for (pos, count) in position_histogram(&corpus, &outliers).into_iter().enumerate() {
        writeln!(csv, "{},{count}", pos + 1)?;
    }
    let path = a.out.join("outlier_positions.csv");
    fs::write(&path, csv).map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))
}

fn cmd_rank(a: RankArgs) -> Result<(), PipelineError> {
    let config = a.solver.config(a.method);
    config.validate()?;
    let corpus = load(&a.input)?;
    let outliers = a.outliers.as_deref().map(read_outliers).transpose()?;
    let ranked = rank_corpus(&corpus, outliers.as_ref(), &config)?;
    let records: Vec<PolicyRecord> = ranked.into_iter().map(|r| r.record).collect();
    out_dir(&a.out)?;
    write_policies(&a.out.join("policies.jsonl"), &records)?;
    let summary = RankSummary::from_records(a.method, &records);
    if summary.fallback_count > 0 {
        log::info!(
            "{} of {} queries fell back to the initial ranking",
            summary.fallback_count,
            summary.queries
        );
    }
    write_json(&a.out.join("rank_summary.json"), &summary)
}

fn cmd_eval(a: EvalArgs) -> Result<(), PipelineError> {
    if a.top_k == 0 || !(a.attention_base > 1.0) {
        return Err(PipelineError::Usage("top-k must be positive and attention base above 1".into()));
    }
    let corpus = load(&a.input)?;
    let outliers = read_outliers(&a.outliers)?;
    let mut config = EvalConfig {
        method: String::new(),
        sequence_length: a.sampling.sequence_length,
        seed: a.sampling.seed,
        top_k: a.top_k,
        attention_base: a.attention_base,
    };
    let evaluate = |path: &Path, config: &mut EvalConfig| -> Result<_, PipelineError> {
        let set = read_policies(path, &corpus)?;
        config.method = set.method;
        Ok(evaluate_query_sequence(&corpus, &set.policies, &outliers, config)?)
    };
    let report = evaluate(&a.policies, &mut config)?;
    let baseline = a.baseline.as_deref().map(|p| evaluate(p, &mut config)).transpose()?;

    out_dir(&a.out)?;
    for (name, which) in [("metrics.csv", Estimate::Analytic), ("metrics_empirical.csv", Estimate::Empirical)] {
        let mut buf = Vec::new();
        report.write_csv(&mut buf, which, baseline.as_ref())?;
        let path = a.out.join(name);
        fs::write(&path, buf).map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))?;
    }
    write_json(&a.out.join("summary.json"), &report.summary_json(baseline.as_ref()))
}

fn cmd_sweep(a: SweepArgs) -> Result<(), PipelineError> {
    let config = a.solver.config(a.method);
    config.validate()?;
    let corpus = load(&a.input)?;
    let eval = EvalConfig {
        method: a.method.name().to_string(),
        sequence_length: a.sampling.sequence_length,
        seed: a.sampling.seed,
        top_k: config.top_k,
        attention_base: config.attention_base,
    };
    let rows = run_sweep(&corpus, &config, &eval, a.param, &a.values)?;
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &rows)?;
    fs::write(&a.out, buf).map_err(|e| PipelineError::Data(format!("{}: {e}", a.out.display())))
}
