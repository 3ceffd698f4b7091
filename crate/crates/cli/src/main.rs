//! Command-line driver: run the switching-subspace benchmark, replay a
//! dataset CSV through the learners, or audit the regret bounds.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 audit failure.

use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use streamlearn::audit::{
    audit_expert_bound, audit_pca_bound, audit_simplex_var_bound, audit_unit_var_bound,
};
use streamlearn::harness::{
    load_matrix_csv, run_experiment, run_on_data, write_loss_csv, write_regret_csv,
    ExperimentConfig, RegretReport, Scenario,
};
use streamlearn::Error;

/// Prints one stdout line; if the reader has closed the pipe, exits with the
/// conventional broken-pipe status instead of panicking.
fn emit(args: std::fmt::Arguments) {
    use std::io::Write;
    let mut out = std::io::stdout();
    if out
        .write_fmt(args)
        .and_then(|()| out.write_all(b"\n"))
        .is_err()
    {
        std::process::exit(141);
    }
}

macro_rules! outln {
    ($($arg:tt)*) => { emit(format_args!($($arg)*)) };
}

#[derive(Parser)]
#[command(
    name = "streamlearn",
    version,
    about = "Online subspace, subset, and variance learners with regret audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the switching-subspace benchmark and write loss/regret CSVs.
    Toy(ToyArgs),
    /// Replay a CSV of row vectors through all four algorithms.
    Dataset(DatasetArgs),
    /// Check measured worst-interval regret against the theoretical bound.
    Audit(AuditArgs),
}

/// Flags beat config-file keys, which beat built-in defaults. The config file
/// holds `key = value` lines; `#` starts a comment; unknown keys are ignored.
#[derive(Args)]
struct ToyArgs {
    /// Ambient dimension of the stream.
    #[arg(long)]
    n: Option<usize>,
    /// Rank of the tracked projection.
    #[arg(long)]
    k: Option<usize>,
    /// Number of subspace switches plus one.
    #[arg(long)]
    intervals: Option<usize>,
    /// Samples drawn per interval.
    #[arg(long)]
    samples: Option<usize>,
    /// Rank of each interval's covariance.
    #[arg(long)]
    rank: Option<usize>,
    /// Learning rate.
    #[arg(long)]
    eta: Option<f64>,
    /// Share rate mixed toward uniform each step.
    #[arg(long)]
    alpha: Option<f64>,
    /// Seed for data generation and sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory receiving losses.csv and regret.csv.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Optional key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DatasetArgs {
    /// CSV of comma-separated row vectors; rows with norm above one are
    /// scaled onto the unit sphere.
    #[arg(long)]
    input: PathBuf,
    /// Rank of the tracked projection.
    #[arg(long)]
    k: Option<usize>,
    /// Learning rate.
    #[arg(long)]
    eta: Option<f64>,
    /// Share rate mixed toward uniform each step.
    #[arg(long)]
    alpha: Option<f64>,
    /// Print per-segment expected-loss totals over this many equal slices.
    #[arg(long)]
    segments: Option<usize>,
    /// Seed for the samplers.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory receiving losses.csv and regret.csv.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Skip the quadratic-time regret scan (no regret.csv).
    #[arg(long)]
    skip_regret: bool,
    /// Optional key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// Which bound to audit.
    #[arg(long, value_enum)]
    suite: Suite,
    /// Number of random instances.
    #[arg(long)]
    trials: Option<usize>,
    /// Seed shared by all trials of the run.
    #[arg(long)]
    seed: Option<u64>,
    /// Optional key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    /// Best-subset-of-experts regret bound.
    Experts,
    /// Online PCA regret bound.
    Pca,
    /// Unit-sphere variance regret bound.
    VarUnit,
    /// Simplex variance regret bound.
    VarSimplex,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Experts => "experts",
            Suite::Pca => "pca",
            Suite::VarUnit => "var-unit",
            Suite::VarSimplex => "var-simplex",
        }
    }
}

/// Failure carrying the message to print and the process exit code.
struct Failure {
    message: String,
    code: u8,
}

type CmdResult<T> = Result<T, Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        message: message.into(),
        code: 1,
    }
}

fn from_core(e: Error) -> Failure {
    let code = match &e {
        Error::ParseError { .. } | Error::Io(_) => 2,
        Error::InvalidInput(_) | Error::SingularArgument(_) => 1,
    };
    Failure {
        message: e.to_string(),
        code,
    }
}

fn io_failure(context: impl Display, e: std::io::Error) -> Failure {
    Failure {
        message: format!("{context}: {e}"),
        code: 2,
    }
}

struct FileConfig(HashMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> CmdResult<Self> {
        let mut map = HashMap::new();
        let Some(path) = path else {
            return Ok(FileConfig(map));
        };
        let text = fs::read_to_string(path)
            .map_err(|e| usage(format!("config {}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(usage(format!(
                    "config {} line {}: expected key=value, got {raw:?}",
                    path.display(),
                    lineno + 1
                )));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> CmdResult<Option<T>>
    where
        T::Err: Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                usage(format!("config key {key}: cannot parse {raw:?}: {e}"))
            }),
        }
    }
}

fn resolve<T>(flag: Option<T>, file: CmdResult<Option<T>>, default: T) -> CmdResult<T> {
    Ok(flag.or(file?).unwrap_or(default))
}

fn cmd_toy(args: ToyArgs) -> CmdResult<ExitCode> {
    let file = FileConfig::load(args.config.as_deref())?;
    let n = resolve(args.n, file.get("n"), 20)?;
    let k = resolve(args.k, file.get("k"), 2)?;
    let intervals = resolve(args.intervals, file.get("intervals"), 3)?;
    let samples = resolve(args.samples, file.get("samples"), 200)?;
    let rank = resolve(args.rank, file.get("rank"), 2)?;
    let eta = resolve(args.eta, file.get("eta"), 1.0)?;
    let alpha = resolve(args.alpha, file.get("alpha"), 1e-5)?;
    let seed = resolve(args.seed, file.get("seed"), 42)?;
    let out_dir = resolve(args.out_dir, file.get("out_dir"), PathBuf::from("."))?;

    let cfg = ExperimentConfig {
        n,
        k,
        eta,
        alpha,
        seed,
        scenario: Scenario::ToySwitching {
            intervals,
            samples_per_interval: samples,
            cov_rank: rank,
        },
        compute_regret: true,
    };
    let report = run_experiment(&cfg).map_err(from_core)?;
    write_outputs(&out_dir, &report)?;
    print_run_summary(&report, &out_dir);
    Ok(ExitCode::SUCCESS)
}

fn cmd_dataset(args: DatasetArgs) -> CmdResult<ExitCode> {
    let file = FileConfig::load(args.config.as_deref())?;
    let k = resolve(args.k, file.get("k"), 2)?;
    let eta = resolve(args.eta, file.get("eta"), 5.0)?;
    let alpha = resolve(args.alpha, file.get("alpha"), 1e-4)?;
    let segments = resolve(args.segments, file.get("segments"), 1)?;
    let seed = resolve(args.seed, file.get("seed"), 42)?;
    let out_dir = resolve(args.out_dir, file.get("out_dir"), PathBuf::from("."))?;
    let skip_regret = args.skip_regret || file.get("skip_regret")?.unwrap_or(false);

    let data = load_matrix_csv(&args.input).map_err(|e| {
        let f = from_core(e);
        Failure {
            message: format!("{}: {}", args.input.display(), f.message),
            code: f.code,
        }
    })?;
    let n = data[0].dim();
    let t = data.len();
    if segments == 0 || segments > t {
        return Err(usage(format!(
            "segments must lie in 1..={t}, got {segments}"
        )));
    }

    let cfg = ExperimentConfig {
        n,
        k,
        eta,
        alpha,
        seed,
        scenario: Scenario::Dataset,
        compute_regret: !skip_regret,
    };
    let report = run_on_data(&cfg, &data).map_err(from_core)?;
    write_outputs(&out_dir, &report)?;
    print_run_summary(&report, &out_dir);
    if segments > 1 {
        print_segments(&report, segments);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_audit(args: AuditArgs) -> CmdResult<ExitCode> {
    let file = FileConfig::load(args.config.as_deref())?;
    let default_trials = match args.suite {
        Suite::Experts => 20,
        _ => 10,
    };
    let default_seed = match args.suite {
        Suite::Experts => 41,
        Suite::Pca => 43,
        Suite::VarUnit => 47,
        Suite::VarSimplex => 53,
    };
    let trials = resolve(args.trials, file.get("trials"), default_trials)?;
    let seed = resolve(args.seed, file.get("seed"), default_seed)?;

    let results = match args.suite {
        Suite::Experts => audit_expert_bound(10, 3, 200, trials, seed),
        Suite::Pca => audit_pca_bound(8, 2, 150, trials, seed),
        Suite::VarUnit => audit_unit_var_bound(6, 200, trials, seed),
        Suite::VarSimplex => audit_simplex_var_bound(6, 200, trials, seed),
    }
    .map_err(from_core)?;

    for trial in &results {
        let status = if trial.holds { "ok" } else { "VIOLATED" };
        outln!(
            "trial {:>3}: measured {:>14.8} <= bound {:>14.8} on steps {}..={} [{status}]",
            trial.trial, trial.measured, trial.bound, trial.interval.0, trial.interval.1
        );
    }
    let held = results.iter().filter(|t| t.holds).count();
    outln!("suite {}: {held}/{} bounds hold", args.suite.name(), results.len());
    if held == results.len() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}

fn write_outputs(out_dir: &Path, report: &RegretReport) -> CmdResult<()> {
    fs::create_dir_all(out_dir)
        .map_err(|e| io_failure(format!("create {}", out_dir.display()), e))?;
    let losses_path = out_dir.join("losses.csv");
    let mut losses = fs::File::create(&losses_path)
        .map_err(|e| io_failure(format!("create {}", losses_path.display()), e))?;
    write_loss_csv(&mut losses, report).map_err(from_core)?;
    if report.regrets.is_some() {
        let regret_path = out_dir.join("regret.csv");
        let mut regret = fs::File::create(&regret_path)
            .map_err(|e| io_failure(format!("create {}", regret_path.display()), e))?;
        write_regret_csv(&mut regret, report).map_err(from_core)?;
    }
    Ok(())
}

fn print_run_summary(report: &RegretReport, out_dir: &Path) {
    outln!("steps: {}", report.t);
    for run in &report.algos {
        let expected = run.cum_expected.last().copied().unwrap_or(0.0);
        let sampled = run.cum_sampled.last().copied().unwrap_or(0.0);
        outln!(
            "{:>18}: cumulative expected loss {expected:.6}, sampled {sampled:.6}",
            run.name
        );
    }
    if let Some(regrets) = &report.regrets {
        for summary in regrets {
            outln!(
                "{:>18}: static regret {:.6}, worst interval regret {:.6} on steps {}..={}",
                summary.name,
                summary.static_regret,
                summary.adaptive_regret.value,
                summary.adaptive_regret.start,
                summary.adaptive_regret.end
            );
        }
    }
    outln!("wrote {}", out_dir.join("losses.csv").display());
    if report.regrets.is_some() {
        outln!("wrote {}", out_dir.join("regret.csv").display());
    }
}

fn print_segments(report: &RegretReport, segments: usize) {
    for s in 0..segments {
        let lo = s * report.t / segments;
        let hi = (s + 1) * report.t / segments;
        let parts: Vec<String> = report
            .algos
            .iter()
            .map(|run| {
                let upto_hi = run.cum_expected[hi - 1];
                let upto_lo = if lo == 0 { 0.0 } else { run.cum_expected[lo - 1] };
                format!("{} {:.6}", run.name, upto_hi - upto_lo)
            })
            .collect();
        outln!("segment {} (steps {}..={}): {}", s + 1, lo + 1, hi, parts.join(", "));
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Toy(args) => cmd_toy(args),
        Command::Dataset(args) => cmd_dataset(args),
        Command::Audit(args) => cmd_audit(args),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
