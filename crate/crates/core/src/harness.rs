//! Experiment driver: stream generation, the four PCA contenders run side by
//! side, interval-regret scans, and CSV output. Runs are reproducible bit for
//! bit from a seed; every random consumer gets its own generator stream.

use std::io::Write as IoWrite;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::comparators::{best_fixed_projection, follow_the_leader, interval_oracle_pca};
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SymMatrix};
use crate::pca::{DataPoint, PcaLearner, StaticPcaLearner};

/// What stream an experiment runs on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// Concatenated stationary blocks, each supported on a fresh random
    /// low-dimensional subspace.
    ToySwitching {
        intervals: usize,
        samples_per_interval: usize,
        cov_rank: usize,
    },
    /// One stationary block.
    RandomCovariance { samples: usize, cov_rank: usize },
    /// Data supplied by the caller, e.g. loaded from a CSV file.
    Dataset,
}

/// Full description of one experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    pub eta: f64,
    pub alpha: f64,
    pub seed: u64,
    pub scenario: Scenario,
    pub compute_regret: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.k == 0 || self.k >= self.n {
            return Err(Error::invalid(format!(
                "need 1 <= k < n with n >= 2, got k = {}, n = {}",
                self.k, self.n
            )));
        }
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(Error::invalid(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        match self.scenario {
            Scenario::ToySwitching {
                intervals,
                samples_per_interval,
                cov_rank,
            } => {
                if intervals == 0 || samples_per_interval == 0 {
                    return Err(Error::invalid("need at least one interval and one sample"));
                }
                check_rank(self.n, cov_rank)?;
            }
            Scenario::RandomCovariance { samples, cov_rank } => {
                if samples == 0 {
                    return Err(Error::invalid("need at least one sample"));
                }
                check_rank(self.n, cov_rank)?;
            }
            Scenario::Dataset => {}
        }
        Ok(())
    }
}

fn check_rank(n: usize, cov_rank: usize) -> Result<()> {
    if cov_rank == 0 || cov_rank > n {
        return Err(Error::invalid(format!(
            "covariance rank must satisfy 1 <= rank <= n, got {cov_rank}"
        )));
    }
    Ok(())
}

/// Draws `samples` points from one random `rank`-dimensional subspace, scaled
/// into the unit ball.
fn rank_limited_block(
    n: usize,
    rank: usize,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<DataPoint>> {
    let g = DMatrix::from_fn(n, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
    let gram = SymMatrix::symmetrize(g.transpose() * &g);
    let top = sym_eigen(&gram)?.value(0).max(1e-12);
    let basis = g / top.sqrt();
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let z = DVector::from_fn(rank, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut x = &basis * z;
        let norm = x.norm();
        if norm > 1.0 {
            x /= norm;
        }
        out.push(DataPoint::from_vector(x)?);
    }
    Ok(out)
}

/// Stream that switches to a fresh random subspace every
/// `samples_per_interval` steps.
pub fn generate_toy_switching(
    n: usize,
    intervals: usize,
    samples_per_interval: usize,
    cov_rank: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<DataPoint>> {
    if intervals == 0 || samples_per_interval == 0 {
        return Err(Error::invalid("need at least one interval and one sample"));
    }
    check_rank(n, cov_rank)?;
    let mut data = Vec::with_capacity(intervals * samples_per_interval);
    for _ in 0..intervals {
        data.extend(rank_limited_block(n, cov_rank, samples_per_interval, rng)?);
    }
    Ok(data)
}

/// Stationary stream on a single random subspace.
pub fn generate_stationary(
    n: usize,
    samples: usize,
    cov_rank: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<DataPoint>> {
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    check_rank(n, cov_rank)?;
    rank_limited_block(n, cov_rank, samples, rng)
}

/// Reads one data point per CSV row; rows longer than the unit ball are
/// scaled back onto the sphere. Row numbers in errors are 1-based.
pub fn load_matrix_csv(path: &Path) -> Result<Vec<DataPoint>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let row = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::ParseError {
                    row,
                    message: format!("expected {w} fields, found {}", fields.len()),
                })
            }
            Some(_) => {}
        }
        let mut coords = Vec::with_capacity(fields.len());
        for field in &fields {
            let value: f64 = field.trim().parse().map_err(|_| Error::ParseError {
                row,
                message: format!("not a number: {:?}", field.trim()),
            })?;
            if !value.is_finite() {
                return Err(Error::ParseError {
                    row,
                    message: "non-finite value".to_string(),
                });
            }
            coords.push(value);
        }
        let mut x = DVector::from_vec(coords);
        let norm = x.norm();
        if norm > 1.0 {
            x /= norm;
        }
        out.push(DataPoint::from_vector(x).map_err(|e| Error::ParseError {
            row,
            message: e.to_string(),
        })?);
    }
    if out.is_empty() {
        return Err(Error::invalid("no data rows in file"));
    }
    Ok(out)
}

/// Worst interval regret and the 1-indexed inclusive interval attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalRegret {
    pub value: f64,
    pub start: usize,
    pub end: usize,
}

/// Offline comparator losses for all intervals, indexed as
/// `table[r - 1][s - r]`.
fn oracle_table(data: &[DataPoint], k: usize) -> Result<Vec<Vec<f64>>> {
    let t = data.len();
    let n = data[0].dim();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "projection rank must satisfy 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let mut prefix: Vec<SymMatrix> = Vec::with_capacity(t + 1);
    prefix.push(SymMatrix::zeros(n));
    for x in data {
        if x.dim() != n {
            return Err(Error::invalid("data points have mixed dimensions"));
        }
        prefix.push(prefix.last().expect("non-empty").add_scaled(&x.outer(), 1.0));
    }
    let mut table = Vec::with_capacity(t);
    for r in 1..=t {
        let mut row = Vec::with_capacity(t - r + 1);
        for s in r..=t {
            let scatter = prefix[s].add_scaled(&prefix[r - 1], -1.0);
            let eig = sym_eigen(&scatter)?;
            let kept: f64 = eig.values()[..k].iter().sum();
            row.push(scatter.trace() - kept);
        }
        table.push(row);
    }
    Ok(table)
}

fn scan_worst_interval(expected: &[f64], table: &[Vec<f64>]) -> IntervalRegret {
    let t = expected.len();
    let mut loss_prefix = Vec::with_capacity(t + 1);
    loss_prefix.push(0.0);
    for &l in expected {
        loss_prefix.push(loss_prefix.last().expect("non-empty") + l);
    }
    let mut best = IntervalRegret {
        value: f64::NEG_INFINITY,
        start: 1,
        end: 1,
    };
    for r in 1..=t {
        for s in r..=t {
            let regret = loss_prefix[s] - loss_prefix[r - 1] - table[r - 1][s - r];
            if regret > best.value {
                best = IntervalRegret {
                    value: regret,
                    start: r,
                    end: s,
                };
            }
        }
    }
    best
}

/// Worst regret over all contiguous intervals, against the best fixed
/// projection per interval.
pub fn adaptive_regret_pca(
    expected: &[f64],
    data: &[DataPoint],
    k: usize,
) -> Result<IntervalRegret> {
    if expected.len() != data.len() || data.is_empty() {
        return Err(Error::invalid(
            "expected losses and data must have equal positive length",
        ));
    }
    let table = oracle_table(data, k)?;
    Ok(scan_worst_interval(expected, &table))
}

/// Regret on the full stream against the best fixed projection.
pub fn static_regret_pca(expected: &[f64], data: &[DataPoint], k: usize) -> Result<f64> {
    if expected.len() != data.len() || data.is_empty() {
        return Err(Error::invalid(
            "expected losses and data must have equal positive length",
        ));
    }
    let total: f64 = expected.iter().sum();
    Ok(total - interval_oracle_pca(data, 1, data.len(), k)?)
}

/// Loss trajectory of one algorithm.
#[derive(Clone, Debug)]
pub struct AlgoRun {
    pub name: String,
    pub sampled: Vec<f64>,
    pub expected: Vec<f64>,
    pub cum_sampled: Vec<f64>,
    pub cum_expected: Vec<f64>,
}

fn finish_run(name: &str, sampled: Vec<f64>, expected: Vec<f64>) -> AlgoRun {
    let cumulate = |xs: &[f64]| {
        let mut sum = 0.0;
        xs.iter()
            .map(|&x| {
                sum += x;
                sum
            })
            .collect::<Vec<f64>>()
    };
    AlgoRun {
        name: name.to_string(),
        cum_sampled: cumulate(&sampled),
        cum_expected: cumulate(&expected),
        sampled,
        expected,
    }
}

/// Regret of one algorithm's expected-loss curve.
#[derive(Clone, Debug)]
pub struct RegretSummary {
    pub name: String,
    pub static_regret: f64,
    pub adaptive_regret: IntervalRegret,
}

/// Everything one experiment produced.
#[derive(Clone, Debug)]
pub struct RegretReport {
    pub t: usize,
    pub algos: Vec<AlgoRun>,
    pub regrets: Option<Vec<RegretSummary>>,
}

fn step_error(step: usize, e: Error) -> Error {
    Error::invalid(format!("step {step}: {e}"))
}

/// Runs the four contenders on the given stream.
pub fn run_on_data(cfg: &ExperimentConfig, data: &[DataPoint]) -> Result<RegretReport> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("empty data stream"));
    }
    if data.iter().any(|x| x.dim() != cfg.n) {
        return Err(Error::invalid("data dimension does not match config"));
    }
    let t = data.len();
    let (n, k) = (cfg.n, cfg.k);

    let mut adaptive = PcaLearner::new(n, k, cfg.eta, cfg.alpha)?;
    let mut rng_adaptive = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng_adaptive.set_stream(1);
    let mut fixed = StaticPcaLearner::new(n, k, cfg.eta)?;
    let mut rng_fixed = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng_fixed.set_stream(2);

    let mut runs: Vec<(Vec<f64>, Vec<f64>)> = vec![
        (Vec::with_capacity(t), Vec::with_capacity(t)),
        (Vec::with_capacity(t), Vec::with_capacity(t)),
        (Vec::with_capacity(t), Vec::with_capacity(t)),
        (Vec::with_capacity(t), Vec::with_capacity(t)),
    ];
    let best_fixed = best_fixed_projection(data, k)?;

    for (i, x) in data.iter().enumerate() {
        let step = i + 1;
        let expected = adaptive.expected_loss(x).map_err(|e| step_error(step, e))?;
        let p = adaptive.choose(&mut rng_adaptive).map_err(|e| step_error(step, e))?;
        runs[0].0.push(p.compression_loss(x.vector()));
        runs[0].1.push(expected);
        adaptive.update(x).map_err(|e| step_error(step, e))?;

        let expected = fixed.expected_loss(x).map_err(|e| step_error(step, e))?;
        let p = fixed.choose(&mut rng_fixed).map_err(|e| step_error(step, e))?;
        runs[1].0.push(p.compression_loss(x.vector()));
        runs[1].1.push(expected);
        fixed.update(x).map_err(|e| step_error(step, e))?;

        let leader = follow_the_leader(n, k, &data[..i])?;
        let loss = leader.compression_loss(x.vector());
        runs[2].0.push(loss);
        runs[2].1.push(loss);

        let loss = best_fixed.compression_loss(x.vector());
        runs[3].0.push(loss);
        runs[3].1.push(loss);
    }

    let names = ["adaptive_pca", "static_pca", "follow_the_leader", "best_fixed"];
    let algos: Vec<AlgoRun> = names
        .iter()
        .zip(runs)
        .map(|(name, (sampled, expected))| finish_run(name, sampled, expected))
        .collect();

    let regrets = if cfg.compute_regret {
        let table = oracle_table(data, k)?;
        let whole = table[0][t - 1];
        Some(
            algos
                .iter()
                .map(|run| RegretSummary {
                    name: run.name.clone(),
                    static_regret: run.cum_expected[t - 1] - whole,
                    adaptive_regret: scan_worst_interval(&run.expected, &table),
                })
                .collect(),
        )
    } else {
        None
    };

    Ok(RegretReport { t, algos, regrets })
}

/// Generates the configured scenario and runs on it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RegretReport> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0);
    let data = match cfg.scenario {
        Scenario::ToySwitching {
            intervals,
            samples_per_interval,
            cov_rank,
        } => generate_toy_switching(cfg.n, intervals, samples_per_interval, cov_rank, &mut rng)?,
        Scenario::RandomCovariance { samples, cov_rank } => {
            generate_stationary(cfg.n, samples, cov_rank, &mut rng)?
        }
        Scenario::Dataset => {
            return Err(Error::invalid(
                "dataset scenario requires data loaded by the caller",
            ))
        }
    };
    run_on_data(cfg, &data)
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes per-step losses, one row per step and algorithm.
pub fn write_loss_csv<W: IoWrite>(w: &mut W, report: &RegretReport) -> Result<()> {
    writeln!(w, "step,algo,sampled_loss,expected_loss,cum_sampled,cum_expected")?;
    for t in 0..report.t {
        for run in &report.algos {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                t + 1,
                run.name,
                fmt_f64(run.sampled[t]),
                fmt_f64(run.expected[t]),
                fmt_f64(run.cum_sampled[t]),
                fmt_f64(run.cum_expected[t]),
            )?;
        }
    }
    Ok(())
}

/// Writes one regret row per algorithm; requires a report built with
/// `compute_regret`.
pub fn write_regret_csv<W: IoWrite>(w: &mut W, report: &RegretReport) -> Result<()> {
    let regrets = report
        .regrets
        .as_ref()
        .ok_or_else(|| Error::invalid("report carries no regret summaries"))?;
    writeln!(w, "algo,static_regret,adaptive_regret,argmax_r,argmax_s")?;
    for summary in regrets {
        writeln!(
            w,
            "{},{},{},{},{}",
            summary.name,
            fmt_f64(summary.static_regret),
            fmt_f64(summary.adaptive_regret.value),
            summary.adaptive_regret.start,
            summary.adaptive_regret.end,
        )?;
    }
    Ok(())
}

/// Total upward movement of a weight trajectory; a diagnostic for how much
/// the comparator sequence shifts over time.
pub fn comparator_path_length(weights: &[Vec<f64>]) -> f64 {
    weights
        .windows(2)
        .map(|pair| {
            pair[1]
                .iter()
                .zip(pair[0].iter())
                .map(|(&next, &prev)| (next - prev).max(0.0))
                .sum::<f64>()
        })
        .sum()
}
