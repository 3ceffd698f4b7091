//! Empirical checks of the theory: measured interval regrets must stay under
//! the closed-form bounds, and the per-step inequalities that the bound
//! proofs telescope must hold at every step. Each audit runs on freshly
//! generated random streams, seeded for reproducibility.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::comparators::{interval_oracle_pca, min_variance_simplex, SimplexQpOptions};
use crate::error::{Error, Result};
use crate::experts::{tune_expert, ExpertLearner, LossVector};
use crate::harness::adaptive_regret_pca;
use crate::linalg::{sym_eigen, DensityMatrix, SymMatrix};
use crate::pca::{tune_pca, DataPoint, PcaLearner};
use crate::simplex::cap;
use crate::variance::{
    tune_simplex_var, tune_unit_var_t, CovarianceMatrix, SimplexVarianceLearner,
    UnitVarianceLearner,
};

/// Tolerance added to every closed-form bound before declaring a violation.
const BOUND_SLACK: f64 = 1e-9;

/// One random stream checked against a regret bound.
#[derive(Clone, Debug)]
pub struct BoundTrial {
    pub trial: usize,
    pub measured: f64,
    pub bound: f64,
    /// 1-indexed inclusive interval where the worst regret occurred.
    pub interval: (usize, usize),
    pub holds: bool,
}

/// Worst violation of a per-step inequality over a whole stream.
#[derive(Clone, Debug)]
pub struct StepAuditReport {
    pub worst_gap: f64,
    pub steps: usize,
    pub holds: bool,
}

fn gaussian_vector(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn random_orthonormal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

fn random_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = draws.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / n as f64; n];
    }
    draws.iter().map(|&d| d / total).collect()
}

/// Random comparator in the capped simplex: a capped random simplex point.
fn random_capped_weights(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    Ok(cap(&random_simplex(n, rng), d)?.weights().to_vec())
}

/// Random density matrix with a capped spectrum in a random eigenbasis.
fn random_capped_density(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Result<DensityMatrix> {
    let basis = random_orthonormal(n, rng);
    let spectrum = random_capped_weights(n, d, rng)?;
    DensityMatrix::from_spectrum(&basis, &spectrum)
}

/// Random density matrix with an uncapped spectrum.
fn random_density(n: usize, rng: &mut ChaCha8Rng) -> Result<DensityMatrix> {
    let basis = random_orthonormal(n, rng);
    let spectrum = random_simplex(n, rng);
    DensityMatrix::from_spectrum(&basis, &spectrum)
}

/// Random point with norm in `[0.3, 1]`, kept away from zero so streams stay
/// informative.
fn random_unit_data(n: usize, rng: &mut ChaCha8Rng) -> Result<DataPoint> {
    let g = gaussian_vector(n, rng);
    let target = 0.3 + 0.7 * rng.random::<f64>();
    let scale = target / g.norm().max(1e-12);
    DataPoint::from_vector(g * scale)
}

/// Random positive semidefinite matrix with spectral norm one.
fn random_covariance(n: usize, rng: &mut ChaCha8Rng) -> Result<CovarianceMatrix> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let a = SymMatrix::symmetrize(&g * g.transpose());
    let top = sym_eigen(&a)?.value(0).max(1e-12);
    CovarianceMatrix::try_new(a.scale(1.0 / top))
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn check_audit_sizes(t: usize, trials: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::invalid("audit needs at least one step"));
    }
    if trials == 0 {
        return Err(Error::invalid("audit needs at least one trial"));
    }
    Ok(())
}

/// Runs the subset learner on uniform random losses and checks its worst
/// interval regret against `sqrt(2 L D) + D`, where the comparator on each
/// interval is the best capped weight vector in hindsight.
pub fn audit_expert_bound(
    n: usize,
    k: usize,
    t: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<BoundTrial>> {
    check_audit_sizes(t, trials)?;
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "need 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let d = n - k;
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let losses: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
            .collect();

        let mut coord_prefix = vec![vec![0.0; n]];
        for step_losses in &losses {
            let last = coord_prefix.last().expect("non-empty");
            let next: Vec<f64> = last
                .iter()
                .zip(step_losses.iter())
                .map(|(&a, &b)| a + b)
                .collect();
            coord_prefix.push(next);
        }
        // Linear losses are minimized over the capped set at a corner, so the
        // comparator is the average of the d smallest coordinate totals
        // times d, i.e. their plain sum.
        let comparator = |r: usize, s: usize| -> f64 {
            let mut totals: Vec<f64> = (0..n)
                .map(|j| coord_prefix[s][j] - coord_prefix[r - 1][j])
                .collect();
            totals.sort_by(|a, b| a.partial_cmp(b).expect("finite losses"));
            totals[..d].iter().sum()
        };

        let budget = comparator(1, t);
        let tuning = tune_expert(t, n, k, budget)?;
        let mut learner = ExpertLearner::new(n, k, tuning.eta, tuning.alpha)?;
        let mut expected = Vec::with_capacity(t);
        for step_losses in &losses {
            let lv = LossVector::try_new(step_losses.clone())?;
            expected.push(learner.expected_loss(&lv)?);
            learner.update(&lv)?;
        }

        let mut loss_prefix = vec![0.0];
        for &l in &expected {
            loss_prefix.push(loss_prefix.last().expect("non-empty") + l);
        }
        let mut measured = f64::NEG_INFINITY;
        let mut interval = (1, 1);
        for r in 1..=t {
            for s in r..=t {
                let regret = loss_prefix[s] - loss_prefix[r - 1] - comparator(r, s);
                if regret > measured {
                    measured = regret;
                    interval = (r, s);
                }
            }
        }
        let bound = (2.0 * budget * tuning.complexity).sqrt() + tuning.complexity;
        out.push(BoundTrial {
            trial,
            measured,
            bound,
            interval,
            holds: measured <= bound + BOUND_SLACK,
        });
    }
    Ok(out)
}

/// Runs the PCA learner on random unit-ball streams and checks its worst
/// interval regret against `sqrt(2 L D) + D`.
pub fn audit_pca_bound(
    n: usize,
    k: usize,
    t: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<BoundTrial>> {
    check_audit_sizes(t, trials)?;
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let data: Vec<DataPoint> = (0..t)
            .map(|_| random_unit_data(n, &mut rng))
            .collect::<Result<_>>()?;
        let budget = interval_oracle_pca(&data, 1, t, k)?;
        let tuning = tune_pca(t, n, k, budget)?;
        let mut learner = PcaLearner::new(n, k, tuning.eta, tuning.alpha)?;
        let mut expected = Vec::with_capacity(t);
        for x in &data {
            expected.push(learner.expected_loss(x)?);
            learner.update(x)?;
        }
        let regret = adaptive_regret_pca(&expected, &data, k)?;
        let bound = (2.0 * budget * tuning.complexity).sqrt() + tuning.complexity;
        out.push(BoundTrial {
            trial,
            measured: regret.value,
            bound,
            interval: (regret.start, regret.end),
            holds: regret.value <= bound + BOUND_SLACK,
        });
    }
    Ok(out)
}

/// Runs the unit-vector variance learner on random covariance streams and
/// checks its worst interval regret against the fixed-share bound
/// `(ln(n / alpha) + T ln(1 / (1 - alpha))) / eta + eta T / 2`.
pub fn audit_unit_var_bound(
    n: usize,
    t: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<BoundTrial>> {
    check_audit_sizes(t, trials)?;
    let tuning = tune_unit_var_t(t, n)?;
    let horizon = t as f64;
    let bound = ((n as f64 / tuning.alpha).ln() + horizon * (1.0 / (1.0 - tuning.alpha)).ln())
        / tuning.eta
        + tuning.eta * horizon / 2.0;
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let covs: Vec<CovarianceMatrix> = (0..t)
            .map(|_| random_covariance(n, &mut rng))
            .collect::<Result<_>>()?;
        let mut learner = UnitVarianceLearner::new(n, tuning.eta, tuning.alpha)?;
        let mut expected = Vec::with_capacity(t);
        for c in &covs {
            expected.push(learner.expected_loss(c)?);
            learner.update(c)?;
        }

        let mut prefix: Vec<SymMatrix> = vec![SymMatrix::zeros(n)];
        for c in &covs {
            prefix.push(prefix.last().expect("non-empty").add_scaled(c.matrix(), 1.0));
        }
        let mut loss_prefix = vec![0.0];
        for &l in &expected {
            loss_prefix.push(loss_prefix.last().expect("non-empty") + l);
        }
        let mut measured = f64::NEG_INFINITY;
        let mut interval = (1, 1);
        for r in 1..=t {
            for s in r..=t {
                let sum = prefix[s].add_scaled(&prefix[r - 1], -1.0);
                let min_eig = sym_eigen(&sum)?.value(n - 1);
                let regret = loss_prefix[s] - loss_prefix[r - 1] - min_eig;
                if regret > measured {
                    measured = regret;
                    interval = (r, s);
                }
            }
        }
        out.push(BoundTrial {
            trial,
            measured,
            bound,
            interval,
            holds: measured <= bound + BOUND_SLACK,
        });
    }
    Ok(out)
}

/// Runs the simplex variance learner on drifting covariance streams and
/// checks its worst interval regret against
/// `2 sqrt(2 L (ln((1 + T) n) + 1)) + 2 ln((1 + T) n)`.
pub fn audit_simplex_var_bound(
    n: usize,
    t: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<BoundTrial>> {
    check_audit_sizes(t, trials)?;
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let segment = (t / 3).max(1);
        let mut covs = Vec::with_capacity(t);
        let mut base = random_covariance(n, &mut rng)?;
        for i in 0..t {
            if i > 0 && i % segment == 0 {
                base = random_covariance(n, &mut rng)?;
            }
            let noise = random_covariance(n, &mut rng)?;
            let mixed = base.matrix().scale(0.85).add_scaled(noise.matrix(), 0.15);
            covs.push(CovarianceMatrix::try_new(mixed)?);
        }

        let mut prefix: Vec<SymMatrix> = vec![SymMatrix::zeros(n)];
        for c in &covs {
            prefix.push(prefix.last().expect("non-empty").add_scaled(c.matrix(), 1.0));
        }

        let full = prefix[t].clone();
        let (budget, _) =
            min_variance_simplex(&full, &SimplexQpOptions::default(), None, &mut rng)?;
        let tuning = tune_simplex_var(t, n, budget)?;
        let mut learner = SimplexVarianceLearner::new(n, tuning.eta, tuning.alpha)?;
        let mut expected = Vec::with_capacity(t);
        for c in &covs {
            expected.push(learner.expected_loss(c)?);
            learner.update(c)?;
        }
        let mut loss_prefix = vec![0.0];
        for &l in &expected {
            loss_prefix.push(loss_prefix.last().expect("non-empty") + l);
        }

        let scan_opts = SimplexQpOptions {
            random_starts: 1,
            max_iters: 250,
            tol: 1e-12,
        };
        let mut measured = f64::NEG_INFINITY;
        let mut interval = (1, 1);
        for r in 1..=t {
            let mut warm: Option<Vec<f64>> = None;
            for s in r..=t {
                let sum = prefix[s].add_scaled(&prefix[r - 1], -1.0);
                let (val, argmin) =
                    min_variance_simplex(&sum, &scan_opts, warm.as_deref(), &mut rng)?;
                warm = Some(argmin);
                let regret = loss_prefix[s] - loss_prefix[r - 1] - val;
                if regret > measured {
                    measured = regret;
                    interval = (r, s);
                }
            }
        }

        let log_term = ((1.0 + t as f64) * n as f64).ln();
        let bound = 2.0 * (2.0 * budget * (log_term + 1.0)).sqrt() + 2.0 * log_term;
        out.push(BoundTrial {
            trial,
            measured,
            bound,
            interval,
            holds: measured <= bound + BOUND_SLACK,
        });
    }
    Ok(out)
}

/// Per-step inequality behind the subset bound: for every comparator `q` in
/// the capped set,
/// `w^T l (1 - e^{-eta}) - eta q^T l <= sum_i q_i ln(v_i / w_hat_i)`.
pub fn audit_hedge_step_inequality(
    n: usize,
    k: usize,
    t: usize,
    seed: u64,
    slack: f64,
) -> Result<StepAuditReport> {
    check_audit_sizes(t, 1)?;
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "need 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let d = n - k;
    let mut rng = trial_rng(seed, 0);
    let qs: Vec<Vec<f64>> = (0..5)
        .map(|_| random_capped_weights(n, d, &mut rng))
        .collect::<Result<_>>()?;
    let tuning = tune_expert(t, n, k, 0.3 * (t * d) as f64)?;
    let mut learner = ExpertLearner::new(n, k, tuning.eta, tuning.alpha)?;
    let factor = 1.0 - (-tuning.eta).exp();

    let mut worst = f64::NEG_INFINITY;
    for _ in 0..t {
        let losses: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let w = learner.weights().weights().to_vec();
        let w_hat = learner.pre_cap().to_vec();
        let step = learner.update(&LossVector::try_new(losses.clone())?)?;

        let w_loss: f64 = w.iter().zip(losses.iter()).map(|(&a, &b)| a * b).sum();
        for q in &qs {
            let q_loss: f64 = q.iter().zip(losses.iter()).map(|(&a, &b)| a * b).sum();
            let lhs = w_loss * factor - tuning.eta * q_loss;
            let rhs: f64 = q
                .iter()
                .enumerate()
                .map(|(i, &qi)| qi * (step.hedge[i] / w_hat[i]).ln())
                .sum();
            worst = worst.max(lhs - rhs);
        }
    }
    Ok(StepAuditReport {
        worst_gap: worst,
        steps: t,
        holds: worst <= slack,
    })
}

/// Matrix analogue of the per-step inequality: for every capped density `Q`,
/// `tr(W x x^T)(1 - e^{-eta}) - eta tr(Q x x^T)
///  <= -tr(Q ln W_hat) + tr(Q ln V)`.
pub fn audit_matrix_step_inequality(
    n: usize,
    k: usize,
    t: usize,
    seed: u64,
    slack: f64,
) -> Result<StepAuditReport> {
    check_audit_sizes(t, 1)?;
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "need 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let d = n - k;
    let mut rng = trial_rng(seed, 0);
    let qs: Vec<DensityMatrix> = (0..5)
        .map(|_| random_capped_density(n, d, &mut rng))
        .collect::<Result<_>>()?;
    let tuning = tune_pca(t, n, k, 0.3 * (t * d) as f64)?;
    let mut learner = PcaLearner::new(n, k, tuning.eta, tuning.alpha)?;
    let factor = 1.0 - (-tuning.eta).exp();

    let mut worst = f64::NEG_INFINITY;
    for _ in 0..t {
        let x = random_unit_data(n, &mut rng)?;
        let xx = x.outer();
        let w = learner.density().clone();
        let log_w_hat = learner.log_pre_cap().clone();
        let step = learner.update(&x)?;

        let w_loss = w.matrix().trace_product(&xx);
        for q in &qs {
            let lhs = w_loss * factor - tuning.eta * q.matrix().trace_product(&xx);
            let rhs = q.matrix().trace_product(&step.log_hedge)
                - q.matrix().trace_product(&log_w_hat);
            worst = worst.max(lhs - rhs);
        }
    }
    Ok(StepAuditReport {
        worst_gap: worst,
        steps: t,
        holds: worst <= slack,
    })
}

/// Per-step inequality behind the unit-variance bound: for every density `Q`,
/// `tr(Y C) - tr(Q C) <= (tr(Q ln V) - tr(Q ln Y)) / eta + eta / 2`.
pub fn audit_variance_step_inequality(
    n: usize,
    t: usize,
    seed: u64,
    slack: f64,
) -> Result<StepAuditReport> {
    check_audit_sizes(t, 1)?;
    let mut rng = trial_rng(seed, 0);
    let qs: Vec<DensityMatrix> = (0..5)
        .map(|_| random_density(n, &mut rng))
        .collect::<Result<_>>()?;
    let tuning = tune_unit_var_t(t, n)?;
    let mut learner = UnitVarianceLearner::new(n, tuning.eta, tuning.alpha)?;

    let mut worst = f64::NEG_INFINITY;
    for _ in 0..t {
        let c = random_covariance(n, &mut rng)?;
        let y = learner.density().clone();
        let log_y = learner.log_density().clone();
        let step = learner.update(&c)?;

        let y_loss = y.matrix().trace_product(c.matrix());
        for q in &qs {
            let lhs = y_loss - q.matrix().trace_product(c.matrix());
            let rhs = (q.matrix().trace_product(&step.log_hedge)
                - q.matrix().trace_product(&log_y))
                / tuning.eta
                + tuning.eta / 2.0;
            worst = worst.max(lhs - rhs);
        }
    }
    Ok(StepAuditReport {
        worst_gap: worst,
        steps: t,
        holds: worst <= slack,
    })
}
