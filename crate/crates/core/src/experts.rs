//! Randomized learner for tracking the best size-`n - k` subset of experts.
//!
//! Per step: a multiplicative-weights update on the losses, a fixed-share mix
//! toward uniform, and a projection back onto the capped simplex. Subsets are
//! drawn by decomposing the weight vector into corners.

use rand::Rng;

use crate::error::{Error, Result};
use crate::simplex::{cap, decompose, fixed_share, sample_corner, CappedSimplexVector, Corner};

/// Per-expert losses for one step, each in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn try_new(losses: Vec<f64>) -> Result<Self> {
        if losses.is_empty() {
            return Err(Error::invalid("loss vector must be non-empty"));
        }
        for (i, &l) in losses.iter().enumerate() {
            if !l.is_finite() || !(0.0..=1.0).contains(&l) {
                return Err(Error::invalid(format!(
                    "loss {l} at index {i} is outside [0, 1]"
                )));
            }
        }
        Ok(LossVector(losses))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Constants produced by the horizon-and-budget tuning rule shared by the
/// subset learners: share rate, complexity term `D`, and learning rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubsetTuning {
    pub alpha: f64,
    pub complexity: f64,
    pub eta: f64,
}

/// Tuning for competing against size-`d` subsets over `t` steps when the best
/// comparator loss is at most `loss_budget`.
pub(crate) fn subset_tuning(
    t: usize,
    n: usize,
    d: usize,
    loss_budget: f64,
) -> Result<SubsetTuning> {
    if t == 0 {
        return Err(Error::invalid("horizon must be at least one step"));
    }
    if n < 2 || d == 0 || d >= n {
        return Err(Error::invalid(format!(
            "subset size must satisfy 1 <= d < n, got d = {d}, n = {n}"
        )));
    }
    if !loss_budget.is_finite() || loss_budget <= 0.0 {
        return Err(Error::invalid(format!(
            "loss budget must be positive and finite, got {loss_budget}"
        )));
    }
    let (t, n, d) = (t as f64, n as f64, d as f64);
    let alpha = 1.0 / (d * t + 1.0);
    let complexity = d * (n * (1.0 + d * t)).ln() + 1.0;
    let eta = (1.0 + (2.0 * complexity / loss_budget).sqrt()).ln();
    Ok(SubsetTuning {
        alpha,
        complexity,
        eta,
    })
}

/// Share rate, complexity, and learning rate for the expert-subset learner.
pub fn tune_expert(t: usize, n: usize, k: usize, loss_budget: f64) -> Result<SubsetTuning> {
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "subset complement must satisfy 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    subset_tuning(t, n, n - k, loss_budget)
}

/// One sampled decision: the `k` protected experts (the zero entries of the
/// drawn corner) together with the corner itself, whose support carries the
/// step's loss.
#[derive(Clone, Debug)]
pub struct SubsetChoice {
    pub subset: Vec<usize>,
    pub corner: Corner,
}

/// Intermediate vectors of one update, kept for the per-step audits.
#[derive(Clone, Debug)]
pub struct ExpertStep {
    /// Multiplicative-weights vector before sharing.
    pub hedge: Vec<f64>,
    /// Post-share vector before capping.
    pub shared: Vec<f64>,
}

fn hedge_update(w: &[f64], loss: &[f64], eta: f64) -> Vec<f64> {
    let weighted: Vec<f64> = w
        .iter()
        .zip(loss)
        .map(|(&wi, &li)| wi * (-eta * li).exp())
        .collect();
    let z: f64 = weighted.iter().sum();
    weighted.into_iter().map(|v| v / z).collect()
}

fn choose_subset<R: Rng + ?Sized>(
    weights: &CappedSimplexVector,
    rng: &mut R,
) -> Result<SubsetChoice> {
    let mix = decompose(weights)?;
    let corner = sample_corner(&mix, rng)?;
    Ok(SubsetChoice {
        subset: corner.zero_set(),
        corner,
    })
}

fn check_learner_params(n: usize, k: usize, eta: f64, alpha: f64) -> Result<()> {
    if n < 2 || k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "need 1 <= k < n with n >= 2, got k = {k}, n = {n}"
        )));
    }
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Adaptive expert-subset learner over the capped simplex.
#[derive(Clone, Debug)]
pub struct ExpertLearner {
    n: usize,
    k: usize,
    eta: f64,
    alpha: f64,
    weights: CappedSimplexVector,
    pre_cap: Vec<f64>,
}

impl ExpertLearner {
    /// Starts from the uniform distribution.
    pub fn new(n: usize, k: usize, eta: f64, alpha: f64) -> Result<Self> {
        check_learner_params(n, k, eta, alpha)?;
        let weights = CappedSimplexVector::uniform(n, n - k)?;
        let pre_cap = weights.weights().to_vec();
        Ok(ExpertLearner {
            n,
            k,
            eta,
            alpha,
            weights,
            pre_cap,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Current capped weight vector.
    pub fn weights(&self) -> &CappedSimplexVector {
        &self.weights
    }

    /// Post-share vector that was capped into `weights`; equals the initial
    /// weights before the first update.
    pub fn pre_cap(&self) -> &[f64] {
        &self.pre_cap
    }

    /// Samples a corner and reports its zero set as the protected subset.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SubsetChoice> {
        choose_subset(&self.weights, rng)
    }

    /// Expectation weights of the per-expert losses: `(n - k) w`.
    pub fn expected_loss_weights(&self) -> Vec<f64> {
        let scale = (self.n - self.k) as f64;
        self.weights.weights().iter().map(|&w| w * scale).collect()
    }

    /// Expected loss of the sampled subset, `(n - k) w . loss`.
    pub fn expected_loss(&self, loss: &LossVector) -> Result<f64> {
        if loss.len() != self.n {
            return Err(Error::invalid("loss length does not match expert count"));
        }
        let dot: f64 = self
            .weights
            .weights()
            .iter()
            .zip(loss.as_slice())
            .map(|(w, l)| w * l)
            .sum();
        Ok((self.n - self.k) as f64 * dot)
    }

    /// Multiplicative-weights step, fixed-share mix, cap. Returns the
    /// intermediate vectors for auditing.
    pub fn update(&mut self, loss: &LossVector) -> Result<ExpertStep> {
        if loss.len() != self.n {
            return Err(Error::invalid("loss length does not match expert count"));
        }
        let hedge = hedge_update(self.weights.weights(), loss.as_slice(), self.eta);
        let shared = fixed_share(&hedge, self.alpha)?;
        self.weights = cap(&shared, self.n - self.k)?;
        self.pre_cap = shared.clone();
        Ok(ExpertStep { hedge, shared })
    }
}

/// Non-adaptive variant: identical update with the fixed-share step removed.
/// Matches the adaptive learner bit for bit when `alpha = 0`.
#[derive(Clone, Debug)]
pub struct StaticExpertLearner {
    n: usize,
    k: usize,
    eta: f64,
    weights: CappedSimplexVector,
}

impl StaticExpertLearner {
    pub fn new(n: usize, k: usize, eta: f64) -> Result<Self> {
        check_learner_params(n, k, eta, 0.0)?;
        Ok(StaticExpertLearner {
            n,
            k,
            eta,
            weights: CappedSimplexVector::uniform(n, n - k)?,
        })
    }

    pub fn weights(&self) -> &CappedSimplexVector {
        &self.weights
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SubsetChoice> {
        choose_subset(&self.weights, rng)
    }

    pub fn expected_loss(&self, loss: &LossVector) -> Result<f64> {
        if loss.len() != self.n {
            return Err(Error::invalid("loss length does not match expert count"));
        }
        let dot: f64 = self
            .weights
            .weights()
            .iter()
            .zip(loss.as_slice())
            .map(|(w, l)| w * l)
            .sum();
        Ok((self.n - self.k) as f64 * dot)
    }

    pub fn update(&mut self, loss: &LossVector) -> Result<()> {
        if loss.len() != self.n {
            return Err(Error::invalid("loss length does not match expert count"));
        }
        let hedge = hedge_update(self.weights.weights(), loss.as_slice(), self.eta);
        self.weights = cap(&hedge, self.n - self.k)?;
        Ok(())
    }
}
