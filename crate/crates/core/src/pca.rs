//! Randomized online PCA: a matrix exponentiated-gradient update over density
//! matrices with a spectral fixed-share mix and eigenvalue capping. The
//! density matrix weights the directions to *discard*; sampling a corner of
//! its spectrum yields the rank-`k` projection that is kept.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
pub use crate::experts::SubsetTuning;
use crate::experts::subset_tuning;
use crate::linalg::{
    exp_normalized_spectral, matrix_log, sym_eigen, sym_from_spectrum, DensityMatrix,
    ProjectionMatrix, SymMatrix, EIG_FLOOR,
};
use crate::simplex::{cap, decompose, fixed_share, sample_corner, CappedSimplexVector};

/// One streamed observation with `||x||_2 <= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DataPoint {
    x: DVector<f64>,
}

impl DataPoint {
    pub fn try_new(coords: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(coords))
    }

    pub fn from_vector(x: DVector<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::invalid("data point must be non-empty"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("data point has non-finite entries"));
        }
        let norm = x.norm();
        if norm > 1.0 + 1e-10 {
            return Err(Error::invalid(format!(
                "data point norm must be at most one, got {norm}"
            )));
        }
        Ok(DataPoint { x })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn norm(&self) -> f64 {
        self.x.norm()
    }

    /// `x x^T`, the per-step loss matrix.
    pub fn outer(&self) -> SymMatrix {
        SymMatrix::outer(&self.x)
    }
}

/// Share rate, complexity, and learning rate for the rank-`k` PCA learner.
pub fn tune_pca(t: usize, n: usize, k: usize, loss_budget: f64) -> Result<SubsetTuning> {
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "projection rank must satisfy 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    subset_tuning(t, n, n - k, loss_budget)
}

/// Intermediates of one density update, kept for the per-step audits.
#[derive(Clone, Debug)]
pub struct PcaStep {
    /// Exponentiated-gradient state before sharing.
    pub hedge: DensityMatrix,
    /// Exact logarithm of `hedge`, taken in its own eigenbasis so that
    /// vanishing eigenvalues do not go through a floored matrix log.
    pub log_hedge: SymMatrix,
}

fn check_matrix_params(n: usize, k: usize, eta: f64, alpha: f64) -> Result<()> {
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

/// Spectrum of a density matrix as a capped simplex vector, with rounding
/// dust clamped into the feasible box.
fn capped_spectrum(values: &[f64], d: usize) -> Result<CappedSimplexVector> {
    let cap_val = 1.0 / d as f64;
    let clamped: Vec<f64> = values.iter().map(|&v| v.clamp(0.0, cap_val)).collect();
    CappedSimplexVector::try_new(clamped, d)
}

fn choose_projection<R: Rng + ?Sized>(
    density: &DensityMatrix,
    k: usize,
    rng: &mut R,
) -> Result<ProjectionMatrix> {
    let n = density.dim();
    let eig = sym_eigen(density.matrix())?;
    let spectrum = capped_spectrum(eig.values(), n - k)?;
    let mix = decompose(&spectrum)?;
    let corner = sample_corner(&mix, rng)?;
    // Keep the k eigendirections the sampled corner leaves out.
    let kept = corner.zero_set();
    let mut basis = nalgebra::DMatrix::zeros(n, k);
    for (col, &i) in kept.iter().enumerate() {
        basis.set_column(col, &eig.vectors().column(i));
    }
    Ok(ProjectionMatrix::from_orthonormal_basis(&basis))
}

/// Adaptive rank-`k` PCA learner.
#[derive(Clone, Debug)]
pub struct PcaLearner {
    n: usize,
    k: usize,
    eta: f64,
    alpha: f64,
    density: DensityMatrix,
    pre_cap: DensityMatrix,
    log_pre_cap: SymMatrix,
}

impl PcaLearner {
    /// Starts from the maximally mixed state `I / n`.
    pub fn new(n: usize, k: usize, eta: f64, alpha: f64) -> Result<Self> {
        check_matrix_params(n, k, eta, alpha)?;
        let density = DensityMatrix::maximally_mixed(n);
        let log_pre_cap = SymMatrix::scaled_identity(n, -(n as f64).ln());
        Ok(PcaLearner {
            n,
            k,
            eta,
            alpha,
            density: density.clone(),
            pre_cap: density,
            log_pre_cap,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Current density matrix over discard directions.
    pub fn density(&self) -> &DensityMatrix {
        &self.density
    }

    /// Post-share state that was capped into `density`; the initial state
    /// before the first update.
    pub fn pre_cap(&self) -> &DensityMatrix {
        &self.pre_cap
    }

    /// Exact logarithm of `pre_cap`.
    pub fn log_pre_cap(&self) -> &SymMatrix {
        &self.log_pre_cap
    }

    /// Samples a rank-`k` projection whose complement follows the density's
    /// corner decomposition.
    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ProjectionMatrix> {
        choose_projection(&self.density, self.k, rng)
    }

    /// Expected compression loss `(n - k) x^T W x` of the sampled projection.
    pub fn expected_loss(&self, x: &DataPoint) -> Result<f64> {
        if x.dim() != self.n {
            return Err(Error::invalid("data dimension does not match learner"));
        }
        Ok((self.n - self.k) as f64 * self.density.matrix().quadratic_form(x.vector()))
    }

    /// Matrix exponentiated-gradient step, spectral fixed-share mix, and
    /// spectral cap, all in the eigenbasis of the updated exponent.
    pub fn update(&mut self, x: &DataPoint) -> Result<PcaStep> {
        if x.dim() != self.n {
            return Err(Error::invalid("data dimension does not match learner"));
        }
        let log_w = matrix_log(&self.density, EIG_FLOOR)?;
        let exponent = log_w.add_scaled(&x.outer(), -self.eta);
        let (basis, probs) = exp_normalized_spectral(&exponent)?;

        let log_probs: Vec<f64> = probs.iter().map(|&p| p.ln()).collect();
        let log_hedge = sym_from_spectrum(&basis, &log_probs);
        let hedge = DensityMatrix::from_spectrum(&basis, &probs)?;

        let shared = fixed_share(&probs, self.alpha)?;
        let capped = cap(&shared, self.n - self.k)?;

        let log_shared: Vec<f64> = shared.iter().map(|&p| p.ln()).collect();
        self.pre_cap = DensityMatrix::from_spectrum(&basis, &shared)?;
        self.log_pre_cap = sym_from_spectrum(&basis, &log_shared);
        self.density = DensityMatrix::from_spectrum(&basis, capped.weights())?;
        Ok(PcaStep { hedge, log_hedge })
    }
}

/// Non-adaptive variant: identical update with the fixed-share step removed.
/// Matches the adaptive learner bit for bit when `alpha = 0`.
#[derive(Clone, Debug)]
pub struct StaticPcaLearner {
    n: usize,
    k: usize,
    eta: f64,
    density: DensityMatrix,
}

impl StaticPcaLearner {
    pub fn new(n: usize, k: usize, eta: f64) -> Result<Self> {
        check_matrix_params(n, k, eta, 0.0)?;
        Ok(StaticPcaLearner {
            n,
            k,
            eta,
            density: DensityMatrix::maximally_mixed(n),
        })
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.density
    }

    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ProjectionMatrix> {
        choose_projection(&self.density, self.k, rng)
    }

    pub fn expected_loss(&self, x: &DataPoint) -> Result<f64> {
        if x.dim() != self.n {
            return Err(Error::invalid("data dimension does not match learner"));
        }
        Ok((self.n - self.k) as f64 * self.density.matrix().quadratic_form(x.vector()))
    }

    pub fn update(&mut self, x: &DataPoint) -> Result<()> {
        if x.dim() != self.n {
            return Err(Error::invalid("data dimension does not match learner"));
        }
        let log_w = matrix_log(&self.density, EIG_FLOOR)?;
        let exponent = log_w.add_scaled(&x.outer(), -self.eta);
        let (basis, probs) = exp_normalized_spectral(&exponent)?;
        let capped = cap(&probs, self.n - self.k)?;
        self.density = DensityMatrix::from_spectrum(&basis, capped.weights())?;
        Ok(())
    }
}
