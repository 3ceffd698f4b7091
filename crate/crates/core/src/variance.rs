//! Online variance minimization in two comparator classes: unit vectors,
//! handled by a matrix exponentiated-gradient learner over density matrices,
//! and probability vectors, handled by a plain exponentiated-gradient learner
//! on the simplex. Both mix in a fixed share of the uniform state each step.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::experts::{subset_tuning, SubsetTuning};
use crate::linalg::{
    exp_normalized_spectral, matrix_log, sym_eigen, sym_from_spectrum, DensityMatrix, SymMatrix,
    EIG_FLOOR,
};
use crate::simplex::fixed_share;

/// Symmetric positive semidefinite loss matrix with spectral norm at most one.
#[derive(Clone, Debug)]
pub struct CovarianceMatrix {
    mat: SymMatrix,
}

impl CovarianceMatrix {
    pub fn try_new(mat: SymMatrix) -> Result<Self> {
        let eig = sym_eigen(&mat)?;
        let max = eig.value(0);
        let min = eig.value(eig.dim() - 1);
        if min < -1e-9 {
            return Err(Error::invalid(format!(
                "covariance has negative eigenvalue {min}"
            )));
        }
        if max > 1.0 + 1e-9 {
            return Err(Error::invalid(format!(
                "covariance spectral norm {max} exceeds one"
            )));
        }
        Ok(CovarianceMatrix { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.mat
    }
}

fn check_variance_params(n: usize, eta: f64, alpha: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("need n >= 2, got {n}")));
    }
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Intermediates of one density update, kept for the per-step audits.
#[derive(Clone, Debug)]
pub struct UnitVarStep {
    /// Exponentiated-gradient state before sharing.
    pub hedge: DensityMatrix,
    /// Exact logarithm of `hedge`, taken in its own eigenbasis.
    pub log_hedge: SymMatrix,
}

/// Learner competing with the best unit vector: full density-matrix state,
/// no spectral cap.
#[derive(Clone, Debug)]
pub struct UnitVarianceLearner {
    n: usize,
    eta: f64,
    alpha: f64,
    density: DensityMatrix,
    log_density: SymMatrix,
}

impl UnitVarianceLearner {
    /// Starts from the maximally mixed state `I / n`.
    pub fn new(n: usize, eta: f64, alpha: f64) -> Result<Self> {
        check_variance_params(n, eta, alpha)?;
        Ok(UnitVarianceLearner {
            n,
            eta,
            alpha,
            density: DensityMatrix::maximally_mixed(n),
            log_density: SymMatrix::scaled_identity(n, -(n as f64).ln()),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.density
    }

    /// Exact logarithm of the current density.
    pub fn log_density(&self) -> &SymMatrix {
        &self.log_density
    }

    /// Samples an eigendirection of the density with probability equal to its
    /// eigenvalue.
    pub fn choose<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let eig = sym_eigen(self.density.matrix())?;
        let probs: Vec<f64> = eig.values().iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::singular("density spectrum has no mass"));
        }
        let mut target = rng.random::<f64>() * total;
        for (i, &p) in probs.iter().enumerate() {
            target -= p;
            if target <= 0.0 {
                return Ok(eig.vectors().column(i).into_owned());
            }
        }
        Ok(eig.vectors().column(self.n - 1).into_owned())
    }

    /// Expected loss `tr(Y C)` of the sampled direction.
    pub fn expected_loss(&self, cov: &CovarianceMatrix) -> Result<f64> {
        if cov.dim() != self.n {
            return Err(Error::invalid("covariance dimension does not match learner"));
        }
        Ok(self.density.matrix().trace_product(cov.matrix()))
    }

    /// Matrix exponentiated-gradient step followed by a fixed-share mix.
    pub fn update(&mut self, cov: &CovarianceMatrix) -> Result<UnitVarStep> {
        if cov.dim() != self.n {
            return Err(Error::invalid("covariance dimension does not match learner"));
        }
        let log_y = matrix_log(&self.density, EIG_FLOOR)?;
        let exponent = log_y.add_scaled(cov.matrix(), -self.eta);
        let (basis, probs) = exp_normalized_spectral(&exponent)?;

        let log_probs: Vec<f64> = probs.iter().map(|&p| p.ln()).collect();
        let log_hedge = sym_from_spectrum(&basis, &log_probs);
        let hedge = DensityMatrix::from_spectrum(&basis, &probs)?;

        let shared = fixed_share(&probs, self.alpha)?;
        let log_shared: Vec<f64> = shared.iter().map(|&p| p.ln()).collect();
        self.density = DensityMatrix::from_spectrum(&basis, &shared)?;
        self.log_density = sym_from_spectrum(&basis, &log_shared);
        Ok(UnitVarStep { hedge, log_hedge })
    }
}

/// Intermediates of one simplex update.
#[derive(Clone, Debug)]
pub struct SimplexVarStep {
    /// Exponentiated-gradient weights before sharing.
    pub hedge: Vec<f64>,
}

/// Learner competing with the best probability vector: exponentiated
/// gradient on the simplex with the linearized loss `C y`.
#[derive(Clone, Debug)]
pub struct SimplexVarianceLearner {
    n: usize,
    eta: f64,
    alpha: f64,
    weights: Vec<f64>,
}

impl SimplexVarianceLearner {
    pub fn new(n: usize, eta: f64, alpha: f64) -> Result<Self> {
        check_variance_params(n, eta, alpha)?;
        Ok(SimplexVarianceLearner {
            n,
            eta,
            alpha,
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The prediction is the weight vector itself; no sampling happens here.
    pub fn choose(&self) -> &[f64] {
        &self.weights
    }

    /// Loss `y^T C y` of the current weights.
    pub fn expected_loss(&self, cov: &CovarianceMatrix) -> Result<f64> {
        if cov.dim() != self.n {
            return Err(Error::invalid("covariance dimension does not match learner"));
        }
        let y = DVector::from_column_slice(&self.weights);
        Ok(cov.matrix().quadratic_form(&y))
    }

    /// Exponentiated-gradient step on the linearized loss `C y`, then a
    /// fixed-share mix.
    pub fn update(&mut self, cov: &CovarianceMatrix) -> Result<SimplexVarStep> {
        if cov.dim() != self.n {
            return Err(Error::invalid("covariance dimension does not match learner"));
        }
        let y = DVector::from_column_slice(&self.weights);
        let grad = cov.matrix().matrix() * &y;
        let unnormalized: Vec<f64> = self
            .weights
            .iter()
            .zip(grad.iter())
            .map(|(&w, &g)| w * (-self.eta * g).exp())
            .collect();
        let z: f64 = unnormalized.iter().sum();
        if !z.is_finite() || z <= 0.0 {
            return Err(Error::singular("gradient step normalizer degenerated"));
        }
        let hedge: Vec<f64> = unnormalized.iter().map(|&w| w / z).collect();
        self.weights = fixed_share(&hedge, self.alpha)?;
        Ok(SimplexVarStep { hedge })
    }
}

/// Loss-budget tuning for the unit-vector learner; the same rule as the
/// subset learner with a single discarded direction.
pub fn tune_unit_var_l(t: usize, n: usize, loss_budget: f64) -> Result<SubsetTuning> {
    subset_tuning(t, n, 1, loss_budget)
}

/// Share rate and learning rate tuned by horizon alone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceTuning {
    pub alpha: f64,
    pub eta: f64,
}

/// Horizon-only tuning for the unit-vector learner.
pub fn tune_unit_var_t(t: usize, n: usize) -> Result<VarianceTuning> {
    if t == 0 {
        return Err(Error::invalid("horizon must be at least one"));
    }
    if n == 0 {
        return Err(Error::invalid("need at least one dimension"));
    }
    let horizon = t as f64;
    let alpha = 1.0 / (horizon + 1.0);
    let eta = ((n as f64) * (1.0 + horizon)).ln().sqrt() / horizon.sqrt();
    Ok(VarianceTuning { alpha, eta })
}

/// Tuning constants for the simplex learner.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexVarTuning {
    pub alpha: f64,
    pub c: f64,
    pub b: f64,
    pub a: f64,
    pub eta: f64,
}

/// Loss-budget tuning for the simplex learner.
pub fn tune_simplex_var(t: usize, n: usize, loss_budget: f64) -> Result<SimplexVarTuning> {
    if t == 0 {
        return Err(Error::invalid("horizon must be at least one"));
    }
    if n == 0 {
        return Err(Error::invalid("need at least one dimension"));
    }
    if !loss_budget.is_finite() || loss_budget <= 0.0 {
        return Err(Error::invalid(format!(
            "loss budget must be positive and finite, got {loss_budget}"
        )));
    }
    let horizon = t as f64;
    let alpha = 1.0 / (horizon + 1.0);
    let log_term = ((1.0 + horizon) * n as f64).ln();
    let c = (2.0 * log_term + 2.0).sqrt() / loss_budget.sqrt();
    let b = c / 2.0;
    let a = b / (2.0 * b + 1.0);
    let eta = 2.0 * a;
    Ok(SimplexVarTuning { alpha, c, b, a, eta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pca::tune_pca;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn diag_cov(entries: &[f64]) -> CovarianceMatrix {
        let m = SymMatrix::new(DMatrix::from_diagonal(&DVector::from_row_slice(entries))).unwrap();
        CovarianceMatrix::try_new(m).unwrap()
    }

    pub(crate) fn random_cov(n: usize, rng: &mut ChaCha8Rng) -> CovarianceMatrix {
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let a = SymMatrix::symmetrize(&g * g.transpose());
        let eig = sym_eigen(&a).unwrap();
        let scale = 1.0 / eig.value(0).max(1e-12);
        CovarianceMatrix::try_new(a.scale(scale)).unwrap()
    }

    #[test]
    fn covariance_rejects_bad_spectra() {
        let too_big = SymMatrix::new(DMatrix::from_diagonal(&DVector::from_row_slice(&[
            1.5, 0.2,
        ])))
        .unwrap();
        assert!(CovarianceMatrix::try_new(too_big).is_err());
        let negative = SymMatrix::new(DMatrix::from_diagonal(&DVector::from_row_slice(&[
            0.5, -0.1,
        ])))
        .unwrap();
        assert!(CovarianceMatrix::try_new(negative).is_err());
        assert!(diag_cov(&[1.0, 0.0]).dim() == 2);
    }

    #[test]
    fn simplex_update_worked_example() {
        let mut learner = SimplexVarianceLearner::new(2, 4.0f64.ln(), 0.0).unwrap();
        let step = learner.update(&diag_cov(&[1.0, 0.0])).unwrap();
        assert_abs_diff_eq!(step.hedge[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(step.hedge[1], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(learner.weights()[0], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_covariance_keeps_both_learners_fixed() {
        let zero = CovarianceMatrix::try_new(SymMatrix::zeros(3)).unwrap();
        let mut unit = UnitVarianceLearner::new(3, 0.7, 0.0).unwrap();
        unit.update(&zero).unwrap();
        let drift = (unit.density().matrix().matrix()
            - DensityMatrix::maximally_mixed(3).matrix().matrix())
        .amax();
        assert!(drift < 1e-10, "unit drift {drift}");

        let mut simplex = SimplexVarianceLearner::new(3, 0.7, 0.0).unwrap();
        simplex.update(&zero).unwrap();
        for &w in simplex.weights() {
            assert_abs_diff_eq!(w, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn unit_update_is_invariant_to_identity_shifts() {
        let mut rng = ChaCha8Rng::seed_from_u64(211);
        let base = {
            let c = random_cov(4, &mut rng);
            CovarianceMatrix::try_new(c.matrix().scale(0.5)).unwrap()
        };
        let shifted = CovarianceMatrix::try_new(
            base.matrix().add_scaled(&SymMatrix::scaled_identity(4, 1.0), 0.5),
        )
        .unwrap();
        let mut a = UnitVarianceLearner::new(4, 1.1, 1e-3).unwrap();
        let mut b = UnitVarianceLearner::new(4, 1.1, 1e-3).unwrap();
        a.update(&base).unwrap();
        b.update(&shifted).unwrap();
        let gap = (a.density().matrix().matrix() - b.density().matrix().matrix()).amax();
        assert!(gap < 1e-9, "gap {gap}");
    }

    #[test]
    fn diagonal_stream_matches_manual_exponentiated_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(223);
        let (n, eta, alpha) = (4, 0.9, 1e-2);
        let mut learner = UnitVarianceLearner::new(n, eta, alpha).unwrap();
        let mut manual = vec![1.0 / n as f64; n];
        for _ in 0..30 {
            let entries: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            learner.update(&diag_cov(&entries)).unwrap();

            let unnormalized: Vec<f64> = manual
                .iter()
                .zip(entries.iter())
                .map(|(&y, &c)| y * (-eta * c).exp())
                .collect();
            let z: f64 = unnormalized.iter().sum();
            manual = unnormalized
                .iter()
                .map(|&v| alpha / n as f64 + (1.0 - alpha) * v / z)
                .collect();

            let density = learner.density().matrix().matrix();
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { manual[i] } else { 0.0 };
                    assert_abs_diff_eq!(density[(i, j)], want, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn choose_frequencies_track_the_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(227);
        let mut learner = UnitVarianceLearner::new(2, 2.0, 0.0).unwrap();
        learner.update(&diag_cov(&[1.0, 0.0])).unwrap();
        let eig = sym_eigen(learner.density().matrix()).unwrap();
        let draws = 20_000;
        let mut top_hits = 0usize;
        for _ in 0..draws {
            let v = learner.choose(&mut rng).unwrap();
            let align = v.dot(&eig.vectors().column(0).into_owned()).abs();
            if align > 0.9 {
                top_hits += 1;
            }
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-9);
        }
        let freq = top_hits as f64 / draws as f64;
        assert!((freq - eig.value(0)).abs() < 0.02, "freq {freq} vs {}", eig.value(0));
    }

    #[test]
    fn expected_loss_agrees_with_sampled_quadratic_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(229);
        let mut learner = UnitVarianceLearner::new(3, 1.0, 1e-2).unwrap();
        for _ in 0..5 {
            let c = random_cov(3, &mut rng);
            learner.update(&c).unwrap();
        }
        let c = random_cov(3, &mut rng);
        let expected = learner.expected_loss(&c).unwrap();
        let draws = 200_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let v = learner.choose(&mut rng).unwrap();
            sum += c.matrix().quadratic_form(&v);
        }
        let mean = sum / draws as f64;
        assert!((mean - expected).abs() < 0.01, "mean {mean} vs {expected}");
    }

    #[test]
    fn long_streams_keep_states_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(233);
        let n = 5;
        let mut unit = UnitVarianceLearner::new(n, 1.3, 1e-4).unwrap();
        let mut simplex = SimplexVarianceLearner::new(n, 1.3, 1e-4).unwrap();
        for _ in 0..10_000 {
            let c = random_cov(n, &mut rng);
            unit.update(&c).unwrap();
            simplex.update(&c).unwrap();
        }
        assert_abs_diff_eq!(unit.density().matrix().trace(), 1.0, epsilon = 1e-9);
        let eig = sym_eigen(unit.density().matrix()).unwrap();
        assert!(eig.value(n - 1) >= -1e-10);
        let sum: f64 = simplex.weights().iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-9);
        let floor = 1e-4 / n as f64;
        for &w in simplex.weights() {
            assert!(w >= floor - 1e-12);
        }
    }

    #[test]
    fn horizon_tuning_worked_examples() {
        let t = tune_unit_var_t(1, 1).unwrap();
        assert_abs_diff_eq!(t.alpha, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.eta, 2.0f64.ln().sqrt(), epsilon = 1e-15);
        assert!(tune_unit_var_t(0, 3).is_err());
    }

    #[test]
    fn budget_tuning_matches_the_subset_rule_with_one_discard() {
        let l = tune_unit_var_l(1, 2, 1.0).unwrap();
        assert_abs_diff_eq!(l.alpha, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(l.complexity, 4.0f64.ln() + 1.0, epsilon = 1e-12);
        let expected_eta = (1.0 + (2.0 * (4.0f64.ln() + 1.0)).sqrt()).ln();
        assert_abs_diff_eq!(l.eta, expected_eta, epsilon = 1e-12);

        let via_pca = tune_pca(600, 20, 19, 250.0).unwrap();
        let direct = tune_unit_var_l(600, 20, 250.0).unwrap();
        assert_eq!(via_pca, direct);
    }

    #[test]
    fn budget_tuning_reproduces_the_toy_learning_rate() {
        let eta = tune_unit_var_l(10_800, 20, 600.0).unwrap().eta;
        assert!((eta - 0.19).abs() < 5e-3, "eta {eta}");
    }

    #[test]
    fn simplex_tuning_worked_example() {
        let t = tune_simplex_var(1, 2, 1.0).unwrap();
        assert_abs_diff_eq!(t.alpha, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.c * t.c, 2.0 * 4.0f64.ln() + 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.b, t.c / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.a, t.b / (2.0 * t.b + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(t.eta, 2.0 * t.a, epsilon = 1e-15);
        assert!(tune_simplex_var(1, 2, 0.0).is_err());
    }

    #[test]
    fn learners_reject_mismatched_dimensions() {
        let mut unit = UnitVarianceLearner::new(3, 1.0, 0.0).unwrap();
        let mut simplex = SimplexVarianceLearner::new(3, 1.0, 0.0).unwrap();
        let wrong = diag_cov(&[0.5, 0.5]);
        assert!(unit.update(&wrong).is_err());
        assert!(unit.expected_loss(&wrong).is_err());
        assert!(simplex.update(&wrong).is_err());
        assert!(simplex.expected_loss(&wrong).is_err());
        assert!(UnitVarianceLearner::new(1, 1.0, 0.0).is_err());
        assert!(SimplexVarianceLearner::new(3, 0.0, 0.0).is_err());
    }
}
