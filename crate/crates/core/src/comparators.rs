//! Offline comparators: the fixed decisions that hindsight would pick on a
//! whole stream or on one contiguous interval of it. Regret is always
//! measured against these.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, top_k_projection, ProjectionMatrix, SymMatrix};
use crate::pca::DataPoint;
use crate::variance::CovarianceMatrix;

pub use crate::experts::StaticExpertLearner;
pub use crate::pca::StaticPcaLearner;

/// Sum of outer products `x x^T` over the slice.
pub fn scatter_matrix(data: &[DataPoint]) -> Result<SymMatrix> {
    let first = data
        .first()
        .ok_or_else(|| Error::invalid("scatter of an empty slice"))?;
    let n = first.dim();
    let mut scatter = SymMatrix::zeros(n);
    for x in data {
        if x.dim() != n {
            return Err(Error::invalid("data points have mixed dimensions"));
        }
        scatter = scatter.add_scaled(&x.outer(), 1.0);
    }
    Ok(scatter)
}

/// Best rank-`k` projection for the whole slice: the top-`k` eigendirections
/// of its scatter matrix.
pub fn best_fixed_projection(data: &[DataPoint], k: usize) -> Result<ProjectionMatrix> {
    let scatter = scatter_matrix(data)?;
    top_k_projection(&scatter, k)
}

/// Best projection for everything seen so far; projects onto the first `k`
/// coordinates before any data arrives.
pub fn follow_the_leader(n: usize, k: usize, history: &[DataPoint]) -> Result<ProjectionMatrix> {
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "projection rank must satisfy 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    if history.is_empty() {
        let coords: Vec<usize> = (0..k).collect();
        return ProjectionMatrix::onto_coordinates(n, &coords);
    }
    if history[0].dim() != n {
        return Err(Error::invalid("history dimension does not match n"));
    }
    best_fixed_projection(history, k)
}

/// Total compression loss of the best fixed rank-`k` projection on the
/// 1-indexed inclusive interval `[r, s]`.
pub fn interval_oracle_pca(data: &[DataPoint], r: usize, s: usize, k: usize) -> Result<f64> {
    if r == 0 || r > s || s > data.len() {
        return Err(Error::invalid(format!(
            "interval [{r}, {s}] is not within 1..={}",
            data.len()
        )));
    }
    let scatter = scatter_matrix(&data[r - 1..s])?;
    let n = scatter.dim();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "projection rank must satisfy 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let eig = sym_eigen(&scatter)?;
    let kept: f64 = eig.values()[..k].iter().sum();
    Ok(scatter.trace() - kept)
}

/// Smallest total variance any unit vector attains on the sequence: the
/// least eigenvalue of the summed covariances.
pub fn min_variance_unit(covs: &[CovarianceMatrix]) -> Result<f64> {
    let first = covs
        .first()
        .ok_or_else(|| Error::invalid("variance of an empty sequence"))?;
    let n = first.dim();
    let mut sum = SymMatrix::zeros(n);
    for c in covs {
        if c.dim() != n {
            return Err(Error::invalid("covariances have mixed dimensions"));
        }
        sum = sum.add_scaled(c.matrix(), 1.0);
    }
    let eig = sym_eigen(&sum)?;
    Ok(eig.value(n - 1))
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    debug_assert!(!v.is_empty() && v.iter().all(|x| x.is_finite()));
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cum += u;
        let candidate = (cum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Controls for the projected-gradient quadratic minimizer.
#[derive(Clone, Copy, Debug)]
pub struct SimplexQpOptions {
    pub random_starts: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SimplexQpOptions {
    fn default() -> Self {
        SimplexQpOptions {
            random_starts: 50,
            max_iters: 400,
            tol: 1e-13,
        }
    }
}

fn random_simplex_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = draws.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / n as f64; n];
    }
    draws.iter().map(|&d| d / total).collect()
}

/// Minimizes `y^T A y` over the probability simplex by projected gradient
/// descent from several starts; the objective is convex for positive
/// semidefinite `A`, so every start converges to the same optimum and the
/// extra starts only speed that up.
pub fn min_variance_simplex<R: Rng + ?Sized>(
    a: &SymMatrix,
    opts: &SimplexQpOptions,
    warm: Option<&[f64]>,
    rng: &mut R,
) -> Result<(f64, Vec<f64>)> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::invalid("empty quadratic form"));
    }
    if let Some(w) = warm {
        if w.len() != n {
            return Err(Error::invalid("warm start has the wrong dimension"));
        }
    }
    let eig = sym_eigen(a)?;
    let step = 0.5 / eig.value(0).max(1e-12);

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(opts.random_starts + 2);
    starts.push(vec![1.0 / n as f64; n]);
    if let Some(w) = warm {
        starts.push(project_to_simplex(w));
    }
    for _ in 0..opts.random_starts {
        starts.push(random_simplex_point(n, rng));
    }

    let value = |y: &[f64]| a.quadratic_form(&DVector::from_column_slice(y));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mut y in starts {
        for _ in 0..opts.max_iters {
            let grad = a.matrix() * DVector::from_column_slice(&y) * 2.0;
            let moved: Vec<f64> = y
                .iter()
                .zip(grad.iter())
                .map(|(&yi, &gi)| yi - step * gi)
                .collect();
            let next = project_to_simplex(&moved);
            let shift = y
                .iter()
                .zip(next.iter())
                .map(|(&cur, &nxt)| (cur - nxt).abs())
                .fold(0.0, f64::max);
            y = next;
            if shift < opts.tol {
                break;
            }
        }
        let v = value(&y);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, y));
        }
    }
    Ok(best.expect("at least the uniform start ran"))
}
