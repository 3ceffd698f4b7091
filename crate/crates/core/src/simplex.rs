//! Geometry of the capped probability simplex: probability vectors whose
//! entries are bounded by `1/d`, their corners (uniform distributions on `d`
//! coordinates), capping, corner decomposition, and the fixed-share mix.

use rand::Rng;

use crate::error::{Error, Result};

/// Mass below this is treated as zero when decomposing into corners.
const MASS_TOL: f64 = 1e-12;

/// Probability vector with every entry at most `1/cap_degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct CappedSimplexVector {
    weights: Vec<f64>,
    cap_degree: usize,
}

impl CappedSimplexVector {
    /// Validates the simplex and cap constraints (`1e-10` tolerance).
    pub fn try_new(weights: Vec<f64>, cap_degree: usize) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::invalid("weight vector must be non-empty"));
        }
        if cap_degree == 0 || cap_degree > n {
            return Err(Error::invalid(format!(
                "cap degree must satisfy 1 <= d <= n, got d = {cap_degree}, n = {n}"
            )));
        }
        let cap = 1.0 / cap_degree as f64;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 || w > cap + 1e-10 {
                return Err(Error::invalid(format!(
                    "weight {w} at index {i} is outside [0, 1/{cap_degree}]"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("weights must sum to one, got {sum}")));
        }
        Ok(CappedSimplexVector {
            weights,
            cap_degree,
        })
    }

    /// The uniform vector, which lies in every capped simplex.
    pub fn uniform(n: usize, cap_degree: usize) -> Result<Self> {
        Self::try_new(vec![1.0 / n as f64; n], cap_degree)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn cap_degree(&self) -> usize {
        self.cap_degree
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// A corner of the capped simplex: mass `1/d` on each of `d` coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corner {
    n: usize,
    support: Vec<usize>,
}

impl Corner {
    /// Validates that `support` holds distinct in-range indices.
    pub fn try_new(n: usize, mut support: Vec<usize>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::invalid("corner support must be non-empty"));
        }
        support.sort_unstable();
        if support.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("corner support has duplicate indices"));
        }
        if *support.last().unwrap() >= n {
            return Err(Error::invalid("corner support index out of range"));
        }
        Ok(Corner { n, support })
    }

    /// Caller guarantees `support` is sorted, distinct, in range.
    pub(crate) fn new_unchecked(n: usize, support: Vec<usize>) -> Self {
        debug_assert!(support.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(support.last().is_none_or(|&i| i < n));
        Corner { n, support }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of supported coordinates, i.e. the cap degree `d`.
    pub fn degree(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Indices carrying no mass, in increasing order.
    pub fn zero_set(&self) -> Vec<usize> {
        let mut mask = vec![true; self.n];
        for &i in &self.support {
            mask[i] = false;
        }
        (0..self.n).filter(|&i| mask[i]).collect()
    }

    /// Dense weight vector with `1/d` on the support.
    pub fn to_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n];
        let mass = 1.0 / self.degree() as f64;
        for &i in &self.support {
            w[i] = mass;
        }
        w
    }
}

/// Convex combination of corners reproducing a capped vector.
#[derive(Clone, Debug)]
pub struct MixtureDecomposition {
    n: usize,
    terms: Vec<(f64, Corner)>,
}

impl MixtureDecomposition {
    pub fn terms(&self) -> &[(f64, Corner)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Mixes the corners back into a dense weight vector.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n];
        for (p, corner) in &self.terms {
            let mass = p / corner.degree() as f64;
            for &i in corner.support() {
                w[i] += mass;
            }
        }
        w
    }
}

/// Projects a probability vector onto the capped simplex in relative entropy:
/// entries above `1/d` are clamped to the cap, one more per round, and the
/// rest keep their mutual proportions while absorbing the leftover mass.
pub fn cap(w: &[f64], d: usize) -> Result<CappedSimplexVector> {
    let n = w.len();
    if n == 0 {
        return Err(Error::invalid("weight vector must be non-empty"));
    }
    if d == 0 || d > n {
        return Err(Error::invalid(format!(
            "cap degree must satisfy 1 <= d <= n, got d = {d}, n = {n}"
        )));
    }
    for (i, &v) in w.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::invalid(format!(
                "weight {v} at index {i} must be a non-negative number"
            )));
        }
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(format!("weights must sum to one, got {sum}")));
    }

    let cap_val = 1.0 / d as f64;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[b].partial_cmp(&w[a]).unwrap().then(a.cmp(&b)));

    if w[order[0]] <= cap_val {
        return CappedSimplexVector::try_new(w.to_vec(), d);
    }

    for capped in 1..=d {
        let mut out = w.to_vec();
        for &i in &order[..capped] {
            out[i] = cap_val;
        }
        let tail = &order[capped..];
        let tail_sum: f64 = tail.iter().map(|&i| w[i]).sum();
        let remaining = (d - capped) as f64 / d as f64;
        if tail_sum > 0.0 {
            let scale = remaining / tail_sum;
            for &i in tail {
                out[i] = w[i] * scale;
            }
        } else {
            // No mass left to rescale; spread the remainder uniformly.
            for &i in tail {
                out[i] = remaining / tail.len() as f64;
            }
        }
        let tail_max = tail.iter().map(|&i| out[i]).fold(0.0f64, f64::max);
        if tail_max <= cap_val {
            return CappedSimplexVector::try_new(out, d);
        }
    }
    unreachable!("capping all d entries always yields a feasible vector")
}

/// Writes a capped vector as a convex combination of at most `n` corners.
///
/// Each round takes the `d` largest remaining entries (entries at the current
/// cap `mass/d` are necessarily among them, ties fall to the lower index),
/// then removes the largest corner multiple that keeps the residual capped.
pub fn decompose(w: &CappedSimplexVector) -> Result<MixtureDecomposition> {
    let n = w.len();
    let d = w.cap_degree();
    if d >= n {
        return Err(Error::invalid(format!(
            "decomposition requires d < n, got d = {d}, n = {n}"
        )));
    }
    let mut rest = w.weights().to_vec();
    let mut terms: Vec<(f64, Corner)> = Vec::new();

    loop {
        let mass: f64 = rest.iter().sum();
        if mass <= MASS_TOL || terms.len() == n {
            break;
        }
        let mut order: Vec<usize> = (0..n).filter(|&i| rest[i] > MASS_TOL).collect();
        if order.len() < d {
            break; // only dust is left
        }
        order.sort_by(|&a, &b| rest[b].partial_cmp(&rest[a]).unwrap().then(a.cmp(&b)));
        let mut support = order[..d].to_vec();
        support.sort_unstable();

        let smallest_in = support.iter().map(|&i| rest[i]).fold(f64::INFINITY, f64::min);
        let largest_out = order[d..].iter().map(|&i| rest[i]).fold(0.0f64, f64::max);
        let p = (d as f64 * smallest_in).min(mass - d as f64 * largest_out);
        if p <= 0.0 {
            break;
        }
        let share = p / d as f64;
        for &i in &support {
            rest[i] = (rest[i] - share).max(0.0);
        }
        terms.push((p, Corner::new_unchecked(n, support)));
    }
    Ok(MixtureDecomposition { n, terms })
}

/// Samples a corner with probability proportional to its mixture weight.
pub fn sample_corner<R: Rng + ?Sized>(mix: &MixtureDecomposition, rng: &mut R) -> Result<Corner> {
    if mix.is_empty() {
        return Err(Error::invalid("cannot sample from an empty decomposition"));
    }
    let total: f64 = mix.terms().iter().map(|(p, _)| p).sum();
    let mut ticket = rng.random::<f64>() * total;
    for (p, corner) in mix.terms() {
        ticket -= p;
        if ticket <= 0.0 {
            return Ok(corner.clone());
        }
    }
    Ok(mix.terms().last().unwrap().1.clone())
}

/// Fixed-share mix `alpha / n + (1 - alpha) v`, pulling every coordinate
/// toward the uniform distribution. With `alpha = 0` the input passes
/// through bit for bit.
pub fn fixed_share(v: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let n = v.len();
    if n == 0 {
        return Err(Error::invalid("weight vector must be non-empty"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::invalid(format!(
                "weight {x} at index {i} must be a non-negative number"
            )));
        }
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > 1e-8 {
        return Err(Error::invalid(format!("weights must sum to one, got {sum}")));
    }
    let floor = alpha / n as f64;
    Ok(v.iter().map(|&x| floor + (1.0 - alpha) * x).collect())
}

/// Relative entropy `sum_i q_i ln(q_i / w_i)` with the convention `0 ln 0 = 0`.
///
/// `w` must be strictly positive wherever `q` carries mass.
pub fn relative_entropy(q: &[f64], w: &[f64]) -> Result<f64> {
    if q.len() != w.len() || q.is_empty() {
        return Err(Error::invalid("vectors must share a non-zero length"));
    }
    for (sum, name) in [(q.iter().sum::<f64>(), "q"), (w.iter().sum::<f64>(), "w")] {
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("{name} must sum to one, got {sum}")));
        }
    }
    let mut total = 0.0;
    for (i, (&qi, &wi)) in q.iter().zip(w.iter()).enumerate() {
        if qi <= 0.0 {
            continue;
        }
        if wi <= 0.0 {
            return Err(Error::singular(format!(
                "w has no mass at index {i} where q does"
            )));
        }
        total += qi * (qi / wi).ln();
    }
    Ok(total)
}
