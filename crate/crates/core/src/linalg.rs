//! Dense symmetric matrices, their eigendecompositions, and the spectral
//! functions (log, normalized exp, relative entropy) the learners run on.
//!
//! Everything here is desk scale (n up to a few hundred), so operations favor
//! exact contracts and determinism over asymptotic speed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues below this are treated as zero by `matrix_log` and by the
/// full-rank check in `quantum_relative_entropy`.
pub const EIG_FLOOR: f64 = 1e-12;

/// Dense symmetric matrix with side `n`.
///
/// Construction symmetrizes the stored entries, so `a[(i, j)] == a[(j, i)]`
/// holds exactly afterwards.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    /// Wraps a square matrix, rejecting non-finite entries and asymmetry
    /// beyond `1e-9` (scaled by the largest entry magnitude).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid(format!(
                "matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let scale = m.amax().max(1.0);
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                    return Err(Error::invalid(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::symmetrize(m))
    }

    /// Averages a matrix with its transpose. Used internally where the result
    /// is symmetric by construction up to rounding.
    pub(crate) fn symmetrize(m: DMatrix<f64>) -> Self {
        let sym = (&m + m.transpose()) * 0.5;
        SymMatrix { data: sym }
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            data: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        SymMatrix {
            data: DMatrix::identity(n, n) * c,
        }
    }

    /// Outer product `x x^T`.
    pub fn outer(x: &DVector<f64>) -> Self {
        SymMatrix {
            data: x * x.transpose(),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.amax()
    }

    /// `Tr(A B)`, which for symmetric arguments is the entrywise dot product.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        self.data.dot(&other.data)
    }

    /// Quadratic form `x^T A x`.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        (self.data.clone() * x).dot(x)
    }

    /// `A + c * B`.
    pub fn add_scaled(&self, other: &SymMatrix, c: f64) -> SymMatrix {
        SymMatrix {
            data: &self.data + &other.data * c,
        }
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix {
            data: &self.data * c,
        }
    }
}

/// Eigendecomposition of a `SymMatrix`: eigenvalues in non-increasing order,
/// eigenvectors as matching orthonormal columns.
///
/// Column signs follow a fixed convention (first component of magnitude above
/// `1e-12` is positive) so identical inputs give identical output bits.
#[derive(Clone, Debug)]
pub struct EigenPair {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl EigenPair {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Orthonormal eigenvector matrix; column `i` pairs with `values()[i]`.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    /// `V diag(values) V^T`.
    pub fn reconstruct(&self) -> SymMatrix {
        sym_from_spectrum(&self.vectors, self.values.as_slice())
    }
}

/// Builds `V diag(values) V^T` and symmetrizes away rounding dust.
pub(crate) fn sym_from_spectrum(vectors: &DMatrix<f64>, values: &[f64]) -> SymMatrix {
    let diag = DMatrix::from_diagonal(&DVector::from_row_slice(values));
    SymMatrix::symmetrize(vectors * diag * vectors.transpose())
}

/// Full eigendecomposition of a symmetric matrix, sorted and sign-fixed.
pub fn sym_eigen(a: &SymMatrix) -> Result<EigenPair> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::invalid("matrix must be non-empty"));
    }
    let eig = nalgebra::linalg::SymmetricEigen::new(a.data.clone());

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .expect("eigenvalues are finite")
    });

    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = eig.eigenvalues[src];
        let mut col = eig.eigenvectors.column(src).into_owned();
        if let Some(lead) = col.iter().find(|v| v.abs() > 1e-12) {
            if *lead < 0.0 {
                col.neg_mut();
            }
        }
        vectors.set_column(dst, &col);
    }
    Ok(EigenPair { values, vectors })
}

/// Density matrix: symmetric, positive semidefinite (within `1e-10`), unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: SymMatrix,
}

impl DensityMatrix {
    /// Validates trace and spectrum, which costs one eigendecomposition.
    pub fn try_new(mat: SymMatrix) -> Result<Self> {
        if (mat.trace() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!(
                "density matrix must have unit trace, got {}",
                mat.trace()
            )));
        }
        let eig = sym_eigen(&mat)?;
        let min = eig.value(eig.dim() - 1);
        if min < -1e-10 {
            return Err(Error::invalid(format!(
                "density matrix must be positive semidefinite, min eigenvalue {min}"
            )));
        }
        Ok(DensityMatrix { mat })
    }

    /// `I / n`, the maximum-entropy state.
    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix {
            mat: SymMatrix::scaled_identity(n, 1.0 / n as f64),
        }
    }

    /// Builds `U diag(values) U^T` from an orthonormal basis and a spectrum
    /// that already sums to one. Cheaper than `try_new` on hot paths.
    pub fn from_spectrum(basis: &DMatrix<f64>, values: &[f64]) -> Result<Self> {
        if basis.nrows() != basis.ncols() || basis.nrows() != values.len() {
            return Err(Error::invalid("basis and spectrum dimensions disagree"));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-8 {
            return Err(Error::invalid(format!(
                "spectrum must sum to one, got {sum}"
            )));
        }
        if values.iter().any(|&v| v < -1e-10) {
            return Err(Error::invalid("spectrum has a negative eigenvalue"));
        }
        Ok(DensityMatrix {
            mat: sym_from_spectrum(basis, values),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.mat
    }

    /// `Tr(D A)`, the expectation of `A` in state `D`.
    pub fn expectation(&self, a: &SymMatrix) -> f64 {
        self.mat.trace_product(a)
    }
}

/// Orthogonal projection matrix of known rank.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionMatrix {
    mat: SymMatrix,
    rank: usize,
}

impl ProjectionMatrix {
    /// Validates symmetry, idempotence (`||P^2 - P||_max <= 1e-8`), and an
    /// integer trace, which becomes the rank.
    pub fn try_new(mat: SymMatrix) -> Result<Self> {
        let sq = mat.matrix() * mat.matrix();
        let drift = (sq - mat.matrix()).amax();
        if drift > 1e-8 {
            return Err(Error::invalid(format!(
                "projection must be idempotent, ||P^2 - P|| = {drift}"
            )));
        }
        let tr = mat.trace();
        let rank = tr.round();
        if (tr - rank).abs() > 1e-8 || rank < 0.0 {
            return Err(Error::invalid(format!(
                "projection trace must be a non-negative integer, got {tr}"
            )));
        }
        Ok(ProjectionMatrix {
            mat,
            rank: rank as usize,
        })
    }

    /// `Q Q^T` for a matrix `Q` with orthonormal columns.
    pub fn from_orthonormal_basis(q: &DMatrix<f64>) -> Self {
        debug_assert!(
            (q.transpose() * q - DMatrix::<f64>::identity(q.ncols(), q.ncols())).amax() < 1e-8,
            "columns must be orthonormal"
        );
        ProjectionMatrix {
            mat: SymMatrix::symmetrize(q * q.transpose()),
            rank: q.ncols(),
        }
    }

    /// Axis-aligned projector onto the given coordinates.
    pub fn onto_coordinates(n: usize, coords: &[usize]) -> Result<Self> {
        let mut m = DMatrix::zeros(n, n);
        for &i in coords {
            if i >= n {
                return Err(Error::invalid(format!("coordinate {i} out of range")));
            }
            m[(i, i)] = 1.0;
        }
        Ok(ProjectionMatrix {
            mat: SymMatrix { data: m },
            rank: coords.len(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.mat
    }

    /// `I - P`, the projector onto the orthogonal complement.
    pub fn complement(&self) -> ProjectionMatrix {
        let n = self.dim();
        ProjectionMatrix {
            mat: SymMatrix::identity(n).add_scaled(&self.mat, -1.0),
            rank: n - self.rank,
        }
    }

    /// Squared residual `||x - P x||^2` of compressing `x` through `P`.
    pub fn compression_loss(&self, x: &DVector<f64>) -> f64 {
        let residual = x - self.mat.matrix() * x;
        residual.norm_squared()
    }
}

/// Matrix logarithm of a density matrix, flooring eigenvalues at `floor`
/// so rank-deficient states stay finite.
pub fn matrix_log(w: &DensityMatrix, floor: f64) -> Result<SymMatrix> {
    if !floor.is_finite() || floor <= 0.0 {
        return Err(Error::invalid("eigenvalue floor must be positive"));
    }
    let eig = sym_eigen(w.matrix())?;
    let logs: Vec<f64> = eig.values().iter().map(|&v| v.max(floor).ln()).collect();
    Ok(sym_from_spectrum(eig.vectors(), &logs))
}

/// Softmax over a spectrum: shifts by the maximum, exponentiates, normalizes.
/// Preserves the input ordering.
pub(crate) fn exp_normalize(values: &[f64]) -> Vec<f64> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Spectral pieces of `exp(S) / Tr(exp(S))`: the eigenbasis of `S` and the
/// normalized exponentiated spectrum, both ordered non-increasing.
pub(crate) fn exp_normalized_spectral(s: &SymMatrix) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let eig = sym_eigen(s)?;
    let probs = exp_normalize(eig.values());
    let (vectors, _) = (eig.vectors, eig.values);
    Ok((vectors, probs))
}

/// `exp(S) / Tr(exp(S))`, computed spectrally with a max-eigenvalue shift so
/// large negative entries cannot overflow.
pub fn matrix_exp_normalized(s: &SymMatrix) -> Result<DensityMatrix> {
    let (basis, probs) = exp_normalized_spectral(s)?;
    DensityMatrix::from_spectrum(&basis, &probs)
}

/// Quantum relative entropy `Tr(P ln P) - Tr(P ln Q)`.
///
/// `Q` must have full rank (minimum eigenvalue at least `1e-12`); zero
/// eigenvalues of `P` contribute nothing, matching `0 ln 0 = 0`.
pub fn quantum_relative_entropy(p: &DensityMatrix, q: &DensityMatrix) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::invalid("density matrices must share a dimension"));
    }
    let q_eig = sym_eigen(q.matrix())?;
    let q_min = q_eig.value(q_eig.dim() - 1);
    if q_min < EIG_FLOOR {
        return Err(Error::singular(format!(
            "second argument must have full rank, min eigenvalue {q_min}"
        )));
    }
    let p_eig = sym_eigen(p.matrix())?;
    let p_entropy: f64 = p_eig
        .values()
        .iter()
        .filter(|&&v| v > EIG_FLOOR)
        .map(|&v| v * v.ln())
        .sum();
    let log_q = sym_from_spectrum(
        q_eig.vectors(),
        &q_eig.values().iter().map(|&v| v.ln()).collect::<Vec<_>>(),
    );
    Ok(p_entropy - p.matrix().trace_product(&log_q))
}

/// Rank-`k` projector onto the top-`k` eigendirections of `a`; ties keep the
/// first `k` columns of the sorted eigendecomposition.
pub fn top_k_projection(a: &SymMatrix, k: usize) -> Result<ProjectionMatrix> {
    let n = a.dim();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!(
            "projection rank must satisfy 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    let eig = sym_eigen(a)?;
    let basis = eig.vectors().columns(0, k).into_owned();
    Ok(ProjectionMatrix::from_orthonormal_basis(&basis))
}
