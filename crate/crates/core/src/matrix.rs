//! Validated stochastic matrices, stationary distributions, and spectrum
//! classification.

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{EmbedError, Result};

/// Row-stochastic `N x N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix<const N: usize> {
    entries: SMatrix<f64, N, N>,
}

pub type Stochastic2 = StochasticMatrix<2>;
pub type Stochastic3 = StochasticMatrix<3>;

impl<const N: usize> StochasticMatrix<N> {
    /// Validates entries and row sums. Entries in `[-tol.entry, 0)` are clamped to zero.
    pub fn new(entries: SMatrix<f64, N, N>, tol: &Tolerances) -> Result<Self> {
        let mut entries = entries;
        for i in 0..N {
            let mut sum = 0.0;
            for j in 0..N {
                let v = entries[(i, j)];
                if !v.is_finite() {
                    return Err(EmbedError::NonFinite { row: i, col: j });
                }
                if v < -tol.entry {
                    return Err(EmbedError::NegativeEntry { row: i, col: j, value: v });
                }
                if v > 1.0 + tol.entry {
                    return Err(EmbedError::EntryAboveOne { row: i, col: j, value: v });
                }
                sum += v;
                if v < 0.0 {
                    entries[(i, j)] = 0.0;
                }
            }
            if (sum - 1.0).abs() > tol.row {
                return Err(EmbedError::RowSumViolation { row: i, sum });
            }
        }
        Ok(Self { entries })
    }

    /// Builds from row-major rows using the default tolerances.
    pub fn from_rows(rows: [[f64; N]; N]) -> Result<Self> {
        Self::new(SMatrix::from_fn(|i, j| rows[i][j]), &Tolerances::DEFAULT)
    }

    pub fn entries(&self) -> &SMatrix<f64, N, N> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn dim(&self) -> usize {
        N
    }

    pub fn trace(&self) -> f64 {
        (0..N).map(|i| self.entries[(i, i)]).sum()
    }

    pub fn determinant(&self) -> f64 {
        to_dmatrix(&self.entries).determinant()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..N).map(|i| (0..N).map(|j| self.entries[(i, j)]).collect()).collect()
    }
}

/// A validated input of either supported size.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidatedMatrix {
    Two(Stochastic2),
    Three(Stochastic3),
}

impl ValidatedMatrix {
    pub fn dim(&self) -> usize {
        match self {
            ValidatedMatrix::Two(_) => 2,
            ValidatedMatrix::Three(_) => 3,
        }
    }
}

/// Validates a raw row-major matrix as a 2x2 or 3x3 stochastic matrix.
pub fn validate_stochastic(rows: &[Vec<f64>], tol: &Tolerances) -> Result<ValidatedMatrix> {
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(EmbedError::BadDimension { rows: n, cols: bad.len() });
    }
    match n {
        2 => Ok(ValidatedMatrix::Two(StochasticMatrix::new(
            SMatrix::from_fn(|i, j| rows[i][j]),
            tol,
        )?)),
        3 => Ok(ValidatedMatrix::Three(StochasticMatrix::new(
            SMatrix::from_fn(|i, j| rows[i][j]),
            tol,
        )?)),
        _ => Err(EmbedError::BadDimension { rows: n, cols: n }),
    }
}

pub(crate) fn to_dmatrix<const N: usize>(m: &SMatrix<f64, N, N>) -> DMatrix<f64> {
    DMatrix::from_fn(N, N, |i, j| m[(i, j)])
}

/// Max-norm (largest absolute entry).
pub(crate) fn max_abs<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// True iff the transition graph has at most one closed communicating class.
pub fn is_indecomposable<const N: usize>(p: &StochasticMatrix<N>) -> bool {
    let mut reach = [[false; N]; N];
    for (i, row) in reach.iter_mut().enumerate() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = i == j || p.get(i, j) > 0.0;
        }
    }
    for k in 0..N {
        for i in 0..N {
            for j in 0..N {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    // A state is recurrent iff everything it reaches reaches it back.
    let recurrent: Vec<usize> = (0..N)
        .filter(|&i| (0..N).all(|j| !reach[i][j] || reach[j][i]))
        .collect();
    match recurrent.first() {
        None => false,
        Some(&r) => recurrent.iter().all(|&i| reach[r][i] && reach[i][r]),
    }
}

/// Probability vector fixed by a stochastic matrix.
///
/// Components are nonnegative; transient states of an indecomposable chain
/// carry zero mass. Operations on cycle parameters additionally require
/// every component to be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution<const N: usize> {
    #[serde(with = "serde_array")]
    mu: [f64; N],
}

impl<const N: usize> StationaryDistribution<N> {
    /// Validates nonnegativity and normalization with the default tolerances.
    pub fn new(mu: [f64; N]) -> Result<Self> {
        Self::with_tolerances(mu, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(mut mu: [f64; N], tol: &Tolerances) -> Result<Self> {
        for (i, v) in mu.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(EmbedError::InvalidDistribution(format!("component {i} is not finite")));
            }
            if *v < -tol.entry {
                return Err(EmbedError::InvalidDistribution(format!(
                    "component {i} = {v} is negative"
                )));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let sum: f64 = mu.iter().sum();
        if (sum - 1.0).abs() > tol.row {
            return Err(EmbedError::InvalidDistribution(format!("components sum to {sum}")));
        }
        Ok(Self { mu })
    }

    pub fn uniform() -> Self {
        Self { mu: [1.0 / N as f64; N] }
    }

    pub fn components(&self) -> [f64; N] {
        self.mu
    }

    pub fn get(&self, i: usize) -> f64 {
        self.mu[i]
    }

    pub fn as_vector(&self) -> SVector<f64, N> {
        SVector::from(self.mu)
    }

    /// Smallest component, `m` in the maximization formulas.
    pub fn min(&self) -> f64 {
        self.mu.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive(&self) -> bool {
        self.mu.iter().all(|&v| v > 0.0)
    }

    /// `max_j |(mu' P)_j - mu_j|`.
    pub fn fixed_point_residual(&self, p: &StochasticMatrix<N>) -> f64 {
        let v = self.as_vector();
        max_abs(&(v.transpose() * p.entries() - v.transpose()))
    }
}

impl StationaryDistribution<3> {
    /// The three components, rejecting any zero.
    pub fn positive_triple(&self) -> Result<[f64; 3]> {
        if self.is_positive() {
            Ok(self.mu)
        } else {
            Err(EmbedError::NonPositiveStationary)
        }
    }
}

mod serde_array {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, const N: usize>(
        v: &[f64; N],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(
        d: D,
    ) -> std::result::Result<[f64; N], D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        v.try_into()
            .map_err(|v: Vec<f64>| serde::de::Error::invalid_length(v.len(), &"a fixed-size array"))
    }
}

/// Solves `(P' - I) mu = 0` with the normalization row appended.
pub fn stationary_distribution<const N: usize>(
    p: &StochasticMatrix<N>,
    tol: &Tolerances,
) -> Result<StationaryDistribution<N>> {
    if !is_indecomposable(p) {
        return Err(EmbedError::Decomposable);
    }
    let mut a = DMatrix::zeros(N + 1, N);
    for i in 0..N {
        for j in 0..N {
            a[(i, j)] = p.get(j, i) - if i == j { 1.0 } else { 0.0 };
        }
        a[(N, i)] = 1.0;
    }
    let mut b = DVector::zeros(N + 1);
    b[N] = 1.0;
    let x = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| EmbedError::InvalidDistribution(e.to_string()))?;

    let mut mu = [0.0; N];
    for (i, m) in mu.iter_mut().enumerate() {
        *m = if x[i].abs() <= tol.fixed { 0.0 } else { x[i] };
    }
    let sum: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|m| *m /= sum);
    let mu = StationaryDistribution::with_tolerances(mu, tol)?;
    let residual = mu.fixed_point_residual(p);
    if residual > tol.fixed {
        return Err(EmbedError::InvalidDistribution(format!(
            "fixed-point residual {residual:e}"
        )));
    }
    Ok(mu)
}

/// Rank-one matrix `e mu'` whose rows all equal the stationary distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitingMatrix<const N: usize> {
    entries: SMatrix<f64, N, N>,
}

impl<const N: usize> LimitingMatrix<N> {
    pub fn entries(&self) -> &SMatrix<f64, N, N> {
        &self.entries
    }

    /// `I - P_inf`, the projector onto the complement of the stationary direction.
    pub fn complement(&self) -> SMatrix<f64, N, N> {
        SMatrix::<f64, N, N>::identity() - self.entries
    }
}

pub fn limiting_matrix<const N: usize>(mu: &StationaryDistribution<N>) -> LimitingMatrix<N> {
    LimitingMatrix {
        entries: SMatrix::from_fn(|_, j| mu.get(j)),
    }
}

/// `P_inf + lambda (I - P_inf)`, the unique matrix with stationary vector mu and
/// double eigenvalue lambda on the complement.
pub fn rank_one_form(mu: &StationaryDistribution<3>, lambda: f64) -> Matrix3<f64> {
    let p_inf = limiting_matrix(mu);
    p_inf.entries() + lambda * p_inf.complement()
}

/// Nontrivial part of the spectrum of a 3x3 stochastic matrix (the eigenvalue 1
/// is implicit), or the single nontrivial eigenvalue of a 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum SpectrumClass {
    TwoState { lambda: f64 },
    /// `lambda1 > lambda2`.
    DistinctReal { lambda1: f64, lambda2: f64 },
    CoincidingPositive { lambda: f64, diagonalizable: bool },
    CoincidingNegative { lambda: f64 },
    /// `modulus * exp(+-i argument)` with `argument` in `(0, pi)`.
    ComplexPair { modulus: f64, argument: f64 },
}

impl SpectrumClass {
    pub fn name(&self) -> &'static str {
        match self {
            SpectrumClass::TwoState { .. } => "two-state",
            SpectrumClass::DistinctReal { .. } => "distinct-real",
            SpectrumClass::CoincidingPositive { .. } => "coinciding-positive",
            SpectrumClass::CoincidingNegative { .. } => "coinciding-negative",
            SpectrumClass::ComplexPair { .. } => "complex-pair",
        }
    }

    /// Numeric description: the real eigenvalues, or `[modulus, argument]`.
    pub fn values(&self) -> Vec<f64> {
        match *self {
            SpectrumClass::TwoState { lambda } => vec![lambda],
            SpectrumClass::DistinctReal { lambda1, lambda2 } => vec![lambda1, lambda2],
            SpectrumClass::CoincidingPositive { lambda, .. } => vec![lambda],
            SpectrumClass::CoincidingNegative { lambda } => vec![lambda],
            SpectrumClass::ComplexPair { modulus, argument } => vec![modulus, argument],
        }
    }

    /// Sum and product of the two nontrivial eigenvalues (3x3 classes only).
    pub fn sum_product(&self) -> Option<(f64, f64)> {
        match *self {
            SpectrumClass::TwoState { .. } => None,
            SpectrumClass::DistinctReal { lambda1, lambda2 } => {
                Some((lambda1 + lambda2, lambda1 * lambda2))
            }
            SpectrumClass::CoincidingPositive { lambda, .. }
            | SpectrumClass::CoincidingNegative { lambda } => Some((2.0 * lambda, lambda * lambda)),
            SpectrumClass::ComplexPair { modulus, argument } => {
                Some((2.0 * modulus * argument.cos(), modulus * modulus))
            }
        }
    }
}

/// Classifies the roots of `x^2 + alpha x + beta` with `alpha = 1 - tr P`,
/// `beta = det P`.
pub fn classify_spectrum(p: &Stochastic3, tol: &Tolerances) -> Result<SpectrumClass> {
    let mu = stationary_distribution(p, tol)?;
    Ok(classify_spectrum_with(p, &mu, tol))
}

/// Squared eigenvalue gap `(lambda1 - lambda2)^2`, negative for a complex pair.
///
/// Evaluated as `2 tr(S^2)` with `S = P - P_inf - c (I - P_inf)` and `c` the
/// eigenvalue midpoint. `S` vanishes on matrices of the rank-one form, so
/// the result keeps full relative accuracy where the textbook
/// `alpha^2 - 4 beta` cancels catastrophically.
pub fn discriminant(p: &Stochastic3, mu: &StationaryDistribution<3>) -> f64 {
    let c = 0.5 * (p.trace() - 1.0);
    let p_inf = limiting_matrix(mu);
    let s = p.entries() - p_inf.entries() - c * p_inf.complement();
    2.0 * (s * s).trace()
}

pub fn classify_spectrum_with(
    p: &Stochastic3,
    mu: &StationaryDistribution<3>,
    tol: &Tolerances,
) -> SpectrumClass {
    let mid = 0.5 * (p.trace() - 1.0);
    let disc = discriminant(p, mu);
    let gap = disc.abs().sqrt();
    if gap <= tol.coincide * mid.abs().max(1.0) {
        if mid > 0.0 {
            let shifted = p.entries() - mid * Matrix3::identity();
            let sv = shifted.singular_values();
            let mut s: Vec<f64> = sv.iter().cloned().collect();
            s.sort_by(|a, b| b.total_cmp(a));
            SpectrumClass::CoincidingPositive {
                lambda: mid,
                diagonalizable: s[1] <= tol.spectral * s[0],
            }
        } else {
            SpectrumClass::CoincidingNegative { lambda: mid }
        }
    } else if disc > 0.0 {
        let half = 0.5 * gap;
        SpectrumClass::DistinctReal { lambda1: mid + half, lambda2: mid - half }
    } else {
        let imag = 0.5 * gap;
        SpectrumClass::ComplexPair {
            modulus: mid.hypot(imag),
            argument: imag.atan2(mid),
        }
    }
}

/// `max |P - P_inf - lambda (I - P_inf)|`.
pub fn structure_deviation(p: &Stochastic3, lambda: f64, mu: &StationaryDistribution<3>) -> f64 {
    max_abs(&(p.entries() - rank_one_form(mu, lambda)))
}

/// True iff `P = P_inf + lambda (I - P_inf)` within `tol.spectral`.
pub fn check_rank_one_structure(
    p: &Stochastic3,
    lambda: f64,
    mu: &StationaryDistribution<3>,
    tol: &Tolerances,
) -> Result<bool> {
    if !(lambda < 1.0) {
        return Err(EmbedError::DomainError { what: "lambda must be < 1", value: lambda });
    }
    Ok(structure_deviation(p, lambda, mu) <= tol.spectral)
}

/// Necessary condition `p_ii >= det P > 0`. `false` rules embedding out.
pub fn goodman_precheck<const N: usize>(p: &StochasticMatrix<N>, tol: &Tolerances) -> bool {
    let det = p.determinant();
    det > 0.0 && (0..N).all(|i| p.get(i, i) >= det - tol.boundary)
}

/// Residual of `P^2 - s P + q I = (1 - s + q) P_inf` where `s` and `q` are the
/// sum and product of the nontrivial eigenvalues.
pub fn quadratic_identity_residual(
    p: &Stochastic3,
    mu: &StationaryDistribution<3>,
    sum: f64,
    product: f64,
) -> f64 {
    let pm = p.entries();
    let lhs = pm * pm - sum * pm + product * Matrix3::identity();
    let rhs = (1.0 - sum + product) * limiting_matrix(mu).entries();
    max_abs(&(lhs - rhs))
}
