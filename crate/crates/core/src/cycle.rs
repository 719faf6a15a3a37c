//! Cycle parameterization of 3x3 generators with a prescribed stationary
//! vector.
//!
//! A generator `Q` with `mu' Q = 0` is written in terms of three symmetric
//! edge fluxes `kappa` (edge 3-1), `gamma` (edge 1-2), `delta` (edge 2-3) and a
//! net circulation `nu` around the cycle 1 -> 2 -> 3 -> 1:
//!
//! ```text
//!     [ -(k+g)/m1   (g+n)/m1   (k-n)/m1 ]
//! Q = [  (g-n)/m2  -(g+d)/m2   (d+n)/m2 ]
//!     [  (k+n)/m3   (d-n)/m3  -(d+k)/m3 ]
//! ```
//!
//! Positive `nu` pushes probability around 1 -> 2 -> 3 -> 1. The nontrivial
//! eigenvalues solve `x^2 + alpha x + beta = 0`, and `H` is the ratio between
//! their imaginary part and the magnitude of their real part.

use nalgebra::{Matrix3, SMatrix};
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{EmbedError, Result};
use crate::matrix::{limiting_matrix, max_abs, StationaryDistribution};

const PARAM_SLACK: f64 = 1e-12;

/// `(kappa, gamma, delta, nu)`, all in units of probability flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleParams {
    kappa: f64,
    gamma: f64,
    delta: f64,
    nu: f64,
}

impl CycleParams {
    /// Checks `kappa, gamma, delta >= 0`, positive pair sums, and
    /// `|nu| <= min(kappa, gamma, delta)`. Violations at rounding level are
    /// clamped onto the feasible set.
    pub fn new(kappa: f64, gamma: f64, delta: f64, nu: f64) -> Result<Self> {
        let vals = [kappa, gamma, delta, nu];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::InvalidParams("non-finite component".into()));
        }
        let scale = kappa.abs().max(gamma.abs()).max(delta.abs());
        let slack = PARAM_SLACK * scale.max(f64::MIN_POSITIVE);
        let clamp = |v: f64, name: &str| -> Result<f64> {
            if v < -slack {
                Err(EmbedError::InvalidParams(format!("{name} = {v} is negative")))
            } else {
                Ok(v.max(0.0))
            }
        };
        let (kappa, gamma, delta) =
            (clamp(kappa, "kappa")?, clamp(gamma, "gamma")?, clamp(delta, "delta")?);
        if kappa + gamma <= 0.0 || gamma + delta <= 0.0 || delta + kappa <= 0.0 {
            return Err(EmbedError::InvalidParams(
                "every pair sum of kappa, gamma, delta must be positive".into(),
            ));
        }
        let cap = kappa.min(gamma).min(delta);
        if nu.abs() > cap + slack {
            return Err(EmbedError::InvalidParams(format!(
                "|nu| = {} exceeds min(kappa, gamma, delta) = {cap}",
                nu.abs()
            )));
        }
        Ok(Self { kappa, gamma, delta, nu: nu.clamp(-cap, cap) })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `(kappa, gamma, delta)`, the arguments `(x1, x2, x3)` of `F`.
    pub fn fluxes(&self) -> [f64; 3] {
        [self.kappa, self.gamma, self.delta]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            kappa: c * self.kappa,
            gamma: c * self.gamma,
            delta: c * self.delta,
            nu: c * self.nu,
        }
    }

    /// Straight-line interpolation; the feasible set is convex.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        let mix = |a: f64, b: f64| (1.0 - t) * a + t * b;
        Self {
            kappa: mix(self.kappa, other.kappa),
            gamma: mix(self.gamma, other.gamma),
            delta: mix(self.delta, other.delta),
            nu: mix(self.nu, other.nu),
        }
    }
}

/// Transition rate matrix: nonnegative off-diagonals, zero row sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorMatrix<const N: usize> {
    entries: SMatrix<f64, N, N>,
}

impl<const N: usize> GeneratorMatrix<N> {
    /// Off-diagonals in `[-tol.entry, 0)` are clamped to zero; row sums must
    /// vanish within `tol.row` relative to the largest entry.
    pub fn new(entries: SMatrix<f64, N, N>, tol: &Tolerances) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::InvalidGenerator("non-finite entry".into()));
        }
        let mut entries = entries;
        for i in 0..N {
            for j in (0..N).filter(|&j| j != i) {
                let v = entries[(i, j)];
                if v < -tol.entry {
                    return Err(EmbedError::InvalidGenerator(format!(
                        "off-diagonal ({i}, {j}) = {v} is negative"
                    )));
                }
                entries[(i, j)] = v.max(0.0);
            }
        }
        let scale = max_abs(&entries).max(1.0);
        for i in 0..N {
            let sum: f64 = entries.row(i).iter().sum();
            if sum.abs() > tol.row * scale {
                return Err(EmbedError::InvalidGenerator(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { entries })
    }

    /// Clamps negative off-diagonals down to `-clamp` and rebuilds the diagonal
    /// from the off-diagonals, so rows sum to zero exactly.
    pub(crate) fn clamped(entries: SMatrix<f64, N, N>, clamp: f64) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::InvalidGenerator("non-finite entry".into()));
        }
        let mut entries = entries;
        for i in 0..N {
            let mut off = 0.0;
            for j in (0..N).filter(|&j| j != i) {
                let v = entries[(i, j)];
                if v < -clamp {
                    return Err(EmbedError::InvalidGenerator(format!(
                        "off-diagonal ({i}, {j}) = {v} is negative"
                    )));
                }
                entries[(i, j)] = v.max(0.0);
                off += entries[(i, j)];
            }
            entries[(i, i)] = -off;
        }
        Ok(Self { entries })
    }

    pub fn zero() -> Self {
        Self { entries: SMatrix::zeros() }
    }

    pub fn entries(&self) -> &SMatrix<f64, N, N> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn scaled(&self, h: f64) -> Self {
        assert!(h >= 0.0, "generators scale by nonnegative time only");
        Self { entries: self.entries * h }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..N).map(|i| (0..N).map(|j| self.entries[(i, j)]).collect()).collect()
    }

    /// `max_j |(mu' Q)_j|`.
    pub fn stationary_residual(&self, mu: &StationaryDistribution<N>) -> f64 {
        max_abs(&(mu.as_vector().transpose() * self.entries))
    }
}

/// Coefficients of the nontrivial eigen-equation `x^2 + alpha x + beta = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenCoeffs {
    pub alpha: f64,
    pub beta: f64,
}

impl EigenCoeffs {
    /// The nontrivial eigenvalues as `(re, im)` pairs, upper root first.
    pub fn roots(&self) -> [(f64, f64); 2] {
        let re = -0.5 * self.alpha;
        let d = 0.25 * self.alpha * self.alpha - self.beta;
        if d >= 0.0 {
            [(re + d.sqrt(), 0.0), (re - d.sqrt(), 0.0)]
        } else {
            [(re, (-d).sqrt()), (re, -(-d).sqrt())]
        }
    }
}

/// Recovers `(kappa, gamma, delta, nu)` from a generator that fixes `mu`.
pub fn params_from_generator(
    q: &GeneratorMatrix<3>,
    mu: &StationaryDistribution<3>,
    tol: &Tolerances,
) -> Result<CycleParams> {
    let [m1, m2, m3] = mu.positive_triple()?;
    let scale = max_abs(q.entries()).max(1.0);
    let residual = q.stationary_residual(mu);
    if residual > tol.fixed * scale {
        return Err(EmbedError::NotStationary { residual });
    }
    let (a2, a3) = (q.get(0, 1), q.get(0, 2));
    let (b1, b3) = (q.get(1, 0), q.get(1, 2));
    let (c1, c2) = (q.get(2, 0), q.get(2, 1));
    let f12 = m1 * a2 - m2 * b1;
    let f23 = m2 * b3 - m3 * c2;
    let f31 = m3 * c1 - m1 * a3;
    let imbalance = (f12 - f23).abs().max((f23 - f31).abs());
    if imbalance > tol.fixed * scale {
        return Err(EmbedError::BalanceViolation { residual: imbalance });
    }
    CycleParams::new(
        0.5 * (m3 * c1 + m1 * a3),
        0.5 * (m1 * a2 + m2 * b1),
        0.5 * (m2 * b3 + m3 * c2),
        0.5 * f12,
    )
}

fn generator_entries(p: &CycleParams, mu: [f64; 3]) -> Matrix3<f64> {
    let [m1, m2, m3] = mu;
    let CycleParams { kappa: k, gamma: g, delta: d, nu: n } = *p;
    Matrix3::new(
        -(k + g) / m1,
        (g + n) / m1,
        (k - n) / m1,
        (g - n) / m2,
        -(g + d) / m2,
        (d + n) / m2,
        (k + n) / m3,
        (d - n) / m3,
        -(d + k) / m3,
    )
}

/// The generator with cycle parameters `p` and stationary vector `mu`.
pub fn generator_from_params(
    p: &CycleParams,
    mu: &StationaryDistribution<3>,
) -> Result<GeneratorMatrix<3>> {
    let mu = mu.positive_triple()?;
    // nonnegativity follows from |nu| <= min(kappa, gamma, delta)
    GeneratorMatrix::clamped(generator_entries(p, mu), 0.0)
}

pub fn eigen_coeffs(p: &CycleParams, mu: &StationaryDistribution<3>) -> Result<EigenCoeffs> {
    let [m1, m2, m3] = mu.positive_triple()?;
    let CycleParams { kappa: k, gamma: g, delta: d, nu: n } = *p;
    Ok(EigenCoeffs {
        alpha: (k + g) / m1 + (g + d) / m2 + (d + k) / m3,
        beta: (k * g + g * d + d * k + n * n) / (m1 * m2 * m3),
    })
}

/// `4 beta / alpha^2 - 1`, negative when the nontrivial eigenvalues are real.
///
/// Computed as `-2 tr(S^2) / alpha^2` with `S = Q + (alpha / 2)(I - P_inf)`,
/// which is the same quantity without cancellation near a double eigenvalue.
pub fn ratio_radicand(p: &CycleParams, mu: &StationaryDistribution<3>) -> Result<f64> {
    let q = generator_from_params(p, mu)?;
    let alpha = eigen_coeffs(p, mu)?.alpha;
    let s = q.entries() + 0.5 * alpha * limiting_matrix(mu).complement();
    Ok(-2.0 * (s * s).trace() / (alpha * alpha))
}

/// `H = |q| / p` for the eigenvalue `-p + iq` of the generator.
pub fn ratio_h(p: &CycleParams, mu: &StationaryDistribution<3>, tol: &Tolerances) -> Result<f64> {
    let radicand = ratio_radicand(p, mu)?;
    if radicand < -tol.entry {
        return Err(EmbedError::RealEigenvalues { radicand });
    }
    Ok(radicand.max(0.0).sqrt())
}

/// `H` extended continuously into the real-eigenvalue regime with a negative sign.
pub(crate) fn signed_ratio_h(p: &CycleParams, mu: &StationaryDistribution<3>) -> Result<f64> {
    let r = ratio_radicand(p, mu)?;
    Ok(r.signum() * r.abs().sqrt())
}

/// The objective `F(x; mu)` whose maximum over directions bounds `H`.
pub fn objective_f(x: [f64; 3], mu: &StationaryDistribution<3>) -> f64 {
    let [m1, m2, m3] = mu.components();
    let min = x[0].min(x[1]).min(x[2]);
    let num = x[0] * x[1] + x[1] * x[2] + x[2] * x[0] + min * min;
    let den = (x[0] + x[1]) / m1 + (x[1] + x[2]) / m2 + (x[2] + x[0]) / m3;
    num / (den * den)
}

/// True iff `1/mu1, 1/mu2, 1/mu3` satisfy the triangle inequality (boundary
/// included).
pub fn reciprocal_triangle(mu: &StationaryDistribution<3>) -> bool {
    violating_index(mu).is_none()
}

/// Index `i` with `1/mu_i > 1/mu_j + 1/mu_k`, if any. Only the smallest
/// component can violate.
fn violating_index(mu: &StationaryDistribution<3>) -> Option<usize> {
    let m = mu.components();
    (0..3).find(|&i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        m[j] * m[k] > m[i] * (m[j] + m[k])
    })
}

/// Maximum of `F` and a maximizing direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FMaximum {
    pub value: f64,
    /// `(x1, x2, x3)` normalized so the largest component is 1.
    pub direction: [f64; 3],
    /// `nu = min(direction)`, the circulation that attains the maximum.
    pub nu: f64,
    pub triangle: bool,
}

impl FMaximum {
    pub fn params(&self) -> Result<CycleParams> {
        let [k, g, d] = self.direction;
        CycleParams::new(k, g, d, self.nu)
    }
}

pub fn max_f(mu: &StationaryDistribution<3>) -> FMaximum {
    let m = mu.components();
    let prod = m[0] * m[1] * m[2];
    let pair_sum = m[0] * m[1] + m[1] * m[2] + m[2] * m[0];
    match violating_index(mu) {
        None => FMaximum {
            value: prod * prod / (pair_sum * pair_sum),
            direction: [1.0; 3],
            nu: 1.0,
            triangle: true,
        },
        Some(i) => {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            let others = m[i] * (m[j] + m[k]);
            let ratio = others / (2.0 * m[j] * m[k] - others);
            // x_i = x_j = ratio * x_k
            let mut direction = [1.0; 3];
            direction[i] = ratio;
            direction[j] = ratio;
            FMaximum {
                value: prod / (4.0 * (1.0 - mu.min())),
                direction,
                nu: ratio,
                triangle: false,
            }
        }
    }
}

/// Largest achievable `H` over generators that fix `mu`.
pub fn h_max(mu: &StationaryDistribution<3>) -> f64 {
    let m = mu.components();
    if reciprocal_triangle(mu) {
        let prod = m[0] * m[1] * m[2];
        let pair_sum = m[0] * m[1] + m[1] * m[2] + m[2] * m[0];
        (4.0 * prod / (pair_sum * pair_sum) - 1.0).max(0.0).sqrt()
    } else {
        let min = mu.min();
        (min / (1.0 - min)).sqrt()
    }
}

/// The `H = 0` point: `nu = 0`, `kappa : gamma : delta = 1/mu2 : 1/mu3 : 1/mu1`,
/// scaled so the largest flux is 1.
pub fn zero_ratio_point(mu: &StationaryDistribution<3>) -> Result<CycleParams> {
    let [m1, m2, m3] = mu.positive_triple()?;
    let raw = [1.0 / m2, 1.0 / m3, 1.0 / m1];
    let top = raw.iter().cloned().fold(0.0, f64::max);
    CycleParams::new(raw[0] / top, raw[1] / top, raw[2] / top, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: Tolerances = Tolerances::DEFAULT;

    fn uniform() -> StationaryDistribution<3> {
        StationaryDistribution::uniform()
    }

    fn mu(a: f64, b: f64, c: f64) -> StationaryDistribution<3> {
        StationaryDistribution::new([a, b, c]).unwrap()
    }

    fn gen(rows: [[f64; 3]; 3]) -> GeneratorMatrix<3> {
        GeneratorMatrix::new(Matrix3::from_fn(|i, j| rows[i][j]), &TOL).unwrap()
    }

    #[test]
    fn params_from_generator_examples() {
        let zero = GeneratorMatrix::<3>::zero();
        assert!(matches!(
            params_from_generator(&zero, &uniform(), &TOL),
            Err(EmbedError::InvalidParams(_))
        ));

        let ones = gen([[-2.0, 1.0, 1.0], [1.0, -2.0, 1.0], [1.0, 1.0, -2.0]]);
        let p = params_from_generator(&ones, &uniform(), &TOL).unwrap();
        for v in p.fluxes() {
            assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(p.nu(), 0.0, epsilon = 1e-15);

        let cyc = gen([[-1.0, 1.0, 0.0], [0.0, -1.0, 1.0], [1.0, 0.0, -1.0]]);
        let p = params_from_generator(&cyc, &uniform(), &TOL).unwrap();
        for v in [p.kappa(), p.gamma(), p.delta(), p.nu()] {
            assert_abs_diff_eq!(v, 1.0 / 6.0, epsilon = 1e-15);
        }

        // not stationary for the uniform vector
        let skew = gen([[-1.0, 1.0, 0.0], [0.0, -2.0, 2.0], [1.0, 0.0, -1.0]]);
        assert!(matches!(
            params_from_generator(&skew, &uniform(), &TOL),
            Err(EmbedError::NotStationary { .. })
        ));
    }

    #[test]
    fn generator_from_params_examples() {
        let p = CycleParams::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0).unwrap();
        let q = generator_from_params(&p, &uniform()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { -2.0 } else { 1.0 };
                assert_abs_diff_eq!(q.get(i, j), want, epsilon = 1e-14);
            }
        }
        let s = 1.0 / 6.0;
        let q = generator_from_params(&CycleParams::new(s, s, s, s).unwrap(), &uniform()).unwrap();
        let want = Matrix3::new(-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 1.0, 0.0, -1.0);
        assert!(max_abs(&(q.entries() - want)) < 1e-14);
    }

    #[test]
    fn params_constraints() {
        assert!(CycleParams::new(1.0, 1.0, 1.0, 1.0).is_ok());
        assert!(CycleParams::new(1.0, 1.0, 0.5, 0.6).is_err());
        assert!(CycleParams::new(-0.1, 1.0, 1.0, 0.0).is_err());
        assert!(CycleParams::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(CycleParams::new(1.0, 1.0, 0.0, 0.0).is_ok());
        let p = CycleParams::new(1.0, 1.0, 0.5, 0.5 + 1e-14).unwrap();
        assert_eq!(p.nu(), 0.5);
    }

    #[test]
    fn eigen_coeff_examples() {
        let c = eigen_coeffs(&CycleParams::new(1.0, 1.0, 1.0, 0.0).unwrap(), &uniform()).unwrap();
        assert_abs_diff_eq!(c.alpha, 18.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.beta, 81.0, epsilon = 1e-12);
        let c = eigen_coeffs(&CycleParams::new(1.0, 1.0, 1.0, 1.0).unwrap(), &uniform()).unwrap();
        assert_abs_diff_eq!(c.alpha, 18.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.beta, 108.0, epsilon = 1e-12);
        let m = mu(0.5, 0.3, 0.2);
        let a = eigen_coeffs(&CycleParams::new(0.4, 0.7, 0.3, 0.2).unwrap(), &m).unwrap();
        let b = eigen_coeffs(&CycleParams::new(0.4, 0.7, 0.3, -0.2).unwrap(), &m).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ratio_h_examples() {
        let m = mu(0.5, 0.3, 0.2);
        let z = zero_ratio_point(&m).unwrap();
        assert!(ratio_h(&z, &m, &TOL).unwrap() <= 1e-10);

        let p = CycleParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(
            ratio_h(&p, &uniform(), &TOL).unwrap(),
            (1.0f64 / 3.0).sqrt(),
            epsilon = 1e-12
        );
        let p = CycleParams::new(1.0, 1.0, 1.0, 0.0).unwrap();
        assert!(ratio_h(&p, &uniform(), &TOL).unwrap() <= 1e-10);

        // reversible with unequal fluxes: real eigenvalues
        let p = CycleParams::new(1.0, 0.2, 0.5, 0.0).unwrap();
        assert!(matches!(ratio_h(&p, &m, &TOL), Err(EmbedError::RealEigenvalues { .. })));
    }

    #[test]
    fn radicand_matches_coefficient_formula() {
        let m = mu(0.5, 0.3, 0.2);
        let p = CycleParams::new(0.4, 0.7, 0.3, 0.25).unwrap();
        let c = eigen_coeffs(&p, &m).unwrap();
        let direct = 4.0 * c.beta / (c.alpha * c.alpha) - 1.0;
        assert_abs_diff_eq!(ratio_radicand(&p, &m).unwrap(), direct, epsilon = 1e-12);
    }

    #[test]
    fn max_f_examples() {
        let u = max_f(&uniform());
        assert!(u.triangle);
        assert_abs_diff_eq!(u.value, 1.0 / 81.0, epsilon = 1e-15);
        assert_eq!(u.direction, [1.0; 3]);
        assert_eq!(u.nu, 1.0);

        let m = mu(0.6, 0.25, 0.15);
        let f = max_f(&m);
        assert!(!f.triangle);
        assert_abs_diff_eq!(f.value, 0.0225 / 3.4, epsilon = 1e-15);
        assert_abs_diff_eq!(f.value, 0.0066176, epsilon = 1e-7);
        assert_abs_diff_eq!(objective_f(f.direction, &m), f.value, epsilon = 1e-15);
    }

    #[test]
    fn max_f_dominates_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in [uniform(), mu(0.6, 0.25, 0.15), mu(0.1, 0.45, 0.45), mu(0.3, 0.3, 0.4)] {
            let best = max_f(&m);
            for _ in 0..10_000 {
                let x = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
                assert!(objective_f(x, &m) <= best.value * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn h_max_examples() {
        assert_abs_diff_eq!(h_max(&uniform()), (1.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(h_max(&mu(0.6, 0.25, 0.15)), (0.15f64 / 0.85).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(h_max(&mu(0.6, 0.25, 0.15)), 0.420084, epsilon = 1e-6);
        // zero component: no oscillation possible
        assert_eq!(h_max(&mu(0.0, 0.5, 0.5)), 0.0);
    }

    #[test]
    fn argmax_attains_h_max() {
        for m in [uniform(), mu(0.6, 0.25, 0.15), mu(0.2, 0.5, 0.3), mu(0.45, 0.1, 0.45)] {
            let p = max_f(&m).params().unwrap();
            assert_abs_diff_eq!(ratio_h(&p, &m, &TOL).unwrap(), h_max(&m), epsilon = 1e-12);
        }
    }

    /// min of `x + a/x` on `(0, c]`.
    fn min_x_plus_a_over_x(a: f64, c: f64) -> (f64, f64) {
        if a.sqrt() <= c {
            (2.0 * a.sqrt(), a.sqrt())
        } else {
            (c + a / c, c)
        }
    }

    #[test]
    fn x_plus_a_over_x_minimum() {
        for &(a, c) in &[(0.25, 1.0), (4.0, 1.0), (1.0, 1.0), (0.01, 0.05)] {
            let (v, x) = min_x_plus_a_over_x(a, c);
            let grid = (1..=100_000).map(|i| c * i as f64 / 100_000.0);
            let brute = grid.map(|x| x + a / x).fold(f64::INFINITY, f64::min);
            assert!((brute - v).abs() < 1e-6, "a={a} c={c}");
            assert_abs_diff_eq!(x + a / x, v, epsilon = 1e-15);
        }
    }

    #[test]
    fn restricted_maximum_reduces_to_x_plus_a_over_x() {
        // On x1 <= x2 <= x3 with s = t, F = [mu1 / (w + a / w)]^2 with w = sqrt(r / t) in (0, 1]
        // and a = mu1 (1/mu2 + 1/mu3).
        for m in [mu(0.1, 0.45, 0.45), mu(0.3, 0.3, 0.4), uniform()] {
            let [m1, m2, m3] = m.components();
            let a = m1 * (1.0 / m2 + 1.0 / m3);
            let (fmin, _) = min_x_plus_a_over_x(a, 1.0);
            let restricted = (m1 / fmin).powi(2);
            let candidate = if 1.0 / m1 >= 1.0 / m2 + 1.0 / m3 {
                m1 * m2 * m3 / (4.0 * (1.0 - m1))
            } else {
                1.0 / (1.0 / m1 + 1.0 / m2 + 1.0 / m3).powi(2)
            };
            assert_abs_diff_eq!(restricted, candidate, epsilon = 1e-15);
            if m1 == m.min() {
                assert_abs_diff_eq!(restricted, max_f(&m).value, epsilon = 1e-15);
            }
        }
    }

    fn arb_mu() -> impl Strategy<Value = StationaryDistribution<3>> {
        prop::array::uniform3(0.02f64..1.0).prop_map(|w| {
            let s: f64 = w.iter().sum();
            StationaryDistribution::new([w[0] / s, w[1] / s, w[2] / s]).unwrap()
        })
    }

    fn arb_params() -> impl Strategy<Value = CycleParams> {
        (prop::array::uniform3(0.01f64..2.0), -1.0f64..1.0).prop_map(|(x, t)| {
            let cap = x[0].min(x[1]).min(x[2]);
            CycleParams::new(x[0], x[1], x[2], t * cap).unwrap()
        })
    }

    proptest! {
        #[test]
        fn round_trip(p in arb_params(), m in arb_mu()) {
            let q = generator_from_params(&p, &m).unwrap();
            prop_assert!(q.stationary_residual(&m) <= TOL.fixed);
            for i in 0..3 {
                prop_assert!(q.entries().row(i).iter().sum::<f64>().abs() <= TOL.row);
            }
            let back = params_from_generator(&q, &m, &TOL).unwrap();
            prop_assert!((back.kappa() - p.kappa()).abs() <= TOL.spectral);
            prop_assert!((back.gamma() - p.gamma()).abs() <= TOL.spectral);
            prop_assert!((back.delta() - p.delta()).abs() <= TOL.spectral);
            prop_assert!((back.nu() - p.nu()).abs() <= TOL.spectral);
        }

        #[test]
        fn eigenvalues_match_coefficients(p in arb_params(), m in arb_mu()) {
            let q = generator_from_params(&p, &m).unwrap();
            let c = eigen_coeffs(&p, &m).unwrap();
            // det(xI - Q) = x (x^2 + alpha x + beta)
            for x in [-1.0, 0.5, 2.0] {
                let lhs = (x * Matrix3::<f64>::identity() - q.entries()).determinant();
                let rhs = x * (x * x + c.alpha * x + c.beta);
                prop_assert!((lhs - rhs).abs() <= TOL.spectral * (1.0 + rhs.abs()));
            }
            let mut eig: Vec<(f64, f64)> =
                q.entries().complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
            eig.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
            prop_assert!(eig[0].0.abs() <= 1e-9 * c.alpha && eig[0].1.abs() <= 1e-9 * c.alpha);
            let mut roots = c.roots().to_vec();
            roots.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
            // eigenvalue sensitivity near a double root is ~sqrt(eps)
            let close = |a: (f64, f64), b: (f64, f64)| {
                ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt() <= 1e-6 * c.alpha
            };
            prop_assert!(
                (close(eig[1], roots[0]) && close(eig[2], roots[1]))
                    || (close(eig[1], roots[1]) && close(eig[2], roots[0]))
            );
        }

        #[test]
        fn ratio_is_scale_invariant(p in arb_params(), m in arb_mu(), c in 0.01f64..100.0) {
            match (ratio_h(&p, &m, &TOL), ratio_h(&p.scaled(c), &m, &TOL)) {
                (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-9),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "mismatch {a:?} {b:?}"),
            }
        }

        #[test]
        fn ratio_never_exceeds_h_max(p in arb_params(), m in arb_mu()) {
            if let Ok(h) = ratio_h(&p, &m, &TOL) {
                prop_assert!(h <= h_max(&m) + TOL.spectral);
            }
        }

        #[test]
        fn h_max_matches_max_f(m in arb_mu()) {
            let [a, b, c] = m.components();
            let from_f = (4.0 * max_f(&m).value / (a * b * c) - 1.0).max(0.0).sqrt();
            prop_assert!((from_f - h_max(&m)).abs() <= 1e-9);
        }

        #[test]
        fn zero_point_has_zero_ratio(m in arb_mu()) {
            let z = zero_ratio_point(&m).unwrap();
            prop_assert!(ratio_h(&z, &m, &TOL).unwrap() <= 1e-10);
        }
    }
}
