//! Witness generators `G` with `exp(G) = P` for each embeddable case.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, SMatrix};

use crate::config::Tolerances;
use crate::cycle::{
    eigen_coeffs, generator_from_params, h_max, max_f, signed_ratio_h, zero_ratio_point,
    GeneratorMatrix,
};
use crate::error::{EmbedError, Result};
use crate::expm::exp_residual;
use crate::matrix::{
    limiting_matrix, max_abs, rank_one_form, StationaryDistribution, Stochastic2, Stochastic3,
};

const MAX_BISECTIONS: usize = 200;

/// Off-diagonals of a synthesized logarithm down to this (relative) level are
/// rounding noise at a boundary and are clamped to zero before verification.
const WITNESS_CLAMP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisReport<const N: usize> {
    pub generator: GeneratorMatrix<N>,
    /// Logarithm branch index.
    pub branch: i64,
    /// Time scale `h`; `1` for the closed-form constructions.
    pub scaling: f64,
    /// `max |exp(G) - P|`.
    pub residual: f64,
    /// Bisection steps spent (zero for closed forms).
    pub iterations: usize,
}

/// `max |exp(G) - P|`, infinite if the exponential overflows.
pub fn verify<const N: usize>(g: &GeneratorMatrix<N>, p: &SMatrix<f64, N, N>) -> f64 {
    exp_residual(g.entries(), p).unwrap_or(f64::INFINITY)
}

fn finish<const N: usize>(
    log: SMatrix<f64, N, N>,
    target: &SMatrix<f64, N, N>,
    tol: &Tolerances,
    branch: i64,
    scaling: f64,
    iterations: usize,
) -> Result<SynthesisReport<N>> {
    let clamp = WITNESS_CLAMP * max_abs(&log).max(1.0);
    let generator = GeneratorMatrix::clamped(log, clamp)?;
    let residual = verify(&generator, target);
    if !(residual <= tol.verify) {
        return Err(EmbedError::VerificationFailure { residual });
    }
    Ok(SynthesisReport { generator, branch, scaling, residual, iterations })
}

/// `Q = log(lambda) / (lambda - 1) (P - I)` with `lambda = tr P - 1 > 0`.
pub fn synth_2x2(p: &Stochastic2, tol: &Tolerances) -> Result<SynthesisReport<2>> {
    let lambda = p.trace() - 1.0;
    if !(lambda > 0.0) {
        return Err(EmbedError::NotEmbeddable(format!("trace {} <= 1", p.trace())));
    }
    // near lambda = 1 use lambda - 1 = -(p12 + p21), free of the cancellation in tr P - 2
    let d = -(p.get(0, 1) + p.get(1, 0));
    let factor = if d == 0.0 {
        1.0
    } else if lambda < 0.5 {
        lambda.ln() / (lambda - 1.0)
    } else {
        d.ln_1p() / d
    };
    let log = factor * (p.entries() - Matrix2::identity());
    finish(log, p.entries(), tol, 0, 1.0, 0)
}

/// Feasible branch indices `k >= 0`: those with `(2k+1) pi / (-log|lambda|) <= H_max`.
pub fn enumerate_branches(lambda: f64, h_max: f64, tol: &Tolerances) -> Vec<u32> {
    if !(lambda > -1.0 && lambda < 0.0) {
        return Vec::new();
    }
    let depth = -lambda.abs().ln();
    (0u32..)
        .take_while(|&k| (2 * k + 1) as f64 * PI / depth <= h_max + tol.boundary)
        .collect()
}

/// Principal (`k = 0`) witness for `P_inf + lambda (I - P_inf)`, `lambda < 0`.
pub fn synth_neg_coinciding(
    mu: &StationaryDistribution<3>,
    lambda: f64,
    tol: &Tolerances,
) -> Result<SynthesisReport<3>> {
    synth_neg_coinciding_branch(mu, lambda, 0, tol)
}

/// Witness whose complex eigenvalues are `log|lambda| +- (2k+1) pi i`.
///
/// Bisects `H - H_k` along the segment from the `H = 0` point to the
/// maximizer of `F`, then rescales time so the real part is `log|lambda|`.
pub fn synth_neg_coinciding_branch(
    mu: &StationaryDistribution<3>,
    lambda: f64,
    k: u32,
    tol: &Tolerances,
) -> Result<SynthesisReport<3>> {
    if !(lambda > -1.0 && lambda < 0.0) {
        return Err(EmbedError::DomainError { what: "lambda must lie in (-1, 0)", value: lambda });
    }
    let depth = -lambda.abs().ln();
    let target = (2 * k + 1) as f64 * PI / depth;
    let cap = h_max(mu);
    if cap < target - tol.boundary {
        return Err(EmbedError::NotEmbeddable(format!(
            "branch {k} needs H = {target} but H_max = {cap}"
        )));
    }

    let start = zero_ratio_point(mu)?;
    let end = max_f(mu).params()?;
    let g = |t: f64| signed_ratio_h(&start.lerp(&end, t), mu).map(|h| h - target);

    let (mut lo, mut hi) = (0.0, 1.0);
    let mut t = 1.0;
    let mut iterations = 0;
    let g_end = g(1.0)?;
    if g_end > tol.root {
        let mut gt = g_end;
        while iterations < MAX_BISECTIONS {
            t = 0.5 * (lo + hi);
            gt = g(t)?;
            iterations += 1;
            if gt.abs() <= tol.root || hi - lo <= f64::EPSILON {
                break;
            }
            if gt < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
        }
        if gt.abs() > tol.root && hi - lo > f64::EPSILON {
            return Err(EmbedError::RootFindFailure { iterations, residual: gt.abs() });
        }
    }

    let params = start.lerp(&end, t);
    let alpha = eigen_coeffs(&params, mu)?.alpha;
    let h = 2.0 * depth / alpha;
    let q = generator_from_params(&params, mu)?;
    finish(q.entries() * h, &rank_one_form(mu, lambda), tol, k as i64, h, iterations)
}

/// Spectral projectors `(A1, A2)` for distinct nontrivial eigenvalues, so that
/// `P = P_inf + lambda1 A1 + lambda2 A2`.
pub fn spectral_projectors(
    p: &Stochastic3,
    mu: &StationaryDistribution<3>,
    lambda1: f64,
    lambda2: f64,
    tol: &Tolerances,
) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    let gap = lambda1 - lambda2;
    if gap.abs() <= tol.coincide {
        return Err(EmbedError::ProjectorDegenerate { gap });
    }
    let p_inf = limiting_matrix(mu);
    let centered = p.entries() - p_inf.entries();
    let e = p_inf.complement();
    Ok(((centered - lambda2 * e) / gap, (centered - lambda1 * e) / -gap))
}

/// `(log a - log b) / (a - b)`, accurate for close arguments.
fn log_divided_difference(a: f64, b: f64) -> f64 {
    if a == b {
        1.0 / a
    } else {
        ((a - b) / b).ln_1p() / (a - b)
    }
}

/// `log(lambda1) A1 + log(lambda2) A2`, both eigenvalues in `(0, 1)`.
pub fn synth_distinct_real(
    p: &Stochastic3,
    mu: &StationaryDistribution<3>,
    lambda1: f64,
    lambda2: f64,
    tol: &Tolerances,
) -> Result<SynthesisReport<3>> {
    for l in [lambda1, lambda2] {
        if !(l > 0.0 && l < 1.0) {
            return Err(EmbedError::NotEmbeddable(format!("eigenvalue {l} outside (0, 1)")));
        }
    }
    spectral_projectors(p, mu, lambda1, lambda2, tol)?;
    // Same matrix as the projector sum, regrouped so the 1/(lambda1 - lambda2)
    // factor only multiplies a divided difference.
    let p_inf = limiting_matrix(mu);
    let e = p_inf.complement();
    let a = log_divided_difference(lambda1, lambda2);
    let log = a * (p.entries() - p_inf.entries() - lambda2 * e) + lambda2.ln() * e;
    finish(log, p.entries(), tol, 0, 1.0, 0)
}

/// `log(lambda) E + (P - P_inf - lambda E) / lambda` with `E = I - P_inf`.
///
/// The second term vanishes when `P` is diagonalizable and carries the
/// nilpotent part otherwise.
pub fn synth_coinciding_positive(
    p: &Stochastic3,
    mu: &StationaryDistribution<3>,
    lambda: f64,
    tol: &Tolerances,
) -> Result<SynthesisReport<3>> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(EmbedError::NotEmbeddable(format!("eigenvalue {lambda} outside (0, 1)")));
    }
    let p_inf = limiting_matrix(mu);
    let e = p_inf.complement();
    let log = lambda.ln() * e + (p.entries() - p_inf.entries() - lambda * e) / lambda;
    finish(log, p.entries(), tol, 0, 1.0, 0).map_err(|err| match err {
        EmbedError::InvalidGenerator(_) => EmbedError::VerificationFailure { residual: f64::NAN },
        other => other,
    })
}

/// Logarithm argument for branch `k`: `theta + 2 pi k`.
pub fn branch_angle(theta: f64, k: i64) -> f64 {
    theta + 2.0 * PI * k as f64
}

/// One witness per requested branch `k` (0 for the principal angle `theta`,
/// -1 for `theta - 2 pi`).
///
/// `G_k = log(r) E + phi_k S` where `S = (P - P_inf - r cos(theta) E) / (r sin(theta))`
/// squares to `-E`.
pub fn synth_complex(
    p: &Stochastic3,
    mu: &StationaryDistribution<3>,
    modulus: f64,
    argument: f64,
    branches: &[i64],
    tol: &Tolerances,
) -> Result<Vec<SynthesisReport<3>>> {
    if !(modulus > 0.0 && modulus < 1.0) || !(argument > 0.0 && argument < PI) {
        return Err(EmbedError::NotEmbeddable(format!(
            "complex pair r = {modulus}, theta = {argument} outside the admissible range"
        )));
    }
    let p_inf = limiting_matrix(mu);
    let e = p_inf.complement();
    let (sin, cos) = argument.sin_cos();
    let rotation = (p.entries() - p_inf.entries() - modulus * cos * e) / (modulus * sin);
    branches
        .iter()
        .map(|&k| {
            let log = modulus.ln() * e + branch_angle(argument, k) * rotation;
            finish(log, p.entries(), tol, k, 1.0, 0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::{h_max, CycleParams};
    use crate::expm::expm;
    use crate::matrix::classify_spectrum;
    use crate::matrix::SpectrumClass;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: Tolerances = Tolerances::DEFAULT;

    fn mu(a: f64, b: f64, c: f64) -> StationaryDistribution<3> {
        StationaryDistribution::new([a, b, c]).unwrap()
    }

    fn stochastic(m: Matrix3<f64>) -> Stochastic3 {
        Stochastic3::new(m, &TOL).unwrap()
    }

    fn cyclic() -> Matrix3<f64> {
        Matrix3::new(-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 1.0, 0.0, -1.0)
    }

    fn nontrivial_eigenvalues(g: &Matrix3<f64>) -> Vec<(f64, f64)> {
        let mut ev: Vec<(f64, f64)> =
            g.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect();
        ev.sort_by(|a, b| (a.0.abs() + a.1.abs()).total_cmp(&(b.0.abs() + b.1.abs())));
        ev.split_off(1)
    }

    #[test]
    fn verify_identity() {
        let g = GeneratorMatrix::<3>::zero();
        assert_eq!(verify(&g, &Matrix3::identity()), 0.0);
    }

    #[test]
    fn verify_detects_perturbation() {
        let p = expm(&cyclic()).unwrap();
        let g = GeneratorMatrix::new(cyclic(), &TOL).unwrap();
        assert!(verify(&g, &p) <= 1e-14);
        let flat = Matrix3::from_fn(|i, j| if i == j { -2.0 } else { 1.0 });
        let bumped = GeneratorMatrix::new(cyclic() + 0.01 * flat, &TOL).unwrap();
        assert!(verify(&bumped, &p) > TOL.verify);
    }

    #[test]
    fn two_state_witness() {
        let p = Stochastic2::from_rows([[0.9, 0.1], [0.2, 0.8]]).unwrap();
        let rep = synth_2x2(&p, &TOL).unwrap();
        assert!(rep.residual <= 1e-14);
        let ln = 0.7f64.ln() / -0.3;
        assert_abs_diff_eq!(rep.generator.get(0, 1), 0.1 * ln, epsilon = 1e-15);

        let id = Stochastic2::from_rows([[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(synth_2x2(&id, &TOL).unwrap().generator, GeneratorMatrix::zero());

        let tiny = Stochastic2::from_rows([[0.07, 0.93], [0.07, 0.93]]).unwrap();
        if tiny.trace() > 1.0 {
            assert!(synth_2x2(&tiny, &TOL).unwrap().residual <= TOL.verify);
        }
        let edge = Stochastic2::from_rows([[0.5 + 1e-15, 0.5 - 1e-15], [0.5, 0.5]]).unwrap();
        assert!(synth_2x2(&edge, &TOL).unwrap().residual <= TOL.verify);

        let bad = Stochastic2::from_rows([[0.4, 0.6], [0.5, 0.5]]).unwrap();
        assert!(matches!(synth_2x2(&bad, &TOL), Err(EmbedError::NotEmbeddable(_))));
    }

    #[test]
    fn branch_enumeration() {
        let u = StationaryDistribution::uniform();
        assert_eq!(enumerate_branches(-0.002, h_max(&u), &TOL), vec![0]);
        assert!(enumerate_branches(-0.01, h_max(&u), &TOL).is_empty());
        // k = 1 needs |lambda| <= exp(-3 sqrt(3) pi)
        let edge = (-3.0 * 3f64.sqrt() * PI).exp();
        assert!(edge > 8.13e-8 && edge < 8.14e-8);
        assert_eq!(enumerate_branches(-edge * 0.99, h_max(&u), &TOL), vec![0, 1]);
        assert_eq!(enumerate_branches(-edge * 1.01, h_max(&u), &TOL), vec![0]);
    }

    #[test]
    fn neg_coinciding_uniform() {
        let u = StationaryDistribution::uniform();
        for lambda in [-0.002, -1e-3, -1e-5] {
            let rep = synth_neg_coinciding(&u, lambda, &TOL).unwrap();
            assert!(rep.residual <= TOL.verify, "{lambda}: {}", rep.residual);
            assert!(rep.scaling > 0.0);
            assert!(rep.generator.stationary_residual(&u) <= TOL.fixed);
            let ev = nontrivial_eigenvalues(rep.generator.entries());
            for (re, im) in ev {
                assert_abs_diff_eq!(re, lambda.abs().ln(), epsilon = 1e-9);
                assert_abs_diff_eq!(im.abs(), PI, epsilon = 1e-9);
            }
        }
        assert!(matches!(
            synth_neg_coinciding(&u, -0.01, &TOL),
            Err(EmbedError::NotEmbeddable(_))
        ));
    }

    #[test]
    fn neg_coinciding_at_the_bound_uses_the_maximizer() {
        let u = StationaryDistribution::uniform();
        let lambda = -(-PI * 3f64.sqrt()).exp();
        let rep = synth_neg_coinciding(&u, lambda, &TOL).unwrap();
        assert!(rep.residual <= TOL.verify);
        let g = rep.generator.entries();
        // kappa = gamma = delta = nu: one-way cycle
        assert_abs_diff_eq!(g[(1, 0)], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(g[(0, 1)], g[(1, 2)], epsilon = 1e-9);
        assert_abs_diff_eq!(g[(0, 1)], g[(2, 0)], epsilon = 1e-9);
    }

    #[test]
    fn neg_coinciding_branches_differ() {
        let u = StationaryDistribution::uniform();
        let lambda = -1e-9;
        let ks = enumerate_branches(lambda, h_max(&u), &TOL);
        assert_eq!(ks, vec![0, 1]);
        let reps: Vec<_> = ks
            .iter()
            .map(|&k| synth_neg_coinciding_branch(&u, lambda, k, &TOL).unwrap())
            .collect();
        for rep in &reps {
            assert!(rep.residual <= TOL.verify);
            for (_, im) in nontrivial_eigenvalues(rep.generator.entries()) {
                assert_abs_diff_eq!(im.abs(), (2 * rep.branch + 1) as f64 * PI, epsilon = 1e-8);
            }
        }
        let diff = max_abs(&(reps[0].generator.entries() - reps[1].generator.entries()));
        assert!(diff > 1.0);
    }

    #[test]
    fn neg_coinciding_non_triangle() {
        let m = mu(0.6, 0.25, 0.15);
        let bound = (-PI * (0.85f64 / 0.15).sqrt()).exp();
        let rep = synth_neg_coinciding(&m, -0.9 * bound, &TOL).unwrap();
        assert!(rep.residual <= TOL.verify);
        assert!(synth_neg_coinciding(&m, -1.1 * bound, &TOL).is_err());
    }

    #[test]
    fn projector_algebra() {
        let m = mu(0.5, 0.3, 0.2);
        let e = limiting_matrix(&m).complement();
        let p_inf = *limiting_matrix(&m).entries();
        // build P from a generator with distinct real spectrum
        let q = generator_from_params(&CycleParams::new(0.3, 0.1, 0.05, 0.0).unwrap(), &m).unwrap();
        let p = stochastic(expm(q.entries()).unwrap());
        let SpectrumClass::DistinctReal { lambda1, lambda2 } = classify_spectrum(&p, &TOL).unwrap()
        else {
            panic!("expected distinct real spectrum")
        };
        let (a1, a2) = spectral_projectors(&p, &m, lambda1, lambda2, &TOL).unwrap();
        assert!(max_abs(&(a1 * a1 - a1)) <= TOL.spectral);
        assert!(max_abs(&(a2 * a2 - a2)) <= TOL.spectral);
        assert!(max_abs(&(a1 * a2)) <= TOL.spectral);
        assert!(max_abs(&(p_inf + a1 + a2 - Matrix3::identity())) <= TOL.spectral);
        assert!(max_abs(&(p_inf + lambda1 * a1 + lambda2 * a2 - p.entries())) <= TOL.spectral);
        assert!(max_abs(&(a1 + a2 - e)) <= TOL.spectral);

        let rep = synth_distinct_real(&p, &m, lambda1, lambda2, &TOL).unwrap();
        assert!(rep.residual <= TOL.verify);
        assert!(max_abs(&(rep.generator.entries() - q.entries())) <= 1e-9);
        for i in 0..3 {
            assert_eq!(rep.generator.entries().row(i).iter().sum::<f64>(), 0.0);
        }
        assert!(matches!(
            spectral_projectors(&p, &m, 0.5, 0.5 + 1e-10, &TOL),
            Err(EmbedError::ProjectorDegenerate { .. })
        ));
    }

    #[test]
    fn distinct_from_projectors() {
        let u = StationaryDistribution::uniform();
        let e = limiting_matrix(&u).complement();
        // A1 projects onto (1,-1,0), A2 onto (1,1,-2), both orthogonal to e
        let v1 = nalgebra::Vector3::new(1.0, -1.0, 0.0) / 2f64.sqrt();
        let v2 = nalgebra::Vector3::new(1.0, 1.0, -2.0) / 6f64.sqrt();
        let a1 = v1 * v1.transpose();
        let a2 = v2 * v2.transpose();
        assert!(max_abs(&(a1 + a2 - e)) <= 1e-15);
        let p = stochastic(limiting_matrix(&u).entries() + 0.5 * a1 + 0.25 * a2);
        let rep = synth_distinct_real(&p, &u, 0.5, 0.25, &TOL).unwrap();
        assert!(rep.residual <= TOL.verify);
        let expect = 0.5f64.ln() * a1 + 0.25f64.ln() * a2;
        assert!(max_abs(&(rep.generator.entries() - expect)) <= 1e-12);
    }

    #[test]
    fn idempotent_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = mu(0.2, 0.3, 0.5);
        let e = limiting_matrix(&m).complement();
        for _ in 0..20 {
            let c: f64 = rng.gen_range(-5.0..0.0);
            let lhs = expm(&(c * e)).unwrap();
            let rhs = Matrix3::identity() + (c.exp() - 1.0) * e;
            assert!(max_abs(&(lhs - rhs)) <= TOL.spectral);
        }
    }

    #[test]
    fn coinciding_positive_diagonalizable() {
        let m = mu(0.1, 0.6, 0.3);
        let p = stochastic(rank_one_form(&m, 0.5));
        let rep = synth_coinciding_positive(&p, &m, 0.5, &TOL).unwrap();
        let expect = 0.5f64.ln() * limiting_matrix(&m).complement();
        assert!(max_abs(&(rep.generator.entries() - expect)) <= 1e-14);
        for j in 0..3 {
            assert_abs_diff_eq!(rep.generator.get((j + 1) % 3, j), -0.5f64.ln() * m.get(j), epsilon = 1e-14);
        }
    }

    #[test]
    fn coinciding_positive_jordan_round_trip() {
        let m = StationaryDistribution::uniform();
        let e = limiting_matrix(&m).complement();
        // N maps (1,1,-2) to (1,-1,0) and kills e and (1,-1,0): N^2 = 0, P_inf N = N P_inf = 0
        let u = nalgebra::Vector3::new(1.0, -1.0, 0.0);
        let w = nalgebra::Vector3::new(1.0, 1.0, -2.0) / 6.0;
        let nil = u * w.transpose();
        assert!(max_abs(&(nil * nil)) <= 1e-16);
        let g = -0.7 * e + 0.2 * nil;
        let q = GeneratorMatrix::new(g, &TOL).unwrap();
        let p = stochastic(expm(q.entries()).unwrap());
        let SpectrumClass::CoincidingPositive { lambda, diagonalizable } =
            classify_spectrum(&p, &TOL).unwrap()
        else {
            panic!("expected coinciding positive spectrum")
        };
        assert!(!diagonalizable);
        let rep = synth_coinciding_positive(&p, &m, lambda, &TOL).unwrap();
        assert!(rep.residual <= TOL.verify);
        assert!(max_abs(&(rep.generator.entries() - g)) <= 1e-8);
    }

    #[test]
    fn coinciding_positive_random_mu() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let raw: [f64; 3] = [rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0)];
            let s: f64 = raw.iter().sum();
            let m = mu(raw[0] / s, raw[1] / s, raw[2] / s);
            let lambda = rng.gen_range(0.05..0.95);
            let p = stochastic(rank_one_form(&m, lambda));
            let rep = synth_coinciding_positive(&p, &m, lambda, &TOL).unwrap();
            assert!(rep.residual <= 1e-10);
        }
    }

    #[test]
    fn complex_cycle_recovery() {
        let u = StationaryDistribution::uniform();
        for (t, branch) in [(1.0, 0), (5.0, -1)] {
            let q = cyclic() * t;
            let p = stochastic(expm(&q).unwrap());
            let SpectrumClass::ComplexPair { modulus, argument } = classify_spectrum(&p, &TOL).unwrap()
            else {
                panic!("expected complex spectrum")
            };
            let reps = synth_complex(&p, &u, modulus, argument, &[branch], &TOL).unwrap();
            assert!(reps[0].residual <= TOL.verify);
            assert!(max_abs(&(reps[0].generator.entries() - q)) <= 1e-8, "t = {t}");
        }
        // reversed orientation is recovered on the principal branch
        let q = cyclic().transpose();
        let p = stochastic(expm(&q).unwrap());
        let SpectrumClass::ComplexPair { modulus, argument } = classify_spectrum(&p, &TOL).unwrap()
        else {
            panic!("expected complex spectrum")
        };
        let reps = synth_complex(&p, &u, modulus, argument, &[0], &TOL).unwrap();
        assert!(max_abs(&(reps[0].generator.entries() - q)) <= 1e-8);
    }

    #[test]
    fn complex_both_branches() {
        let u = StationaryDistribution::uniform();
        let p = stochastic(expm(&(cyclic() * 5.0)).unwrap());
        let SpectrumClass::ComplexPair { modulus, argument } = classify_spectrum(&p, &TOL).unwrap()
        else {
            panic!("expected complex spectrum")
        };
        let reps = synth_complex(&p, &u, modulus, argument, &[0, -1], &TOL).unwrap();
        assert_eq!(reps.len(), 2);
        assert!(reps.iter().all(|r| r.residual <= TOL.verify));
        assert!(max_abs(&(reps[0].generator.entries() - reps[1].generator.entries())) > 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn neg_coinciding_witness_invariants(
            a in 0.2f64..1.0, b in 0.2f64..1.0, c in 0.2f64..1.0, frac in 0.05f64..1.0,
        ) {
            let s = a + b + c;
            let m = mu(a / s, b / s, c / s);
            let bound = -(-PI / h_max(&m)).exp();
            let lambda = bound * frac;
            let rep = synth_neg_coinciding(&m, lambda, &TOL).unwrap();
            prop_assert!(rep.residual <= TOL.verify);
            prop_assert!(rep.scaling > 0.0);
            prop_assert!(rep.generator.stationary_residual(&m) <= TOL.fixed * max_abs(rep.generator.entries()).max(1.0));
            for i in 0..3 {
                for j in (0..3).filter(|&j| j != i) {
                    prop_assert!(rep.generator.get(i, j) >= 0.0);
                }
            }
        }
    }
}
