//! Small-matrix exponential and a randomized generator search used as ground
//! truth.

use nalgebra::{Matrix3, SMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cycle::{generator_from_params, CycleParams, GeneratorMatrix};
use crate::error::{EmbedError, Result};
use crate::matrix::{max_abs, StationaryDistribution, Stochastic3};

/// Scaling-and-squaring parameters for [`expm_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpmConfig {
    /// Infinity-norm the scaled matrix must not exceed.
    pub scaling_threshold: f64,
    /// Upper limit on the Taylor degree.
    pub taylor_terms: usize,
    /// A-priori bound on the truncation remainder of the scaled series.
    pub target_accuracy: f64,
    /// Inputs with a larger infinity-norm are rejected.
    pub max_norm: f64,
}

impl Default for ExpmConfig {
    fn default() -> Self {
        Self {
            scaling_threshold: 0.5,
            taylor_terms: 30,
            target_accuracy: 1e-17,
            max_norm: 1e3,
        }
    }
}

fn inf_norm<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    (0..N)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Smallest degree whose remainder bound `x^(m+1)/(m+1)! / (1 - x/(m+2))`
/// drops below `target`.
fn taylor_degree(x: f64, cfg: &ExpmConfig) -> usize {
    let mut term = 1.0;
    for m in 0..cfg.taylor_terms {
        term *= x / (m + 1) as f64;
        let tail = term / (1.0 - x / (m + 2) as f64);
        if tail <= cfg.target_accuracy {
            return m.max(1);
        }
    }
    cfg.taylor_terms
}

pub fn expm<const N: usize>(m: &SMatrix<f64, N, N>) -> Result<SMatrix<f64, N, N>> {
    expm_with(m, &ExpmConfig::default())
}

pub fn expm_with<const N: usize>(
    m: &SMatrix<f64, N, N>,
    cfg: &ExpmConfig,
) -> Result<SMatrix<f64, N, N>> {
    let norm = if m.iter().all(|v| v.is_finite()) { inf_norm(m) } else { f64::NAN };
    if !(norm <= cfg.max_norm) {
        return Err(EmbedError::Overflow { norm });
    }
    let mut squarings = 0;
    let mut scaled_norm = norm;
    while scaled_norm > cfg.scaling_threshold {
        scaled_norm *= 0.5;
        squarings += 1;
    }
    let a = m * 0.5f64.powi(squarings);
    let degree = taylor_degree(scaled_norm, cfg);

    // Horner: I + A(I + A/2(I + A/3(...)))
    let id = SMatrix::<f64, N, N>::identity();
    let mut result = id;
    for k in (1..=degree).rev() {
        result = id + (a * result) / k as f64;
    }
    for _ in 0..squarings {
        result = result * result;
    }
    Ok(result)
}

/// `max |exp(G) - P|`.
pub fn exp_residual<const N: usize>(
    g: &SMatrix<f64, N, N>,
    p: &SMatrix<f64, N, N>,
) -> Result<f64> {
    Ok(max_abs(&(expm(g)? - p)))
}

/// Acceptance threshold of the randomized search.
pub const SEARCH_RESIDUAL: f64 = 1e-6;

const H_GRID: usize = 401;
const H_MIN: f64 = 1e-2;
const H_MAX: f64 = 1e2;
const POLISH_CANDIDATES: usize = 8;
const POLISH_EVALUATIONS: usize = 4000;

/// Randomized search for a generator `G` with `mu' G = 0` and
/// `|exp(G) - P| <= 1e-6`.
///
/// Draws `samples` directions `(kappa, gamma, delta)` uniformly from the unit
/// box (rescaled so the largest is 1) with `nu` uniform in `[-min, min]`, each
/// paired with a time scale from a log-spaced grid on `[1e-2, 1e2]`. The best
/// few samples are then polished with Nelder-Mead in absolute rates. Returns
/// the witness from the lowest-index success, or `None`. Deterministic for a
/// given seed.
pub fn brute_force_search(
    p: &Stochastic3,
    mu: &StationaryDistribution<3>,
    samples: usize,
    seed: u64,
) -> Option<GeneratorMatrix<3>> {
    let target = *p.entries();
    let zero = GeneratorMatrix::<3>::zero();
    if max_abs(&(Matrix3::identity() - target)) <= SEARCH_RESIDUAL {
        return Some(zero);
    }
    if !mu.is_positive() {
        return None;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h_step = (H_MAX / H_MIN).ln() / (H_GRID - 1) as f64;
    // (residual, sample index, absolute rates)
    let mut best: Vec<(f64, usize, [f64; 4])> = Vec::with_capacity(POLISH_CANDIDATES + 1);

    for index in 0..samples {
        let mut x = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
        let top = x.iter().cloned().fold(0.0, f64::max);
        x.iter_mut().for_each(|v| *v /= top);
        let cap = x[0].min(x[1]).min(x[2]);
        let nu = (2.0 * rng.gen::<f64>() - 1.0) * cap;
        let h = H_MIN * (h_step * rng.gen_range(0..H_GRID) as f64).exp();
        let rates = [h * x[0], h * x[1], h * x[2], h * nu];
        let Some(res) = rates_residual(&rates, mu, &target) else {
            continue;
        };
        if res <= SEARCH_RESIDUAL {
            return rates_generator(&rates, mu);
        }
        if best.len() < POLISH_CANDIDATES || res < best[best.len() - 1].0 {
            best.push((res, index, rates));
            best.sort_by(|a, b| a.0.total_cmp(&b.0));
            best.truncate(POLISH_CANDIDATES);
        }
    }

    // Lowest sample index wins among polished successes.
    best.sort_by_key(|b| b.1);
    best.iter().find_map(|&(_, _, start)| {
        let (rates, res) = polish(start, mu, &target);
        if res <= SEARCH_RESIDUAL {
            rates_generator(&rates, mu)
        } else {
            None
        }
    })
}

/// Maps unconstrained rates onto the feasible set.
fn project(r: [f64; 4]) -> [f64; 4] {
    let (k, g, d) = (r[0].max(0.0), r[1].max(0.0), r[2].max(0.0));
    let cap = k.min(g).min(d);
    [k, g, d, r[3].clamp(-cap, cap)]
}

fn rates_generator(rates: &[f64; 4], mu: &StationaryDistribution<3>) -> Option<GeneratorMatrix<3>> {
    let r = project(*rates);
    let params = CycleParams::new(r[0], r[1], r[2], r[3]).ok()?;
    generator_from_params(&params, mu).ok()
}

fn rates_residual(rates: &[f64; 4], mu: &StationaryDistribution<3>, target: &Matrix3<f64>) -> Option<f64> {
    let g = rates_generator(rates, mu)?;
    exp_residual(g.entries(), target).ok()
}

fn frobenius_objective(rates: &[f64; 4], mu: &StationaryDistribution<3>, target: &Matrix3<f64>) -> f64 {
    match rates_generator(rates, mu).and_then(|g| expm(g.entries()).ok()) {
        Some(e) => (e - target).norm_squared(),
        None => f64::INFINITY,
    }
}

/// Nelder-Mead on the squared Frobenius residual.
fn polish(start: [f64; 4], mu: &StationaryDistribution<3>, target: &Matrix3<f64>) -> ([f64; 4], f64) {
    let f = |r: &[f64; 4]| frobenius_objective(&project(*r), mu, target);
    let scale = start.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-3);
    let mut simplex: Vec<([f64; 4], f64)> = Vec::with_capacity(5);
    simplex.push((start, f(&start)));
    for i in 0..4 {
        let mut v = start;
        v[i] += 0.1 * scale;
        simplex.push((v, f(&v)));
    }
    let mut evals = 5;
    while evals < POLISH_EVALUATIONS {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < 1e-26 {
            break;
        }
        let worst = simplex[4];
        let mut centroid = [0.0; 4];
        for (v, _) in &simplex[..4] {
            for i in 0..4 {
                centroid[i] += v[i] / 4.0;
            }
        }
        let along = |t: f64| -> [f64; 4] {
            let mut out = [0.0; 4];
            for i in 0..4 {
                out[i] = centroid[i] + t * (worst.0[i] - centroid[i]);
            }
            out
        };
        let reflected = along(-1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < simplex[0].1 {
            let expanded = along(-2.0);
            let fe = f(&expanded);
            evals += 1;
            simplex[4] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[3].1 {
            simplex[4] = (reflected, fr);
        } else {
            let contracted = if fr < worst.1 { along(-0.5) } else { along(0.5) };
            let fc = f(&contracted);
            evals += 1;
            if fc < worst.1.min(fr) {
                simplex[4] = (contracted, fc);
            } else {
                let best = simplex[0].0;
                for entry in simplex.iter_mut().skip(1) {
                    let mut v = best;
                    for i in 0..4 {
                        v[i] = best[i] + 0.5 * (entry.0[i] - best[i]);
                    }
                    *entry = (v, f(&v));
                }
                evals += 4;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let rates = project(simplex[0].0);
    let res = rates_residual(&rates, mu, target).unwrap_or(f64::INFINITY);
    (rates, res)
}
