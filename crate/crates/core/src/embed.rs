//! Embeddability criteria for each spectral case, and the dispatcher that
//! routes a validated matrix to the right one.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::cycle::{h_max, reciprocal_triangle};
use crate::error::{EmbedError, Result};
use crate::matrix::{
    check_rank_one_structure, classify_spectrum_with, goodman_precheck, stationary_distribution,
    structure_deviation, SpectrumClass, StationaryDistribution, Stochastic2, Stochastic3,
};
use crate::synth::{
    enumerate_branches, synth_2x2, synth_coinciding_positive, synth_complex, synth_distinct_real,
    synth_neg_coinciding_branch, verify, SynthesisReport,
};

/// Rule that decided a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Kendall,
    Goodman,
    RankOneStructure,
    CoincidingNegative,
    PositiveSpectrum,
    ComplexSpectrum,
    NegativeRealEigenvalue,
    UnitModulusEigenvalue,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Kendall => "kendall",
            Criterion::Goodman => "goodman",
            Criterion::RankOneStructure => "rank-one-structure",
            Criterion::CoincidingNegative => "coinciding-negative",
            Criterion::PositiveSpectrum => "positive-spectrum",
            Criterion::ComplexSpectrum => "complex-spectrum",
            Criterion::NegativeRealEigenvalue => "negative-real-eigenvalue",
            Criterion::UnitModulusEigenvalue => "unit-modulus-eigenvalue",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The relation `lhs ? rhs` that must hold for the criterion to pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Less,
    Greater,
    AtLeast,
    AtMost,
}

impl Relation {
    pub fn symbol(&self) -> &'static str {
        match self {
            Relation::Less => "<",
            Relation::Greater => ">",
            Relation::AtLeast => ">=",
            Relation::AtMost => "<=",
        }
    }

    pub fn negated_symbol(&self) -> &'static str {
        match self {
            Relation::Less => ">=",
            Relation::Greater => "<=",
            Relation::AtLeast => "<",
            Relation::AtMost => ">",
        }
    }
}

/// Both sides of the deciding inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub holds: bool,
    /// Binding off-diagonal `(i, j)` for entrywise criteria.
    pub entry: Option<(usize, usize)>,
}

impl Comparison {
    /// Non-strict relations accept a violation up to `slack`.
    pub fn new(lhs: f64, rhs: f64, relation: Relation, slack: f64) -> Self {
        let holds = match relation {
            Relation::Less => lhs < rhs,
            Relation::Greater => lhs > rhs,
            Relation::AtLeast => lhs >= rhs - slack,
            Relation::AtMost => lhs <= rhs + slack,
        };
        Self { lhs, rhs, relation, holds, entry: None }
    }

    /// The relation as it actually stands, e.g. `0.68219 > 0.57735` for a failed `<=`.
    pub fn shown_symbol(&self) -> &'static str {
        if self.holds {
            self.relation.symbol()
        } else {
            self.relation.negated_symbol()
        }
    }
}

/// Logarithm branch of a complex eigenvalue pair `r exp(+-i theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplexBranch {
    /// Argument `theta`.
    Principal,
    /// Argument `theta - 2 pi`.
    Shifted,
}

impl ComplexBranch {
    pub fn index(&self) -> i64 {
        match self {
            ComplexBranch::Principal => 0,
            ComplexBranch::Shifted => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchCheck {
    pub branch: ComplexBranch,
    pub comparison: Comparison,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddabilityVerdict<const N: usize> {
    pub case: SpectrumClass,
    pub embeddable: bool,
    pub criterion: Criterion,
    pub comparison: Comparison,
    pub goodman: bool,
    /// Per-branch outcome, complex spectra only.
    pub branches: Vec<BranchCheck>,
    /// Most negative admissible double eigenvalue, coinciding-negative spectra only.
    pub lambda_bound: Option<f64>,
    /// `None` when the stationary distribution is not unique (2x2 identity).
    pub mu: Option<StationaryDistribution<N>>,
    pub reversible: bool,
    pub witnesses: Vec<SynthesisReport<N>>,
    pub note: Option<String>,
}

impl<const N: usize> EmbeddabilityVerdict<N> {
    fn decided(
        case: SpectrumClass,
        criterion: Criterion,
        comparison: Comparison,
        goodman: bool,
        mu: Option<StationaryDistribution<N>>,
    ) -> Self {
        Self {
            case,
            embeddable: comparison.holds,
            criterion,
            comparison,
            goodman,
            branches: Vec::new(),
            lambda_bound: None,
            mu,
            reversible: false,
            witnesses: Vec::new(),
            note: None,
        }
    }

    fn add_note(&mut self, text: String) {
        self.note = Some(match self.note.take() {
            Some(prev) => format!("{prev}; {text}"),
            None => text,
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EmbedOptions {
    /// Synthesize and verify witness generators for embeddable inputs.
    pub witness: bool,
    /// Return a witness per feasible branch instead of a single one.
    pub all_branches: bool,
    pub tol: Tolerances,
}

/// Kendall: a 2x2 stochastic matrix is embeddable iff its trace exceeds 1.
pub fn embeddable_2x2(p: &Stochastic2, opts: &EmbedOptions) -> EmbeddabilityVerdict<2> {
    let tol = &opts.tol;
    let trace = p.trace();
    let comparison = Comparison::new(trace, 1.0, Relation::Greater, 0.0);
    let mu = stationary_distribution(p, tol).ok();
    let mut verdict = EmbeddabilityVerdict::decided(
        SpectrumClass::TwoState { lambda: trace - 1.0 },
        Criterion::Kendall,
        comparison,
        goodman_precheck(p, tol),
        mu,
    );
    // every 2x2 stochastic matrix is reversible
    verdict.reversible = true;
    if verdict.embeddable && opts.witness {
        match synth_2x2(p, tol) {
            Ok(rep) => verdict.witnesses.push(rep),
            Err(e) => verdict.add_note(format!("witness synthesis failed: {e}")),
        }
    }
    verdict
}

/// `Lambda(mu)`: `P_inf + lambda (I - P_inf)` is embeddable iff `Lambda <= lambda < 0`.
pub fn lambda_lower_bound(mu: &StationaryDistribution<3>) -> f64 {
    if reciprocal_triangle(mu) {
        let b = h_max(mu).powi(2);
        -(-PI / b.sqrt()).exp()
    } else {
        let m = mu.min();
        -(-((1.0 - m) / m).sqrt() * PI).exp()
    }
}

/// Coinciding negative eigenvalue: embeddable iff `pi / (-log|lambda|) <= H_max(mu)`.
///
/// Fails with `StructureViolation` unless `P = P_inf + lambda (I - P_inf)`.
pub fn embeddable_neg_coinciding(
    p: &Stochastic3,
    mu: &StationaryDistribution<3>,
    lambda: f64,
    tol: &Tolerances,
) -> Result<EmbeddabilityVerdict<3>> {
    if !check_rank_one_structure(p, lambda, mu, tol)? {
        return Err(EmbedError::StructureViolation {
            deviation: structure_deviation(p, lambda, mu),
        });
    }
    let needed = PI / -lambda.abs().ln();
    let comparison = Comparison::new(needed, h_max(mu), Relation::AtMost, tol.boundary);
    let mut verdict = EmbeddabilityVerdict::decided(
        SpectrumClass::CoincidingNegative { lambda },
        Criterion::CoincidingNegative,
        comparison,
        goodman_precheck(p, tol),
        Some(*mu),
    );
    verdict.lambda_bound = Some(lambda_lower_bound(mu));
    verdict.reversible = is_reversible(p, mu, tol);
    Ok(verdict)
}

/// `c(l1, l2) = ((l2 - 1) log l1 - (l1 - 1) log l2) / (log l2 - log l1)`, with the
/// limit `l log l - l + 1` once the gap is below `tol.coincide`.
pub fn positive_threshold(lambda1: f64, lambda2: f64, tol: &Tolerances) -> Result<f64> {
    for l in [lambda1, lambda2] {
        if !(l > 0.0 && l < 1.0) {
            return Err(EmbedError::DomainError { what: "eigenvalues must lie in (0, 1)", value: l });
        }
    }
    if (lambda1 - lambda2).abs() <= tol.coincide {
        let l = 0.5 * (lambda1 + lambda2);
        return Ok(l * l.ln() - l + 1.0);
    }
    // 1 - l2 + log(l2) (l1 - l2) / (log l1 - log l2)
    let gap = lambda1 - lambda2;
    let log_ratio = (gap / lambda2).ln_1p();
    Ok(1.0 - lambda2 + lambda2.ln() * gap / log_ratio)
}

/// Entrywise bound for one logarithm branch of `r exp(+-i theta)`:
/// `1 - r cos(theta) + r log(r) sin(theta) / phi` with `phi = theta` or `theta - 2 pi`.
///
/// The principal branch needs `p_ij >= mu_j c`, the shifted one `p_ij <= mu_j c`.
pub fn complex_threshold(modulus: f64, argument: f64, branch: ComplexBranch) -> f64 {
    let phi = argument + 2.0 * PI * branch.index() as f64;
    1.0 - modulus * argument.cos() + modulus * modulus.ln() * argument.sin() / phi
}

/// `mu_i p_ij = mu_j p_ji` for all pairs, within `tol.spectral`.
pub fn is_reversible(p: &Stochastic3, mu: &StationaryDistribution<3>, tol: &Tolerances) -> bool {
    (0..3).all(|i| {
        (i + 1..3).all(|j| (mu.get(i) * p.get(i, j) - mu.get(j) * p.get(j, i)).abs() <= tol.spectral)
    })
}

/// Tightest of the entrywise inequalities `p_ij ? mu_j c`, evaluated without
/// dividing by `mu_j`. Reversible matrices only need `i < j`.
fn binding_entry(
    p: &Stochastic3,
    mu: &StationaryDistribution<3>,
    c: f64,
    relation: Relation,
    reversible: bool,
    tol: &Tolerances,
) -> Comparison {
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..3 {
        for j in (0..3).filter(|&j| j != i && (!reversible || j > i)) {
            let bound = mu.get(j) * c;
            let margin = match relation {
                Relation::AtMost => bound - p.get(i, j),
                _ => p.get(i, j) - bound,
            };
            if best.is_none_or(|(m, _, _)| margin < m) {
                best = Some((margin, i, j));
            }
        }
    }
    let (_, i, j) = best.expect("3x3 has off-diagonal entries");
    let mut cmp = Comparison::new(p.get(i, j), mu.get(j) * c, relation, tol.boundary);
    cmp.entry = Some((i, j));
    cmp
}

/// Real positive spectrum `{1, lambda1, lambda2}` (equal values allowed):
/// embeddable iff `p_ij >= mu_j c(lambda1, lambda2)` for all `i != j`.
pub fn embeddable_positive(
    p: &Stochastic3,
    mu: &StationaryDistribution<3>,
    lambda1: f64,
    lambda2: f64,
    tol: &Tolerances,
) -> Result<EmbeddabilityVerdict<3>> {
    let c = positive_threshold(lambda1, lambda2, tol)?;
    let reversible = is_reversible(p, mu, tol);
    let comparison = binding_entry(p, mu, c, Relation::AtLeast, reversible, tol);
    let case = if (lambda1 - lambda2).abs() <= tol.coincide {
        classify_spectrum_with(p, mu, tol)
    } else {
        SpectrumClass::DistinctReal { lambda1, lambda2 }
    };
    let mut verdict = EmbeddabilityVerdict::decided(
        case,
        Criterion::PositiveSpectrum,
        comparison,
        goodman_precheck(p, tol),
        Some(*mu),
    );
    verdict.reversible = reversible;
    Ok(verdict)
}

/// Complex pair `r exp(+-i theta)`: embeddable iff the principal or the shifted
/// branch inequalities hold for every off-diagonal entry.
pub fn embeddable_complex(
    p: &Stochastic3,
    mu: &StationaryDistribution<3>,
    modulus: f64,
    argument: f64,
    tol: &Tolerances,
) -> EmbeddabilityVerdict<3> {
    let reversible = is_reversible(p, mu, tol);
    let branches: Vec<BranchCheck> = [
        (ComplexBranch::Principal, Relation::AtLeast),
        (ComplexBranch::Shifted, Relation::AtMost),
    ]
    .into_iter()
    .map(|(branch, relation)| {
        let c = complex_threshold(modulus, argument, branch);
        BranchCheck { branch, comparison: binding_entry(p, mu, c, relation, reversible, tol) }
    })
    .collect();
    let shown = branches.iter().find(|b| b.comparison.holds).unwrap_or(&branches[0]).comparison;
    let mut verdict = EmbeddabilityVerdict::decided(
        SpectrumClass::ComplexPair { modulus, argument },
        Criterion::ComplexSpectrum,
        shown,
        goodman_precheck(p, tol),
        Some(*mu),
    );
    verdict.branches = branches;
    verdict.reversible = reversible;
    verdict
}

fn goodman_comparison(p: &Stochastic3, tol: &Tolerances) -> Comparison {
    let det = p.determinant();
    if det <= 0.0 {
        return Comparison::new(det, 0.0, Relation::Greater, 0.0);
    }
    let i = (0..3).min_by(|&a, &b| p.get(a, a).total_cmp(&p.get(b, b))).unwrap_or(0);
    let mut cmp = Comparison::new(p.get(i, i), det, Relation::AtLeast, tol.boundary);
    cmp.entry = Some((i, i));
    cmp
}

/// Full decision for a 3x3 matrix: stationary distribution, Goodman filter,
/// spectrum classification, the case criterion, and optional witnesses.
pub fn embeddable(p: &Stochastic3, opts: &EmbedOptions) -> Result<EmbeddabilityVerdict<3>> {
    let tol = &opts.tol;
    let mu = stationary_distribution(p, tol)?;
    let case = classify_spectrum_with(p, &mu, tol);
    let goodman = goodman_precheck(p, tol);
    let bound = match case {
        SpectrumClass::CoincidingNegative { .. } if mu.is_positive() => {
            Some(lambda_lower_bound(&mu))
        }
        _ => None,
    };
    let not_embeddable = |criterion, comparison| {
        let mut v = EmbeddabilityVerdict::decided(case, criterion, comparison, goodman, Some(mu));
        v.embeddable = false;
        v.lambda_bound = bound;
        v.reversible = is_reversible(p, &mu, tol);
        v
    };
    let unit = 1.0 - tol.spectral;

    if !goodman {
        return Ok(not_embeddable(Criterion::Goodman, goodman_comparison(p, tol)));
    }
    let mut verdict = match case {
        SpectrumClass::CoincidingNegative { lambda } => {
            if lambda <= -unit {
                not_embeddable(
                    Criterion::UnitModulusEigenvalue,
                    Comparison::new(lambda.abs(), unit, Relation::Less, 0.0),
                )
            } else {
                match embeddable_neg_coinciding(p, &mu, lambda, tol) {
                    Ok(v) => v,
                    Err(EmbedError::StructureViolation { deviation }) => not_embeddable(
                        Criterion::RankOneStructure,
                        Comparison::new(deviation, tol.spectral, Relation::AtMost, 0.0),
                    ),
                    Err(e) => return Err(e),
                }
            }
        }
        SpectrumClass::DistinctReal { lambda1, lambda2 } => {
            if lambda1 >= unit {
                not_embeddable(
                    Criterion::UnitModulusEigenvalue,
                    Comparison::new(lambda1, unit, Relation::Less, 0.0),
                )
            } else if lambda2 <= 0.0 {
                not_embeddable(
                    Criterion::NegativeRealEigenvalue,
                    Comparison::new(lambda2, 0.0, Relation::Greater, 0.0),
                )
            } else {
                embeddable_positive(p, &mu, lambda1, lambda2, tol)?
            }
        }
        SpectrumClass::CoincidingPositive { lambda, .. } => {
            if lambda >= unit {
                not_embeddable(
                    Criterion::UnitModulusEigenvalue,
                    Comparison::new(lambda, unit, Relation::Less, 0.0),
                )
            } else {
                embeddable_positive(p, &mu, lambda, lambda, tol)?
            }
        }
        SpectrumClass::ComplexPair { modulus, argument } => {
            if modulus >= unit {
                not_embeddable(
                    Criterion::UnitModulusEigenvalue,
                    Comparison::new(modulus, unit, Relation::Less, 0.0),
                )
            } else {
                embeddable_complex(p, &mu, modulus, argument, tol)
            }
        }
        SpectrumClass::TwoState { .. } => unreachable!("3x3 spectra have two nontrivial roots"),
    };
    verdict.case = case;
    verdict.goodman = goodman;
    if verdict.embeddable && opts.witness {
        attach_witnesses(&mut verdict, p, &mu, opts);
    }
    Ok(verdict)
}

fn attach_witnesses(
    verdict: &mut EmbeddabilityVerdict<3>,
    p: &Stochastic3,
    mu: &StationaryDistribution<3>,
    opts: &EmbedOptions,
) {
    let tol = &opts.tol;
    let attempts: Vec<Result<SynthesisReport<3>>> = match verdict.case {
        SpectrumClass::CoincidingNegative { lambda } => {
            let ks = if opts.all_branches {
                enumerate_branches(lambda, h_max(mu), tol)
            } else {
                vec![0]
            };
            ks.into_iter().map(|k| synth_neg_coinciding_branch(mu, lambda, k, tol)).collect()
        }
        SpectrumClass::DistinctReal { lambda1, lambda2 } => {
            vec![synth_distinct_real(p, mu, lambda1, lambda2, tol)]
        }
        SpectrumClass::CoincidingPositive { lambda, .. } => {
            vec![synth_coinciding_positive(p, mu, lambda, tol)]
        }
        SpectrumClass::ComplexPair { modulus, argument } => {
            let mut ks = verdict
                .branches
                .iter()
                .filter(|b| b.comparison.holds)
                .map(|b| b.branch.index());
            let ks: Vec<i64> =
                if opts.all_branches { ks.collect() } else { ks.next().into_iter().collect() };
            ks.iter()
                .map(|&k| synth_complex(p, mu, modulus, argument, &[k], tol).map(|mut v| v.remove(0)))
                .collect()
        }
        SpectrumClass::TwoState { .. } => Vec::new(),
    };
    for attempt in attempts {
        match attempt {
            Ok(mut rep) => {
                // residual against the input itself, not the idealized form
                rep.residual = verify(&rep.generator, p.entries());
                if rep.residual <= tol.verify {
                    verdict.witnesses.push(rep);
                } else {
                    verdict.add_note(format!(
                        "branch {} witness residual {:e} exceeds tolerance",
                        rep.branch, rep.residual
                    ));
                }
            }
            Err(e) => verdict.add_note(format!("witness synthesis failed: {e}")),
        }
    }
}
