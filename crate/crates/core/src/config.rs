//! Numerical tolerances shared by every module.
//!
//! All comparisons against zero, one, or a deciding threshold go through one
//! of these values. The defaults are tuned for 3x3 inputs in double precision.

use serde::{Deserialize, Serialize};

/// Tolerance set used across validation, classification, and verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Slack on entrywise sign and range checks.
    pub entry: f64,
    /// Slack on row sums (stochastic rows sum to one, generator rows to zero).
    pub row: f64,
    /// Slack on fixed-point identities such as `mu' P = mu'` and `mu' Q = 0`.
    pub fixed: f64,
    /// Slack on spectral identities (Vieta checks, projector algebra, rank tests).
    pub spectral: f64,
    /// Relative gap below which two eigenvalues are treated as one.
    pub coincide: f64,
    /// Maximum allowed `|exp(G) - P|` for an accepted witness.
    pub verify: f64,
    /// Target accuracy of the H-ratio root search.
    pub root: f64,
    /// Absolute slack applied to the deciding inequalities, so exact boundary
    /// points are not lost to rounding.
    pub boundary: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        entry: 1e-12,
        row: 1e-10,
        fixed: 1e-10,
        spectral: 1e-9,
        coincide: 1e-8,
        verify: 1e-8,
        root: 1e-12,
        boundary: 1e-12,
    };

    /// Returns the first non-positive or non-finite field, if any.
    pub fn check(&self) -> Result<(), (&'static str, f64)> {
        let fields = [
            ("entry", self.entry),
            ("row", self.row),
            ("fixed", self.fixed),
            ("spectral", self.spectral),
            ("coincide", self.coincide),
            ("verify", self.verify),
            ("root", self.root),
            ("boundary", self.boundary),
        ];
        match fields.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            Some(&(name, v)) => Err((name, v)),
            None => Ok(()),
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
