//! Embeddability of 2x2 and 3x3 stochastic matrices: decide whether `P = exp(Q)`
//! for some generator `Q`, and construct verified witnesses.

pub mod cli;
pub mod config;
pub mod cycle;
pub mod embed;
pub mod error;
pub mod expm;
pub mod matrix;
pub mod synth;

pub use config::Tolerances;
pub use cycle::{CycleParams, GeneratorMatrix};
pub use embed::{embeddable, embeddable_2x2, EmbedOptions, EmbeddabilityVerdict};
pub use error::{EmbedError, Result};
pub use matrix::{SpectrumClass, StationaryDistribution, Stochastic2, Stochastic3, StochasticMatrix};
pub use synth::SynthesisReport;
