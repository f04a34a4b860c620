//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by environment construction, policies, detection and bounds.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("n_beams must be a power of two >= 2, got {0}")]
    NotPowerOfTwo(usize),

    #[error("beam index {index} out of range for {n_beams} beams")]
    BeamOutOfRange { index: usize, n_beams: usize },

    #[error("big gain must exceed small gain, got G = {big}, g = {small}")]
    GainOrder { big: f64, small: f64 },

    #[error("means must have a unique argmax, found a tie at value {0}")]
    TiedArgmax(f64),

    #[error("mean values must be nonnegative and finite, got {0}")]
    BadMean(f64),

    #[error("noise scale must be positive and finite, got {0}")]
    BadNoiseScale(f64),

    #[error("invalid change schedule: {0}")]
    BadChange(String),

    #[error("invalid change-slot law: {0}")]
    BadSlotLaw(String),

    #[error("empty beam group")]
    EmptyGroup,

    #[error("budget {budget} insufficient, at least {required} slots required")]
    InsufficientBudget { budget: u64, required: u64 },

    #[error("K = {k} out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },

    #[error("got {got} samples, detection is configured for t_group = {expected}")]
    SampleCountMismatch { got: usize, expected: u64 },

    #[error("degenerate detection configuration: {0}")]
    DegenerateDetection(String),

    #[error("environment is not a two-level gain profile: {0}")]
    NotTwoLevel(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("outside validity regime: {0}")]
    Regime(String),

    #[error("invalid experiment plan: {0}")]
    BadPlan(String),

    #[error("channel parameter out of range: {0}")]
    BadChannel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
