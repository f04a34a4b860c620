//! Beam-acquisition policy library for heteroscedastic Gaussian reward
//! environments.
//!
//! The crate models a beam codebook as a fixed-budget best-arm-identification
//! problem: each beam's received power is Gaussian with variance proportional
//! to its mean, optionally with one abrupt mean change mid-run. It provides
//!
//! - [`env`]: ground-truth environments, reward sampling, change schedules
//!   and the physical case-study channel;
//! - [`grouping`]: bit-indexed beam groups and the detection-pattern decoder;
//! - [`detection`]: the per-group energy test, its exact miss / false-alarm
//!   probabilities and tail prefactors;
//! - [`special`]: Marcum Q and non-central chi-square evaluation;
//! - [`policies`]: exhaustive search, grouped concurrent exploration,
//!   sequential halving, and truncated halving with equal allocation;
//! - [`bounds`]: closed-form error bounds for bound-vs-simulation overlays;
//! - [`experiments`]: a deterministic parallel Monte Carlo harness, sweep
//!   runners, and the communication/sensing trade-off case study.

pub mod bounds;
pub mod detection;
pub mod env;
pub mod error;
pub mod experiments;
pub mod grouping;
pub mod policies;
pub mod rng;
pub mod special;

pub use bounds::{BoundValue, ExponentForm};
pub use env::{
    CaseStudyChannel, ChangeSchedule, Environment, EnvironmentSpec, GapProfile, SlotLaw,
    StationaryGainPair,
};
pub use error::{Error, Result};
pub use experiments::{EnvTemplate, ErrorEstimate};
pub use grouping::{DetectionVector, GroupDesign};
pub use policies::{Policy, PolicyOutcome, RoundRecord};
pub use rng::{SimRng, StreamFactory};
