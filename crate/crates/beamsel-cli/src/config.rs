//! Run configuration: a TOML tree validated up front, with every schema
//! violation reported at once.

use beamsel_core::experiments::{CaseStudyConfig, EnvTemplate};
use beamsel_core::grouping::is_valid_beam_count;
use beamsel_core::policies::Policy;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    /// Single (environment, policies, budget) error estimate.
    Run,
    /// Policy comparison over a budget axis with common random numbers.
    Sweep,
    /// Closed-form bound curves over a distance x budget grid.
    Bounds,
    /// Communication/sensing trade-off over (N, budget fraction).
    Casestudy,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Run => "run",
            CommandKind::Sweep => "sweep",
            CommandKind::Bounds => "bounds",
            CommandKind::Casestudy => "casestudy",
        }
    }
}

/// Bound-curve grid (the `bounds` command).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsGrid {
    /// User distances in meters (each maps to a reference SNR).
    pub distances_m: Vec<f64>,
    /// Alignment budgets in slots.
    pub budgets: Vec<u64>,
    pub n_beams: usize,
    /// Side-lobe gain in linear power units (0 = ideal thin beams).
    #[serde(default)]
    pub small_gain: f64,
    /// Noise scale (linear), defaults to 1 (noise-normalized units).
    #[serde(default = "default_noise")]
    pub noise_scale: f64,
}

fn default_noise() -> f64 {
    1.0
}

/// Case-study grid (the `casestudy` command).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseStudyBlock {
    pub n_grid: Vec<usize>,
    /// Fractions of the frame allotted to beam alignment, in (0, 1).
    pub fractions: Vec<f64>,
    /// Overrides of the shipped default calibration.
    #[serde(default)]
    pub config: Option<CaseStudyConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    /// Alignment budgets in slots, one sweep point each.
    pub budgets: Vec<u64>,
}

/// Top-level run configuration. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    /// Master seed; every artifact is reproducible from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Monte Carlo trials per sweep point (>= 100 for interval validity).
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Worker threads; 0 picks the runtime default.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub environment: Option<EnvTemplate>,
    #[serde(default)]
    pub policies: Vec<Policy>,
    /// Budget in slots for the `run` command.
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub bounds_grid: Option<BoundsGrid>,
    #[serde(default)]
    pub casestudy: Option<CaseStudyBlock>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_trials() -> u64 {
    1000
}

fn template_beams(t: &EnvTemplate) -> Option<usize> {
    match t {
        EnvTemplate::Stationary { n_beams, .. }
        | EnvTemplate::RankedRamp { n_beams, .. }
        | EnvTemplate::BlockedBest { n_beams, .. } => Some(*n_beams),
        EnvTemplate::Fixed(spec) => Some(spec.n_beams()),
    }
}

impl RunConfig {
    /// Parses and validates; returns either the config or every violation.
    pub fn parse(text: &str) -> Result<RunConfig, Vec<String>> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| vec![format!("toml: {e}")])?;
        let violations = cfg.validate();
        if violations.is_empty() {
            Ok(cfg)
        } else {
            Err(violations)
        }
    }

    /// Collects all semantic violations (not just the first).
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let needs_mc = matches!(
            self.command,
            CommandKind::Run | CommandKind::Sweep | CommandKind::Casestudy
        );
        if needs_mc && self.trials < 100 {
            v.push(format!(
                "trials: must be at least 100 for interval validity, got {}",
                self.trials
            ));
        }
        if let Some(env) = &self.environment {
            if let Some(n) = template_beams(env) {
                if !is_valid_beam_count(n) {
                    v.push(format!(
                        "environment.n_beams: must be a power of two >= 2, got {n}"
                    ));
                }
            }
        }
        match self.command {
            CommandKind::Run => {
                if self.environment.is_none() {
                    v.push("environment: required for the run command".into());
                }
                if self.policies.is_empty() {
                    v.push("policies: at least one required for the run command".into());
                }
                match self.budget {
                    None => v.push("budget: required for the run command".into()),
                    Some(0) => v.push("budget: must be positive".into()),
                    _ => {}
                }
            }
            CommandKind::Sweep => {
                if self.environment.is_none() {
                    v.push("environment: required for the sweep command".into());
                }
                if self.policies.is_empty() {
                    v.push("policies: at least one required for the sweep command".into());
                }
                match &self.sweep {
                    None => v.push("sweep: block required for the sweep command".into()),
                    Some(s) if s.budgets.is_empty() => {
                        v.push("sweep.budgets: must be nonempty".into())
                    }
                    _ => {}
                }
            }
            CommandKind::Bounds => match &self.bounds_grid {
                None => v.push("bounds_grid: block required for the bounds command".into()),
                Some(g) => {
                    if g.distances_m.is_empty() {
                        v.push("bounds_grid.distances_m: must be nonempty".into());
                    }
                    if g.budgets.is_empty() {
                        v.push("bounds_grid.budgets: must be nonempty".into());
                    }
                    if !is_valid_beam_count(g.n_beams) {
                        v.push(format!(
                            "bounds_grid.n_beams: must be a power of two >= 2, got {}",
                            g.n_beams
                        ));
                    }
                    if g.distances_m.iter().any(|&d| !(d > 0.0)) {
                        v.push("bounds_grid.distances_m: distances must be positive".into());
                    }
                    if g.small_gain < 0.0 {
                        v.push("bounds_grid.small_gain: must be nonnegative".into());
                    }
                }
            },
            CommandKind::Casestudy => match &self.casestudy {
                None => v.push("casestudy: block required for the casestudy command".into()),
                Some(c) => {
                    if c.n_grid.is_empty() {
                        v.push("casestudy.n_grid: must be nonempty".into());
                    }
                    for &n in &c.n_grid {
                        if !is_valid_beam_count(n) {
                            v.push(format!(
                                "casestudy.n_grid: entries must be powers of two >= 2, got {n}"
                            ));
                        }
                    }
                    if c.fractions.is_empty() {
                        v.push("casestudy.fractions: must be nonempty".into());
                    }
                    for &f in &c.fractions {
                        if !(0.0 < f && f < 1.0) {
                            v.push(format!(
                                "casestudy.fractions: entries must lie in (0, 1), got {f}"
                            ));
                        }
                    }
                }
            },
        }
        v
    }

    /// Canonical TOML rendering; `parse(serialize(x)) == x`.
    pub fn serialize(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
