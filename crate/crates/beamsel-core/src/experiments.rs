//! Deterministic, parallel Monte Carlo harness: error estimation with Wilson
//! confidence intervals, paired policy comparisons under common random
//! numbers, parameter sweeps, and the beam-refinement/data-rate case study.
//!
//! Every trial draws its randomness from streams keyed by (master seed, sweep
//! point, trial, lane), so results are bit-identical for any worker count.
//! Policies compared at the same point share the environment realization and
//! the noise stream seed.

use crate::bounds::kshes_safe_slot;
use crate::env::{
    directivity_factor, CaseStudyChannel, ChangeSchedule, EnvironmentSpec, SlotLaw,
    StationaryGainPair,
};
use crate::error::{Error, Result};
use crate::policies::{kshes_r_star, Policy};
use crate::rng::{SimRng, StreamFactory, LANE_ENV, LANE_POLICY};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

/// Monte Carlo error estimate with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub errors: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub elapsed_s: f64,
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Runs `trials` independent boolean trials in parallel and aggregates an
/// error rate. `run_trial(trial)` must derive all randomness from streams
/// keyed by the trial index, so any execution order gives the same counts.
pub fn monte_carlo_error<F>(trials: u64, run_trial: F) -> Result<ErrorEstimate>
where
    F: Fn(u64) -> Result<bool> + Sync,
{
    if trials == 0 {
        return Err(Error::BadPlan("trials must be at least 1".into()));
    }
    let start = Instant::now();
    let errors = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(i).map(u64::from))
        .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
    let (ci_lo, ci_hi) = wilson_interval(errors, trials, 1.96);
    Ok(ErrorEstimate {
        errors,
        trials,
        rate: errors as f64 / trials as f64,
        ci_lo,
        ci_hi,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

/// Per-trial environment generator for the harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvTemplate {
    /// Fixed two-level stationary environment.
    Stationary {
        n_beams: usize,
        big_gain: f64,
        small_gain: f64,
        best_index: usize,
        noise_scale: f64,
    },
    /// Descending linear ramp of means (rank k at index k-1), optionally with
    /// one beam of random rank jumping to `post_mean`.
    RankedRamp {
        n_beams: usize,
        top: f64,
        step: f64,
        noise_scale: f64,
        change: Option<RampChange>,
    },
    /// Case-study blockage: the true best beam starts blocked at
    /// `blocked_frac * gain` while an interim beam holds `interim_frac *
    /// gain`; the blocked beam recovers to full gain at a slot drawn from
    /// `slot_law` (typically uniform over a whole frame).
    BlockedBest {
        n_beams: usize,
        gain: f64,
        interim_frac: f64,
        blocked_frac: f64,
        noise_scale: f64,
        slot_law: SlotLaw,
        /// Horizon the change slot is clamped to (frame length).
        horizon: u64,
    },
    /// An explicit environment used as-is each trial.
    Fixed(EnvironmentSpec),
}

/// Change block for [`EnvTemplate::RankedRamp`]: the changed beam's pre-change
/// rank is drawn uniformly from `rank_lo..=rank_hi` (1 = best).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampChange {
    pub rank_lo: usize,
    pub rank_hi: usize,
    pub post_mean: f64,
    pub slot_law: SlotLaw,
}

/// Interim-best beam index in [`EnvTemplate::BlockedBest`] environments.
pub const BLOCKED_BEST_INTERIM: usize = 1;
/// Blocked true-best beam index in [`EnvTemplate::BlockedBest`] environments.
pub const BLOCKED_BEST_CHANGED: usize = 2;

impl EnvTemplate {
    /// Builds the per-trial environment spec (consuming rank draws etc.).
    pub fn make_spec(&self, rng: &mut SimRng) -> Result<EnvironmentSpec> {
        match self {
            EnvTemplate::Stationary {
                n_beams,
                big_gain,
                small_gain,
                best_index,
                noise_scale,
            } => EnvironmentSpec::stationary(
                *n_beams,
                StationaryGainPair {
                    big_gain: *big_gain,
                    small_gain: *small_gain,
                    best_index: *best_index,
                },
                *noise_scale,
            ),
            EnvTemplate::RankedRamp {
                n_beams,
                top,
                step,
                noise_scale,
                change,
            } => {
                let means: Vec<f64> = (0..*n_beams)
                    .map(|k| (top - k as f64 * step).max(0.0))
                    .collect();
                let change = match change {
                    None => None,
                    Some(c) => {
                        if c.rank_lo < 1 || c.rank_hi > *n_beams || c.rank_lo > c.rank_hi {
                            return Err(Error::BadPlan(format!(
                                "change rank range {}..={} invalid for {n_beams} beams",
                                c.rank_lo, c.rank_hi
                            )));
                        }
                        use rand::Rng;
                        let rank = rng.gen_range(c.rank_lo..=c.rank_hi);
                        let beam = rank - 1;
                        Some(ChangeSchedule {
                            changed_beam: beam,
                            pre_mean: means[beam],
                            post_mean: c.post_mean,
                            slot_law: c.slot_law.clone(),
                        })
                    }
                };
                EnvironmentSpec::new(means, *noise_scale, change)
            }
            EnvTemplate::BlockedBest {
                n_beams,
                gain,
                interim_frac,
                blocked_frac,
                noise_scale,
                slot_law,
                horizon: _,
            } => {
                if !(0.0 < *blocked_frac && blocked_frac < interim_frac && *interim_frac < 1.0) {
                    return Err(Error::BadPlan(format!(
                        "need 0 < blocked_frac ({blocked_frac}) < interim_frac ({interim_frac}) < 1"
                    )));
                }
                let mut means = vec![0.0; *n_beams];
                means[BLOCKED_BEST_INTERIM] = interim_frac * gain;
                means[BLOCKED_BEST_CHANGED] = blocked_frac * gain;
                EnvironmentSpec::new(
                    means,
                    *noise_scale,
                    Some(ChangeSchedule {
                        changed_beam: BLOCKED_BEST_CHANGED,
                        pre_mean: blocked_frac * gain,
                        post_mean: *gain,
                        slot_law: slot_law.clone(),
                    }),
                )
            }
            EnvTemplate::Fixed(spec) => Ok(spec.clone()),
        }
    }

    /// Horizon the change slot is clamped to; the policy budget except for
    /// frame-structured templates.
    pub fn horizon(&self, budget: u64) -> u64 {
        match self {
            EnvTemplate::BlockedBest { horizon, .. } => (*horizon).max(budget),
            _ => budget,
        }
    }
}

fn run_one_trial(
    policy: &Policy,
    template: &EnvTemplate,
    budget: u64,
    factory: &StreamFactory,
    point: u64,
    trial: u64,
) -> Result<bool> {
    let mut env_rng = factory.lane(point, trial, LANE_ENV);
    let spec = template.make_spec(&mut env_rng)?;
    let env = spec.realize(template.horizon(budget), &mut env_rng)?;
    let mut policy_rng = factory.lane(point, trial, LANE_POLICY);
    let outcome = policy.run(&env, budget, &mut policy_rng)?;
    Ok(outcome.selected_beam != env.best_at(budget))
}

/// Estimates a policy's beam-selection error: the fraction of trials whose
/// selection differs from the argmax of the means at the deadline.
pub fn estimate_error(
    policy: &Policy,
    template: &EnvTemplate,
    budget: u64,
    trials: u64,
    factory: &StreamFactory,
    point: u64,
) -> Result<ErrorEstimate> {
    monte_carlo_error(trials, |trial| {
        run_one_trial(policy, template, budget, factory, point, trial)
    })
}

/// Paired estimates for several policies under common random numbers, with
/// per-trial indicators retained for paired standard errors.
#[derive(Debug, Clone)]
pub struct PairedEstimates {
    pub estimates: Vec<ErrorEstimate>,
    masks: Vec<u8>,
}

/// Mean and standard error of the per-trial error difference between two
/// policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedGap {
    pub mean: f64,
    pub se: f64,
}

impl PairedEstimates {
    /// Paired gap `error(i) - error(j)`.
    pub fn gap(&self, i: usize, j: usize) -> PairedGap {
        let n = self.masks.len() as f64;
        let (mut only_i, mut only_j) = (0u64, 0u64);
        for &m in &self.masks {
            let ei = (m >> i) & 1;
            let ej = (m >> j) & 1;
            if ei == 1 && ej == 0 {
                only_i += 1;
            } else if ei == 0 && ej == 1 {
                only_j += 1;
            }
        }
        let mean = (only_i as f64 - only_j as f64) / n;
        // d in {-1, 0, 1}: sum d^2 = only_i + only_j.
        let var = ((only_i + only_j) as f64 - n * mean * mean) / (n - 1.0);
        PairedGap {
            mean,
            se: (var.max(0.0) / n).sqrt(),
        }
    }
}

/// Runs every policy on identical environment realizations and noise seeds.
pub fn estimate_errors_paired(
    policies: &[Policy],
    template: &EnvTemplate,
    budget: u64,
    trials: u64,
    factory: &StreamFactory,
    point: u64,
) -> Result<PairedEstimates> {
    if policies.is_empty() || policies.len() > 8 {
        return Err(Error::BadPlan("need between 1 and 8 policies".into()));
    }
    if trials == 0 {
        return Err(Error::BadPlan("trials must be at least 1".into()));
    }
    let start = Instant::now();
    let masks: Vec<u8> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<u8> {
            let mut mask = 0u8;
            for (pi, policy) in policies.iter().enumerate() {
                let err = run_one_trial(policy, template, budget, factory, point, trial)?;
                mask |= (err as u8) << pi;
            }
            Ok(mask)
        })
        .collect::<Result<Vec<u8>>>()?;
    let elapsed = start.elapsed().as_secs_f64();
    let estimates = (0..policies.len())
        .map(|pi| {
            let errors = masks.iter().filter(|&&m| (m >> pi) & 1 == 1).count() as u64;
            let (ci_lo, ci_hi) = wilson_interval(errors, trials, 1.96);
            ErrorEstimate {
                errors,
                trials,
                rate: errors as f64 / trials as f64,
                ci_lo,
                ci_hi,
                elapsed_s: elapsed,
            }
        })
        .collect();
    Ok(PairedEstimates { estimates, masks })
}

/// One CSV row of a policy-comparison sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub policy: String,
    pub n_beams: usize,
    pub t_budget: u64,
    pub error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Comparison sweep: every policy at every budget, common random numbers
/// within a budget point.
pub struct ComparisonPlan {
    pub template: EnvTemplate,
    pub policies: Vec<Policy>,
    pub budgets: Vec<u64>,
    pub trials: u64,
}

pub fn run_comparison_sweep(
    plan: &ComparisonPlan,
    factory: &StreamFactory,
) -> Result<Vec<ComparisonRow>> {
    if plan.budgets.is_empty() {
        return Err(Error::BadPlan("sweep axis is empty".into()));
    }
    if plan.policies.is_empty() {
        return Err(Error::BadPlan("no policies listed".into()));
    }
    let n_beams = match plan.template.make_spec(&mut factory.lane(u64::MAX, 0, LANE_ENV)) {
        Ok(spec) => spec.n_beams(),
        Err(e) => return Err(e),
    };
    let mut rows = Vec::new();
    for (bi, &budget) in plan.budgets.iter().enumerate() {
        let paired = estimate_errors_paired(
            &plan.policies,
            &plan.template,
            budget,
            plan.trials,
            factory,
            bi as u64,
        )?;
        for (policy, est) in plan.policies.iter().zip(&paired.estimates) {
            rows.push(ComparisonRow {
                policy: policy.name().to_string(),
                n_beams,
                t_budget: budget,
                error: est.rate,
                ci_lo: est.ci_lo,
                ci_hi: est.ci_hi,
                trials: est.trials,
                seed: factory.master(),
            });
        }
    }
    Ok(rows)
}

/// One row of the change-location study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeLocationRow {
    pub window: String,
    pub policy: String,
    pub n_beams: usize,
    pub t_budget: u64,
    pub error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Early-vs-late change study: the change slot is confined either to the
/// early safe window or to the slots after the truncation round, and both
/// halving policies run paired in each window.
pub struct ChangeLocationPlan {
    pub n_beams: usize,
    pub t_budget: u64,
    pub k: usize,
    pub top: f64,
    pub step: f64,
    pub post_mean: f64,
    pub rank_lo: usize,
    pub rank_hi: usize,
    pub noise_scale: f64,
    pub trials: u64,
}

pub fn change_windows(n_beams: usize, t_budget: u64, k: usize) -> (SlotLaw, SlotLaw) {
    let safe = kshes_safe_slot(t_budget, n_beams, k).floor().max(1.0) as u64;
    let d = (n_beams as f64).log2();
    let r_star = kshes_r_star(n_beams, k) as f64;
    let phase_start = (t_budget as f64 * r_star / d).ceil() as u64;
    (
        SlotLaw::Uniform {
            lo: 0,
            hi: safe.min(t_budget),
        },
        SlotLaw::Uniform {
            lo: (phase_start + 1).min(t_budget),
            hi: t_budget,
        },
    )
}

pub fn run_change_location_study(
    plan: &ChangeLocationPlan,
    factory: &StreamFactory,
) -> Result<(Vec<ChangeLocationRow>, [PairedEstimates; 2])> {
    let (early, late) = change_windows(plan.n_beams, plan.t_budget, plan.k);
    let policies = vec![
        Policy::Sh,
        Policy::kshes(plan.k),
    ];
    let mut rows = Vec::new();
    let mut paired = Vec::new();
    for (wi, (name, law)) in [("early", early), ("late", late)].into_iter().enumerate() {
        let template = EnvTemplate::RankedRamp {
            n_beams: plan.n_beams,
            top: plan.top,
            step: plan.step,
            noise_scale: plan.noise_scale,
            change: Some(RampChange {
                rank_lo: plan.rank_lo,
                rank_hi: plan.rank_hi,
                post_mean: plan.post_mean,
                slot_law: law,
            }),
        };
        let est = estimate_errors_paired(
            &policies,
            &template,
            plan.t_budget,
            plan.trials,
            factory,
            wi as u64,
        )?;
        for (policy, e) in policies.iter().zip(&est.estimates) {
            rows.push(ChangeLocationRow {
                window: name.to_string(),
                policy: policy.name().to_string(),
                n_beams: plan.n_beams,
                t_budget: plan.t_budget,
                error: e.rate,
                ci_lo: e.ci_lo,
                ci_hi: e.ci_hi,
                trials: e.trials,
                seed: factory.master(),
            });
        }
        paired.push(est);
    }
    let [a, b]: [PairedEstimates; 2] = paired.try_into().map_err(|_| {
        Error::BadPlan("expected exactly two windows".into())
    })?;
    Ok((rows, [a, b]))
}

/// Achievable downlink rate in bits/s for an alignment budget `t` out of a
/// `t_tot`-slot frame: `(1 - P_e) * (T_D / (T + T_D)) * W * log2(1 + snr)`.
pub fn rate(t: u64, t_tot: u64, bandwidth_hz: f64, snr: f64, p_e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_e) {
        return Err(Error::Domain(format!("p_e must be in [0, 1], got {p_e}")));
    }
    if t == 0 || t >= t_tot {
        return Err(Error::Domain(format!(
            "need 0 < t < t_tot, got t = {t}, t_tot = {t_tot}"
        )));
    }
    let t_d = (t_tot - t) as f64;
    Ok((1.0 - p_e) * (t_d / t_tot as f64) * bandwidth_hz * (1.0 + snr).log2())
}

/// How the data-phase SNR scales with the codebook size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataGainModel {
    /// Data phase rides the selected narrow beam: array gain proportional
    /// to N multiplies the reference SNR.
    ArrayGain,
    /// Array gain with a wideband beam-squint roll-off,
    /// `N exp(-N / n_ref)`: across a 1 GHz band very narrow beams squint off
    /// target, so gains saturate and then degrade (default, `n_ref = 150`).
    SquintLimitedArray { n_ref: f64 },
    /// Plain reference SNR, independent of N.
    Reference,
}

impl DataGainModel {
    pub fn snr(&self, ref_snr: f64, n_beams: usize) -> f64 {
        let n = n_beams as f64;
        match *self {
            DataGainModel::ArrayGain => ref_snr * n,
            DataGainModel::SquintLimitedArray { n_ref } => ref_snr * n * (-n / n_ref).exp(),
            DataGainModel::Reference => ref_snr,
        }
    }
}

/// Case-study configuration (all defaults documented in the README).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyConfig {
    pub channel: CaseStudyChannel,
    pub frame_slots: u64,
    /// Interim (reflection-path) beam gain as a fraction of the full gain.
    pub interim_frac: f64,
    /// Blocked-beam gain as a fraction of the full gain.
    pub blocked_frac: f64,
    /// Change rank knowledge for the truncated-halving policy.
    pub k: usize,
    /// Minimum per-beam samples for a halving round to be worth running at
    /// frame-scale budgets; below it the policy holds the full codebook and
    /// judges on equal allocation.
    pub min_round_samples: u64,
    pub data_gain: DataGainModel,
    pub noise_scale: f64,
}

impl Default for CaseStudyConfig {
    fn default() -> Self {
        Self {
            channel: CaseStudyChannel::default_100m(),
            frame_slots: 35_072,
            interim_frac: 0.3,
            blocked_frac: 0.05,
            k: 2,
            min_round_samples: 4,
            data_gain: DataGainModel::SquintLimitedArray { n_ref: 150.0 },
            noise_scale: 1.0,
        }
    }
}

/// One case-study grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n_beams: usize,
    pub fraction: f64,
    pub t_budget: u64,
    pub error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: u64,
    pub snr_data: f64,
    pub rate_bps: f64,
}

/// Case-study results: all rate points plus the per-axis optima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyTable {
    pub points: Vec<RatePoint>,
    /// Rate-maximizing N for each budget fraction.
    pub best_n_per_fraction: Vec<(f64, usize)>,
    /// Rate-maximizing budget fraction for each N.
    pub best_fraction_per_n: Vec<(usize, f64)>,
}

/// Sweeps (N, budget fraction), estimating the truncated-halving policy's
/// error under a blockage change uniform over the frame, and evaluates the
/// achievable rate at every point.
pub fn optimize_case_study(
    cfg: &CaseStudyConfig,
    n_grid: &[usize],
    fractions: &[f64],
    trials: u64,
    factory: &StreamFactory,
) -> Result<CaseStudyTable> {
    if n_grid.is_empty() || fractions.is_empty() {
        return Err(Error::BadPlan("case-study grids must be nonempty".into()));
    }
    let ref_snr = cfg.channel.ref_snr()?;
    let mut points = Vec::new();
    for (fi, &fraction) in fractions.iter().enumerate() {
        if !(0.0 < fraction && fraction < 1.0) {
            return Err(Error::BadPlan(format!(
                "budget fraction must be in (0, 1), got {fraction}"
            )));
        }
        for (ni, &n) in n_grid.iter().enumerate() {
            let budget = ((cfg.frame_slots as f64 * fraction).round() as u64).max(1);
            let gain = ref_snr * directivity_factor(n);
            let template = EnvTemplate::BlockedBest {
                n_beams: n,
                gain,
                interim_frac: cfg.interim_frac,
                blocked_frac: cfg.blocked_frac,
                noise_scale: cfg.noise_scale,
                slot_law: SlotLaw::Uniform {
                    lo: 0,
                    hi: cfg.frame_slots,
                },
                horizon: cfg.frame_slots,
            };
            let policy = Policy::Kshes {
                k: cfg.k,
                r_star_offset: 0,
                min_round_samples: cfg.min_round_samples,
            };
            let point = (fi as u64) << 32 | ni as u64;
            let est = estimate_error(&policy, &template, budget, trials, factory, point)?;
            let snr_data = cfg.data_gain.snr(ref_snr, n);
            let rate_bps = rate(budget, cfg.frame_slots, cfg.channel.bandwidth_hz, snr_data, est.rate)?;
            points.push(RatePoint {
                n_beams: n,
                fraction,
                t_budget: budget,
                error: est.rate,
                ci_lo: est.ci_lo,
                ci_hi: est.ci_hi,
                trials: est.trials,
                snr_data,
                rate_bps,
            });
        }
    }
    let best_n_per_fraction = fractions
        .iter()
        .map(|&f| {
            let best = points
                .iter()
                .filter(|p| p.fraction == f)
                .max_by(|a, b| a.rate_bps.total_cmp(&b.rate_bps))
                .expect("nonempty grid");
            (f, best.n_beams)
        })
        .collect();
    let best_fraction_per_n = n_grid
        .iter()
        .map(|&n| {
            let best = points
                .iter()
                .filter(|p| p.n_beams == n)
                .max_by(|a, b| a.rate_bps.total_cmp(&b.rate_bps))
                .expect("nonempty grid");
            (n, best.fraction)
        })
        .collect();
    Ok(CaseStudyTable {
        points,
        best_n_per_fraction,
        best_fraction_per_n,
    })
}

/// Writes serializable rows as an RFC 4180 CSV with a header row.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()
}

/// Serializes rows to CSV bytes (used for determinism checks and tests).
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("serializable row");
    }
    writer.into_inner().expect("in-memory writer")
}
