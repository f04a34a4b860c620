//! Ground-truth beam environments and heteroscedastic reward sampling.
//!
//! A beam with mean received power `mu` yields Gaussian rewards with variance
//! `2 * noise_scale * mu`: stronger beams are noisier. Environments are either
//! stationary or carry a single abrupt change in one beam's mean. Transmit
//! power is folded into the mean vector, so single-beam and group observations
//! share one linear power scale.

use crate::error::{Error, Result};
use crate::rng::SimRng;
use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Distribution of the change slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlotLaw {
    /// Change at exactly this slot.
    Fixed { slot: u64 },
    /// Discrete uniform over `lo..=hi`.
    Uniform { lo: u64, hi: u64 },
    /// Beta(alpha, beta) stretched over `lo..=hi`.
    Beta { alpha: f64, beta: f64, lo: u64, hi: u64 },
}

impl SlotLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SlotLaw::Fixed { .. } => Ok(()),
            SlotLaw::Uniform { lo, hi } => {
                if lo > hi {
                    Err(Error::BadSlotLaw(format!("uniform lo {lo} > hi {hi}")))
                } else {
                    Ok(())
                }
            }
            SlotLaw::Beta { alpha, beta, lo, hi } => {
                if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                    Err(Error::BadSlotLaw(format!(
                        "beta shape parameters must be positive, got ({alpha}, {beta})"
                    )))
                } else if lo > hi {
                    Err(Error::BadSlotLaw(format!("beta window lo {lo} > hi {hi}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Draws a change slot, clamped to `[0, horizon]`.
    pub fn sample(&self, horizon: u64, rng: &mut SimRng) -> Result<u64> {
        self.validate()?;
        let raw = match *self {
            SlotLaw::Fixed { slot } => slot,
            SlotLaw::Uniform { lo, hi } => rng.gen_range(lo..=hi),
            SlotLaw::Beta { alpha, beta, lo, hi } => {
                let b = Beta::new(alpha, beta)
                    .map_err(|e| Error::BadSlotLaw(format!("beta({alpha}, {beta}): {e}")))?;
                let x: f64 = b.sample(rng);
                lo + (x * (hi - lo) as f64).round() as u64
            }
        };
        Ok(raw.min(horizon))
    }

    /// CDF of the change slot evaluated at `t`, over the law's own support.
    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            SlotLaw::Fixed { slot } => {
                if t >= slot as f64 {
                    1.0
                } else {
                    0.0
                }
            }
            SlotLaw::Uniform { lo, hi } => {
                let (lo, hi) = (lo as f64, hi as f64);
                if hi <= lo {
                    return if t >= lo { 1.0 } else { 0.0 };
                }
                ((t - lo) / (hi - lo)).clamp(0.0, 1.0)
            }
            SlotLaw::Beta { alpha, beta, lo, hi } => {
                let (lo, hi) = (lo as f64, hi as f64);
                if hi <= lo {
                    return if t >= lo { 1.0 } else { 0.0 };
                }
                let x = ((t - lo) / (hi - lo)).clamp(0.0, 1.0);
                statrs::function::beta::beta_reg(alpha, beta, x)
            }
        }
    }
}

/// Draws a change slot per `law`, clamped to `[0, horizon]`.
pub fn realize_change_slot(law: &SlotLaw, horizon: u64, rng: &mut SimRng) -> Result<u64> {
    law.sample(horizon, rng)
}

/// Two-level stationary gain profile: one beam at `big_gain`, the rest at
/// `small_gain`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryGainPair {
    pub big_gain: f64,
    pub small_gain: f64,
    pub best_index: usize,
}

/// Single abrupt change: `changed_beam` moves from `pre_mean` to `post_mean`
/// at a slot drawn from `slot_law`, and becomes the best beam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeSchedule {
    pub changed_beam: usize,
    pub pre_mean: f64,
    pub post_mean: f64,
    pub slot_law: SlotLaw,
}

/// Immutable environment template: per-beam means, noise scale and an
/// optional change schedule. Safe to share across worker threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    n_beams: usize,
    means: Vec<f64>,
    noise_scale: f64,
    change: Option<ChangeSchedule>,
}

impl EnvironmentSpec {
    /// Validates and builds an environment. `means` are the pre-change means;
    /// when a change is scheduled, `means[changed_beam]` must equal its
    /// `pre_mean` and `post_mean` must exceed every other mean.
    pub fn new(
        means: Vec<f64>,
        noise_scale: f64,
        change: Option<ChangeSchedule>,
    ) -> Result<Self> {
        let n_beams = means.len();
        if !crate::grouping::is_valid_beam_count(n_beams) {
            return Err(Error::NotPowerOfTwo(n_beams));
        }
        if !(noise_scale.is_finite() && noise_scale >= 0.0) {
            return Err(Error::BadNoiseScale(noise_scale));
        }
        for &m in &means {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::BadMean(m));
            }
        }
        // Unique argmax among the pre-change means.
        let best = argmax(&means);
        if means.iter().filter(|&&m| m == means[best]).count() > 1 {
            return Err(Error::TiedArgmax(means[best]));
        }
        if let Some(c) = &change {
            c.slot_law.validate()?;
            if c.changed_beam >= n_beams {
                return Err(Error::BeamOutOfRange {
                    index: c.changed_beam,
                    n_beams,
                });
            }
            if means[c.changed_beam] != c.pre_mean {
                return Err(Error::BadChange(format!(
                    "means[{}] = {} but pre_mean = {}",
                    c.changed_beam, means[c.changed_beam], c.pre_mean
                )));
            }
            if !(c.post_mean > c.pre_mean) {
                return Err(Error::BadChange(format!(
                    "post_mean {} must exceed pre_mean {}",
                    c.post_mean, c.pre_mean
                )));
            }
            let other_max = means
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != c.changed_beam)
                .map(|(_, &m)| m)
                .fold(f64::NEG_INFINITY, f64::max);
            if !(c.post_mean > other_max) {
                return Err(Error::BadChange(format!(
                    "post_mean {} does not dominate the other means (max {})",
                    c.post_mean, other_max
                )));
            }
        }
        Ok(Self {
            n_beams,
            means,
            noise_scale,
            change,
        })
    }

    /// Stationary two-level environment: `best_index` at `G`, the rest at `g`.
    pub fn stationary(
        n_beams: usize,
        gains: StationaryGainPair,
        noise_scale: f64,
    ) -> Result<Self> {
        if !crate::grouping::is_valid_beam_count(n_beams) {
            return Err(Error::NotPowerOfTwo(n_beams));
        }
        if gains.best_index >= n_beams {
            return Err(Error::BeamOutOfRange {
                index: gains.best_index,
                n_beams,
            });
        }
        if !(gains.big_gain > gains.small_gain) {
            return Err(Error::GainOrder {
                big: gains.big_gain,
                small: gains.small_gain,
            });
        }
        if gains.small_gain < 0.0 {
            return Err(Error::BadMean(gains.small_gain));
        }
        let mut means = vec![gains.small_gain; n_beams];
        means[gains.best_index] = gains.big_gain;
        Self::new(means, noise_scale, None)
    }

    pub fn n_beams(&self) -> usize {
        self.n_beams
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    pub fn change(&self) -> Option<&ChangeSchedule> {
        self.change.as_ref()
    }

    /// If the means form a two-level profile, returns its gain pair.
    pub fn two_level(&self) -> Result<StationaryGainPair> {
        let best = argmax(&self.means);
        let big = self.means[best];
        let mut small = None;
        for (i, &m) in self.means.iter().enumerate() {
            if i == best {
                continue;
            }
            match small {
                None => small = Some(m),
                Some(s) if s == m => {}
                Some(s) => {
                    return Err(Error::NotTwoLevel(format!(
                        "non-best means differ: {s} vs {m}"
                    )))
                }
            }
        }
        Ok(StationaryGainPair {
            big_gain: big,
            small_gain: small.unwrap_or(0.0),
            best_index: best,
        })
    }

    /// Realizes the change slot (if any) for one trial.
    pub fn realize(&self, horizon: u64, rng: &mut SimRng) -> Result<Environment<'_>> {
        let change_slot = match &self.change {
            Some(c) => Some(c.slot_law.sample(horizon, rng)?),
            None => None,
        };
        Ok(Environment {
            spec: self,
            change_slot,
        })
    }

    /// Realized view with a caller-chosen slot (tests, scripted scenarios).
    pub fn realize_at(&self, change_slot: Option<u64>) -> Environment<'_> {
        debug_assert_eq!(change_slot.is_some(), self.change.is_some());
        Environment {
            spec: self,
            change_slot,
        }
    }
}

/// An environment with its change slot realized; what policies sample from.
#[derive(Debug, Clone, Copy)]
pub struct Environment<'a> {
    spec: &'a EnvironmentSpec,
    change_slot: Option<u64>,
}

impl<'a> Environment<'a> {
    pub fn spec(&self) -> &'a EnvironmentSpec {
        self.spec
    }

    pub fn n_beams(&self) -> usize {
        self.spec.n_beams
    }

    pub fn noise_scale(&self) -> f64 {
        self.spec.noise_scale
    }

    pub fn change_slot(&self) -> Option<u64> {
        self.change_slot
    }

    /// Mean of `beam` at slot `t`. The change slot itself still uses the
    /// pre-change mean; the post-change mean applies strictly after it.
    ///
    /// Panics if `beam` is out of range.
    #[inline]
    pub fn mean_at(&self, beam: usize, t: u64) -> f64 {
        assert!(beam < self.spec.n_beams, "beam index out of range");
        match (&self.spec.change, self.change_slot) {
            (Some(c), Some(tc)) if c.changed_beam == beam && t > tc => c.post_mean,
            _ => self.spec.means[beam],
        }
    }

    /// One reward draw from `beam` at slot `t`: Normal(mu, 2 * sigma^2 * mu).
    /// A zero mean (or zero noise scale) yields the mean exactly.
    #[inline]
    pub fn sample_beam(&self, beam: usize, t: u64, rng: &mut SimRng) -> f64 {
        let mu = self.mean_at(beam, t);
        gaussian_power(mu, 2.0 * self.spec.noise_scale * mu, rng)
    }

    /// One group observation at slot `t`: the group splits transmit power
    /// across its members, giving mean `sum(2 mu_i / N)` and the same
    /// heteroscedastic variance law `2 sigma^2 mu` as single beams.
    pub fn sample_group(&self, group: &[usize], t: u64, rng: &mut SimRng) -> Result<f64> {
        let (mu, var) = self.group_moments(group, t)?;
        Ok(gaussian_power(mu, var, rng))
    }

    /// Closed-form (mean, variance) of a group observation at slot `t`.
    pub fn group_moments(&self, group: &[usize], t: u64) -> Result<(f64, f64)> {
        if group.is_empty() {
            return Err(Error::EmptyGroup);
        }
        let n = self.spec.n_beams as f64;
        let mut mu = 0.0;
        for &i in group {
            if i >= self.spec.n_beams {
                return Err(Error::BeamOutOfRange {
                    index: i,
                    n_beams: self.spec.n_beams,
                });
            }
            mu += 2.0 * self.mean_at(i, t) / n;
        }
        Ok((mu, 2.0 * self.spec.noise_scale * mu))
    }

    /// The beam a policy is judged against: argmax of means at slot `t`.
    pub fn best_at(&self, t: u64) -> usize {
        let means: Vec<f64> = (0..self.spec.n_beams).map(|i| self.mean_at(i, t)).collect();
        argmax(&means)
    }
}

#[inline]
fn gaussian_power(mu: f64, var: f64, rng: &mut SimRng) -> f64 {
    if var <= 0.0 {
        return mu;
    }
    let z: f64 = rng.sample(StandardNormal);
    mu + var.sqrt() * z
}

/// Index of the maximum value; earlier index wins ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Gap structure of an environment, as used by the analytic bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    /// Minimum gap between the deadline-best beam and any other beam.
    pub delta_min: f64,
    /// Magnitude of the change, `post_mean - pre_mean` (0 when stationary).
    pub delta_c: f64,
    /// `mu_i - post_mean` per beam (only meaningful with a change).
    pub deltas_plus: Vec<f64>,
    /// `mu_i - pre_mean` per beam.
    pub deltas_minus: Vec<f64>,
    pub mu_max: f64,
    /// `2 * noise_scale * mu_max`.
    pub sigma_max_sq: f64,
}

impl GapProfile {
    /// Computes gaps from a spec; deadline means are the post-change means.
    pub fn from_spec(spec: &EnvironmentSpec) -> Self {
        let mut deadline = spec.means().to_vec();
        let (delta_c, pre, post, j) = match spec.change() {
            Some(c) => {
                deadline[c.changed_beam] = c.post_mean;
                (
                    c.post_mean - c.pre_mean,
                    c.pre_mean,
                    c.post_mean,
                    Some(c.changed_beam),
                )
            }
            None => (0.0, 0.0, 0.0, None),
        };
        let best = argmax(&deadline);
        let delta_min = deadline
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != best)
            .map(|(_, &m)| deadline[best] - m)
            .fold(f64::INFINITY, f64::min);
        let mu_max = deadline.iter().copied().fold(0.0f64, f64::max);
        let (deltas_plus, deltas_minus) = match j {
            Some(_) => (
                spec.means().iter().map(|&m| m - post).collect(),
                spec.means().iter().map(|&m| m - pre).collect(),
            ),
            None => (Vec::new(), Vec::new()),
        };
        Self {
            delta_min,
            delta_c,
            deltas_plus,
            deltas_minus,
            mu_max,
            sigma_max_sq: 2.0 * spec.noise_scale() * mu_max,
        }
    }
}

/// Path-loss model mapping a scenario to the reference SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathLossModel {
    /// Free-space loss at `carrier_hz` with a thermal noise floor over the
    /// configured bandwidth.
    FreeSpace { carrier_hz: f64 },
    /// Bypass the link budget and pin the reference SNR (linear).
    FixedRefSnr { snr: f64 },
}

/// Physical case-study scenario; maps to reward means via [`channel_to_means`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyChannel {
    pub distance_m: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub pathloss: PathLossModel,
}

impl CaseStudyChannel {
    /// The documented default: 100 m user, 1 GHz bandwidth, 40 dBm transmit
    /// power, free-space loss at a 28 GHz carrier, 0 dB noise figure.
    pub fn default_100m() -> Self {
        Self {
            distance_m: 100.0,
            bandwidth_hz: 1e9,
            tx_power_dbm: 40.0,
            noise_figure_db: 0.0,
            pathloss: PathLossModel::FreeSpace { carrier_hz: 28e9 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance_m > 0.0 && self.distance_m.is_finite()) {
            return Err(Error::BadChannel(format!(
                "distance must be positive, got {}",
                self.distance_m
            )));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::BadChannel(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth_hz
            )));
        }
        if let PathLossModel::FreeSpace { carrier_hz } = self.pathloss {
            if !(carrier_hz > 0.0) {
                return Err(Error::BadChannel(format!(
                    "carrier must be positive, got {carrier_hz}"
                )));
            }
        }
        Ok(())
    }

    /// Reference SNR (linear), excluding any beam directivity gain.
    pub fn ref_snr(&self) -> Result<f64> {
        self.validate()?;
        match self.pathloss {
            PathLossModel::FixedRefSnr { snr } => {
                if snr > 0.0 {
                    Ok(snr)
                } else {
                    Err(Error::BadChannel(format!("ref snr must be positive: {snr}")))
                }
            }
            PathLossModel::FreeSpace { carrier_hz } => {
                const C: f64 = 299_792_458.0;
                let fspl_db = 20.0 * (4.0 * std::f64::consts::PI * self.distance_m * carrier_hz
                    / C)
                    .log10();
                let noise_dbm =
                    -174.0 + 10.0 * self.bandwidth_hz.log10() + self.noise_figure_db;
                let snr_db = self.tx_power_dbm - fspl_db - noise_dbm;
                Ok(10f64.powf(snr_db / 10.0))
            }
        }
    }
}

/// Directivity factor applied to the aligned beam's mean: `2 pi / N`.
pub fn directivity_factor(n_beams: usize) -> f64 {
    2.0 * std::f64::consts::PI / n_beams as f64
}

/// Maps a channel to a stationary environment in noise-normalized units:
/// the aligned beam carries `ref_snr * 2 pi / N`, side lobes carry 0, and the
/// noise scale is 1.
pub fn channel_to_means(channel: &CaseStudyChannel, n_beams: usize) -> Result<EnvironmentSpec> {
    let snr = channel.ref_snr()?;
    let g = snr * directivity_factor(n_beams);
    EnvironmentSpec::stationary(
        n_beams,
        StationaryGainPair {
            big_gain: g,
            small_gain: 0.0,
            best_index: n_beams / 2,
        },
        1.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{StreamFactory, LANE_ENV};
    use approx::assert_abs_diff_eq;

    fn rng() -> SimRng {
        StreamFactory::new(1234).lane(0, 0, LANE_ENV)
    }

    #[test]
    fn stationary_construction_examples() {
        let e = EnvironmentSpec::stationary(
            16,
            StationaryGainPair { big_gain: 1.0, small_gain: 0.0, best_index: 5 },
            0.1,
        )
        .unwrap();
        let mut expected = vec![0.0; 16];
        expected[5] = 1.0;
        assert_eq!(e.means(), &expected[..]);
        assert!(e.change().is_none());

        let e = EnvironmentSpec::stationary(
            2,
            StationaryGainPair { big_gain: 2.0, small_gain: 1.0, best_index: 0 },
            1.0,
        )
        .unwrap();
        assert_eq!(e.means(), &[2.0, 1.0]);

        assert!(matches!(
            EnvironmentSpec::stationary(
                16,
                StationaryGainPair { big_gain: 1.0, small_gain: 1.0, best_index: 0 },
                0.1,
            ),
            Err(Error::GainOrder { .. })
        ));
        assert!(matches!(
            EnvironmentSpec::stationary(
                48,
                StationaryGainPair { big_gain: 1.0, small_gain: 0.0, best_index: 0 },
                0.1,
            ),
            Err(Error::NotPowerOfTwo(48))
        ));
        // Ties rejected for explicit means too.
        assert!(matches!(
            EnvironmentSpec::new(vec![1.0, 1.0], 0.1, None),
            Err(Error::TiedArgmax(_))
        ));
    }

    #[test]
    fn mean_at_change_boundary_keeps_pre_mean() {
        let mut means = vec![0.0; 8];
        means[0] = 1.0;
        means[3] = 0.2;
        let spec = EnvironmentSpec::new(
            means,
            0.5,
            Some(ChangeSchedule {
                changed_beam: 3,
                pre_mean: 0.2,
                post_mean: 1.5,
                slot_law: SlotLaw::Fixed { slot: 100 },
            }),
        )
        .unwrap();
        let env = spec.realize_at(Some(100));
        assert_eq!(env.mean_at(3, 0), 0.2);
        assert_eq!(env.mean_at(3, 100), 0.2); // the change slot itself
        assert_eq!(env.mean_at(3, 101), 1.5);
        // Other beams never move.
        for t in [0u64, 100, 101, 10_000] {
            assert_eq!(env.mean_at(0, t), 1.0);
            assert_eq!(env.mean_at(5, t), 0.0);
        }
        assert_eq!(env.best_at(100), 0);
        assert_eq!(env.best_at(101), 3);
        // The post-change mean must dominate every other mean.
        assert!(matches!(
            EnvironmentSpec::new(
                vec![2.0, 0.2, 0.0, 0.0],
                0.5,
                Some(ChangeSchedule {
                    changed_beam: 1,
                    pre_mean: 0.2,
                    post_mean: 1.5,
                    slot_law: SlotLaw::Fixed { slot: 4 },
                }),
            ),
            Err(Error::BadChange(_))
        ));
    }

    #[test]
    fn zero_mean_beams_sample_exact_zeros() {
        let spec = EnvironmentSpec::stationary(
            4,
            StationaryGainPair { big_gain: 1.0, small_gain: 0.0, best_index: 2 },
            0.7,
        )
        .unwrap();
        let env = spec.realize_at(None);
        let mut r = rng();
        for t in 0..100 {
            assert_eq!(env.sample_beam(0, t, &mut r), 0.0);
        }
    }

    #[test]
    fn sampler_matches_first_two_moments() {
        // Law-of-large-numbers oracle: mu = 1, sigma^2 = 0.5 gives reward
        // variance 1.0; the empirical mean over 1e6 draws must sit within
        // 4 * sqrt(var / n) = 0.004 of 1.0, and the empirical variance
        // within 5% of 2 sigma^2 mu.
        let spec = EnvironmentSpec::stationary(
            2,
            StationaryGainPair { big_gain: 1.0, small_gain: 0.5, best_index: 0 },
            0.5,
        )
        .unwrap();
        let env = spec.realize_at(None);
        let mut r = rng();
        let n = 1_000_000u64;
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for t in 0..n {
            let y = env.sample_beam(0, t, &mut r);
            s1 += y;
            s2 += y * y;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((mean - 1.0).abs() < 0.004, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn group_sampling_matches_closed_form_moments() {
        let spec = EnvironmentSpec::stationary(
            16,
            StationaryGainPair { big_gain: 1.0, small_gain: 0.0, best_index: 5 },
            0.3,
        )
        .unwrap();
        let env = spec.realize_at(None);
        // Group with the aligned beam (bit 0 of 5 set): mean 2G/N.
        let design = crate::grouping::GroupDesign::build(16).unwrap();
        let g0 = design.group(0);
        let (mu, var) = env.group_moments(g0, 0).unwrap();
        assert_abs_diff_eq!(mu, 2.0 / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(var, 2.0 * 0.3 * mu, epsilon = 1e-15);
        // Group without it samples exactly zero.
        let g1 = design.group(1);
        let mut r = rng();
        for t in 0..50 {
            assert_eq!(env.sample_group(g1, t, &mut r).unwrap(), 0.0);
        }
        // Empirical moments of the signal group.
        let n = 200_000;
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for t in 0..n {
            let y = env.sample_group(g0, t, &mut r).unwrap();
            s1 += y;
            s2 += y * y;
        }
        let mean = s1 / n as f64;
        let est_var = s2 / n as f64 - mean * mean;
        assert!((mean - mu).abs() < 4.0 * (var / n as f64).sqrt());
        assert!((est_var - var).abs() < 0.05 * var, "var {est_var} vs {var}");
        assert!(matches!(env.sample_group(&[], 0, &mut r), Err(Error::EmptyGroup)));
    }

    #[test]
    fn slot_law_sampling_oracles() {
        let mut r = rng();
        // Fixed law returns its constant (clamped).
        assert_eq!(
            realize_change_slot(&SlotLaw::Fixed { slot: 100 }, 1024, &mut r).unwrap(),
            100
        );
        assert_eq!(
            realize_change_slot(&SlotLaw::Fixed { slot: 5000 }, 1024, &mut r).unwrap(),
            1024
        );
        // Uniform: empirical CDF at T/2 within 0.01 of 0.5 over 1e5 draws.
        let t = 1024u64;
        let law = SlotLaw::Uniform { lo: 0, hi: t };
        let n = 100_000;
        let below = (0..n)
            .filter(|_| law.sample(t, &mut r).unwrap() <= t / 2)
            .count();
        let frac = below as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.01, "uniform CDF estimate {frac}");
        // Left-skewed beta(2, 8): mean alpha/(alpha+beta) = 0.2 of the window.
        let law = SlotLaw::Beta { alpha: 2.0, beta: 8.0, lo: 0, hi: t };
        let mean: f64 = (0..n)
            .map(|_| law.sample(t, &mut r).unwrap() as f64)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.2 * t as f64).abs() < 0.01 * t as f64, "beta mean {mean}");
        // Malformed laws.
        assert!(SlotLaw::Uniform { lo: 9, hi: 3 }.validate().is_err());
        assert!(SlotLaw::Beta { alpha: 0.0, beta: 1.0, lo: 0, hi: 9 }.validate().is_err());
    }

    #[test]
    fn slot_law_cdfs() {
        let u = SlotLaw::Uniform { lo: 0, hi: 100 };
        assert_eq!(u.cdf(-1.0), 0.0);
        assert_eq!(u.cdf(50.0), 0.5);
        assert_eq!(u.cdf(200.0), 1.0);
        let b = SlotLaw::Beta { alpha: 2.0, beta: 8.0, lo: 0, hi: 100 };
        assert!(b.cdf(20.0) > 0.5); // left-skewed: over half the mass early
        assert_eq!(b.cdf(0.0), 0.0);
        assert_eq!(b.cdf(100.0), 1.0);
        let f = SlotLaw::Fixed { slot: 10 };
        assert_eq!(f.cdf(9.99), 0.0);
        assert_eq!(f.cdf(10.0), 1.0);
    }

    #[test]
    fn identical_seeds_give_identical_streams() {
        let spec = EnvironmentSpec::stationary(
            8,
            StationaryGainPair { big_gain: 1.0, small_gain: 0.2, best_index: 1 },
            0.4,
        )
        .unwrap();
        let env = spec.realize_at(None);
        let draw = |seed: u64| -> Vec<f64> {
            let mut r = StreamFactory::new(seed).lane(7, 9, LANE_ENV);
            (0..32).map(|t| env.sample_beam(1, t, &mut r)).collect()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn channel_mapping() {
        let ch = CaseStudyChannel::default_100m();
        let snr = ch.ref_snr().unwrap();
        // Free-space at 28 GHz / 100 m / 40 dBm / 1 GHz: about 22.61 dB.
        assert!((snr - 182.34).abs() < 0.5, "ref snr {snr}");

        let e16 = channel_to_means(&ch, 16).unwrap();
        let e32 = channel_to_means(&ch, 32).unwrap();
        let g16 = e16.means().iter().cloned().fold(0.0f64, f64::max);
        let g32 = e32.means().iter().cloned().fold(0.0f64, f64::max);
        assert_abs_diff_eq!(g16, 2.0 * g32, epsilon = 1e-9);
        assert_abs_diff_eq!(g16, snr * directivity_factor(16), epsilon = 1e-12);
        // All non-best means are exactly zero.
        assert_eq!(e16.means().iter().filter(|&&m| m == 0.0).count(), 15);

        let bad = CaseStudyChannel { distance_m: -1.0, ..ch };
        assert!(bad.ref_snr().is_err());
    }

    #[test]
    fn gap_profile_uses_deadline_means() {
        let mut means = vec![0.0; 8];
        means[0] = 1.0;
        means[1] = 0.4;
        let spec = EnvironmentSpec::new(
            means,
            0.5,
            Some(ChangeSchedule {
                changed_beam: 1,
                pre_mean: 0.4,
                post_mean: 2.0,
                slot_law: SlotLaw::Fixed { slot: 4 },
            }),
        )
        .unwrap();
        let gp = GapProfile::from_spec(&spec);
        assert_abs_diff_eq!(gp.delta_c, 1.6, epsilon = 1e-15);
        assert_abs_diff_eq!(gp.delta_min, 1.0, epsilon = 1e-15); // vs beam 0
        assert_abs_diff_eq!(gp.mu_max, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gp.sigma_max_sq, 2.0 * 0.5 * 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gp.deltas_plus[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gp.deltas_minus[0], 0.6, epsilon = 1e-15);
    }
}
