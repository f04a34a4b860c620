//! Closed-form evaluators for every analytic beam-selection error bound,
//! enabling bound-vs-simulation overlays.
//!
//! Raw bound expressions can exceed 1, where they are vacuous; every value is
//! reported clamped to `[0, 1]` together with the raw value and a vacuous
//! flag. Logarithms are base 2 throughout, matching the round structure of
//! the halving policies.

use crate::detection::{cs_false_bound_ln, cs_miss_bound_ln, group_params};
use crate::env::SlotLaw;
use crate::error::{Error, Result};
use crate::policies::kshes_r_star;
use serde::{Deserialize, Serialize};

/// A bound value: raw expression, `[0, 1]`-clamped value, vacuous flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub raw: f64,
    pub value: f64,
    pub vacuous: bool,
}

impl BoundValue {
    pub fn from_raw(raw: f64) -> Self {
        let raw = if raw.is_nan() { f64::INFINITY } else { raw };
        Self {
            raw,
            value: raw.clamp(0.0, 1.0),
            vacuous: raw > 1.0,
        }
    }
}

/// Whether the exponential terms of the halving-round bounds carry the
/// `sigma_max^2` scale. The stated slot-level forms include it; two of the
/// round-level forms print without it, which is dimensionally inconsistent,
/// so the scaled form is the default and the printed form stays available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentForm {
    /// Divide the exponent by `sigma_max^2` (default).
    SigmaScaled,
    /// The literal printed exponent, no noise scale.
    Literal,
}

impl ExponentForm {
    fn scale(&self, sigma_max_sq: f64) -> f64 {
        match self {
            ExponentForm::SigmaScaled => sigma_max_sq,
            ExponentForm::Literal => 1.0,
        }
    }
}

fn log2f(n: usize) -> f64 {
    (n as f64).log2()
}

/// Exhaustive-search error bound: `N exp(-T D^2 / (8 N s^2 mu_max))`.
pub fn bound_exhaustive(
    t: u64,
    n_beams: usize,
    delta_min: f64,
    noise_scale: f64,
    mu_max: f64,
) -> BoundValue {
    let n = n_beams as f64;
    let expo = -(t as f64) * delta_min * delta_min / (8.0 * n * noise_scale * mu_max);
    BoundValue::from_raw(n * expo.exp())
}

/// Halving baseline bound instantiated for the two-level profile:
/// `3 log2 N exp(-T (G - g) / (8 N log2 N))`.
pub fn bound_karnin(t: u64, n_beams: usize, big_gain: f64, small_gain: f64) -> BoundValue {
    let n = n_beams as f64;
    let d = log2f(n_beams);
    let expo = -(t as f64) * (big_gain - small_gain) / (8.0 * n * d);
    BoundValue::from_raw(3.0 * d * expo.exp())
}

/// Grouped-exploration error bound and its constituents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbeBound {
    /// Miss-side prefactor, defined so `p_m <= c1 * exp(-expo)` holds with
    /// every exact Cauchy-Schwarz term retained (`expo` the headline
    /// exponent below).
    pub c1: f64,
    /// False-alarm-side prefactor under the same convention.
    pub c2: f64,
    /// `max(c1, c2)`.
    pub l1: f64,
    /// Slots per group used for the constants, `floor(T / log2 N)`.
    pub t_group: u64,
    pub bound: BoundValue,
}

/// Grouped-exploration error bound:
/// `L1 log2 N exp(-G T / (2 N sigma^2 log2 N))` with `L1 = max(C1, C2)`.
///
/// The prefactors re-express the full Cauchy-Schwarz tail values against the
/// headline exponential, so the assembled number is exactly
/// `log2 N * max(tail_miss, tail_false)` -- the union bound over the
/// `log2 N` group tests -- while keeping the stated form.
///
/// Errors with [`Error::Regime`] when the gain profile leaves the
/// Cauchy-Schwarz regimes (`zeta1 <= 1` or `zeta0 >= 1`).
pub fn bound_cbe(
    t: u64,
    n_beams: usize,
    big_gain: f64,
    small_gain: f64,
    noise_scale: f64,
) -> Result<CbeBound> {
    let d = log2f(n_beams);
    let t_group = (((t as f64) / d).floor() as u64).max(1);
    let params = group_params(n_beams, big_gain, small_gain, noise_scale, t_group)?;
    let expo = big_gain * t as f64 / (2.0 * n_beams as f64 * noise_scale * d);
    let ln_c1 = cs_miss_bound_ln(&params)? + expo;
    let ln_c2 = cs_false_bound_ln(&params)? + expo;
    let l1_ln = ln_c1.max(ln_c2);
    let raw = (l1_ln + d.ln() - expo).exp();
    Ok(CbeBound {
        c1: ln_c1.exp(),
        c2: ln_c2.exp(),
        l1: l1_ln.exp(),
        t_group,
        bound: BoundValue::from_raw(raw),
    })
}

/// Which of the four gap configurations a changed-pair comparison is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeCase {
    /// Case 1: the rival stays superior even after the change; trivial bound.
    RivalAlwaysSuperior,
    /// Case 2: the rival is inferior before and after; fully exponential.
    RivalAlwaysInferior,
    /// Case 3: the rival is superior before the change, inferior after.
    RivalOvertaken,
    /// Case 4: the changed beam decreases; the rival overtakes it.
    RivalOvertakes,
}

/// Survival bound for the changed beam against one rival in the change round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairChangeBound {
    pub bound: BoundValue,
    /// Crossing slot `n_i* = -n_rc d+ / dc`, clamped into `[0, n_rc]`.
    pub crossing_slot: f64,
    pub case: ChangeCase,
}

/// Probability that the changed beam's round-`r_c` estimate falls below a
/// rival's: `1 - F(n_i*) (1 - exp(-D^2 T / (2 N log2 N s_max^2)))`.
///
/// `law` is the conditional change-slot law within the round, supported on
/// `[0, n_rc]`.
pub fn bound_pij_rc(
    n_rc: u64,
    delta_plus: f64,
    delta_c: f64,
    delta_min: f64,
    t: u64,
    n_beams: usize,
    sigma_max_sq: f64,
    law: &SlotLaw,
) -> Result<PairChangeBound> {
    if delta_c == 0.0 {
        return Err(Error::Domain("delta_c must be nonzero".into()));
    }
    let case = if delta_c > 0.0 {
        if delta_plus >= 0.0 {
            ChangeCase::RivalAlwaysSuperior
        } else if delta_plus.abs() > delta_c.abs() {
            ChangeCase::RivalAlwaysInferior
        } else {
            ChangeCase::RivalOvertaken
        }
    } else {
        ChangeCase::RivalOvertakes
    };
    let n_star = (-(n_rc as f64) * delta_plus / delta_c).clamp(0.0, n_rc as f64);
    let f = law.cdf(n_star).clamp(0.0, 1.0);
    let expo = (-delta_min * delta_min * t as f64
        / (2.0 * n_beams as f64 * log2f(n_beams) * sigma_max_sq))
        .exp();
    Ok(PairChangeBound {
        bound: BoundValue::from_raw(1.0 - f * (1.0 - expo)),
        crossing_slot: n_star,
        case,
    })
}

/// Probability that the rank-`K` beam is eliminated in the change round:
/// `2 [1 - F(n_max) (1 - exp(-D^2 / (2 s_max^2)))]`, `n_max = n_rc D / dc`.
pub fn bound_pk_rc(
    k: usize,
    n_rc: u64,
    delta_min: f64,
    delta_c: f64,
    sigma_max_sq: f64,
    law: &SlotLaw,
) -> Result<BoundValue> {
    if k == 0 {
        return Err(Error::KOutOfRange { k, max: usize::MAX });
    }
    if delta_c <= 0.0 {
        return Err(Error::Domain(format!(
            "delta_c must be positive, got {delta_c}"
        )));
    }
    let n_max = ((n_rc as f64) * delta_min / delta_c).clamp(0.0, n_rc as f64);
    let f = law.cdf(n_max).clamp(0.0, 1.0);
    let expo = (-delta_min * delta_min / (2.0 * sigma_max_sq)).exp();
    Ok(BoundValue::from_raw(2.0 * (1.0 - f * (1.0 - expo))))
}

/// Distribution of the change round over rounds `1..=log2 N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundDistribution {
    probs: Vec<f64>,
}

impl RoundDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::BadPlan("round distribution must be nonempty".into()));
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) || total <= 0.0 {
            return Err(Error::BadPlan(
                "round probabilities must be nonnegative with positive mass".into(),
            ));
        }
        Ok(Self {
            probs: probs.iter().map(|p| p / total).collect(),
        })
    }

    /// All mass on round `r` (1-based) of `d` rounds.
    pub fn point_mass(r: usize, d: usize) -> Result<Self> {
        if r == 0 || r > d {
            return Err(Error::BadPlan(format!("round {r} outside 1..={d}")));
        }
        let mut probs = vec![0.0; d];
        probs[r - 1] = 1.0;
        Self::new(probs)
    }

    /// Uniform over the `d` rounds.
    pub fn uniform(d: usize) -> Result<Self> {
        Self::new(vec![1.0; d])
    }

    /// Round masses induced by an absolute change-slot law under the halving
    /// schedule (each round spans `T / log2 N` slots), conditioned on the
    /// change landing within the horizon.
    pub fn from_slot_law(law: &SlotLaw, t: u64, n_beams: usize) -> Result<Self> {
        law.validate()?;
        let d = log2f(n_beams) as usize;
        let span = t as f64 / d as f64;
        let probs: Vec<f64> = (1..=d)
            .map(|r| (law.cdf(r as f64 * span) - law.cdf((r - 1) as f64 * span)).max(0.0))
            .collect();
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `E[r_c - r_star | r_star <= r_c <= log2 N]`, by exact enumeration.
    pub fn excess_over(&self, r_star: usize) -> f64 {
        let mut mass = 0.0;
        let mut acc = 0.0;
        for (idx, &p) in self.probs.iter().enumerate() {
            let r = idx + 1;
            if r >= r_star {
                mass += p;
                acc += p * (r - r_star) as f64;
            }
        }
        if mass > 0.0 {
            acc / mass
        } else {
            0.0
        }
    }
}

fn round_exponential(
    t: u64,
    n_beams: usize,
    delta_min: f64,
    sigma_max_sq: f64,
    form: ExponentForm,
) -> f64 {
    let n = n_beams as f64;
    let d = log2f(n_beams);
    (-delta_min * delta_min * t as f64 / (2.0 * n * d * form.scale(sigma_max_sq))).exp()
}

/// Early-change elimination bound: `2 (log2 N + K - 1) E(T)`.
pub fn bound_early_change(
    t: u64,
    n_beams: usize,
    k: usize,
    delta_min: f64,
    sigma_max_sq: f64,
    form: ExponentForm,
) -> BoundValue {
    let d = log2f(n_beams);
    let e = round_exponential(t, n_beams, delta_min, sigma_max_sq, form);
    BoundValue::from_raw(2.0 * (d + k as f64 - 1.0) * e)
}

/// Late-change bound: expectation term plus `2 log2(2NK) E(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LateChangeBound {
    /// `E[r_c - r* | late]`; the non-exponential addend.
    pub t1: f64,
    pub exponential: f64,
    pub total: BoundValue,
}

pub fn bound_late_change(
    t: u64,
    n_beams: usize,
    k: usize,
    delta_min: f64,
    rounds: &RoundDistribution,
    sigma_max_sq: f64,
    form: ExponentForm,
) -> Result<LateChangeBound> {
    if k == 0 || 2 * k > n_beams {
        return Err(Error::KOutOfRange {
            k,
            max: n_beams / 2,
        });
    }
    let r_star = kshes_r_star(n_beams, k);
    let t1 = rounds.excess_over(r_star.max(1));
    let e = round_exponential(t, n_beams, delta_min, sigma_max_sq, form);
    let exponential = 2.0 * (2.0 * n_beams as f64 * k as f64).log2() * e;
    Ok(LateChangeBound {
        t1,
        exponential,
        total: BoundValue::from_raw(t1 + exponential),
    })
}

/// Total halving-policy bound under a single abrupt change:
/// `T1 + 2 (2 log2 N + K - 1) E(T)`; with no change law, the no-change
/// corollary form `log2 N * E(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShTotalBound {
    pub t1: f64,
    pub exponential: f64,
    pub total: BoundValue,
}

pub fn bound_sh_total(
    t: u64,
    n_beams: usize,
    k: usize,
    delta_min: f64,
    rounds: Option<&RoundDistribution>,
    sigma_max_sq: f64,
    form: ExponentForm,
) -> Result<ShTotalBound> {
    let d = log2f(n_beams);
    let e = round_exponential(t, n_beams, delta_min, sigma_max_sq, form);
    match rounds {
        None => Ok(ShTotalBound {
            t1: 0.0,
            exponential: d * e,
            total: BoundValue::from_raw(d * e),
        }),
        Some(rounds) => {
            if k == 0 || 2 * k > n_beams {
                return Err(Error::KOutOfRange {
                    k,
                    max: n_beams / 2,
                });
            }
            let r_star = kshes_r_star(n_beams, k);
            let t1 = rounds.excess_over(r_star.max(1));
            let exponential = 2.0 * (2.0 * d + k as f64 - 1.0) * e;
            Ok(ShTotalBound {
                t1,
                exponential,
                total: BoundValue::from_raw(t1 + exponential),
            })
        }
    }
}

/// Truncated-halving bound report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KshesBound {
    /// `log2(N^2 / 2K) + K (2 log2(2K) + 1)`.
    pub t_factor: f64,
    /// General-form bound (expectation-style second term included).
    pub general: BoundValue,
    /// Exponential form valid when the change lands inside the safe window.
    pub early_exponential: BoundValue,
    /// Size of that window in slots.
    pub safe_window: f64,
}

/// Slot count of the early-change window inside which the truncated-halving
/// bound stays exponential:
/// `T [ (log2(N/2K) / log2 N)(1 - 1/2K) + 1/2K ]`.
pub fn kshes_safe_slot(t: u64, n_beams: usize, k: usize) -> f64 {
    let d = log2f(n_beams);
    let k2 = 2.0 * k as f64;
    let r = (n_beams as f64 / k2).log2().max(0.0);
    t as f64 * ((r / d) * (1.0 - 1.0 / k2) + 1.0 / k2)
}

/// Truncated-halving error bound.
///
/// The general form's per-rival crossing slots `t_i` are not pinned down by
/// the analysis; callers may supply them, and the default places every
/// crossing at the start of the equal-allocation phase, which is the
/// conservative (largest) choice.
pub fn bound_kshes(
    t: u64,
    n_beams: usize,
    k: usize,
    delta_min: f64,
    sigma_max_sq: f64,
    slot_law: &SlotLaw,
    crossing_slots: Option<&[f64]>,
) -> Result<KshesBound> {
    if k == 0 || 2 * k > n_beams {
        return Err(Error::KOutOfRange {
            k,
            max: n_beams / 2,
        });
    }
    slot_law.validate()?;
    let n = n_beams as f64;
    let d = log2f(n_beams);
    let kf = k as f64;
    let t_factor = (n * n / (2.0 * kf)).log2() + kf * (2.0 * (2.0 * kf).log2() + 1.0);
    let expo_t = (-delta_min * delta_min * t as f64 / (4.0 * n * d * sigma_max_sq)).exp();
    let expo_slot = (-delta_min * delta_min / (2.0 * n * d * sigma_max_sq)).exp();

    let r_star = kshes_r_star(n_beams, k) as f64;
    let phase_start = t as f64 * r_star / d;
    let default_slots = vec![phase_start; k.saturating_sub(1)];
    let slots = crossing_slots.unwrap_or(&default_slots);
    if slots.len() != k.saturating_sub(1) {
        return Err(Error::BadPlan(format!(
            "expected {} crossing slots, got {}",
            k - 1,
            slots.len()
        )));
    }
    let tail: f64 = slots
        .iter()
        .map(|&ti| 1.0 - slot_law.cdf(ti).clamp(0.0, 1.0) * (1.0 - expo_slot))
        .sum();
    let general = BoundValue::from_raw(t_factor * expo_t + tail);
    let early = BoundValue::from_raw(2.0 * (2.0 * d + 2.0 * kf - 1.0) * expo_t);
    Ok(KshesBound {
        t_factor,
        general,
        early_exponential: early,
        safe_window: kshes_safe_slot(t, n_beams, k),
    })
}

/// Single-beam deviation diagnostic, in its literal printed form
/// `exp(-T_i eps^2 / (4 sigma_i^2 mu_i))`. The noise symbols in this
/// expression are used inconsistently at the source, so this is exposed for
/// diagnostics only and not composed into any policy bound.
pub fn lemma1_deviation(t_i: u64, eps: f64, sigma_i_sq: f64, mu_i: f64) -> f64 {
    (-(t_i as f64) * eps * eps / (4.0 * sigma_i_sq * mu_i)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exhaustive_bound_hand_value_and_log_linearity() {
        let b = bound_exhaustive(1024, 64, 0.5, 0.2, 1.0);
        let expected = 64.0 * (-1024.0f64 * 0.25 / (8.0 * 64.0 * 0.2)).exp();
        assert_abs_diff_eq!(b.raw, expected, epsilon = 1e-12 * expected);
        assert!(b.vacuous && b.value == 1.0);
        // Doubling T squares the attenuation factor.
        let b1 = bound_exhaustive(2048, 64, 0.5, 0.2, 1.0);
        assert_abs_diff_eq!(b1.raw / 64.0, (b.raw / 64.0).powi(2), epsilon = 1e-12);
        // T -> infinity drives the bound to zero.
        assert!(bound_exhaustive(1 << 30, 64, 0.5, 0.2, 1.0).raw < 1e-100);
    }

    #[test]
    fn karnin_bound_values() {
        let n = 64;
        let d = 6.0;
        for t in [512u64, 2048, 8192] {
            let b = bound_karnin(t, n, 1.0, 0.25);
            let expected = 3.0 * d * (-(t as f64) * 0.75 / (8.0 * 64.0 * d)).exp();
            assert_abs_diff_eq!(b.raw, expected, epsilon = 1e-12 * expected);
        }
        assert_abs_diff_eq!(bound_karnin(0, n, 1.0, 0.25).raw, 3.0 * d, epsilon = 1e-12);
        assert!(bound_karnin(1 << 40, n, 1.0, 0.25).raw < 1e-30);
    }

    #[test]
    fn pk_bound_uniform_closed_form() {
        let n_rc = 100u64;
        let law = SlotLaw::Uniform { lo: 0, hi: 100 };
        let (dmin, dc, s2) = (0.5, 2.0, 1.0);
        let b = bound_pk_rc(3, n_rc, dmin, dc, s2, &law).unwrap();
        let expected = 2.0 * (1.0 - (dmin / dc) * (1.0 - (-dmin * dmin / (2.0 * s2)).exp()));
        assert_abs_diff_eq!(b.raw, expected, epsilon = 1e-12);
    }

    #[test]
    fn pk_bound_earliest_change_form() {
        // F == 1 at the crossing slot: change at slot 0.
        let law = SlotLaw::Fixed { slot: 0 };
        let (dmin, dc, s2) = (0.8, 1.6, 0.5);
        let b = bound_pk_rc(1, 50, dmin, dc, s2, &law).unwrap();
        let expected = 2.0 * (-dmin * dmin / (2.0 * s2)).exp();
        assert_abs_diff_eq!(b.raw, expected, epsilon = 1e-12);
        assert!(bound_pk_rc(1, 50, dmin, -1.0, s2, &law).is_err());
        assert!(bound_pk_rc(1, 50, dmin, 0.0, s2, &law).is_err());
    }

    #[test]
    fn pij_cases_label_and_degenerate_forms() {
        let law = SlotLaw::Uniform { lo: 0, hi: 100 };
        // Case 1: rival superior before and after -> trivial bound 1.
        let b = bound_pij_rc(100, 0.5, 1.0, 0.3, 1024, 64, 1.0, &law).unwrap();
        assert_eq!(b.case, ChangeCase::RivalAlwaysSuperior);
        assert_abs_diff_eq!(b.bound.raw, 1.0, epsilon = 1e-12);
        // Case 2: rival always inferior -> purely exponential.
        let b = bound_pij_rc(100, -3.0, 1.0, 0.3, 1024, 64, 1.0, &law).unwrap();
        assert_eq!(b.case, ChangeCase::RivalAlwaysInferior);
        let expo = (-0.09f64 * 1024.0 / (2.0 * 64.0 * 6.0 * 1.0)).exp();
        assert_abs_diff_eq!(b.bound.raw, expo, epsilon = 1e-12);
        // Case 3: overtaken mid-round.
        let b = bound_pij_rc(100, -0.4, 1.0, 0.3, 1024, 64, 1.0, &law).unwrap();
        assert_eq!(b.case, ChangeCase::RivalOvertaken);
        assert_abs_diff_eq!(b.crossing_slot, 40.0, epsilon = 1e-12);
        // Case 4: change downward.
        let b = bound_pij_rc(100, 0.4, -1.0, 0.3, 1024, 64, 1.0, &law).unwrap();
        assert_eq!(b.case, ChangeCase::RivalOvertakes);
        assert!(bound_pij_rc(100, 0.4, 0.0, 0.3, 1024, 64, 1.0, &law).is_err());
    }

    #[test]
    fn round_distribution_expectations() {
        let d = 6;
        // Point mass at r*: zero excess.
        let pm = RoundDistribution::point_mass(2, d).unwrap();
        assert_eq!(pm.excess_over(2), 0.0);
        assert_eq!(pm.excess_over(1), 1.0);
        // Mass before r* does not enter the conditional expectation.
        assert_eq!(pm.excess_over(3), 0.0);
        // Uniform over rounds, r* = 2: mean of {0, 1, 2, 3, 4}.
        let u = RoundDistribution::uniform(d).unwrap();
        assert_abs_diff_eq!(u.excess_over(2), 2.0, epsilon = 1e-12);
        // Slot-law-induced round masses: uniform slots spread evenly.
        let law = SlotLaw::Uniform { lo: 0, hi: 600 };
        let rd = RoundDistribution::from_slot_law(&law, 600, 64).unwrap();
        for &p in rd.probs() {
            assert_abs_diff_eq!(p, 1.0 / 6.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn early_and_late_change_bounds() {
        let (t, n, k, dmin, s2) = (4096u64, 64usize, 4usize, 0.5f64, 1.0f64);
        let d = 6.0;
        let e = (-0.25 * 4096.0 / (2.0 * 64.0 * d * s2)).exp();
        let early = bound_early_change(t, n, k, dmin, s2, ExponentForm::SigmaScaled);
        assert_abs_diff_eq!(early.raw, 2.0 * (d + 3.0) * e, epsilon = 1e-12 * early.raw);
        // K = 1 reduction.
        let early1 = bound_early_change(t, n, 1, dmin, s2, ExponentForm::SigmaScaled);
        assert_abs_diff_eq!(early1.raw, 2.0 * d * e, epsilon = 1e-12 * early1.raw);
        // Monotone decreasing in T.
        assert!(
            bound_early_change(2 * t, n, k, dmin, s2, ExponentForm::SigmaScaled).raw < early.raw
        );

        let rounds = RoundDistribution::uniform(6).unwrap();
        let late = bound_late_change(t, n, k, dmin, &rounds, s2, ExponentForm::SigmaScaled)
            .unwrap();
        assert!(late.t1 > 0.0);
        assert_abs_diff_eq!(
            late.exponential,
            2.0 * (2.0f64 * 64.0 * 4.0).log2() * e,
            epsilon = 1e-12 * late.exponential
        );
        assert_abs_diff_eq!(late.total.raw, late.t1 + late.exponential, epsilon = 1e-12);
    }

    #[test]
    fn sh_total_no_change_corollary_and_asymmetry() {
        let (t, n, dmin, s2) = (4096u64, 64usize, 0.5f64, 1.0f64);
        let d = 6.0;
        let e = (-0.25 * 4096.0 / (2.0 * 64.0 * d * s2)).exp();
        let nc = bound_sh_total(t, n, 1, dmin, None, s2, ExponentForm::SigmaScaled).unwrap();
        assert_abs_diff_eq!(nc.total.raw, d * e, epsilon = 1e-12 * nc.total.raw);
        assert_eq!(nc.t1, 0.0);

        // Early point mass (at or before r*) vs late point mass: the early
        // bound is no larger.
        let k = 4;
        let r_star = kshes_r_star(n, k); // 3
        let early_pm = RoundDistribution::point_mass(r_star, 6).unwrap();
        let late_pm = RoundDistribution::point_mass(6, 6).unwrap();
        let be =
            bound_sh_total(t, n, k, dmin, Some(&early_pm), s2, ExponentForm::SigmaScaled).unwrap();
        let bl =
            bound_sh_total(t, n, k, dmin, Some(&late_pm), s2, ExponentForm::SigmaScaled).unwrap();
        assert!(be.total.raw <= bl.total.raw);
        assert_eq!(be.t1, 0.0);
        assert_eq!(bl.t1, (6 - r_star) as f64);
    }

    #[test]
    fn literal_exponent_form_drops_noise_scale() {
        let scaled = bound_early_change(1024, 64, 2, 0.5, 4.0, ExponentForm::SigmaScaled);
        let literal = bound_early_change(1024, 64, 2, 0.5, 4.0, ExponentForm::Literal);
        // sigma_max^2 = 4 > 1 softens the scaled exponent.
        assert!(literal.raw < scaled.raw);
        // At sigma_max^2 = 1 the two forms coincide.
        let s1 = bound_early_change(1024, 64, 2, 0.5, 1.0, ExponentForm::SigmaScaled);
        let l1 = bound_early_change(1024, 64, 2, 0.5, 1.0, ExponentForm::Literal);
        assert_abs_diff_eq!(s1.raw, l1.raw, epsilon = 1e-12 * s1.raw);
        assert_abs_diff_eq!(literal.raw, l1.raw, epsilon = 1e-12 * l1.raw);
    }

    #[test]
    fn kshes_bound_hand_values() {
        // T factor at N = 64, K = 4: log2(4096/8) + 4 (2 log2 8 + 1) = 9 + 28.
        let b = bound_kshes(
            4096,
            64,
            4,
            0.5,
            1.0,
            &SlotLaw::Uniform { lo: 0, hi: 4096 },
            None,
        )
        .unwrap();
        assert_abs_diff_eq!(b.t_factor, 37.0, epsilon = 1e-12);
        // Safe window: 4096 [ (3/6)(7/8) + 1/8 ] = 4096 * 0.5625.
        assert_abs_diff_eq!(b.safe_window, 2304.0, epsilon = 1e-9);
        assert_abs_diff_eq!(
            kshes_safe_slot(4096, 64, 4),
            2304.0,
            epsilon = 1e-9
        );
        // Early exponential form: 2 (2 log2 N + 2K - 1) exp(...).
        let expo = (-0.25f64 * 4096.0 / (4.0 * 64.0 * 6.0)).exp();
        assert_abs_diff_eq!(
            b.early_exponential.raw,
            2.0 * 19.0 * expo,
            epsilon = 1e-12 * b.early_exponential.raw
        );
        // A change law concentrated at slot 0 lies inside any window and the
        // tail term hits its exponential floor.
        let b0 = bound_kshes(4096, 64, 4, 0.5, 1.0, &SlotLaw::Fixed { slot: 0 }, None).unwrap();
        assert!(b0.general.raw <= b.general.raw + 1e-12);
    }

    #[test]
    fn bounds_monotone_in_t_and_delta() {
        let mut prev = f64::INFINITY;
        for t in [256u64, 512, 1024, 2048, 4096] {
            let v = bound_early_change(t, 64, 4, 0.4, 1.0, ExponentForm::SigmaScaled).raw;
            assert!(v < prev);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let dmin = i as f64 * 0.05;
            let v = bound_exhaustive(2048, 64, dmin, 0.5, 2.0).raw;
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn lemma1_diagnostic_value() {
        let v = lemma1_deviation(100, 0.5, 2.0, 1.5);
        assert_abs_diff_eq!(v, (-100.0f64 * 0.25 / 12.0).exp(), epsilon = 1e-15);
    }
}
