//! Per-group user detection for grouped exploration.
//!
//! With a two-level gain profile (aligned beam `G`, all others `g`), the
//! group observation is Gaussian under both hypotheses and the likelihood
//! ratio collapses to an energy test: declare the user present in a group
//! when the sum of squared observations reaches the threshold `gamma`. Under
//! either hypothesis the normalized statistic is non-central chi-square, so
//! miss and false-alarm probabilities are exact Marcum Q expressions.

use crate::error::{Error, Result};
use crate::special::marcum_q;
use serde::{Deserialize, Serialize};

pub use crate::special::{noncentral_chi2_cdf, reg_gamma_lower, reg_gamma_upper};

/// Hypothesis-test parameters for one beam group.
///
/// `mu1`, `sigma1_sq` describe the group observation when the user's beam is
/// a member; `mu0`, `sigma0_sq` when it is not. `gamma` is the decision
/// threshold on the sum of `t_group` squared observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupHypothesisParams {
    pub mu0: f64,
    pub mu1: f64,
    pub sigma0_sq: f64,
    pub sigma1_sq: f64,
    /// `g' = (N/2 - 1) g + G`, the aggregate gain of the user's group.
    pub g_prime: f64,
    pub gamma: f64,
    pub t_group: u64,
}

/// Arguments of the Marcum Q expression for one hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarcumArgs {
    /// Order: `t_group / 2`.
    pub order: f64,
    /// Non-centrality root: `sqrt(t_group) * mu / sigma`.
    pub a: f64,
    /// Normalized threshold root: `sqrt(gamma) / sigma`.
    pub b: f64,
    /// `a / b` (infinite when `b = 0`).
    pub zeta: f64,
}

/// Closed-form detection parameters for an `n_beams` codebook with gains
/// `(G, g)`, noise scale `sigma^2` and `t_group` slots per group.
///
/// The thin-beam limit `g = 0` is permitted: the off-group observation is
/// then exactly zero, and the threshold degenerates to the smallest positive
/// double so the decision rule reads "detected iff any energy was observed"
/// while keeping the documented boundary convention (statistic == gamma
/// counts as detected). A zero noise scale likewise uses the noiseless limit
/// of the threshold formula.
pub fn group_params(
    n_beams: usize,
    big_gain: f64,
    small_gain: f64,
    noise_scale: f64,
    t_group: u64,
) -> Result<GroupHypothesisParams> {
    if !crate::grouping::is_valid_beam_count(n_beams) {
        return Err(Error::NotPowerOfTwo(n_beams));
    }
    if !(big_gain > small_gain && small_gain >= 0.0) {
        return Err(Error::GainOrder {
            big: big_gain,
            small: small_gain,
        });
    }
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return Err(Error::BadNoiseScale(noise_scale));
    }
    if t_group == 0 {
        return Err(Error::InsufficientBudget {
            budget: 0,
            required: 1,
        });
    }
    let n = n_beams as f64;
    let t = t_group as f64;
    let (big, small, sigma2) = (big_gain, small_gain, noise_scale);
    let g_prime = (n / 2.0 - 1.0) * small + big;
    let denom = (2.0 / n) * g_prime - small;
    if denom <= 0.0 {
        return Err(Error::DegenerateDetection(format!(
            "threshold denominator (2/N) g' - g = {denom} is not positive"
        )));
    }
    let mu0 = small;
    let mu1 = (2.0 / n) * g_prime;
    let sigma0_sq = 2.0 * small * sigma2;
    let sigma1_sq = 4.0 * sigma2 * g_prime / n;
    let gamma = if small == 0.0 {
        f64::MIN_POSITIVE
    } else if sigma2 == 0.0 {
        // Noiseless limit of the threshold expression.
        2.0 * small * g_prime * t
    } else {
        let bracket = 1.0 - (n * small / (2.0 * g_prime)).sqrt()
            - t * (small - big) / (n * sigma2);
        (4.0 * small * g_prime * sigma2 / denom) * bracket
    };
    Ok(GroupHypothesisParams {
        mu0,
        mu1,
        sigma0_sq,
        sigma1_sq,
        g_prime,
        gamma,
        t_group,
    })
}

impl GroupHypothesisParams {
    /// Marcum arguments under the user-present hypothesis.
    pub fn miss_args(&self) -> Result<MarcumArgs> {
        if self.sigma1_sq <= 0.0 {
            return Err(Error::DegenerateDetection(
                "sigma1^2 = 0: user-present observation is deterministic".into(),
            ));
        }
        let sigma = self.sigma1_sq.sqrt();
        let a = (self.t_group as f64).sqrt() * self.mu1 / sigma;
        let b = self.gamma.max(0.0).sqrt() / sigma;
        Ok(MarcumArgs {
            order: self.t_group as f64 / 2.0,
            a,
            b,
            zeta: if b == 0.0 { f64::INFINITY } else { a / b },
        })
    }

    /// Marcum arguments under the user-absent hypothesis.
    pub fn false_args(&self) -> Result<MarcumArgs> {
        if self.sigma0_sq <= 0.0 {
            return Err(Error::DegenerateDetection(
                "sigma0^2 = 0: user-absent observation is deterministic".into(),
            ));
        }
        let sigma = self.sigma0_sq.sqrt();
        let a = (self.t_group as f64).sqrt() * self.mu0 / sigma;
        let b = self.gamma.max(0.0).sqrt() / sigma;
        Ok(MarcumArgs {
            order: self.t_group as f64 / 2.0,
            a,
            b,
            zeta: if b == 0.0 { f64::INFINITY } else { a / b },
        })
    }
}

/// Energy statistic: sum of squared observations.
pub fn test_statistic(samples: &[f64]) -> f64 {
    samples.iter().map(|y| y * y).sum()
}

/// Decision rule: user detected iff the statistic reaches `gamma`.
/// The boundary (statistic exactly `gamma`) counts as detected.
pub fn detect_user(samples: &[f64], params: &GroupHypothesisParams) -> Result<bool> {
    if samples.len() as u64 != params.t_group {
        return Err(Error::SampleCountMismatch {
            got: samples.len(),
            expected: params.t_group,
        });
    }
    Ok(test_statistic(samples) >= params.gamma)
}

/// Probability of missed detection: `1 - Q_{T/2}(a1, b1)`, evaluated through
/// the direct lower-tail sum so tiny miss rates keep absolute accuracy.
pub fn p_miss(params: &GroupHypothesisParams) -> Result<f64> {
    let args = params.miss_args()?;
    crate::special::marcum_p(args.order, args.a, args.b)
}

/// Probability of false alarm: `Q_{T/2}(a0, b0)`.
///
/// When `sigma0^2 = 0` the user-absent statistic is deterministic, so the
/// probability is exactly 0 or 1 depending on the threshold.
pub fn p_false(params: &GroupHypothesisParams) -> Result<f64> {
    if params.sigma0_sq == 0.0 {
        let stat = params.t_group as f64 * params.mu0 * params.mu0;
        return Ok(if stat >= params.gamma { 1.0 } else { 0.0 });
    }
    let args = params.false_args()?;
    marcum_q(args.order, args.a, args.b)
}

/// Optimal exponent parameter of the missed-detection Chernoff bound.
///
/// The bound is the lower-tail Chernoff estimate on the normalized statistic
/// `X ~ chi2'(T, a1^2)` at `x = b1^2`; its exponent is minimized at
/// `lambda_1 = (1/v - 1)/2` where `v` solves `a1^2 v^2 + T v = x`. The value
/// is reported only inside the documented validity regime
/// `b1^2 < (T/2)(a1^2 + 2)` with `lambda_1` in `(0, 1/2)`.
pub fn optimal_lambda(params: &GroupHypothesisParams) -> Result<f64> {
    let args = params.miss_args()?;
    let t = params.t_group as f64;
    let a2 = args.a * args.a;
    let x = args.b * args.b;
    if !(x < 0.5 * t * (a2 + 2.0)) {
        return Err(Error::Regime(format!(
            "b1^2 = {x} is not below (T/2)(a1^2 + 2) = {}",
            0.5 * t * (a2 + 2.0)
        )));
    }
    let v = if a2 == 0.0 {
        x / t
    } else {
        ((t * t + 4.0 * a2 * x).sqrt() - t) / (2.0 * a2)
    };
    let lambda = 0.5 * (1.0 / v - 1.0);
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::Regime(format!(
            "optimal Chernoff parameter {lambda} lies outside (0, 1/2)"
        )));
    }
    Ok(lambda)
}

/// Chernoff-type upper bound on the missed-detection probability, evaluated
/// at [`optimal_lambda`] and clamped to 1.
pub fn chernoff_pm_bound(params: &GroupHypothesisParams) -> Result<f64> {
    let lambda = optimal_lambda(params)?;
    Ok(chernoff_pm_at(params, lambda)?.min(1.0))
}

/// The missed-detection Chernoff bound at an arbitrary `lambda > 0`
/// (unclamped); exposed so the optimum can be cross-checked numerically.
pub fn chernoff_pm_at(params: &GroupHypothesisParams, lambda: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(Error::Domain(format!("lambda must be positive: {lambda}")));
    }
    let args = params.miss_args()?;
    let t = params.t_group as f64;
    let a2 = args.a * args.a;
    let x = args.b * args.b;
    let ln_bound = lambda * x - 0.5 * t * (1.0 + 2.0 * lambda).ln()
        - a2 * lambda / (1.0 + 2.0 * lambda);
    Ok(ln_bound.exp())
}

/// Cauchy-Schwarz prefactor of the missed-detection tail bound
/// (`p_m <= C1 * exp(-a1^2 / 2)`), defined for `zeta1 = a1/b1 > 1`:
///
/// ```text
///   C1 = exp(a1 b1) * sqrt( zeta1^(2 (1 - T/2)) / (2 (zeta1^2 - 1)) ).
/// ```
///
/// Tends to 0 in the thin-beam limit (`b1 -> 0`, `zeta1 -> inf`).
pub fn cs_miss_prefactor(params: &GroupHypothesisParams) -> Result<f64> {
    Ok(cs_miss_prefactor_ln(params)?.exp())
}

/// Natural log of [`cs_miss_prefactor`]; `-inf` in the thin-beam limit.
pub fn cs_miss_prefactor_ln(params: &GroupHypothesisParams) -> Result<f64> {
    let args = params.miss_args()?;
    if args.b == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if args.zeta <= 1.0 {
        return Err(Error::Regime(format!(
            "zeta1 = {} must exceed 1 for the miss-side bound",
            args.zeta
        )));
    }
    let t = params.t_group as f64;
    Ok(args.a * args.b + (1.0 - 0.5 * t) * args.zeta.ln()
        - 0.5 * (2.0 * (args.zeta * args.zeta - 1.0)).ln())
}

/// Full Cauchy-Schwarz-style upper bound on the false-alarm probability,
/// using the `zeta0 = a0/b0 < 1` branch:
///
/// ```text
///   p_f <= exp(a0 b0 - (a0^2 + b0^2)/2) * sqrt( zeta0^(2 (1 - T/2)) / (2 (1 - zeta0^2)) ).
/// ```
///
/// Returns 0 for the deterministic `sigma0^2 = 0` case (no false alarms when
/// the threshold exceeds the constant statistic).
pub fn cs_false_bound(params: &GroupHypothesisParams) -> Result<f64> {
    Ok(cs_false_bound_ln(params)?.exp())
}

/// Natural log of [`cs_false_bound`]; `-inf` when no false alarm can occur.
pub fn cs_false_bound_ln(params: &GroupHypothesisParams) -> Result<f64> {
    if params.sigma0_sq == 0.0 {
        let p = p_false(params)?;
        return Ok(if p == 0.0 { f64::NEG_INFINITY } else { 0.0 });
    }
    let args = params.false_args()?;
    if args.a == 0.0 || args.zeta >= 1.0 {
        return Err(Error::Regime(format!(
            "zeta0 = {} must lie in (0, 1) for the false-alarm-side bound",
            args.zeta
        )));
    }
    let t = params.t_group as f64;
    Ok(args.a * args.b - 0.5 * (args.a * args.a + args.b * args.b)
        + (1.0 - 0.5 * t) * args.zeta.ln()
        - 0.5 * (2.0 * (1.0 - args.zeta * args.zeta)).ln())
}

/// Full Cauchy-Schwarz-style upper bound on the missed-detection probability
/// (`exp(a1 b1 - (a1^2 + b1^2)/2) * S(zeta1)`); tighter than the
/// prefactor-times-exponential chain and used to validate it.
pub fn cs_miss_bound(params: &GroupHypothesisParams) -> Result<f64> {
    Ok(cs_miss_bound_ln(params)?.exp().min(1.0))
}

/// Natural log of [`cs_miss_bound`].
pub fn cs_miss_bound_ln(params: &GroupHypothesisParams) -> Result<f64> {
    let args = params.miss_args()?;
    // C1 already carries the exp(a1 b1) factor.
    Ok(cs_miss_prefactor_ln(params)? - 0.5 * (args.a * args.a + args.b * args.b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn closed_forms_for_thin_beams() {
        let p = group_params(16, 1.0, 0.0, 0.25, 64).unwrap();
        assert_eq!(p.mu0, 0.0);
        assert_abs_diff_eq!(p.mu1, 2.0 / 16.0, epsilon = 1e-15);
        assert_eq!(p.sigma0_sq, 0.0);
        assert_abs_diff_eq!(p.sigma1_sq, 4.0 * 0.25 / 16.0, epsilon = 1e-15);
        assert_eq!(p.gamma, f64::MIN_POSITIVE);
    }

    #[test]
    fn llr_identity_collapses() {
        let p = group_params(16, 1.0, 0.01, 0.1, 64).unwrap();
        let lhs = p.mu1 * p.sigma0_sq - p.mu0 * p.sigma1_sq;
        assert!(lhs.abs() < 1e-15 * p.mu1 * p.sigma0_sq.max(1e-30));
    }

    #[test]
    fn gamma_matches_hand_evaluation() {
        // N = 16, G = 1, g = 0.01, sigma^2 = 0.1, T = 64:
        //   g' = 7 * 0.01 + 1 = 1.07
        //   denom = 2 * 1.07 / 16 - 0.01 = 0.12375
        //   A = 4 * 0.01 * 1.07 * 0.1 / denom = 0.0042800 / 0.12375
        //   bracket = 1 - sqrt(16 * 0.01 / 2.14) + 64 * 0.99 / 1.6
        let g_prime: f64 = 1.07;
        let denom = 2.0 * g_prime / 16.0 - 0.01;
        let a = 4.0 * 0.01 * g_prime * 0.1 / denom;
        let bracket = 1.0 - (16.0 * 0.01 / (2.0 * g_prime)).sqrt() + 64.0 * 0.99 / 1.6;
        let expected = a * bracket;
        let p = group_params(16, 1.0, 0.01, 0.1, 64).unwrap();
        assert_abs_diff_eq!(p.gamma, expected, epsilon = 1e-12 * expected);
    }

    #[test]
    fn statistic_and_decision_rule() {
        assert_eq!(test_statistic(&[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(test_statistic(&[1.0, -2.0, 2.0]), 9.0);
        let mut p = group_params(16, 1.0, 0.05, 0.5, 3).unwrap();
        assert!(!detect_user(&[0.0, 0.0, 0.0], &p).unwrap());
        // Boundary counts as detected.
        p.gamma = 9.0;
        assert!(detect_user(&[1.0, -2.0, 2.0], &p).unwrap());
        assert!(detect_user(&[0.0, 0.0], &p).is_err());
    }

    #[test]
    fn miss_probability_vanishes_with_budget() {
        let mut prev = 1.0;
        for t in [8u64, 16, 32, 64, 128, 256] {
            let p = group_params(16, 1.0, 0.01, 0.05, t).unwrap();
            let pm = p_miss(&p).unwrap();
            assert!(pm <= prev + 1e-12, "p_miss not decreasing at T = {t}");
            assert!((0.0..=1.0).contains(&pm));
            prev = pm;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn false_alarm_deterministic_when_quiet() {
        let p = group_params(16, 1.0, 0.0, 0.5, 64).unwrap();
        assert_eq!(p_false(&p).unwrap(), 0.0);
        assert!(p.miss_args().is_ok());
        assert!(p.false_args().is_err());
    }

    #[test]
    fn chernoff_bound_dominates_p_miss() {
        // Regime where lambda_1 lands in (0, 1/2).
        let mut checked = 0;
        for &(n, big, small, sigma2, t) in &[
            (16usize, 1.0, 0.15, 1.3, 32u64),
            (16, 1.0, 0.2, 1.0, 64),
            (32, 2.0, 0.3, 2.0, 48),
            (16, 1.0, 0.1, 0.8, 40),
        ] {
            let p = group_params(n, big, small, sigma2, t).unwrap();
            let Ok(bound) = chernoff_pm_bound(&p) else { continue };
            let pm = p_miss(&p).unwrap();
            assert!(
                bound >= pm - 1e-12,
                "chernoff bound {bound} below p_miss {pm} at N={n}, T={t}"
            );
            checked += 1;
        }
        assert!(checked >= 2, "too few configurations fell in the regime");
    }

    #[test]
    fn optimal_lambda_is_the_stationary_point() {
        // Golden-section minimization of the bound must land on lambda_1.
        let p = group_params(16, 1.0, 0.15, 1.3, 32).unwrap();
        let lambda = optimal_lambda(&p).unwrap();
        let f = |l: f64| chernoff_pm_at(&p, l).unwrap();
        let (mut lo, mut hi) = (1e-6, 0.499_999);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let m1 = hi - phi * (hi - lo);
            let m2 = lo + phi * (hi - lo);
            if f(m1) < f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let numeric = 0.5 * (lo + hi);
        assert_abs_diff_eq!(lambda, numeric, epsilon = 1e-6);
        assert!(chernoff_pm_bound(&p).unwrap() <= 1.0);
    }

    #[test]
    fn prefactor_limits_toward_zero_gain() {
        // C1 shrinks as g -> 0 (zeta1 -> infinity).
        let mut prev = f64::INFINITY;
        for &g in &[1e-2, 1e-4, 1e-6] {
            let p = group_params(16, 50.0, g, 1.0, 64).unwrap();
            let c1 = cs_miss_prefactor(&p).unwrap();
            assert!(c1 < prev, "C1 not shrinking at g = {g}");
            prev = c1;
        }
        let p0 = group_params(16, 50.0, 0.0, 1.0, 64).unwrap();
        assert_eq!(cs_miss_prefactor(&p0).unwrap(), 0.0);
        assert_eq!(cs_false_bound(&p0).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn llr_identity_over_random_params(
            exp in 2usize..=8,
            big in 0.1f64..100.0,
            ratio in 0.0f64..0.9,
            sigma2 in 0.01f64..10.0,
        ) {
            let n = 1usize << exp;
            let small = big * ratio;
            let p = group_params(n, big, small, sigma2, 32).unwrap();
            let lhs = p.mu1 * p.sigma0_sq - p.mu0 * p.sigma1_sq;
            let scale = (p.mu1 * p.sigma0_sq).abs().max(1e-300);
            prop_assert!(lhs.abs() / scale < 1e-12);
        }
    }
}
