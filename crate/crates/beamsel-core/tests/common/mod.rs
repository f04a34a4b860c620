//! Shared test oracles, independent of the library's evaluation paths.
//!
//! The Marcum oracle integrates the defining integrand with adaptive Simpson
//! quadrature, using its own log-domain Bessel series; the library's
//! Poisson-mixture implementation shares no code with it.

#![allow(dead_code)]

/// `ln I_nu(x)` by direct series summation in the log domain. All terms are
/// positive, so there is no cancellation; successive log-terms follow the
/// recurrence `ln t_{j+1} = ln t_j + 2 ln(x/2) - ln(j+1) - ln(j+nu+1)`.
pub fn ln_bessel_i(nu: f64, x: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    assert!(x >= 0.0 && nu > -1.0);
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let lx2 = 2.0 * (x / 2.0).ln();
    let mut lt = nu * (x / 2.0).ln() - ln_gamma(nu + 1.0); // j = 0 term
    let mut m = lt;
    let mut s = 1.0;
    let peak = (x / 2.0).ceil() as usize;
    for j in 0..(2 * peak + 300) {
        let jf = j as f64;
        lt += lx2 - (jf + 1.0).ln() - (jf + nu + 1.0).ln();
        if lt > m {
            s = s * (m - lt).exp() + 1.0;
            m = lt;
        } else {
            s += (lt - m).exp();
            // Past the peak the terms fall superexponentially.
            if j > peak && lt < m - 45.0 {
                break;
            }
        }
    }
    m + s.ln()
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, m: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(f, a, lm, m, fa, flm, fm);
    let right = simpson(f, m, rm, b, fm, frm, fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
            + adaptive(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
}

/// Adaptive Simpson quadrature with absolute tolerance `eps`.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(f, a, m, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, eps, 60)
}

/// Marcum `Q_nu(a, b)` by quadrature of the defining integrand
/// `x (x/a)^(nu-1) exp(-(x^2+a^2)/2) I_{nu-1}(a x)` over `[b, inf)`.
pub fn marcum_q_quadrature(nu: f64, a: f64, b: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    assert!(nu > 0.0 && a >= 0.0 && b >= 0.0);
    let ln_f = |x: f64| -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if a == 0.0 {
            // Central case: x^(2 nu - 1) e^{-x^2/2} / (2^(nu-1) Gamma(nu)).
            (2.0 * nu - 1.0) * x.ln() - 0.5 * x * x
                - (nu - 1.0) * std::f64::consts::LN_2
                - ln_gamma(nu)
        } else {
            x.ln() + (nu - 1.0) * (x.ln() - a.ln()) - 0.5 * (x * x + a * a)
                + ln_bessel_i(nu - 1.0, a * x)
        }
    };
    // Beyond a + sqrt(2 nu) the integrand decays like exp(-(x - a)^2 / 2);
    // 14 further units leave a tail below 1e-40.
    let upper = (a + (2.0 * nu).sqrt() + 14.0).max(b + 14.0);
    if b >= upper {
        return 0.0;
    }
    // Scale by the peak value so the quadrature works near unit magnitude.
    let steps = 256;
    let mut peak = f64::NEG_INFINITY;
    for i in 0..=steps {
        let x = b + (upper - b) * i as f64 / steps as f64;
        peak = peak.max(ln_f(x));
    }
    if peak == f64::NEG_INFINITY {
        return 0.0;
    }
    let g = |x: f64| (ln_f(x) - peak).exp();
    let scaled = integrate(&g, b, upper, 3e-13);
    (scaled.max(0.0).ln() + peak).exp()
}

/// Golden-section minimizer on `[lo, hi]`.
pub fn golden_min(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: u32) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..iters {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}
