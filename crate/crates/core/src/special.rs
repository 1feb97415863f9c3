//! Standard normal tail functions, accurate far into both tails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Mills ratio `sf(t) / pdf(t)` by backward evaluation of its continued
/// fraction. Accurate to machine precision for `t >= 8`.
fn mills_ratio(t: f64) -> f64 {
    let mut f = t;
    for k in (1..=120).rev() {
        f = t + k as f64 / f;
    }
    1.0 / f
}

/// `ln P(Z > t)` for standard normal `Z`.
pub fn log_norm_sf(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if t == f64::NEG_INFINITY {
        return 0.0;
    }
    if t > 8.0 {
        -0.5 * t * t - LN_SQRT_2PI + mills_ratio(t).ln()
    } else if t >= 0.0 {
        (0.5 * libm::erfc(t * FRAC_1_SQRT_2)).ln()
    } else {
        (-norm_sf(-t)).ln_1p()
    }
}

/// `P(Z > t)`.
pub fn norm_sf(t: f64) -> f64 {
    if t > 8.0 {
        log_norm_sf(t).exp()
    } else {
        0.5 * libm::erfc(t * FRAC_1_SQRT_2)
    }
}

/// `P(Z <= t)`.
pub fn norm_cdf(t: f64) -> f64 {
    norm_sf(-t)
}

pub fn norm_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

/// `ln(e^u - e^v)` for `u >= v`.
pub(crate) fn log_diff_exp(u: f64, v: f64) -> f64 {
    if v == f64::NEG_INFINITY {
        return u;
    }
    let d = v - u;
    if d >= 0.0 {
        return f64::NEG_INFINITY;
    }
    // -expm1 keeps precision when the two values are close
    u + if d > -std::f64::consts::LN_2 { (-d.exp_m1()).ln() } else { (-d.exp()).ln_1p() }
}
