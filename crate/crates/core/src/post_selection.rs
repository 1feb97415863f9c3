//! Conditional p-value for `Err^j <= Err` at the randomly selected penalty,
//! conditioning on the selection event through a truncated Gaussian law.

use serde::{Deserialize, Serialize};

use crate::cv::{argmin, covariance_of_columns, CvLossMatrix};
use crate::error::{NextDoorError, Result};
use crate::linalg::Matrix;
use crate::rng::{domain, substream};
use crate::scalar::Scalar;
use crate::special::{log_diff_exp, log_norm_sf};

/// Range of the statistic compatible with the observed selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationInterval {
    pub a: f64,
    pub b: f64,
}

impl TruncationInterval {
    pub const UNBOUNDED: TruncationInterval = TruncationInterval { a: f64::NEG_INFINITY, b: f64::INFINITY };

    pub fn contains(&self, t: f64) -> bool {
        self.a <= t && t <= self.b
    }
}

/// `m x m` matrix `B` with `B q <= 0` exactly when `k_star` is the argmin of
/// `q`: row `k != k_star` reads `q[k_star] - q[k]`, row `k_star` is zero.
pub fn affine_constraints<T: Scalar>(k_star: usize, m: usize) -> Matrix<T> {
    assert!(k_star < m, "selected index out of range");
    let mut b = Matrix::zeros(m, m);
    for k in (0..m).filter(|&k| k != k_star) {
        b.set(k, k_star, T::one());
        b.set(k, k, -T::one());
    }
    b
}

/// Interval for `T` given `q = alpha T + N` and `q[k_star] <= q[k]` for all
/// `k`.
pub fn truncation_interval(alpha: &[f64], nvec: &[f64], k_star: usize) -> TruncationInterval {
    assert_eq!(alpha.len(), nvec.len());
    let mut out = TruncationInterval::UNBOUNDED;
    for k in 0..alpha.len() {
        let c = alpha[k_star] - alpha[k];
        let r = (nvec[k] - nvec[k_star]) / c;
        if c > 0.0 {
            out.b = out.b.min(r);
        } else if c < 0.0 {
            out.a = out.a.max(r);
        }
    }
    out
}

/// `P(Z >= x | a < Z < b)` for `Z ~ N(0, sd^2)`, evaluated through log tail
/// probabilities on the side of zero where `x` lies.
pub fn truncated_gaussian_sf(x: f64, sd: f64, a: f64, b: f64) -> Result<f64> {
    if !(sd > 0.0) {
        return Err(NextDoorError::invalid("standard deviation must be positive"));
    }
    if !(a <= x && x <= b) {
        return Err(NextDoorError::invalid(format!("{x} lies outside the truncation interval [{a}, {b}]")));
    }
    let (t, ta, tb) = (x / sd, a / sd, b / sd);
    let p = if t >= 0.0 {
        let (lt, la, lb) = (log_norm_sf(t), log_norm_sf(ta), log_norm_sf(tb));
        (log_diff_exp(lt, lb) - log_diff_exp(la, lb)).exp()
    } else {
        // lower tails: Phi(u) = S(-u)
        let (lt, la, lb) = (log_norm_sf(-t), log_norm_sf(-ta), log_norm_sf(-tb));
        (log_diff_exp(lb, lt) - log_diff_exp(lb, la)).exp()
    };
    Ok(if p.is_nan() { 0.0 } else { p.clamp(0.0, 1.0) })
}

/// Details of one post-selection test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostSelectionOutcome {
    pub pvalue: f64,
    pub statistic: f64,
    /// Standard deviation of the statistic under the null.
    pub sd: f64,
    pub interval: TruncationInterval,
    pub k_star: usize,
}

/// Runs the test on an `n x 2m` loss matrix with randomization variance
/// `tau_sq`.
pub fn post_selection_test<T: Scalar>(losses: &Matrix<T>, tau_sq: T, seed: u64) -> Result<PostSelectionOutcome> {
    let tau_sq = tau_sq.as_f64();
    if !(tau_sq > 0.0) {
        return Err(NextDoorError::invalid("tau^2 must be positive"));
    }
    let n = losses.nrows();
    let dim = losses.ncols();
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(NextDoorError::invalid("loss matrix must have 2m columns"));
    }
    let m = dim / 2;
    let q: Vec<f64> = losses.column_means().iter().map(|v| v.as_f64()).collect();
    let cov = covariance_of_columns(losses);
    let s = |i: usize, j: usize| cov.sigma_hat.get(i, j).as_f64();
    let nf = n as f64;
    let tau = tau_sq.sqrt();

    let mut rng = substream(seed, domain::POST_SELECTION, 0);
    let q_tilde: Vec<f64> = (0..m).map(|k| q[k] + tau * f64::standard_normal(&mut rng) / nf.sqrt()).collect();
    let eps_t = tau * f64::standard_normal(&mut rng);
    let k_star = argmin(&q_tilde);
    let t = q[m + k_star] - q[k_star] + eps_t / nf.sqrt();

    let sigma_tt = s(m + k_star, m + k_star) + s(k_star, k_star) - 2.0 * s(k_star, m + k_star) + tau_sq;
    assert!(sigma_tt > 0.0, "statistic variance must be positive when tau^2 > 0");
    let alpha: Vec<f64> = (0..m).map(|k| (s(m + k_star, k) - s(k_star, k)) / sigma_tt).collect();
    let nvec: Vec<f64> = (0..m).map(|k| q_tilde[k] - alpha[k] * t).collect();
    let mut interval = truncation_interval(&alpha, &nvec, k_star);
    // rounding in the decomposition can push the observed value a hair outside
    let slack = 1e-9 * (1.0 + t.abs());
    assert!(
        interval.a <= t + slack && t - slack <= interval.b,
        "observed statistic {t} outside truncation interval {interval:?}"
    );
    interval.a = interval.a.min(t);
    interval.b = interval.b.max(t);
    let sd = (sigma_tt / nf).sqrt();
    let pvalue = truncated_gaussian_sf(t, sd, interval.a, interval.b)?;
    Ok(PostSelectionOutcome { pvalue, statistic: t, sd, interval, k_star })
}

pub fn post_selection_pvalue<T: Scalar>(m: &CvLossMatrix<T>, tau_sq: T, seed: u64) -> Result<T> {
    Ok(T::lit(post_selection_test(m.losses(), tau_sq, seed)?.pvalue))
}
