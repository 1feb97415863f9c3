//! Randomized pseudo-errors and selection-bias-corrected CV error estimates.
//!
//! Two noisy copies of the CV error vector `Q` are formed from one draw of
//! `eps ~ N(0, g1 s0^2 I)` and `z ~ N(0, S + g1 s0^2 I)`:
//!
//! ```text
//! q_alpha     = Q + eps/sqrt(n) + sqrt(alpha/n) z
//! q_inv_alpha = Q + eps/sqrt(n) - sqrt(1/(n alpha)) z
//! ```
//!
//! The penalty is selected on `q_alpha` and the error is read off
//! `q_inv_alpha`, averaged over `H` draws.

use serde::{Deserialize, Serialize};

use crate::cv::{argmin, one_se_select, CovarianceEstimate};
use crate::error::{NextDoorError, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::rng::{domain, substream, AnalysisRng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomizationParams<T> {
    pub alpha: T,
    pub gamma1: T,
    /// Number of randomization rounds.
    pub h: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for RandomizationParams<T> {
    fn default() -> Self {
        RandomizationParams { alpha: T::lit(0.1), gamma1: T::lit(0.1), h: 1000, seed: 0 }
    }
}

impl<T: Scalar> RandomizationParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero()) {
            return Err(NextDoorError::invalid("alpha must be positive"));
        }
        if !(self.gamma1 >= T::zero()) {
            return Err(NextDoorError::invalid("gamma1 must be non-negative"));
        }
        if self.h == 0 {
            return Err(NextDoorError::invalid("H must be at least 1"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Rule mapping a randomized CV curve to a penalty index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    RandomizedMin,
    RandomizedOneSe,
}

impl Criterion {
    /// `se` is only read by the one-standard-error rule.
    #[inline]
    pub fn select<T: Scalar>(self, q_alpha_base: &[T], se: &[T]) -> usize {
        match self {
            Criterion::RandomizedMin => select_randomized(q_alpha_base),
            Criterion::RandomizedOneSe => one_se_select(q_alpha_base, se),
        }
    }
}

/// Argmin over the entries given (the base-model block); ties go to the
/// smallest index.
#[inline]
pub fn select_randomized<T: Scalar>(q_alpha_base: &[T]) -> usize {
    argmin(q_alpha_base)
}

/// Factorized noise law for one covariance estimate.
#[derive(Debug, Clone)]
pub struct NoiseModel<T> {
    chol: Cholesky<T>,
    eps_sd: T,
    inv_sqrt_n: T,
    plus_scale: T,
    minus_scale: T,
}

impl<T: Scalar> NoiseModel<T> {
    pub fn new(cov: &CovarianceEstimate<T>, alpha: T, gamma1: T, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(NextDoorError::invalid("sample size must be positive"));
        }
        let dim = cov.dim();
        let extra = gamma1 * cov.sigma0_sq;
        let mut shifted: Matrix<T> = cov.sigma_hat.clone();
        for k in 0..dim {
            shifted.set(k, k, shifted.get(k, k) + extra);
        }
        let chol = Cholesky::factor_psd(&shifted)?;
        let nt = T::from_usize_lossy(n);
        Ok(NoiseModel {
            chol,
            eps_sd: extra.sqrt(),
            inv_sqrt_n: T::one() / nt.sqrt(),
            plus_scale: (alpha / nt).sqrt(),
            minus_scale: (T::one() / (nt * alpha)).sqrt(),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.chol.dim()
    }

    /// Draws standard normals for `z` then for `eps`, in that order.
    #[inline]
    fn fill(&self, rng: &mut AnalysisRng, xi: &mut [T], eps: &mut [T]) {
        xi.iter_mut().for_each(|v| *v = T::standard_normal(rng));
        eps.iter_mut().for_each(|v| *v = T::standard_normal(rng));
    }

    #[inline]
    fn z(&self, k: usize, xi: &[T]) -> T {
        self.chol.mul_row(k, xi)
    }

    #[inline]
    fn alpha_entry(&self, q: T, eps_std: T, z: T) -> T {
        q + self.eps_sd * eps_std * self.inv_sqrt_n + self.plus_scale * z
    }

    #[inline]
    fn inv_alpha_entry(&self, q: T, eps_std: T, z: T) -> T {
        q + self.eps_sd * eps_std * self.inv_sqrt_n - self.minus_scale * z
    }

    /// One full draw: `(q_alpha, q_inv_alpha, z)`.
    pub fn pseudo_errors(&self, q: &[T], rng: &mut AnalysisRng) -> (Vec<T>, Vec<T>, Vec<T>) {
        let d = self.dim();
        assert_eq!(q.len(), d, "error vector does not match covariance");
        let mut xi = vec![T::zero(); d];
        let mut eps = vec![T::zero(); d];
        self.fill(rng, &mut xi, &mut eps);
        let z: Vec<T> = (0..d).map(|k| self.z(k, &xi)).collect();
        let qa = (0..d).map(|k| self.alpha_entry(q[k], eps[k], z[k])).collect();
        let qia = (0..d).map(|k| self.inv_alpha_entry(q[k], eps[k], z[k])).collect();
        (qa, qia, z)
    }

    /// Scale of `q_alpha - q_inv_alpha` per unit of `z`:
    /// `sqrt(alpha/n) + sqrt(1/(n alpha))`.
    pub fn difference_scale(&self) -> T {
        self.plus_scale + self.minus_scale
    }
}

/// Randomized pseudo-errors for one draw from `rng`.
pub fn pseudo_errors<T: Scalar>(
    q: &[T],
    cov: &CovarianceEstimate<T>,
    params: &RandomizationParams<T>,
    n: usize,
    rng: &mut AnalysisRng,
) -> Result<(Vec<T>, Vec<T>)> {
    let model = NoiseModel::new(cov, params.alpha, params.gamma1, n)?;
    let (qa, qia, _) = model.pseudo_errors(q, rng);
    Ok((qa, qia))
}

/// Averages over `h` draws of the randomized selection.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DrawAverages<T> {
    /// Mean of `q_inv_alpha[k* + offset]` per offset.
    pub debiased: Vec<T>,
    /// Mean of `q[k* + offset]` per offset (no correction).
    pub plug_in: Vec<T>,
    pub counts: Vec<usize>,
    pub first: usize,
}

/// Runs `h` draws; draw `i` uses substream `i` of `seed`. Selection reads the
/// first `m` coordinates of `q_alpha`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn average_over_draws<T: Scalar>(
    q: &[T],
    model: &NoiseModel<T>,
    m: usize,
    offsets: &[usize],
    criterion: Criterion,
    se: &[T],
    h: usize,
    seed: u64,
) -> DrawAverages<T> {
    let d = model.dim();
    debug_assert!(offsets.iter().all(|&o| o + m <= d));
    let mut xi = vec![T::zero(); d];
    let mut eps = vec![T::zero(); d];
    let mut qa = vec![T::zero(); m];
    let mut debiased = vec![T::zero(); offsets.len()];
    let mut plug_in = vec![T::zero(); offsets.len()];
    let mut counts = vec![0usize; m];
    let mut first = 0;
    for draw in 0..h {
        let mut rng = substream(seed, domain::DRAW, draw as u64);
        model.fill(&mut rng, &mut xi, &mut eps);
        for k in 0..m {
            qa[k] = model.alpha_entry(q[k], eps[k], model.z(k, &xi));
        }
        let k_star = criterion.select(&qa, se);
        if draw == 0 {
            first = k_star;
        }
        counts[k_star] += 1;
        for (o, &off) in offsets.iter().enumerate() {
            let idx = k_star + off;
            debiased[o] += model.inv_alpha_entry(q[idx], eps[idx], model.z(idx, &xi));
        }
    }
    let ht = T::from_usize_lossy(h);
    debiased.iter_mut().for_each(|v| *v /= ht);
    // weighted by selection share so a certain selection returns q exactly
    for (o, &off) in offsets.iter().enumerate() {
        plug_in[o] = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| T::from_usize_lossy(c) / ht * q[k + off])
            .sum();
    }
    DrawAverages { debiased, plug_in, counts, first }
}

/// De-biased base and exclusion-model errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasedErrors<T> {
    pub err_hat: T,
    pub err_hat_j: T,
    /// Times each penalty index was selected; sums to `H`.
    pub selection_counts: Vec<usize>,
    /// Selection made by the first draw.
    pub k_star_primary: usize,
}

impl<T: Scalar> DebiasedErrors<T> {
    /// Shannon entropy (nats) of the empirical selection distribution.
    pub fn selection_entropy(&self) -> f64 {
        let total: usize = self.selection_counts.iter().sum();
        self.selection_counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / total as f64;
                -p * p.ln()
            })
            .sum()
    }
}

/// Runs the randomized de-biasing on a `2m` error vector.
pub fn debias_errors<T: Scalar>(
    q: &[T],
    cov: &CovarianceEstimate<T>,
    n: usize,
    params: &RandomizationParams<T>,
    criterion: Criterion,
    se: &[T],
) -> Result<DebiasedErrors<T>> {
    params.validate()?;
    if !q.len().is_multiple_of(2) || q.len() != cov.dim() || q.is_empty() {
        return Err(NextDoorError::invalid("error vector must have 2m entries matching the covariance"));
    }
    let model = NoiseModel::new(cov, params.alpha, params.gamma1, n)?;
    Ok(debias_with_model(q, &model, params, criterion, se))
}

pub(crate) fn debias_with_model<T: Scalar>(
    q: &[T],
    model: &NoiseModel<T>,
    params: &RandomizationParams<T>,
    criterion: Criterion,
    se: &[T],
) -> DebiasedErrors<T> {
    let m = q.len() / 2;
    let avg = average_over_draws(q, model, m, &[0, m], criterion, se, params.h, params.seed);
    DebiasedErrors {
        err_hat: avg.debiased[0],
        err_hat_j: avg.debiased[1],
        selection_counts: avg.counts,
        k_star_primary: avg.first,
    }
}

/// De-biasing restricted to the base block of `m` columns: returns the
/// de-biased error and the selection of the first draw.
pub fn debias_base<T: Scalar>(
    q_base: &[T],
    cov_base: &CovarianceEstimate<T>,
    n: usize,
    params: &RandomizationParams<T>,
    criterion: Criterion,
    se: &[T],
) -> Result<(T, usize, Vec<usize>)> {
    params.validate()?;
    let model = NoiseModel::new(cov_base, params.alpha, params.gamma1, n)?;
    let m = q_base.len();
    let avg = average_over_draws(q_base, &model, m, &[0], criterion, se, params.h, params.seed);
    Ok((avg.debiased[0], avg.first, avg.counts))
}
