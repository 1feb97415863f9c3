//! Mean-rescaled bootstrap p-value, bootstrap selection frequency and the
//! frequency-adjusted model score.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::{covariance_of_columns, cv_losses, folds_for, standard_errors, CovarianceEstimate, CvLossMatrix};
use crate::data::{standardize_lenient, Dataset};
use crate::debias::{
    average_over_draws, debias_with_model, Criterion, DebiasedErrors, NoiseModel, RandomizationParams,
};
use crate::error::{NextDoorError, Result};
use crate::lasso::{fit_lasso, LambdaGrid};
use crate::linalg::Matrix;
use crate::rng::{derive, domain, substream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapParams<T> {
    /// Number of bootstrap replicates.
    pub b: usize,
    /// Scale of the degeneracy noise added to each replicate statistic.
    pub gamma2: T,
    pub seed: u64,
}

impl<T: Scalar> Default for BootstrapParams<T> {
    fn default() -> Self {
        BootstrapParams { b: 10_000, gamma2: T::lit(0.05), seed: 0 }
    }
}

impl<T: Scalar> BootstrapParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(NextDoorError::invalid("B must be at least 1"));
        }
        if !(self.gamma2 >= T::zero()) {
            return Err(NextDoorError::invalid("gamma2 must be non-negative"));
        }
        Ok(())
    }
}

/// Shrinks `q[range]` toward its mean so the spread left over matches the
/// dispersion not explained by sampling noise.
pub fn rescale_group<T: Scalar>(q: &[T], sigma: &Matrix<T>, offset: usize, n: usize) -> Vec<T> {
    let m = q.len();
    let mt = T::from_usize_lossy(m);
    let nt = T::from_usize_lossy(n);
    let qbar = q.iter().copied().sum::<T>() / mt;
    let ss: T = q.iter().map(|&v| (v - qbar) * (v - qbar)).sum();
    if ss == T::zero() {
        return vec![qbar; m];
    }
    let mut diag = T::zero();
    let mut total = T::zero();
    for k in 0..m {
        diag += sigma.get(offset + k, offset + k);
        for l in 0..m {
            total += sigma.get(offset + k, offset + l);
        }
    }
    let noise = diag / nt - total / (nt * mt);
    let factor = ((ss - noise).max(T::zero()) / ss).sqrt();
    q.iter().map(|&v| qbar + factor * (v - qbar)).collect()
}

/// Applies [`rescale_group`] to the base half and the exclusion half of a
/// `2m` error vector.
pub fn mean_rescale<T: Scalar>(q: &[T], cov: &CovarianceEstimate<T>, n: usize) -> Vec<T> {
    assert!(q.len().is_multiple_of(2) && q.len() == cov.dim(), "expected a 2m error vector");
    let m = q.len() / 2;
    let mut out = rescale_group(&q[..m], &cov.sigma_hat, 0, n);
    out.extend(rescale_group(&q[m..], &cov.sigma_hat, m, n));
    out
}

/// Expected errors `(base, exclusion)` at the randomized selection when the
/// truth is `q_s`. Uses `h` draws from the `seed` stream.
pub fn reference_errors<T: Scalar>(
    q_s: &[T],
    cov: &CovarianceEstimate<T>,
    n: usize,
    params: &RandomizationParams<T>,
    criterion: Criterion,
    se: &[T],
) -> Result<(T, T)> {
    params.validate()?;
    let model = NoiseModel::new(cov, params.alpha, params.gamma1, n)?;
    let m = q_s.len() / 2;
    let avg = average_over_draws(q_s, &model, m, &[0, m], criterion, se, params.h, params.seed);
    Ok((avg.plug_in[0], avg.plug_in[1]))
}

/// Everything the bootstrap test produced, for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOutcome<T> {
    pub pvalue: T,
    /// Observed `err_hat_j - err_hat`.
    pub d_obs: T,
    pub observed: DebiasedErrors<T>,
    pub reference: (T, T),
    /// Centered replicate statistics, one per replicate.
    pub replicates: Vec<T>,
}

/// Fraction of replicate statistics at or above `d_obs`.
pub fn pvalue_from<T: Scalar>(replicates: &[T], d_obs: T) -> T {
    let hits = replicates.iter().filter(|&&r| r >= d_obs).count();
    T::from_usize_lossy(hits) / T::from_usize_lossy(replicates.len())
}

/// Bootstrap test of `H0: Err^j <= Err` on a `2m` loss matrix. The observed
/// de-biasing uses `rp.seed`; the replicates and reference use streams
/// derived from `bp.seed`.
pub fn bootstrap_test<T: Scalar>(
    losses: &Matrix<T>,
    rp: &RandomizationParams<T>,
    bp: &BootstrapParams<T>,
    criterion: Criterion,
) -> Result<BootstrapOutcome<T>> {
    rp.validate()?;
    bp.validate()?;
    let n = losses.nrows();
    let dim = losses.ncols();
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(NextDoorError::invalid("loss matrix must have 2m columns"));
    }
    let m = dim / 2;
    let q = losses.column_means();
    let cov = covariance_of_columns(losses);
    let se = standard_errors(losses, m);
    let model = NoiseModel::new(&cov, rp.alpha, rp.gamma1, n)?;
    let observed = debias_with_model(&q, &model, rp, criterion, &se);
    let d_obs = observed.err_hat_j - observed.err_hat;

    let q_s = mean_rescale(&q, &cov, n);
    let ref_params = rp.with_seed(derive(bp.seed, domain::REFERENCE, 0));
    let (q_sr, q_sjr) = reference_errors(&q_s, &cov, n, &ref_params, criterion, &se)?;
    let centering = q_sjr - q_sr;

    // rescaled population: every row shifted by q_s - q
    let mut population = losses.clone();
    for k in 0..dim {
        let shift = q_s[k] - q[k];
        population.col_mut(k).iter_mut().for_each(|v| *v += shift);
    }

    let w_sd = bp.gamma2 * (cov.sigma0_sq / T::from_usize_lossy(n)).sqrt();
    let replicates: Vec<T> = (0..bp.b)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(bp.seed, domain::RESAMPLE, b as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let sample = population.select_rows(&rows);
            let qb = sample.column_means();
            let covb = covariance_of_columns(&sample);
            let seb = standard_errors(&sample, m);
            let modelb = NoiseModel::new(&covb, rp.alpha, rp.gamma1, n)?;
            let pb = rp.with_seed(derive(bp.seed, domain::BOOTSTRAP, b as u64));
            let db = debias_with_model(&qb, &modelb, &pb, criterion, &seb);
            let w = w_sd * T::standard_normal(&mut substream(bp.seed, domain::DEGENERACY, b as u64));
            Ok((db.err_hat_j - db.err_hat) - centering + w)
        })
        .collect::<Result<_>>()?;

    Ok(BootstrapOutcome {
        pvalue: pvalue_from(&replicates, d_obs),
        d_obs,
        observed,
        reference: (q_sr, q_sjr),
        replicates,
    })
}

/// Bootstrap p-value for the exclusion encoded in `m`.
pub fn bootstrap_pvalue<T: Scalar>(
    m: &CvLossMatrix<T>,
    rp: &RandomizationParams<T>,
    bp: &BootstrapParams<T>,
    criterion: Criterion,
) -> Result<T> {
    Ok(bootstrap_test(m.losses(), rp, bp, criterion)?.pvalue)
}

/// How folds are rebuilt on each paired-bootstrap resample: user folds carried
/// with the rows when the data has them, otherwise `v` random folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldSpec {
    pub v: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFrequencies<T> {
    /// One entry per target set.
    pub frequencies: Vec<T>,
    /// Resamples that completed.
    pub used: usize,
    /// Resamples dropped because a fit failed.
    pub failures: usize,
}

/// Paired-bootstrap selection frequency of each target set (a set counts as
/// selected when any member is active).
#[allow(clippy::too_many_arguments)]
pub fn selection_frequencies<T: Scalar>(
    d: &Dataset<T>,
    grid: &LambdaGrid<T>,
    folds: FoldSpec,
    targets: &[Vec<usize>],
    rp: &RandomizationParams<T>,
    criterion: Criterion,
    n_boot: usize,
    seed: u64,
) -> Result<SelectionFrequencies<T>> {
    if n_boot == 0 {
        return Err(NextDoorError::invalid("number of selection-frequency resamples must be positive"));
    }
    rp.validate()?;
    let n = d.n();
    let outcomes: Vec<Option<Vec<bool>>> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, domain::FREQUENCY, b as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let db = d.subset(&rows);
            selected_on_resample(&db, grid, folds, targets, rp, criterion, seed, b).ok()
        })
        .collect();
    let used = outcomes.iter().filter(|o| o.is_some()).count();
    let failures = n_boot - used;
    if used == 0 {
        return Err(NextDoorError::Data("every selection-frequency resample failed".into()));
    }
    let frequencies = (0..targets.len())
        .map(|t| {
            let hits = outcomes.iter().flatten().filter(|sel| sel[t]).count();
            T::from_usize_lossy(hits) / T::from_usize_lossy(used)
        })
        .collect();
    Ok(SelectionFrequencies { frequencies, used, failures })
}

#[allow(clippy::too_many_arguments)]
fn selected_on_resample<T: Scalar>(
    db: &Dataset<T>,
    grid: &LambdaGrid<T>,
    folds: FoldSpec,
    targets: &[Vec<usize>],
    rp: &RandomizationParams<T>,
    criterion: Criterion,
    seed: u64,
    b: usize,
) -> Result<Vec<bool>> {
    let fa = folds_for(db, folds.v, derive(seed, domain::FOLDS, b as u64))?;
    let losses = cv_losses(db, grid, &fa, &[])?;
    let cov = covariance_of_columns(&losses);
    let se = standard_errors(&losses, grid.len());
    let model = NoiseModel::new(&cov, rp.alpha, rp.gamma1, db.n())?;
    let q = losses.column_means();
    let pick =
        average_over_draws(&q, &model, grid.len(), &[0], criterion, &se, 1, derive(seed, domain::SELECT, b as u64));
    let (std_data, _, constant) = standardize_lenient(db);
    let fit = fit_lasso(&std_data, grid.get(pick.first), &constant, None)?;
    Ok(targets.iter().map(|set| set.iter().any(|&j| fit.is_active(j))).collect())
}

/// Convenience wrapper for a single predictor.
#[allow(clippy::too_many_arguments)]
pub fn selection_frequency<T: Scalar>(
    d: &Dataset<T>,
    grid: &LambdaGrid<T>,
    folds: FoldSpec,
    j: usize,
    rp: &RandomizationParams<T>,
    criterion: Criterion,
    n_boot: usize,
    seed: u64,
) -> Result<T> {
    Ok(selection_frequencies(d, grid, folds, &[vec![j]], rp, criterion, n_boot, seed)?.frequencies[0])
}

/// `p / frequency`, or a flag when the predictor is too rarely selected to be
/// tested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelScore<T> {
    Score(T),
    FrequencyBelowCutoff,
}

pub const BELOW_CUTOFF_FLAG: &str = "frequency-below-cutoff";

impl<T: Scalar> ModelScore<T> {
    pub fn value(&self) -> Option<T> {
        match *self {
            ModelScore::Score(s) => Some(s),
            ModelScore::FrequencyBelowCutoff => None,
        }
    }

    /// A flagged score never rejects.
    pub fn rejects(&self, level: T) -> bool {
        matches!(*self, ModelScore::Score(s) if s <= level)
    }
}

impl<T: Scalar> fmt::Display for ModelScore<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelScore::Score(s) => write!(f, "{:.3}", s.as_f64()),
            ModelScore::FrequencyBelowCutoff => f.write_str(BELOW_CUTOFF_FLAG),
        }
    }
}

impl<T: Serialize> Serialize for ModelScore<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ModelScore::Score(v) => v.serialize(s),
            ModelScore::FrequencyBelowCutoff => s.serialize_str(BELOW_CUTOFF_FLAG),
        }
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for ModelScore<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<T> {
            Num(T),
            Flag(String),
        }
        match Raw::<T>::deserialize(d)? {
            Raw::Num(v) => Ok(ModelScore::Score(v)),
            Raw::Flag(s) if s == BELOW_CUTOFF_FLAG => Ok(ModelScore::FrequencyBelowCutoff),
            Raw::Flag(s) => Err(serde::de::Error::custom(format!("unknown model score `{s}`"))),
        }
    }
}

pub fn model_score<T: Scalar>(pvalue: T, gamma_j: T, cutoff: T) -> ModelScore<T> {
    if gamma_j >= cutoff && gamma_j > T::zero() {
        ModelScore::Score(pvalue / gamma_j)
    } else {
        ModelScore::FrequencyBelowCutoff
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov(m: Matrix<f64>) -> CovarianceEstimate<f64> {
        CovarianceEstimate::from_matrix(m).unwrap()
    }

    #[test]
    fn rescale_hand_example() {
        let mut s = Matrix::zeros(4, 4);
        s.set(0, 0, 1.0);
        s.set(1, 1, 1.0);
        let q = [1.0, 3.0, 5.0, 5.0];
        let out = mean_rescale(&q, &cov(s), 100);
        let f = 0.995f64.sqrt();
        assert!((out[0] - (2.0 - f)).abs() < 1e-14);
        assert!((out[1] - (2.0 + f)).abs() < 1e-14);
        assert_eq!(&out[2..], &[5.0, 5.0]);
    }

    #[test]
    fn rescale_zero_cov_is_identity_and_clips() {
        let q = [1.0, 2.0, 4.0, 0.5, 0.7, 0.9];
        assert_eq!(mean_rescale(&q, &cov(Matrix::zeros(6, 6)), 50), q.to_vec());
        let mut big = Matrix::zeros(6, 6);
        for k in 0..6 {
            big.set(k, k, 1e6);
        }
        let out = mean_rescale(&q, &cov(big), 50);
        assert!(out[..3].iter().all(|&v| (v - 7.0 / 3.0).abs() < 1e-12));
        assert!(out[3..].iter().all(|&v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn reference_single_model_is_exact() {
        let c = cov(Matrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap());
        let p = RandomizationParams { h: 20, ..Default::default() };
        let r = reference_errors(&[0.4, 0.9], &c, 30, &p, Criterion::RandomizedMin, &[]).unwrap();
        assert_eq!(r, (0.4, 0.9));
    }

    #[test]
    fn score_rules() {
        assert_eq!(model_score(0.01, 1.0, 0.05), ModelScore::Score(0.01));
        assert_eq!(model_score(0.5, 0.03, 0.05), ModelScore::FrequencyBelowCutoff);
        assert!(!ModelScore::<f64>::FrequencyBelowCutoff.rejects(1.0));
        let json = serde_json::to_string(&ModelScore::<f64>::FrequencyBelowCutoff).unwrap();
        assert_eq!(json, "\"frequency-below-cutoff\"");
        let back: ModelScore<f64> = serde_json::from_str("0.25").unwrap();
        assert_eq!(back, ModelScore::Score(0.25));
    }

    #[test]
    fn pvalue_from_counts() {
        assert_eq!(pvalue_from(&[0.1, 0.2, 0.3, 0.4], 0.25), 0.5);
        assert_eq!(pvalue_from(&[0.1], 0.1), 1.0);
    }
}
