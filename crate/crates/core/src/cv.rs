//! V-fold cross-validation producing the per-sample loss matrix.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{linear_predictor, standardize_lenient, Dataset, Family};
use crate::error::{NextDoorError, Result};
use crate::lasso::{fit_lasso, sigmoid, LambdaGrid, LassoFit};
use crate::linalg::Matrix;
use crate::rng::{domain, substream};
use crate::scalar::Scalar;

/// Assignment of each sample to one validation fold (`0..V`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    n_folds: usize,
}

impl FoldAssignment {
    /// Labels must cover `0..V` with `V >= 2`, each label used at least once.
    pub fn new(fold_of: Vec<usize>) -> Result<Self> {
        let n_folds = fold_of.iter().max().map_or(0, |m| m + 1);
        if n_folds < 2 {
            return Err(NextDoorError::invalid("need at least two folds"));
        }
        let mut seen = vec![false; n_folds];
        fold_of.iter().for_each(|&f| seen[f] = true);
        if seen.iter().any(|s| !s) {
            return Err(NextDoorError::invalid("fold labels must be contiguous 0..V"));
        }
        Ok(FoldAssignment { fold_of, n_folds })
    }

    #[inline]
    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }
    #[inline]
    pub fn n_folds(&self) -> usize {
        self.n_folds
    }
    #[inline]
    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    pub fn validation(&self, v: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] == v).collect()
    }

    pub fn training(&self, v: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] != v).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_folds];
        self.fold_of.iter().for_each(|&f| s[f] += 1);
        s
    }
}

/// Seeded balanced random partition of `0..n` into `v` folds.
pub fn make_folds(n: usize, v: usize, seed: u64) -> Result<FoldAssignment> {
    if v < 2 {
        return Err(NextDoorError::invalid("number of folds must be at least 2"));
    }
    if v > n {
        return Err(NextDoorError::invalid(format!("{v} folds requested for {n} samples")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, domain::FOLDS, 0));
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % v;
    }
    FoldAssignment::new(fold_of)
}

/// User folds from the dataset when present, otherwise [`make_folds`].
pub fn folds_for<T: Scalar>(d: &Dataset<T>, v: usize, seed: u64) -> Result<FoldAssignment> {
    match d.folds() {
        Some(labels) => {
            // relabel so that folds missing from a resample do not leave gaps
            let mut map = std::collections::BTreeMap::new();
            for &l in labels {
                let next = map.len();
                map.entry(l).or_insert(next);
            }
            if map.len() < 2 {
                return Err(NextDoorError::data("fewer than two distinct folds in data"));
            }
            FoldAssignment::new(labels.iter().map(|l| map[l]).collect())
        }
        None => make_folds(d.n(), v, seed),
    }
}

/// Per-sample held-out loss: squared error, or binomial deviance with the
/// fitted probability clipped to `[1e-5, 1 - 1e-5]`.
#[inline]
pub fn pointwise_loss<T: Scalar>(family: Family, y: T, eta: T) -> T {
    match family {
        Family::Gaussian => (y - eta) * (y - eta),
        Family::Binomial => {
            let eps = T::lit(1e-5);
            let p = sigmoid(eta).max(eps).min(T::one() - eps);
            -T::lit(2.0) * (y * p.ln() + (T::one() - y) * (T::one() - p).ln())
        }
    }
}

/// Held-out losses along the whole grid for one fold: `(validation rows,
/// per-row losses for each lambda)`.
fn fold_losses<T: Scalar>(
    d: &Dataset<T>,
    grid: &LambdaGrid<T>,
    folds: &FoldAssignment,
    v: usize,
    excluded: &[usize],
) -> Result<(Vec<usize>, Vec<Vec<T>>)> {
    let train = d.subset(&folds.training(v));
    let val_rows = folds.validation(v);
    let val = d.subset(&val_rows);
    let (std_train, st, constant) = standardize_lenient(&train);
    let mut excl: Vec<usize> = excluded.iter().chain(&constant).copied().collect();
    excl.sort_unstable();
    excl.dedup();
    let mut per_lambda = Vec::with_capacity(grid.len());
    let mut warm: Option<LassoFit<T>> = None;
    for (k, &lambda) in grid.values().iter().enumerate() {
        let fit = fit_lasso(&std_train, lambda, &excl, warm.as_ref()).map_err(|e| NextDoorError::Fold {
            fold: v,
            lambda_index: k,
            source: Box::new(e),
        })?;
        let (beta, b0) = st.destandardize(&fit.beta, fit.intercept);
        let eta = linear_predictor(val.x(), &beta, b0);
        per_lambda.push(val.y().iter().zip(&eta).map(|(&y, &e)| pointwise_loss(d.family(), y, e)).collect());
        warm = Some(fit);
    }
    Ok((val_rows, per_lambda))
}

/// `n x m` matrix of held-out losses: entry `(i, k)` is the loss of sample
/// `i` under the model trained without its fold at `lambda_k`, with the
/// predictors in `excluded` held at zero.
pub fn cv_losses<T: Scalar>(
    d: &Dataset<T>,
    grid: &LambdaGrid<T>,
    folds: &FoldAssignment,
    excluded: &[usize],
) -> Result<Matrix<T>> {
    if folds.n() != d.n() {
        return Err(NextDoorError::invalid("fold assignment does not match data"));
    }
    let per_fold: Vec<_> = (0..folds.n_folds())
        .into_par_iter()
        .map(|v| fold_losses(d, grid, folds, v, excluded))
        .collect::<Result<_>>()?;
    let mut out = Matrix::zeros(d.n(), grid.len());
    for (rows, per_lambda) in per_fold {
        for (k, losses) in per_lambda.iter().enumerate() {
            for (&i, &l) in rows.iter().zip(losses) {
                out.set(i, k, l);
            }
        }
    }
    Ok(out)
}

/// The `n x 2m` loss matrix: base models in columns `0..m`, models with the
/// predictors in `excluded` held at zero in columns `m..2m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvLossMatrix<T> {
    losses: Matrix<T>,
    grid: LambdaGrid<T>,
    excluded: Vec<usize>,
    folds: FoldAssignment,
    family: Family,
}

impl<T: Scalar> CvLossMatrix<T> {
    pub fn from_parts(
        base: Matrix<T>,
        exclusion: Matrix<T>,
        grid: LambdaGrid<T>,
        excluded: Vec<usize>,
        folds: FoldAssignment,
        family: Family,
    ) -> Result<Self> {
        let m = grid.len();
        if base.ncols() != m || exclusion.ncols() != m || base.nrows() != exclusion.nrows() {
            return Err(NextDoorError::invalid("loss blocks do not match the grid"));
        }
        if base.nrows() != folds.n() {
            return Err(NextDoorError::invalid("loss rows do not match fold assignment"));
        }
        let mut data = base.as_col_major().to_vec();
        data.extend_from_slice(exclusion.as_col_major());
        if data.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(NextDoorError::data("losses must be finite and non-negative"));
        }
        let losses = Matrix::from_col_major(base.nrows(), 2 * m, data)?;
        Ok(CvLossMatrix { losses, grid, excluded, folds, family })
    }

    /// Wraps a raw `n x 2m` matrix with generated metadata; used for
    /// synthetic loss matrices in calibration experiments.
    pub fn synthetic(losses: Matrix<T>, folds: FoldAssignment) -> Result<Self> {
        let m2 = losses.ncols();
        if m2 == 0 || !m2.is_multiple_of(2) {
            return Err(NextDoorError::invalid("loss matrix must have 2m columns"));
        }
        let m = m2 / 2;
        let grid = LambdaGrid::new((0..m).map(|k| T::from_usize_lossy(m - k)).collect())?;
        let base = losses.select_cols(&(0..m).collect::<Vec<_>>());
        let excl = losses.select_cols(&(m..m2).collect::<Vec<_>>());
        CvLossMatrix::from_parts(base, excl, grid, vec![], folds, Family::Gaussian)
    }

    #[inline]
    pub fn losses(&self) -> &Matrix<T> {
        &self.losses
    }
    #[inline]
    pub fn grid(&self) -> &LambdaGrid<T> {
        &self.grid
    }
    #[inline]
    pub fn excluded(&self) -> &[usize] {
        &self.excluded
    }
    #[inline]
    pub fn folds(&self) -> &FoldAssignment {
        &self.folds
    }
    #[inline]
    pub fn family(&self) -> Family {
        self.family
    }
    #[inline]
    pub fn n(&self) -> usize {
        self.losses.nrows()
    }
    #[inline]
    pub fn m(&self) -> usize {
        self.grid.len()
    }

    /// CV errors `(Q_1..Q_m, Q^j_1..Q^j_m)`.
    pub fn cv_errors(&self) -> Vec<T> {
        self.losses.column_means()
    }

    /// Standard errors of the base columns' means.
    pub fn base_standard_errors(&self) -> Vec<T> {
        standard_errors(&self.losses, self.m())
    }
}

/// `sd_k / sqrt(n)` for the first `m` columns (1/n variance).
pub fn standard_errors<T: Scalar>(losses: &Matrix<T>, m: usize) -> Vec<T> {
    let n = T::from_usize_lossy(losses.nrows());
    (0..m)
        .map(|k| {
            let c = losses.col(k);
            let mu = crate::scalar::mean(c);
            let var = c.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>() / n;
            (var / n).sqrt()
        })
        .collect()
}

/// Sample covariance of the loss columns (1/n normalization).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate<T> {
    pub sigma_hat: Matrix<T>,
    /// Smallest diagonal entry of `sigma_hat`.
    pub sigma0_sq: T,
}

impl<T: Scalar> CovarianceEstimate<T> {
    pub fn from_matrix(sigma_hat: Matrix<T>) -> Result<Self> {
        if sigma_hat.nrows() != sigma_hat.ncols() || sigma_hat.nrows() == 0 {
            return Err(NextDoorError::invalid("covariance must be square and non-empty"));
        }
        let sigma0_sq = (0..sigma_hat.nrows()).map(|k| sigma_hat.get(k, k)).fold(T::infinity(), T::min);
        Ok(CovarianceEstimate { sigma_hat, sigma0_sq: sigma0_sq.max(T::zero()) })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.sigma_hat.nrows()
    }
}

pub fn covariance_of_columns<T: Scalar>(losses: &Matrix<T>) -> CovarianceEstimate<T> {
    let n = losses.nrows();
    let q = losses.ncols();
    let nt = T::from_usize_lossy(n);
    let centered: Vec<Vec<T>> = (0..q)
        .map(|k| {
            let c = losses.col(k);
            let mu = crate::scalar::mean(c);
            c.iter().map(|&v| v - mu).collect()
        })
        .collect();
    let mut s = Matrix::zeros(q, q);
    for a in 0..q {
        for b in 0..=a {
            let v = crate::scalar::dot(&centered[a], &centered[b]) / nt;
            s.set(a, b, v);
            s.set(b, a, v);
        }
    }
    CovarianceEstimate::from_matrix(s).expect("non-empty square matrix")
}

pub fn sample_covariance<T: Scalar>(m: &CvLossMatrix<T>) -> CovarianceEstimate<T> {
    covariance_of_columns(m.losses())
}

/// Smallest index (largest penalty) whose value is within one standard
/// error of the minimum, the standard error being that of the minimizer.
pub fn one_se_select<T: Scalar>(values: &[T], se: &[T]) -> usize {
    let best = argmin(values);
    let bound = values[best] + se[best];
    values.iter().position(|&v| v <= bound).unwrap_or(best)
}

/// First index attaining the minimum.
pub fn argmin<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = k;
        }
    }
    best
}

/// One-standard-error rule on the base columns of the loss matrix.
pub fn one_se_index<T: Scalar>(m: &CvLossMatrix<T>) -> usize {
    let q = m.cv_errors();
    one_se_select(&q[..m.m()], &m.base_standard_errors())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_balance() {
        let f = make_folds(10, 5, 1).unwrap();
        assert_eq!(f.sizes(), vec![2; 5]);
        let f = make_folds(67, 10, 3).unwrap();
        let mut s = f.sizes();
        s.sort_unstable();
        assert_eq!(s, vec![6, 6, 6, 7, 7, 7, 7, 7, 7, 7]);
        assert_eq!(make_folds(67, 10, 3).unwrap(), f);
        assert_ne!(make_folds(67, 10, 4).unwrap(), f);
        assert!(make_folds(3, 4, 0).is_err());
        assert!(make_folds(3, 1, 0).is_err());
    }

    #[test]
    fn covariance_hand_example() {
        let l: Matrix<f64> = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 2.0], vec![3.0, 2.0]]).unwrap();
        let c = covariance_of_columns(&l);
        assert!((c.sigma_hat.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.sigma_hat.get(0, 1), 0.0);
        assert_eq!(c.sigma_hat.get(1, 1), 0.0);
        assert_eq!(c.sigma0_sq, 0.0);
    }

    #[test]
    fn covariance_duplicates_and_constants() {
        let l = Matrix::from_rows(&[vec![1.0, 1.0, 5.0], vec![4.0, 4.0, 5.0], vec![0.5, 0.5, 5.0]]).unwrap();
        let c = covariance_of_columns(&l);
        let s = &c.sigma_hat;
        assert_eq!(s.get(0, 0), s.get(0, 1));
        assert_eq!(s.get(1, 1), s.get(0, 1));
        assert!((0..3).all(|k| s.get(2, k) == 0.0));
    }

    #[test]
    fn one_se_rules() {
        assert_eq!(one_se_select(&[3.0], &[1.0]), 0);
        assert_eq!(one_se_select(&[1.0, 1.0, 1.0], &[0.1, 0.1, 0.1]), 0);
        // convex curve with tight standard errors: only the argmin qualifies
        let curve = [5.0, 3.0, 2.0, 1.0, 2.0, 4.0];
        assert_eq!(one_se_select(&curve, &[0.01; 6]), 3);
        // a wider error bar admits the larger penalty at index 2
        assert_eq!(one_se_select(&curve, &[1.0; 6]), 2);
    }
}
