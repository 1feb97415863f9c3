//! Coordinate-descent lasso with an unpenalized intercept and optional
//! coefficients pinned at zero.
//!
//! Gaussian: minimizes `(1/2n) sum (y - b0 - x'b)^2 + lambda |b|_1`.
//! Binomial: minimizes the mean negative log-likelihood plus the same
//! penalty, via an outer quadratic approximation and inner coordinate descent.

use serde::{Deserialize, Serialize};

use crate::data::{standardize, Dataset, Family};
use crate::error::{NextDoorError, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::scalar::{dot, soft_threshold, Scalar};

/// Penalty values in strictly decreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LambdaGrid<T> {
    values: Vec<T>,
}

impl<T: Scalar> LambdaGrid<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(NextDoorError::invalid("lambda grid must be non-empty"));
        }
        if values.iter().any(|&v| !(v >= T::zero()) || !v.is_finite()) {
            return Err(NextDoorError::invalid("lambda values must be finite and non-negative"));
        }
        if values.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(NextDoorError::invalid("lambda grid must be strictly decreasing"));
        }
        Ok(LambdaGrid { values })
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    #[inline]
    pub fn get(&self, k: usize) -> T {
        self.values[k]
    }
}

/// Smallest penalty at which every coefficient is zero, computed on
/// standardized data.
pub fn lambda_max<T: Scalar>(std_data: &Dataset<T>) -> T {
    let n = T::from_usize_lossy(std_data.n());
    let ybar = crate::scalar::mean(std_data.y());
    let centered: Vec<T> = std_data.y().iter().map(|&v| v - ybar).collect();
    (0..std_data.p()).map(|j| dot(std_data.x().col(j), &centered).abs() / n).fold(T::zero(), T::max)
}

/// `m` log-spaced penalties from `lambda_max` down to `ratio * lambda_max`.
pub fn lambda_grid<T: Scalar>(d: &Dataset<T>, m: usize, ratio: T) -> Result<LambdaGrid<T>> {
    if m == 0 {
        return Err(NextDoorError::invalid("grid size must be at least 1"));
    }
    if !(ratio > T::zero() && ratio < T::one()) {
        return Err(NextDoorError::invalid("lambda ratio must lie in (0, 1)"));
    }
    let (sd, _) = standardize(d)?;
    let top = lambda_max(&sd);
    if !(top > T::zero()) {
        return Err(NextDoorError::data("degenerate data: lambda_max is zero"));
    }
    if m == 1 {
        return LambdaGrid::new(vec![top]);
    }
    let step = ratio.ln() / T::from_usize_lossy(m - 1);
    let values =
        (0..m).map(|k| if k == m - 1 { top * ratio } else { top * (step * T::from_usize_lossy(k)).exp() }).collect();
    LambdaGrid::new(values)
}

/// Result of one penalized fit, on the standardized scale of its input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit<T> {
    pub beta: Vec<T>,
    pub intercept: T,
    pub lambda: T,
    pub active_set: Vec<usize>,
    pub excluded: Vec<usize>,
    pub n_iter: usize,
    pub max_kkt_violation: T,
}

impl<T: Scalar> LassoFit<T> {
    pub fn is_active(&self, j: usize) -> bool {
        self.beta[j] != T::zero()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions<T> {
    /// Stop when the largest coefficient change in a full sweep is below this.
    pub tol: T,
    pub max_sweeps: usize,
    /// Binomial outer loop: relative deviance change threshold.
    pub deviance_tol: T,
    pub max_outer: usize,
    /// Fitted probabilities are clipped to `[clip, 1 - clip]` in the
    /// quadratic approximation.
    pub prob_clip: T,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        SolverOptions {
            tol: T::solver_tolerance(),
            max_sweeps: 100_000,
            deviance_tol: T::lit(1e-8).max(T::epsilon() * T::lit(100.0)),
            max_outer: 100,
            prob_clip: T::lit(1e-5),
        }
    }
}

/// Penalized objective at `(beta, intercept)`.
pub fn objective<T: Scalar>(d: &Dataset<T>, beta: &[T], intercept: T, lambda: T) -> T {
    let eta = crate::data::linear_predictor(d.x(), beta, intercept);
    let n = T::from_usize_lossy(d.n());
    let penalty = lambda * beta.iter().map(|b| b.abs()).sum::<T>();
    let loss = match d.family() {
        Family::Gaussian => eta.iter().zip(d.y()).map(|(&e, &y)| (y - e) * (y - e)).sum::<T>() / (T::lit(2.0) * n),
        Family::Binomial => eta.iter().zip(d.y()).map(|(&e, &y)| log1p_exp(e) - y * e).sum::<T>() / n,
    };
    loss + penalty
}

#[inline]
pub(crate) fn log1p_exp<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Largest violation of the optimality conditions, recomputed from scratch:
/// `|g_j| - lambda` for zero coefficients, `|g_j + lambda sign(b_j)|` for
/// non-zero ones, and `|g_0|` for the intercept, where `g` is the gradient of
/// the smooth loss. Excluded coordinates are ignored.
pub fn kkt_violation<T: Scalar>(d: &Dataset<T>, fit: &LassoFit<T>) -> T {
    let eta = crate::data::linear_predictor(d.x(), &fit.beta, fit.intercept);
    let n = T::from_usize_lossy(d.n());
    let resid: Vec<T> = match d.family() {
        Family::Gaussian => d.y().iter().zip(&eta).map(|(&y, &e)| y - e).collect(),
        Family::Binomial => d.y().iter().zip(&eta).map(|(&y, &e)| y - sigmoid(e)).collect(),
    };
    let mut worst = (resid.iter().copied().sum::<T>() / n).abs();
    for j in 0..d.p() {
        if fit.excluded.contains(&j) {
            continue;
        }
        let g = -dot(d.x().col(j), &resid) / n;
        let b = fit.beta[j];
        let v =
            if b == T::zero() { (g.abs() - fit.lambda).max(T::zero()) } else { (g + fit.lambda * b.signum()).abs() };
        worst = worst.max(v);
    }
    worst
}

type SweepHook<'a, T> = Option<&'a mut dyn FnMut(&[T], T)>;

struct Problem<'a, T> {
    x: &'a Matrix<T>,
    free: Vec<bool>,
    lambda: T,
}

/// Weighted coordinate descent on `(1/2n) sum w (z - b0 - x'b)^2 + lambda|b|`,
/// starting from `(beta, b0)`. `resid` must hold `z - b0 - x'b` on entry.
/// Returns the number of sweeps.
#[allow(clippy::too_many_arguments)]
fn coordinate_descent<T: Scalar>(
    prob: &Problem<'_, T>,
    weights: Option<&[T]>,
    beta: &mut [T],
    b0: &mut T,
    resid: &mut [T],
    opts: &SolverOptions<T>,
    sweeps_used: &mut usize,
    mut on_sweep: SweepHook<'_, T>,
) -> Result<()> {
    let n = T::from_usize_lossy(resid.len());
    let x = prob.x;
    let p = x.ncols();
    let curv: Vec<T> = (0..p)
        .map(|j| match weights {
            None => dot(x.col(j), x.col(j)) / n,
            Some(w) => x.col(j).iter().zip(w).map(|(&v, &wi)| wi * v * v).sum::<T>() / n,
        })
        .collect();
    let wsum = weights.map_or(n, |w| w.iter().copied().sum());

    let sweep = |coords: &mut dyn Iterator<Item = usize>, beta: &mut [T], b0: &mut T, resid: &mut [T]| -> T {
        let mut change = T::zero();
        for j in coords {
            if !prob.free[j] || curv[j] <= T::zero() {
                continue;
            }
            let col = x.col(j);
            let old = beta[j];
            let grad = match weights {
                None => dot(col, resid) / n,
                Some(w) => col.iter().zip(w).zip(resid.iter()).map(|((&v, &wi), &r)| wi * v * r).sum::<T>() / n,
            };
            let new = soft_threshold(grad + curv[j] * old, prob.lambda) / curv[j];
            let delta = new - old;
            if delta != T::zero() {
                beta[j] = new;
                resid.iter_mut().zip(col).for_each(|(r, &v)| *r -= delta * v);
                change = change.max(delta.abs());
            }
        }
        let shift = match weights {
            None => resid.iter().copied().sum::<T>() / n,
            Some(w) => w.iter().zip(resid.iter()).map(|(&wi, &r)| wi * r).sum::<T>() / wsum,
        };
        if shift != T::zero() {
            *b0 += shift;
            resid.iter_mut().for_each(|r| *r -= shift);
            change = change.max(shift.abs());
        }
        change
    };

    loop {
        // full sweep over every free coordinate
        let last = sweep(&mut (0..p), beta, b0, resid);
        *sweeps_used += 1;
        if let Some(cb) = on_sweep.as_mut() {
            cb(beta, *b0);
        }
        if last < opts.tol {
            return Ok(());
        }
        // then iterate on the current support until it settles
        let mut since_step = 0;
        loop {
            if *sweeps_used >= opts.max_sweeps {
                break;
            }
            let support: Vec<usize> = (0..p).filter(|&j| beta[j] != T::zero()).collect();
            let c = sweep(&mut support.iter().copied(), beta, b0, resid);
            *sweeps_used += 1;
            if let Some(cb) = on_sweep.as_mut() {
                cb(beta, *b0);
            }
            if c < opts.tol {
                break;
            }
            since_step += 1;
            // slow progress means strongly correlated columns: jump along the
            // sign-constrained direction instead of crawling
            if since_step >= ORTHANT_STEP_EVERY {
                since_step = 0;
                orthant_step(prob, weights, &support, beta, b0, resid);
            }
        }
        if *sweeps_used >= opts.max_sweeps {
            let mut last_iterate: Vec<f64> = beta.iter().map(|b| b.as_f64()).collect();
            last_iterate.push(b0.as_f64());
            return Err(NextDoorError::NonConvergence {
                iterations: *sweeps_used,
                lambda: prob.lambda.as_f64(),
                last_change: last.as_f64(),
                last_iterate,
            });
        }
    }
}

const ORTHANT_STEP_EVERY: usize = 10;

/// Moves `(beta, b0)` toward the minimizer of the smooth objective restricted
/// to `support` with the current signs, stopping where the first coefficient
/// reaches zero. The lasso objective agrees with that quadratic on the whole
/// segment, so it cannot increase. Leaves everything untouched when the
/// restricted Gram matrix is singular.
fn orthant_step<T: Scalar>(
    prob: &Problem<'_, T>,
    weights: Option<&[T]>,
    support: &[usize],
    beta: &mut [T],
    b0: &mut T,
    resid: &mut [T],
) {
    let k = support.len();
    if k == 0 {
        return;
    }
    let x = prob.x;
    let n = resid.len();
    let nt = T::from_usize_lossy(n);
    let w = |i: usize| weights.map_or(T::one(), |w| w[i]);
    let wsum: T = (0..n).map(w).sum();
    // working response z = resid + b0 + X beta
    let mut z: Vec<T> = resid.iter().map(|&r| r + *b0).collect();
    for &j in support {
        z.iter_mut().zip(x.col(j)).for_each(|(zi, &v)| *zi += beta[j] * v);
    }
    let zbar = (0..n).map(|i| w(i) * z[i]).sum::<T>() / wsum;
    let xbar: Vec<T> = support.iter().map(|&j| (0..n).map(|i| w(i) * x.get(i, j)).sum::<T>() / wsum).collect();
    let mut gram = Matrix::zeros(k, k);
    let mut rhs = vec![T::zero(); k];
    for a in 0..k {
        let ca = x.col(support[a]);
        for b in 0..=a {
            let cb = x.col(support[b]);
            let v = (0..n).map(|i| w(i) * (ca[i] - xbar[a]) * (cb[i] - xbar[b])).sum::<T>() / nt;
            gram.set(a, b, v);
            gram.set(b, a, v);
        }
        let sign = beta[support[a]].signum();
        rhs[a] = (0..n).map(|i| w(i) * (ca[i] - xbar[a]) * (z[i] - zbar)).sum::<T>() / nt - prob.lambda * sign;
    }
    let Ok(chol) = Cholesky::factor(&gram) else {
        return;
    };
    let target = chol.solve(&rhs);
    // largest step in [0, 1] keeping every sign
    let mut t = T::one();
    let mut hits = Vec::new();
    for (a, &j) in support.iter().enumerate() {
        let (old, new) = (beta[j], target[a]);
        if new.signum() != old.signum() || new == T::zero() {
            let ta = old / (old - new);
            if ta < t {
                t = ta;
                hits.clear();
            }
            if ta == t {
                hits.push(j);
            }
        }
    }
    let moved: Vec<T> = support
        .iter()
        .enumerate()
        .map(|(a, &j)| if hits.contains(&j) { T::zero() } else { beta[j] + t * (target[a] - beta[j]) })
        .collect();
    let new_b0 = zbar - moved.iter().zip(&xbar).map(|(&b, &m)| b * m).sum::<T>();
    let new_resid: Vec<T> =
        (0..n).map(|i| z[i] - new_b0 - support.iter().zip(&moved).map(|(&j, &b)| b * x.get(i, j)).sum::<T>()).collect();
    // guard against round-off on an ill-conditioned Gram matrix
    let value = |r: &[T], coefs: &mut dyn Iterator<Item = T>| {
        (0..n).map(|i| w(i) * r[i] * r[i]).sum::<T>() / (T::lit(2.0) * nt)
            + prob.lambda * coefs.map(|b| b.abs()).sum::<T>()
    };
    let before = value(resid, &mut support.iter().map(|&j| beta[j]));
    let after = value(&new_resid, &mut moved.iter().copied());
    if !(after <= before) {
        return;
    }
    for (&j, &b) in support.iter().zip(&moved) {
        beta[j] = b;
    }
    *b0 = new_b0;
    resid.copy_from_slice(&new_resid);
}

fn check_inputs<T: Scalar>(d: &Dataset<T>, lambda: T, excluded: &[usize]) -> Result<Vec<bool>> {
    if !(lambda >= T::zero()) || !lambda.is_finite() {
        return Err(NextDoorError::invalid("lambda must be finite and non-negative"));
    }
    let mut free = vec![true; d.p()];
    for &j in excluded {
        if j >= d.p() {
            return Err(NextDoorError::invalid(format!("excluded index {j} out of range (p = {})", d.p())));
        }
        free[j] = false;
    }
    Ok(free)
}

fn finish<T: Scalar>(
    d: &Dataset<T>,
    beta: Vec<T>,
    intercept: T,
    lambda: T,
    excluded: &[usize],
    n_iter: usize,
) -> LassoFit<T> {
    let mut excluded = excluded.to_vec();
    excluded.sort_unstable();
    excluded.dedup();
    let active_set = (0..beta.len()).filter(|&j| beta[j] != T::zero()).collect();
    let mut fit = LassoFit { beta, intercept, lambda, active_set, excluded, n_iter, max_kkt_violation: T::zero() };
    fit.max_kkt_violation = kkt_violation(d, &fit);
    fit
}

/// Fits the lasso at one penalty with the coefficients in `excluded` fixed at
/// zero. The data are expected on the standardized scale (see
/// [`crate::data::standardize`]); the penalty applies to those coefficients.
pub fn fit_lasso<T: Scalar>(
    d: &Dataset<T>,
    lambda: T,
    excluded: &[usize],
    warm: Option<&LassoFit<T>>,
) -> Result<LassoFit<T>> {
    fit_lasso_with(d, lambda, excluded, warm, &SolverOptions::default())
}

pub fn fit_lasso_with<T: Scalar>(
    d: &Dataset<T>,
    lambda: T,
    excluded: &[usize],
    warm: Option<&LassoFit<T>>,
    opts: &SolverOptions<T>,
) -> Result<LassoFit<T>> {
    fit_traced(d, lambda, excluded, warm, opts, None)
}

/// Same as [`fit_lasso_with`] but reports `(beta, intercept)` after every
/// coordinate sweep (gaussian family only).
pub fn fit_lasso_traced<T: Scalar>(
    d: &Dataset<T>,
    lambda: T,
    excluded: &[usize],
    on_sweep: &mut dyn FnMut(&[T], T),
) -> Result<LassoFit<T>> {
    fit_traced(d, lambda, excluded, None, &SolverOptions::default(), Some(on_sweep))
}

fn fit_traced<T: Scalar>(
    d: &Dataset<T>,
    lambda: T,
    excluded: &[usize],
    warm: Option<&LassoFit<T>>,
    opts: &SolverOptions<T>,
    on_sweep: SweepHook<'_, T>,
) -> Result<LassoFit<T>> {
    let free = check_inputs(d, lambda, excluded)?;
    let p = d.p();
    let (mut beta, mut b0) = match warm {
        Some(w) if w.beta.len() == p => (w.beta.clone(), w.intercept),
        _ => (vec![T::zero(); p], initial_intercept(d)),
    };
    for j in 0..p {
        if !free[j] {
            beta[j] = T::zero();
        }
    }
    let prob = Problem { x: d.x(), free, lambda };
    match d.family() {
        Family::Gaussian => {
            let eta = crate::data::linear_predictor(d.x(), &beta, b0);
            let mut resid: Vec<T> = d.y().iter().zip(&eta).map(|(&y, &e)| y - e).collect();
            let mut sweeps = 0;
            coordinate_descent(&prob, None, &mut beta, &mut b0, &mut resid, opts, &mut sweeps, on_sweep)?;
            Ok(finish(d, beta, b0, lambda, excluded, sweeps))
        }
        Family::Binomial => {
            let (beta, b0, iters) = fit_binomial(d, &prob, beta, b0, opts)?;
            Ok(finish(d, beta, b0, lambda, excluded, iters))
        }
    }
}

fn initial_intercept<T: Scalar>(d: &Dataset<T>) -> T {
    let ybar = crate::scalar::mean(d.y());
    match d.family() {
        Family::Gaussian => ybar,
        Family::Binomial => {
            let eps = T::lit(1e-5);
            let p = ybar.max(eps).min(T::one() - eps);
            (p / (T::one() - p)).ln()
        }
    }
}

fn fit_binomial<T: Scalar>(
    d: &Dataset<T>,
    prob: &Problem<'_, T>,
    mut beta: Vec<T>,
    mut b0: T,
    opts: &SolverOptions<T>,
) -> Result<(Vec<T>, T, usize)> {
    let n = d.n();
    let y = d.y();
    let clip = opts.prob_clip;
    let mut obj = objective(d, &beta, b0, prob.lambda);
    let mut sweeps = 0usize;
    let mut last_change = T::infinity();
    for _outer in 0..opts.max_outer {
        let eta = crate::data::linear_predictor(d.x(), &beta, b0);
        let mut w = Vec::with_capacity(n);
        let mut resid = Vec::with_capacity(n);
        for i in 0..n {
            let mu = sigmoid(eta[i]).max(clip).min(T::one() - clip);
            let wi = mu * (T::one() - mu);
            w.push(wi);
            // working response minus current linear predictor
            resid.push((y[i] - mu) / wi);
        }
        let (mut nb, mut nb0) = (beta.clone(), b0);
        coordinate_descent(prob, Some(&w), &mut nb, &mut nb0, &mut resid, opts, &mut sweeps, None)?;
        let mut new_obj = objective(d, &nb, nb0, prob.lambda);
        let mut halvings = 0;
        while new_obj > obj + T::lit(1e-12) * obj.abs().max(T::one()) && halvings < 30 {
            for (b, &old) in nb.iter_mut().zip(&beta) {
                *b = (*b + old) / T::lit(2.0);
            }
            nb0 = (nb0 + b0) / T::lit(2.0);
            new_obj = objective(d, &nb, nb0, prob.lambda);
            halvings += 1;
        }
        // objective is mean deviance / 2 plus the penalty
        last_change = (new_obj - obj).abs() / (new_obj.abs() + T::lit(0.05));
        beta = nb;
        b0 = nb0;
        obj = new_obj;
        if last_change < opts.deviance_tol {
            if prob.lambda == T::zero() {
                let eta = crate::data::linear_predictor(d.x(), &beta, b0);
                let bound = ((T::one() - clip) / clip).ln();
                if eta.iter().any(|e| e.abs() > bound) {
                    break;
                }
            }
            return Ok((beta, b0, sweeps));
        }
    }
    let mut last_iterate: Vec<f64> = beta.iter().map(|b| b.as_f64()).collect();
    last_iterate.push(b0.as_f64());
    Err(NextDoorError::NonConvergence {
        iterations: opts.max_outer,
        lambda: prob.lambda.as_f64(),
        last_change: last_change.as_f64(),
        last_iterate,
    })
}

/// Fits every penalty of `grid` in order, warm-starting each from the last.
pub fn fit_path<T: Scalar>(d: &Dataset<T>, grid: &LambdaGrid<T>, excluded: &[usize]) -> Result<Vec<LassoFit<T>>> {
    let mut fits: Vec<LassoFit<T>> = Vec::with_capacity(grid.len());
    for &lambda in grid.values() {
        let fit = fit_lasso(d, lambda, excluded, fits.last())?;
        fits.push(fit);
    }
    Ok(fits)
}
