//! End-to-end analysis: base model, one proximal model per selected
//! predictor (and per user exclusion set), and their inference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_test, model_score, selection_frequencies, BootstrapParams, FoldSpec, ModelScore};
use crate::cv::{
    covariance_of_columns, cv_losses, folds_for, pointwise_loss, standard_errors, CvLossMatrix, FoldAssignment,
};
use crate::data::{linear_predictor, standardize, Dataset, Family, Standardization};
use crate::debias::{debias_base, Criterion, RandomizationParams};
use crate::error::{NextDoorError, Result};
use crate::lasso::{fit_lasso, lambda_grid, LambdaGrid, LassoFit};
use crate::linalg::Matrix;
use crate::post_selection::post_selection_test;
use crate::rng::{derive, domain};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig<T> {
    /// Number of CV folds; ignored when the data carries its own folds.
    pub folds: usize,
    pub nlambda: usize,
    pub lambda_ratio: T,
    pub criterion: Criterion,
    /// `seed` is ignored; streams derive from the master `seed` below.
    pub randomization: RandomizationParams<T>,
    /// `seed` is ignored; streams derive from the master `seed` below.
    pub bootstrap: BootstrapParams<T>,
    pub n_boot_freq: usize,
    pub frequency_cutoff: T,
    /// Randomization variance of the post-selection test; defaults to
    /// `gamma1 * sigma0^2` of each loss matrix.
    pub tau_sq: Option<T>,
    pub seed: u64,
    /// Extra proximal models, each excluding a whole set of predictors.
    pub exclusion_sets: Vec<Vec<usize>>,
    /// Restricts inference to these predictors when they are selected.
    pub targets: Option<Vec<usize>>,
}

impl<T: Scalar> Default for AnalysisConfig<T> {
    fn default() -> Self {
        AnalysisConfig {
            folds: 10,
            nlambda: 100,
            lambda_ratio: T::lit(0.01),
            criterion: Criterion::RandomizedMin,
            randomization: RandomizationParams::default(),
            bootstrap: BootstrapParams::default(),
            n_boot_freq: 50,
            frequency_cutoff: T::lit(0.05),
            tau_sq: None,
            seed: 0,
            exclusion_sets: Vec::new(),
            targets: None,
        }
    }
}

impl<T: Scalar> AnalysisConfig<T> {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.folds < 2 {
            return Err(NextDoorError::invalid("at least two folds are required"));
        }
        if self.nlambda == 0 || self.n_boot_freq == 0 {
            return Err(NextDoorError::invalid("counts must be positive"));
        }
        if !(self.lambda_ratio > T::zero() && self.lambda_ratio < T::one()) {
            return Err(NextDoorError::invalid("lambda ratio must lie in (0, 1)"));
        }
        if !(self.frequency_cutoff >= T::zero() && self.frequency_cutoff < T::one()) {
            return Err(NextDoorError::invalid("frequency cutoff must lie in [0, 1)"));
        }
        if let Some(t) = self.tau_sq {
            if !(t > T::zero()) {
                return Err(NextDoorError::invalid("tau^2 must be positive"));
            }
        }
        for set in &self.exclusion_sets {
            if set.is_empty() || set.iter().any(|&j| j >= p) {
                return Err(NextDoorError::invalid("exclusion sets must be non-empty and index existing predictors"));
            }
        }
        self.randomization.validate()?;
        self.bootstrap.validate()
    }
}

/// One column of the report: a model and its inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelColumn<T> {
    /// `base`, or the excluded predictor names joined with `+`.
    pub label: String,
    pub excluded: Vec<usize>,
    /// Raw-scale coefficients, one per predictor.
    pub coefficients: Vec<T>,
    pub intercept: T,
    /// Fit on the standardized scale.
    pub fit: LassoFit<T>,
    pub cv_error: T,
    pub debiased_error: T,
    pub selection_frequency: Option<T>,
    pub model_pvalue: Option<T>,
    pub model_score: Option<ModelScore<T>>,
    pub post_selection_pvalue: Option<T>,
    /// Held-out error when a test set was supplied.
    pub test_error: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextDoorReport<T> {
    pub predictors: Vec<String>,
    pub family: Family,
    pub grid: LambdaGrid<T>,
    pub chosen_lambda_index: usize,
    pub lambda: T,
    /// Randomized selection counts over the grid for the base model.
    pub selection_counts: Vec<usize>,
    /// Entropy (nats) of the selection counts.
    pub selection_entropy: f64,
    pub base: ModelColumn<T>,
    pub proximal: Vec<ModelColumn<T>>,
    pub notice: Option<String>,
}

impl<T: Scalar> NextDoorReport<T> {
    /// Indices of predictors active in the base model.
    pub fn active_set(&self) -> &[usize] {
        &self.base.fit.active_set
    }

    /// Proximal model for a single excluded predictor.
    pub fn proximal_for(&self, j: usize) -> Option<&ModelColumn<T>> {
        self.proximal.iter().find(|c| c.excluded == [j])
    }

    /// Base then proximal columns by ascending de-biased error.
    pub fn ordered_columns(&self) -> Vec<&ModelColumn<T>> {
        let mut prox: Vec<&ModelColumn<T>> = self.proximal.iter().collect();
        prox.sort_by(|a, b| a.debiased_error.partial_cmp(&b.debiased_error).unwrap_or(std::cmp::Ordering::Equal));
        std::iter::once(&self.base).chain(prox).collect()
    }
}

/// The report plus the per-column loss matrices it was computed from.
#[derive(Debug, Clone)]
pub struct AnalysisOutput<T> {
    pub report: NextDoorReport<T>,
    /// Aligned with `report.proximal`.
    pub loss_matrices: Vec<CvLossMatrix<T>>,
}

pub fn run_next_door<T: Scalar>(d: &Dataset<T>, cfg: &AnalysisConfig<T>) -> Result<NextDoorReport<T>> {
    Ok(run_next_door_detailed(d, cfg, None)?.report)
}

/// Full analysis; `test` adds held-out errors to every column.
pub fn run_next_door_detailed<T: Scalar>(
    d: &Dataset<T>,
    cfg: &AnalysisConfig<T>,
    test: Option<&Dataset<T>>,
) -> Result<AnalysisOutput<T>> {
    cfg.validate(d.p())?;
    if let Some(t) = test {
        if t.p() != d.p() || t.names() != d.names() {
            return Err(NextDoorError::data("test data columns do not match training data"));
        }
    }
    let seed = cfg.seed;
    let grid = lambda_grid(d, cfg.nlambda, cfg.lambda_ratio)?;
    let m = grid.len();
    let folds = folds_for(d, cfg.folds, derive(seed, domain::FOLDS, 0))?;
    let (std_data, st) = standardize(d)?;

    let base_losses = cv_losses(d, &grid, &folds, &[])?;
    let base_cov = covariance_of_columns(&base_losses);
    let base_se = standard_errors(&base_losses, m);
    let base_q = base_losses.column_means();
    let select_params = cfg.randomization.with_seed(derive(seed, domain::SELECT, 0));
    let (base_debiased, k_star, counts) =
        debias_base(&base_q, &base_cov, d.n(), &select_params, cfg.criterion, &base_se)?;
    let lambda = grid.get(k_star);
    let base_fit = fit_lasso(&std_data, lambda, &[], None)?;

    let mut targets: Vec<Vec<usize>> = base_fit
        .active_set
        .iter()
        .filter(|j| cfg.targets.as_ref().is_none_or(|t| t.contains(j)))
        .map(|&j| vec![j])
        .collect();
    targets.extend(cfg.exclusion_sets.iter().map(|s| {
        let mut s = s.clone();
        s.sort_unstable();
        s.dedup();
        s
    }));

    let frequencies = if targets.is_empty() {
        Vec::new()
    } else {
        selection_frequencies(
            d,
            &grid,
            FoldSpec { v: cfg.folds },
            &targets,
            &cfg.randomization,
            cfg.criterion,
            cfg.n_boot_freq,
            derive(seed, domain::FREQUENCY, 0),
        )?
        .frequencies
    };

    let ctx = Context {
        d,
        std_data: &std_data,
        st: &st,
        grid: &grid,
        folds: &folds,
        base_losses: &base_losses,
        k_star,
        cfg,
        test,
    };
    let columns: Vec<(ModelColumn<T>, CvLossMatrix<T>)> = targets
        .par_iter()
        .zip(frequencies.par_iter())
        .map(|(set, &freq)| {
            analyze_exclusion(&ctx, set, freq)
                .map_err(|e| NextDoorError::Predictor { name: set_label(d.names(), set), source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let (proximal, loss_matrices): (Vec<_>, Vec<_>) = columns.into_iter().unzip();

    let (coefficients, intercept) = st.destandardize(&base_fit.beta, base_fit.intercept);
    let base = ModelColumn {
        label: "base".into(),
        excluded: Vec::new(),
        test_error: test.map(|t| test_error(t, &coefficients, intercept)),
        coefficients,
        intercept,
        fit: base_fit,
        cv_error: base_q[k_star],
        debiased_error: base_debiased,
        selection_frequency: None,
        model_pvalue: None,
        model_score: None,
        post_selection_pvalue: None,
    };
    let notice = base.fit.active_set.is_empty().then(|| "no predictor is selected by the base model".to_string());
    let selection_entropy = entropy(&counts);
    let report = NextDoorReport {
        predictors: d.names().to_vec(),
        family: d.family(),
        chosen_lambda_index: k_star,
        lambda,
        grid,
        selection_counts: counts,
        selection_entropy,
        base,
        proximal,
        notice,
    };
    Ok(AnalysisOutput { report, loss_matrices })
}

struct Context<'a, T> {
    d: &'a Dataset<T>,
    std_data: &'a Dataset<T>,
    st: &'a Standardization<T>,
    grid: &'a LambdaGrid<T>,
    folds: &'a FoldAssignment,
    base_losses: &'a Matrix<T>,
    k_star: usize,
    cfg: &'a AnalysisConfig<T>,
    test: Option<&'a Dataset<T>>,
}

fn analyze_exclusion<T: Scalar>(
    ctx: &Context<'_, T>,
    set: &[usize],
    freq: T,
) -> Result<(ModelColumn<T>, CvLossMatrix<T>)> {
    let cfg = ctx.cfg;
    let p = ctx.d.p();
    // singletons are keyed by predictor index, sets after all predictors
    let key = if set.len() == 1 {
        set[0] as u64
    } else {
        p as u64 + cfg.exclusion_sets.iter().position(|s| sorted(s) == set).unwrap_or(0) as u64
    };
    let stream = derive(cfg.seed, domain::PREDICTOR, key);

    let excl_losses = cv_losses(ctx.d, ctx.grid, ctx.folds, set)?;
    let matrix = CvLossMatrix::from_parts(
        ctx.base_losses.clone(),
        excl_losses,
        ctx.grid.clone(),
        set.to_vec(),
        ctx.folds.clone(),
        ctx.d.family(),
    )?;
    let m = ctx.grid.len();
    let rp = cfg.randomization.with_seed(derive(stream, domain::DEBIAS, 0));
    let bp = BootstrapParams { seed: derive(stream, domain::BOOTSTRAP, 0), ..cfg.bootstrap };
    let boot = bootstrap_test(matrix.losses(), &rp, &bp, cfg.criterion)?;

    let tau_sq = match cfg.tau_sq {
        Some(t) => t,
        None => cfg.randomization.gamma1 * covariance_of_columns(matrix.losses()).sigma0_sq,
    };
    let post = if tau_sq > T::zero() {
        Some(T::lit(post_selection_test(matrix.losses(), tau_sq, derive(stream, domain::POST_SELECTION, 0))?.pvalue))
    } else {
        None
    };

    let fit = fit_lasso(ctx.std_data, ctx.grid.get(ctx.k_star), set, None)?;
    let (coefficients, intercept) = ctx.st.destandardize(&fit.beta, fit.intercept);
    let q = matrix.cv_errors();
    let column = ModelColumn {
        label: set_label(ctx.d.names(), set),
        excluded: set.to_vec(),
        test_error: ctx.test.map(|t| test_error(t, &coefficients, intercept)),
        coefficients,
        intercept,
        fit,
        cv_error: q[m + ctx.k_star],
        debiased_error: boot.observed.err_hat_j,
        selection_frequency: Some(freq),
        model_pvalue: Some(boot.pvalue),
        model_score: Some(model_score(boot.pvalue, freq, cfg.frequency_cutoff)),
        post_selection_pvalue: post,
    };
    Ok((column, matrix))
}

fn sorted(s: &[usize]) -> Vec<usize> {
    let mut v = s.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn set_label(names: &[String], set: &[usize]) -> String {
    set.iter().map(|&j| names[j].as_str()).collect::<Vec<_>>().join("+")
}

fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.ln()
        })
        .sum()
}

/// Mean held-out loss of a raw-scale model.
pub fn test_error<T: Scalar>(test: &Dataset<T>, beta: &[T], intercept: T) -> T {
    let eta = linear_predictor(test.x(), beta, intercept);
    let total: T = test.y().iter().zip(&eta).map(|(&y, &e)| pointwise_loss(test.family(), y, e)).sum();
    total / T::from_usize_lossy(test.n())
}

/// Measure used to order predictors in [`nested_model_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    ModelPvalue,
    ModelScore,
}

/// Test errors of unpenalized refits on the `k` most important base-model
/// predictors, for `k = start_size..=|S|`.
pub fn nested_model_curve<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    report: &NextDoorReport<T>,
    ordering: Ordering,
    start_size: usize,
) -> Result<Vec<(usize, T)>> {
    let active = report.active_set().to_vec();
    if active.is_empty() {
        return Err(NextDoorError::invalid("the base model selected no predictors"));
    }
    if start_size == 0 {
        return Err(NextDoorError::invalid("start size must be at least 1"));
    }
    if test.names() != train.names() {
        return Err(NextDoorError::data("test data columns do not match training data"));
    }
    let measure = |j: usize| -> f64 {
        let col = report.proximal_for(j);
        let v = match ordering {
            Ordering::ModelPvalue => col.and_then(|c| c.model_pvalue),
            Ordering::ModelScore => col.and_then(|c| c.model_score).and_then(|s| s.value()),
        };
        v.map_or(f64::INFINITY, |v| v.as_f64())
    };
    let mut order = active.clone();
    order.sort_by(|&a, &b| measure(a).total_cmp(&measure(b)).then(a.cmp(&b)));

    let (std_train, st) = standardize(train)?;
    let p = train.p();
    (start_size..=order.len())
        .map(|k| {
            if k >= train.n() {
                return Err(NextDoorError::Singular(format!("{k} features with {} training samples", train.n())));
            }
            let keep = &order[..k];
            let excluded: Vec<usize> = (0..p).filter(|j| !keep.contains(j)).collect();
            let fit = fit_lasso(&std_train, T::zero(), &excluded, None)?;
            let (beta, b0) = st.destandardize(&fit.beta, fit.intercept);
            Ok((k, test_error(test, &beta, b0)))
        })
        .collect()
}
