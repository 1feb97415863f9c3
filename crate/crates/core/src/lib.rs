//! Next-Door analysis for l1-penalized regression.
//!
//! For every predictor selected by a cross-validated lasso, the model is refit
//! with that predictor held at zero (its *proximal* model). Cross-validation
//! errors of both models are corrected for penalty-selection bias through
//! randomization, and the predictor is tested for indispensability with a
//! mean-rescaled bootstrap, a frequency-adjusted model score and a
//! truncated-Gaussian post-selection p-value.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the common double-precision case.

// `!(x > 0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bootstrap;
pub mod cv;
pub mod data;
pub mod debias;
pub mod error;
pub mod lasso;
pub mod linalg;
pub mod post_selection;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod simulation;
pub mod special;

pub use analysis::{
    nested_model_curve, run_next_door, run_next_door_detailed, AnalysisConfig, AnalysisOutput, ModelColumn,
    NextDoorReport, Ordering,
};
pub use bootstrap::{
    bootstrap_pvalue, bootstrap_test, mean_rescale, model_score, reference_errors, selection_frequencies,
    selection_frequency, BootstrapParams, FoldSpec, ModelScore,
};
pub use cv::{
    covariance_of_columns, cv_losses, folds_for, make_folds, one_se_index, sample_covariance, CovarianceEstimate,
    CvLossMatrix, FoldAssignment,
};
pub use data::{load_csv, standardize, Dataset, Family, Standardization};
pub use debias::{debias_errors, pseudo_errors, select_randomized, Criterion, DebiasedErrors, RandomizationParams};
pub use error::{NextDoorError, Result};
pub use lasso::{fit_lasso, fit_path, kkt_violation, lambda_grid, objective, LambdaGrid, LassoFit};
pub use linalg::Matrix;
pub use post_selection::{
    affine_constraints, post_selection_pvalue, post_selection_test, truncated_gaussian_sf, truncation_interval,
    TruncationInterval,
};
pub use report::{read_report, render, write_report, ReportFormat};
pub use scalar::Scalar;
pub use simulation::{
    calibration_experiment, generate_design, power_curve, type_one_error_experiment, Design, DesignSpec, Method,
};

pub type Dataset64 = Dataset<f64>;
pub type LassoFit64 = LassoFit<f64>;
pub type CvLossMatrix64 = CvLossMatrix<f64>;
pub type DebiasedErrors64 = DebiasedErrors<f64>;
pub type NextDoorReport64 = NextDoorReport<f64>;
pub type AnalysisConfig64 = AnalysisConfig<f64>;
