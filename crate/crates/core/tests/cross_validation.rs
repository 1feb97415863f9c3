mod common;

use nextdoor::cv::{covariance_of_columns, cv_losses, make_folds, one_se_select, FoldAssignment};
use nextdoor::{Dataset, Family, LambdaGrid, Matrix};
use proptest::prelude::*;

use common::{gaussian_data, min_eigenvalue};

#[test]
fn leave_one_out_null_model() {
    let d = gaussian_data(12, 3, &[1.0], 1.0, 4);
    let folds = FoldAssignment::new((0..12).collect()).unwrap();
    let grid = LambdaGrid::new(vec![1e6]).unwrap();
    let losses = cv_losses(&d, &grid, &folds, &[]).unwrap();
    let y = d.y();
    let total: f64 = y.iter().sum();
    for (i, &yi) in y.iter().enumerate() {
        let loo_mean = (total - yi) / 11.0;
        assert!((losses.get(i, 0) - (yi - loo_mean).powi(2)).abs() < 1e-10);
    }
}

#[test]
fn excluding_a_column_matches_dropping_it() {
    let d = gaussian_data(60, 5, &[1.0, -0.8, 0.5], 1.0, 12);
    let folds = make_folds(60, 5, 3).unwrap();
    let grid = nextdoor::lasso::lambda_grid(&d, 8, 0.05).unwrap();
    let held = cv_losses(&d, &grid, &folds, &[1]).unwrap();
    let keep = [0, 2, 3, 4];
    let names = keep.iter().map(|&j| d.names()[j].clone()).collect();
    let dropped = Dataset::new(d.x().select_cols(&keep), d.y().to_vec(), names, Family::Gaussian, None).unwrap();
    let direct = cv_losses(&dropped, &grid, &folds, &[]).unwrap();
    for (a, b) in held.as_col_major().iter().zip(direct.as_col_major()) {
        assert!((a - b).abs() < 1e-7 * (1.0 + b.abs()));
    }
}

#[test]
fn losses_do_not_depend_on_thread_count() {
    let d = gaussian_data(80, 6, &[1.0, 0.5], 1.0, 5);
    let folds = make_folds(80, 10, 1).unwrap();
    let grid = nextdoor::lasso::lambda_grid(&d, 10, 0.01).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| cv_losses(&d, &grid, &folds, &[0]).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert!(a.as_col_major().iter().zip(b.as_col_major()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn one_se_prefers_the_larger_penalty() {
    let values = [3.0, 2.05, 2.0, 2.3];
    assert_eq!(one_se_select(&values, &[0.1, 0.1, 0.1, 0.1]), 1);
    assert_eq!(one_se_select(&values, &[0.01, 0.01, 0.01, 0.01]), 2);
    assert_eq!(one_se_select(&values, &[0.0, 0.0, 2.0, 0.0]), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn folds_partition_samples(n in 2usize..200, v in 2usize..20, seed in any::<u64>()) {
        prop_assume!(v <= n);
        let f = make_folds(n, v, seed).unwrap();
        prop_assert_eq!(f.n_folds(), v);
        let mut seen = vec![0usize; n];
        for k in 0..v {
            for i in f.validation(k) {
                seen[i] += 1;
            }
            let mut all = f.validation(k);
            all.extend(f.training(k));
            prop_assert_eq!(all.len(), n);
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let sizes = f.sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn covariance_is_positive_semidefinite(vals in proptest::collection::vec(0.0f64..10.0, 40), extra in 0.0f64..1.0) {
        // a duplicated column makes the matrix singular on purpose
        let mut data = vals.clone();
        data.extend(vals[..10].iter().map(|v| v * extra));
        let losses = Matrix::from_col_major(10, 5, data).unwrap();
        let cov = covariance_of_columns(&losses);
        prop_assert!(min_eigenvalue(&cov.sigma_hat) >= -1e-10);
        let diag_min = (0..5).map(|k| cov.sigma_hat.get(k, k)).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(cov.sigma0_sq, diag_min);
    }
}
