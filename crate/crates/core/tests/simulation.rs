use nextdoor::rng::rng_from;
use nextdoor::simulation::{
    design_matrix, generate_design, naive_pvalue, type_one_error_experiment, Design, DesignSpec, ExperimentConfig,
    Method,
};
use nextdoor::{CvLossMatrix, FoldAssignment, Matrix};

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn design_correlations() {
    let n = 100_000;
    let mut rng = rng_from(1);
    let x = design_matrix(Design::Redundant1, n, 4, &mut rng);
    let want = 0.95 / (0.95f64 * 0.95 + 0.05 * 0.05).sqrt();
    assert!((corr(x.col(0), x.col(2)) - want).abs() < 0.01);
    assert!((corr(x.col(1), x.col(3)) - 0.9986).abs() < 0.01);
    assert!(corr(x.col(0), x.col(1)).abs() < 0.01);

    let x = design_matrix(Design::Correlated, n, 3, &mut rng);
    assert!((corr(x.col(0), x.col(2)) - 0.5).abs() < 0.01);
    let x = design_matrix(Design::Orthogonal, n, 2, &mut rng);
    assert!(corr(x.col(0), x.col(1)).abs() < 0.01);
}

#[test]
fn generated_data_is_reproducible() {
    let spec = DesignSpec { design: Design::Redundant2, n: 50, p: 10, s: 5, seed: 4 };
    let (a, beta) = generate_design::<f64>(&spec).unwrap();
    let (b, _) = generate_design::<f64>(&spec).unwrap();
    assert_eq!(a, b);
    assert_eq!(beta[..3], [2.0, 1.0, 2.0 / 3.0]);
    assert_eq!(spec.null_predictors(), vec![5, 6, 7, 8, 9]);
    assert!(generate_design::<f64>(&DesignSpec { p: 9, ..spec }).is_err());
}

#[test]
fn naive_test_matches_paired_z() {
    let base = vec![vec![1.0, 2.0, 3.0, 4.0], vec![2.0, 2.0, 2.0, 2.5]];
    let excl = vec![vec![1.5, 2.5, 3.0, 5.0], vec![2.5, 2.0, 2.5, 3.0]];
    let cols: Vec<Vec<f64>> = base.into_iter().chain(excl).collect();
    let folds = FoldAssignment::new(vec![0, 1, 0, 1]).unwrap();
    let m = CvLossMatrix::synthetic(Matrix::from_columns(4, &cols).unwrap(), folds).unwrap();
    // base means (2.5, 2.125) pick index 1; differences (0.5, 0, 0.5, 0.5)
    // have mean 0.375 and standard error 0.125, so z = 3
    assert!((naive_pvalue(&m) - 0.001_349_898_031_630_1).abs() < 1e-12);
}

#[test]
fn small_experiment_runs_and_is_deterministic() {
    let spec = DesignSpec { design: Design::Orthogonal, n: 60, p: 6, s: 3, seed: 0 };
    let mut cfg =
        ExperimentConfig { reps: 3, seed: 9, methods: vec![Method::ModelPvalue, Method::Naive], ..Default::default() };
    cfg.analysis.nlambda = 10;
    cfg.analysis.randomization.h = 20;
    cfg.analysis.bootstrap.b = 30;
    cfg.analysis.n_boot_freq = 4;
    let rows = type_one_error_experiment(&spec, &cfg).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r.metric, "type1");
        assert!((0.0..=1.0).contains(&r.value));
    }
    assert_eq!(rows, type_one_error_experiment(&spec, &cfg).unwrap());
}
