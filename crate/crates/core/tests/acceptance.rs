//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the run
//! fails if any criterion fails.

mod common;

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nextdoor::analysis::{run_next_door, AnalysisConfig};
use nextdoor::bootstrap::{bootstrap_test, model_score, BootstrapParams, ModelScore};
use nextdoor::data::standardize;
use nextdoor::debias::{Criterion, RandomizationParams};
use nextdoor::lasso::{fit_lasso, kkt_violation, lambda_max, objective};
use nextdoor::post_selection::{post_selection_test, truncated_gaussian_sf};
use nextdoor::report::{render_json, render_text};
use nextdoor::rng::{rng_from, substream};
use nextdoor::scalar::soft_threshold;
use nextdoor::simulation::{
    calibration_experiment, ks_uniform, type_one_error_experiment, CalibrationConfig, Design, DesignSpec,
    ExperimentConfig, MeanMode, Method, SidedPvalues, TableRow,
};
use nextdoor::{load_csv, Dataset, Family, Matrix, Scalar};

use common::{gaussian_data, ols_oracle, orthonormal_design, truncated_sf_quadrature};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed.as_secs() < limit_secs
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst_kkt = 0.0f64;
    for r in 0..100u64 {
        let beta: Vec<f64> = (0..10).map(|j| if j < 3 { 1.0 / (j + 1) as f64 } else { 0.0 }).collect();
        let d = gaussian_data(50, 10, &beta, 1.0, 1000 + r);
        let (sd, _) = standardize(&d).unwrap();
        let frac = [0.5, 0.2, 0.05, 0.01][r as usize % 4];
        let fit = fit_lasso(&sd, frac * lambda_max(&sd), &[], None).unwrap();
        worst_kkt = worst_kkt.max(kkt_violation(&sd, &fit));
    }
    let mut worst_soft = 0.0f64;
    for r in 0..20u64 {
        let x = orthonormal_design(40, 5, 2000 + r);
        let mut rng = rng_from(3000 + r);
        let y: Vec<f64> =
            (0..40).map(|i| 1.5 * x.get(i, 0) - 0.7 * x.get(i, 2) + f64::standard_normal(&mut rng)).collect();
        let d = Dataset::new(x.clone(), y.clone(), (0..5).map(|j| format!("x{j}")).collect(), Family::Gaussian, None)
            .unwrap();
        let ybar = y.iter().sum::<f64>() / 40.0;
        let lambda = 0.3;
        let fit = fit_lasso(&d, lambda, &[], None).unwrap();
        for j in 0..5 {
            let z: f64 = (0..40).map(|i| x.get(i, j) * (y[i] - ybar)).sum::<f64>() / 40.0;
            worst_soft = worst_soft.max((fit.beta[j] - soft_threshold(z, lambda)).abs());
        }
    }
    let mut worst_ols = 0.0f64;
    for r in 0..20u64 {
        let d = gaussian_data(50, 10, &[1.0, -2.0, 0.5], 1.0, 4000 + r);
        let (sd, st) = standardize(&d).unwrap();
        let fit = fit_lasso(&sd, 0.0, &[], None).unwrap();
        let (beta, b0) = st.destandardize(&fit.beta, fit.intercept);
        let (ob, o0) = ols_oracle(&d);
        worst_ols = beta.iter().zip(&ob).map(|(a, b)| (a - b).abs()).fold(worst_ols, f64::max).max((b0 - o0).abs());
    }
    let t = start.elapsed();
    outcome(
        worst_kkt <= 1e-6 && worst_soft <= 1e-8 && worst_ols <= 1e-8 && within(t, 10),
        format!("max KKT {worst_kkt:.2e}, soft-threshold err {worst_soft:.2e}, OLS err {worst_ols:.2e}, {t:.1?}"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut violations = 0;
    let mut checked = 0;
    for r in 0..30u64 {
        let d = gaussian_data(60, 8, &[2.0, 1.0, 0.5, 0.25], 1.0, 5000 + r);
        let (sd, _) = standardize(&d).unwrap();
        let lambda = 0.05 * lambda_max(&sd);
        let full = fit_lasso(&sd, lambda, &[], None).unwrap();
        let f_full = objective(&sd, &full.beta, full.intercept, lambda);
        for j in 0..8 {
            let prox = fit_lasso(&sd, lambda, &[j], None).unwrap();
            let f_prox = objective(&sd, &prox.beta, prox.intercept, lambda);
            checked += 1;
            if prox.beta[j].to_bits() != 0.0f64.to_bits() || f_prox < f_full - 1e-12 * f_full.abs().max(1.0) {
                violations += 1;
            }
        }
    }
    // the same contract on the proximal models of a full analysis
    let d = gaussian_data(60, 6, &[2.0, 1.0, 0.5], 1.0, 77);
    let mut cfg = AnalysisConfig::<f64> { nlambda: 20, n_boot_freq: 5, seed: 1, ..Default::default() };
    cfg.randomization.h = 20;
    cfg.bootstrap.b = 20;
    let report = run_next_door(&d, &cfg).unwrap();
    for col in &report.proximal {
        checked += 1;
        let j = col.excluded[0];
        if col.fit.beta[j].to_bits() != 0.0f64.to_bits()
            || col.coefficients[j] != 0.0
            || col.fit.lambda != report.lambda
        {
            violations += 1;
        }
    }
    let t = start.elapsed();
    outcome(violations == 0, format!("{checked} proximal fits, {violations} violations, {t:.1?}"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let cfg = CalibrationConfig {
        m: 20,
        n: 100,
        mean_mode: MeanMode::Zero,
        reps: 1000,
        b: 500,
        h: 100,
        seed: 11,
        ..Default::default()
    };
    let res = calibration_experiment(&cfg).unwrap();
    let (bias_naive, bias_deb) = (res.plug_in_bias(), res.debiased_bias());
    let ks = |pick: fn(&SidedPvalues) -> f64| ks_uniform(&res.collect(true, pick));
    let (k1l, k1r, k2l, k2r) = (ks(|p| p.p1_left), ks(|p| p.p1_right), ks(|p| p.p2_left), ks(|p| p.p2_right));
    let t = start.elapsed();
    outcome(
        bias_deb.abs() <= 0.5 * bias_naive.abs() && k2l < k1l && k2r < k1r && within(t, 300),
        format!(
            "bias naive {bias_naive:.4} vs de-biased {bias_deb:.4}; KS left {k1l:.3} -> {k2l:.3}, right {k1r:.3} -> {k2r:.3}; {t:.1?}"
        ),
    )
}

/// Per-sample losses of `m` nested models with the exclusion block an exact
/// copy of the base block.
fn duplicated_losses(n: usize, m: usize, seed: u64) -> Matrix<f64> {
    let mut rng = substream(seed, 99, 0);
    let e: Vec<f64> = (0..n).map(|_| f64::standard_normal(&mut rng)).collect();
    let u: Vec<f64> = (0..n).map(|_| f64::standard_normal(&mut rng)).collect();
    let base: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let shrink = 0.4 * (k as f64 - m as f64 / 2.0) / m as f64;
            (0..n).map(|i| (e[i] + shrink * u[i]).powi(2)).collect()
        })
        .collect();
    let cols: Vec<Vec<f64>> = base.iter().chain(base.iter()).cloned().collect();
    Matrix::from_columns(n, &cols).unwrap()
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let reps = 500;
    let rp = RandomizationParams { h: 200, ..Default::default() };
    let mut rejections = 0;
    for r in 0..reps {
        let losses = duplicated_losses(100, 10, r);
        let bp = BootstrapParams { b: 500, seed: 10_000 + r, ..Default::default() };
        let out = bootstrap_test(&losses, &rp.with_seed(20_000 + r), &bp, Criterion::RandomizedMin).unwrap();
        rejections += (out.pvalue <= 0.1) as usize;
    }
    let rate = rejections as f64 / reps as f64;
    let t = start.elapsed();
    outcome(
        (0.05..=0.16).contains(&rate) && within(t, 600),
        format!("type I error {rate:.3} over {reps} replications, {t:.1?}"),
    )
}

fn orthogonal_table() -> &'static (Vec<TableRow>, Duration) {
    static CELL: OnceLock<(Vec<TableRow>, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let spec = DesignSpec { design: Design::Orthogonal, n: 100, p: 10, s: 5, seed: 0 };
        let cfg = ExperimentConfig { seed: 2024, ..Default::default() };
        (type_one_error_experiment(&spec, &cfg).unwrap(), start.elapsed())
    })
}

fn rate(rows: &[TableRow], m: Method) -> f64 {
    rows.iter().find(|r| r.method == m).map(|r| r.value).unwrap_or(f64::NAN)
}

fn criterion_5() -> Outcome {
    let (orth, t_orth) = orthogonal_table();
    let start = Instant::now();
    let spec = DesignSpec { design: Design::Redundant1, n: 100, p: 10, s: 5, seed: 0 };
    let red = type_one_error_experiment(&spec, &ExperimentConfig { seed: 2025, ..Default::default() }).unwrap();
    let t = start.elapsed() + *t_orth;
    let (op, os, on) = (rate(orth, Method::ModelPvalue), rate(orth, Method::ModelScore), rate(orth, Method::Naive));
    let (rp, rn) = (rate(&red, Method::ModelPvalue), rate(&red, Method::Naive));
    let pass = (op - 0.03).abs() <= 0.06
        && os <= op
        && (on - 0.04).abs() <= 0.06
        && rn >= 0.20
        && rp <= 0.16
        && within(t, 1800);
    let tests = orth.first().map_or(0, |r| r.tests);
    outcome(
        pass,
        format!(
            "orthogonal: pvalue {op:.3}, score {os:.3}, naive {on:.3} ({tests} tests); redundant I: naive {rn:.3}, pvalue {rp:.3}; {t:.1?}"
        ),
    )
}

fn prostate_path() -> Option<PathBuf> {
    let env = std::env::var_os("NEXTDOOR_PROSTATE_CSV").map(PathBuf::from);
    let bundled = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/prostate.csv");
    env.into_iter().chain([bundled]).find(|p| p.is_file())
}

/// Keeps the training rows when the file carries a `train` column, then drops
/// that column.
fn prostate_training(path: &PathBuf) -> Result<Dataset<f64>, String> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let headers = rd.headers().map_err(|e| e.to_string())?.clone();
    let train_col = headers.iter().position(|h| h.eq_ignore_ascii_case("train"));
    let Some(tc) = train_col else {
        return load_csv(path, "lpsa", Family::Gaussian, None).map_err(|e| e.to_string());
    };
    let tmp = std::env::temp_dir().join(format!("prostate-train-{}.csv", std::process::id()));
    let mut w = csv::Writer::from_path(&tmp).map_err(|e| e.to_string())?;
    let keep = |r: &csv::StringRecord| -> Vec<String> {
        r.iter().enumerate().filter(|(i, _)| *i != tc).map(|(_, v)| v.to_string()).collect()
    };
    w.write_record(keep(&headers)).map_err(|e| e.to_string())?;
    for rec in rd.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        if matches!(rec[tc].trim().to_ascii_uppercase().as_str(), "T" | "TRUE" | "1") {
            w.write_record(keep(&rec)).map_err(|e| e.to_string())?;
        }
    }
    w.flush().map_err(|e| e.to_string())?;
    drop(w);
    let d = load_csv(&tmp, "lpsa", Family::Gaussian, None).map_err(|e| e.to_string());
    let _ = std::fs::remove_file(&tmp);
    d
}

fn criterion_6() -> Outcome {
    let Some(path) = prostate_path() else {
        return outcome(
            false,
            "prostate training data not found (set NEXTDOOR_PROSTATE_CSV or add tests/data/prostate.csv)",
        );
    };
    let start = Instant::now();
    let d = match prostate_training(&path) {
        Ok(d) => d,
        Err(e) => return outcome(false, format!("could not load {}: {e}", path.display())),
    };
    let mut cfg = AnalysisConfig::<f64> { seed: 42, ..Default::default() };
    cfg.bootstrap.b = 2000;
    let report = match run_next_door(&d, &cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("analysis failed: {e}")),
    };
    let Some(lcavol) = d.index_of("lcavol") else {
        return outcome(false, "no lcavol column");
    };
    let Some(col) = report.proximal_for(lcavol) else {
        return outcome(false, "lcavol not selected by the base model");
    };
    let p_lcavol = col.model_pvalue.unwrap_or(1.0);
    let smallest = report.proximal.iter().all(|c| c.excluded == [lcavol] || c.model_pvalue.unwrap_or(1.0) > p_lcavol);
    let freq = col.selection_frequency.unwrap_or(0.0);
    let ordered = report.ordered_columns();
    let worst = ordered.last().is_some_and(|c| c.excluded == [lcavol]);
    let table = render_text(&report);
    let header_last = table.lines().next().is_some_and(|h| h.trim_end().ends_with("lcavol"));
    let t = start.elapsed();
    outcome(
        (report.base.cv_error - 0.61).abs() <= 0.10
            && smallest
            && p_lcavol <= 0.05
            && freq >= 0.95
            && worst
            && header_last
            && within(t, 300),
        format!(
            "n = {}, base cv error {:.3}, lcavol p {:.3} (smallest: {smallest}), frequency {:.2}, ranked worst: {}, {t:.1?}",
            d.n(),
            report.base.cv_error,
            p_lcavol,
            freq,
            worst && header_last
        ),
    )
}

fn criterion_7() -> Outcome {
    let d = gaussian_data(80, 8, &[2.0, 1.0, 0.6, 0.3], 1.0, 123);
    let mut cfg = AnalysisConfig::<f64> { nlambda: 30, n_boot_freq: 20, seed: 5, ..Default::default() };
    cfg.randomization.h = 100;
    cfg.bootstrap.b = 200;
    let report = run_next_door(&d, &cfg).unwrap();
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut bad_flags = 0;
    for c in &report.proximal {
        let (p, f) = (c.model_pvalue.unwrap(), c.selection_frequency.unwrap());
        match c.model_score.unwrap() {
            ModelScore::Score(s) if f >= cfg.frequency_cutoff => {
                worst = worst.max((s - p / f).abs());
                checked += 1;
            }
            ModelScore::FrequencyBelowCutoff if f < cfg.frequency_cutoff => {}
            _ => bad_flags += 1,
        }
    }
    let table_case = model_score(0.29f64, 0.78, 0.05).value().map(|s| (s * 100.0).round() / 100.0);
    outcome(
        worst <= 1e-12 && bad_flags == 0 && checked > 0 && table_case == Some(0.37),
        format!("{checked} scores, max |s - p/f| = {worst:.1e}, 0.29/0.78 -> {:.2}", table_case.unwrap_or(f64::NAN)),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut outside = 0;
    let invocations = 2000;
    for r in 0..invocations {
        let losses = duplicated_losses(60, 8, 50_000 + r);
        // perturb the exclusion block so the statistic has a real signal
        let mut l = losses.clone();
        let mut rng = substream(r, 98, 0);
        for k in 8..16 {
            l.col_mut(k).iter_mut().for_each(|v| *v += 0.3 * f64::standard_normal(&mut rng).abs());
        }
        let out = post_selection_test(&l, 0.05, r).unwrap();
        if !(out.interval.a <= out.statistic && out.statistic <= out.interval.b) {
            outside += 1;
        }
    }
    let mut worst_rel = 0.0f64;
    for &(x, a, b) in &[(8.0, 7.0, 9.0), (12.0, 11.5, 13.0), (-8.0, -9.0, -7.0), (20.0, 19.0, 25.0), (3.0, 2.0, 4.0)] {
        for &sd in &[1.0, 0.37] {
            let got = truncated_gaussian_sf(x * sd, sd, a * sd, b * sd).unwrap();
            let want = truncated_sf_quadrature(x * sd, sd, a * sd, b * sd);
            worst_rel = worst_rel.max((got - want).abs() / want);
        }
    }
    let (orth, t_orth) = orthogonal_table();
    let ps = rate(orth, Method::PostSelection);
    let t = start.elapsed() + *t_orth;
    outcome(
        outside == 0 && worst_rel <= 1e-10 && (ps - 0.07).abs() <= 0.06 && within(t, 1200 + t_orth.as_secs()),
        format!("{invocations} invocations, {outside} outside (a, b); quadrature rel err {worst_rel:.1e}; orthogonal type I {ps:.3}; {t:.1?}"),
    )
}

fn criterion_9() -> Outcome {
    let d = gaussian_data(70, 6, &[1.5, 1.0, 0.5], 1.0, 321);
    let mut cfg = AnalysisConfig::<f64> { nlambda: 25, n_boot_freq: 10, seed: 99, ..Default::default() };
    cfg.randomization.h = 50;
    cfg.bootstrap.b = 100;
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| render_json(&run_next_door(&d, &cfg).unwrap()).unwrap())
    };
    let (a, b, c) = (run(1), run(4), run(1));
    outcome(a == b && a == c, format!("{} bytes; 1 vs 4 workers identical: {}", a.len(), a == b))
}

fn main() {
    type Check = (&'static str, fn() -> Outcome);
    let criteria: [Check; 9] = [
        ("solver correctness", criterion_1),
        ("exclusion constraint", criterion_2),
        ("de-biasing effect", criterion_3),
        ("exact-null calibration", criterion_4),
        ("type I error spot checks", criterion_5),
        ("prostate end-to-end", criterion_6),
        ("model-score identity", criterion_7),
        ("post-selection p-value", criterion_8),
        ("determinism", criterion_9),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        let o = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        failed += !o.pass as usize;
        println!("criterion {} ({name}): {} - {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
