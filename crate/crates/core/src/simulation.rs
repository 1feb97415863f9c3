//! Synthetic designs and calibration experiments: type I error and power
//! of the indispensability tests, and accuracy of the de-biased bootstrap on
//! synthetic error columns.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{run_next_door_detailed, AnalysisConfig};
use crate::bootstrap::rescale_group;
use crate::cv::{argmin, covariance_of_columns, CvLossMatrix};
use crate::data::{Dataset, Family};
use crate::debias::{average_over_draws, Criterion, NoiseModel};
use crate::error::{NextDoorError, Result};
use crate::linalg::Matrix;
use crate::rng::{derive, domain, rng_from, substream};
use crate::scalar::Scalar;
use crate::special::norm_sf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    Orthogonal,
    Redundant1,
    Correlated,
    Redundant2,
}

impl Design {
    pub fn is_redundant(self) -> bool {
        matches!(self, Design::Redundant1 | Design::Redundant2)
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Design::Orthogonal => "orthogonal",
            Design::Redundant1 => "redundant1",
            Design::Correlated => "correlated",
            Design::Redundant2 => "redundant2",
        })
    }
}

impl FromStr for Design {
    type Err = NextDoorError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "orthogonal" => Ok(Design::Orthogonal),
            "redundant1" | "redundanti" => Ok(Design::Redundant1),
            "correlated" => Ok(Design::Correlated),
            "redundant2" | "redundantii" => Ok(Design::Redundant2),
            other => Err(NextDoorError::invalid(format!("unknown design `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub design: Design,
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub seed: u64,
}

impl DesignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.s > self.p || self.p == 0 || self.n < 2 {
            return Err(NextDoorError::invalid("design needs n >= 2, p >= 1 and s <= p"));
        }
        if self.design.is_redundant() && !self.p.is_multiple_of(2) {
            return Err(NextDoorError::invalid("redundant designs need an even p"));
        }
        Ok(())
    }

    /// `(2/1, 2/2, ..., 2/s, 0, ..., 0)`.
    pub fn true_beta(&self) -> Vec<f64> {
        (0..self.p).map(|j| if j < self.s { 2.0 / (j + 1) as f64 } else { 0.0 }).collect()
    }

    /// Predictors whose removal cannot hurt: `j > s` for the plain designs,
    /// the first five of the second half for the redundant ones (0-based).
    pub fn null_predictors(&self) -> Vec<usize> {
        if self.design.is_redundant() {
            (self.p / 2..(self.p / 2 + 5).min(self.p)).collect()
        } else {
            (self.s..self.p).collect()
        }
    }
}

/// Predictors with the design's correlation structure (no response).
pub fn design_matrix<R: Rng + ?Sized>(design: Design, n: usize, p: usize, rng: &mut R) -> Matrix<f64> {
    let mut normals = |len: usize| -> Vec<f64> { (0..len).map(|_| f64::standard_normal(rng)).collect() };
    let equicorrelated = |cols: usize, normals: &mut dyn FnMut(usize) -> Vec<f64>| -> Vec<Vec<f64>> {
        let common = normals(n);
        let h = 0.5f64.sqrt();
        (0..cols).map(|_| normals(n).iter().zip(&common).map(|(z, c)| h * c + h * z).collect()).collect()
    };
    let cols: Vec<Vec<f64>> = match design {
        Design::Orthogonal => (0..p).map(|_| normals(n)).collect(),
        Design::Correlated => equicorrelated(p, &mut normals),
        Design::Redundant1 | Design::Redundant2 => {
            let half = p / 2;
            let mut first: Vec<Vec<f64>> = if design == Design::Redundant1 {
                (0..half).map(|_| normals(n)).collect()
            } else {
                equicorrelated(half, &mut normals)
            };
            let second: Vec<Vec<f64>> = (0..half)
                .map(|j| normals(n).iter().zip(&first[j]).map(|(w, x)| 0.95 * x + 0.05 * w).collect())
                .collect();
            first.extend(second);
            first
        }
    };
    Matrix::from_columns(n, &cols).expect("columns have length n")
}

/// Draws `(data, beta)` with `y = X beta + Z`.
pub fn generate_design<T: Scalar>(spec: &DesignSpec) -> Result<(Dataset<T>, Vec<f64>)> {
    let beta = spec.true_beta();
    Ok((generate_with_beta(spec, &beta)?, beta))
}

/// Same designs with an explicit coefficient vector.
pub fn generate_with_beta<T: Scalar>(spec: &DesignSpec, beta: &[f64]) -> Result<Dataset<T>> {
    spec.validate()?;
    if beta.len() != spec.p {
        return Err(NextDoorError::invalid("coefficient vector length must equal p"));
    }
    let mut rng = rng_from(spec.seed);
    let x = design_matrix(spec.design, spec.n, spec.p, &mut rng);
    let y: Vec<T> = (0..spec.n)
        .map(|i| {
            let signal: f64 = (0..spec.p).map(|j| x.get(i, j) * beta[j]).sum();
            T::lit(signal + f64::standard_normal(&mut rng))
        })
        .collect();
    let xt = Matrix::from_col_major(spec.n, spec.p, x.as_col_major().iter().map(|&v| T::lit(v)).collect())?;
    let names = (1..=spec.p).map(|j| format!("X{j}")).collect();
    Dataset::new(xt, y, names, Family::Gaussian, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ModelPvalue,
    ModelScore,
    PostSelection,
    Naive,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::ModelPvalue, Method::ModelScore, Method::PostSelection, Method::Naive];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ModelPvalue => "model_pvalue",
            Method::ModelScore => "model_score",
            Method::PostSelection => "post_selection",
            Method::Naive => "naive",
        })
    }
}

impl FromStr for Method {
    type Err = NextDoorError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "model_pvalue" | "pvalue" => Ok(Method::ModelPvalue),
            "model_score" | "score" => Ok(Method::ModelScore),
            "post_selection" | "postselection" => Ok(Method::PostSelection),
            "naive" => Ok(Method::Naive),
            other => Err(NextDoorError::invalid(format!("unknown method `{other}`"))),
        }
    }
}

/// One-sided test of `Err^j <= Err` ignoring selection: penalty chosen on
/// the raw base CV means, paired loss differences at that penalty compared
/// against a normal reference.
pub fn naive_pvalue(m: &CvLossMatrix<f64>) -> f64 {
    let q = m.cv_errors();
    let mm = m.m();
    let k = argmin(&q[..mm]);
    let losses = m.losses();
    let n = losses.nrows() as f64;
    let diffs: Vec<f64> = losses.col(mm + k).iter().zip(losses.col(k)).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 {
        return if mean > 0.0 { 0.0 } else { 1.0 };
    }
    norm_sf(mean / (var / n).sqrt())
}

/// Rejection rate of one method with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub rejections: usize,
    /// Number of tests behind the rate.
    pub tests: usize,
}

impl Rate {
    pub fn value(&self) -> f64 {
        if self.tests == 0 {
            f64::NAN
        } else {
            self.rejections as f64 / self.tests as f64
        }
    }

    pub fn se(&self) -> f64 {
        let r = self.value();
        (r * (1.0 - r) / self.tests as f64).sqrt()
    }
}

/// Settings shared by the regression experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub analysis: AnalysisConfig<f64>,
    pub level: f64,
    pub reps: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut analysis = AnalysisConfig::<f64> { nlambda: 30, n_boot_freq: 50, ..Default::default() };
        analysis.randomization.h = 200;
        analysis.bootstrap.b = 500;
        ExperimentConfig { analysis, level: 0.1, reps: 200, methods: Method::ALL.to_vec(), seed: 0 }
    }
}

/// One row of an experiment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub design: Design,
    pub p: usize,
    pub s: usize,
    pub method: Method,
    pub metric: String,
    pub value: f64,
    pub se: f64,
    pub reps: usize,
    /// Tests behind the rate (selected predictors across replications).
    pub tests: usize,
}

/// p-values of every method for every tested predictor in one replication.
type RepOutcome = Vec<(Method, f64, bool)>;

fn method_decisions(
    cfg: &ExperimentConfig,
    data: &Dataset<f64>,
    targets: &[usize],
    rep_seed: u64,
) -> Result<Vec<(usize, RepOutcome)>> {
    let analysis = AnalysisConfig { seed: rep_seed, targets: Some(targets.to_vec()), ..cfg.analysis.clone() };
    let out = run_next_door_detailed(data, &analysis, None)?;
    let level = cfg.level;
    Ok(out
        .report
        .proximal
        .iter()
        .zip(&out.loss_matrices)
        .map(|(col, lm)| {
            let decisions = cfg
                .methods
                .iter()
                .map(|&method| {
                    let (p, reject) = match method {
                        Method::ModelPvalue => {
                            let p = col.model_pvalue.unwrap_or(1.0);
                            (p, p <= level)
                        }
                        Method::ModelScore => {
                            let s = col.model_score.expect("score computed for every proximal model");
                            (s.value().unwrap_or(f64::INFINITY), s.rejects(level))
                        }
                        Method::PostSelection => {
                            let p = col.post_selection_pvalue.unwrap_or(1.0);
                            (p, p <= level)
                        }
                        Method::Naive => {
                            let p = naive_pvalue(lm);
                            (p, p <= level)
                        }
                    };
                    (method, p, reject)
                })
                .collect();
            (col.excluded[0], decisions)
        })
        .collect())
}

/// Type I error of each method on the design's null predictors, counted over
/// the null predictors that the base model selected.
pub fn type_one_error_experiment(spec: &DesignSpec, cfg: &ExperimentConfig) -> Result<Vec<TableRow>> {
    spec.validate()?;
    let nulls = spec.null_predictors();
    let per_rep: Vec<Vec<(usize, RepOutcome)>> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let ds = DesignSpec { seed: derive(cfg.seed, domain::DESIGN, r as u64), ..*spec };
            let (data, _) = generate_design::<f64>(&ds)?;
            method_decisions(cfg, &data, &nulls, derive(cfg.seed, domain::REPLICATION, r as u64))
        })
        .collect::<Result<_>>()?;
    Ok(cfg
        .methods
        .iter()
        .map(|&method| {
            let mut rate = Rate { rejections: 0, tests: 0 };
            for (_, decisions) in per_rep.iter().flatten() {
                if let Some(&(_, _, reject)) = decisions.iter().find(|d| d.0 == method) {
                    rate.tests += 1;
                    rate.rejections += reject as usize;
                }
            }
            TableRow {
                design: spec.design,
                p: spec.p,
                s: spec.s,
                method,
                metric: "type1".into(),
                value: rate.value(),
                se: rate.se(),
                reps: cfg.reps,
                tests: rate.tests,
            }
        })
        .collect())
}

/// Rejection rate on predictor 1 as its coefficient runs over `signals`; the
/// remaining coefficients follow the design formula. A predictor that is not
/// selected counts as not rejected.
pub fn power_curve(spec: &DesignSpec, signals: &[f64], cfg: &ExperimentConfig) -> Result<Vec<TableRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for (g, &signal) in signals.iter().enumerate() {
        let mut beta = spec.true_beta();
        beta[0] = signal;
        let per_rep: Vec<Vec<(usize, RepOutcome)>> = (0..cfg.reps)
            .into_par_iter()
            .map(|r| {
                let idx = (g * cfg.reps + r) as u64;
                let ds = DesignSpec { seed: derive(cfg.seed, domain::DESIGN, idx), ..*spec };
                let data = generate_with_beta::<f64>(&ds, &beta)?;
                method_decisions(cfg, &data, &[0], derive(cfg.seed, domain::REPLICATION, idx))
            })
            .collect::<Result<_>>()?;
        for &method in &cfg.methods {
            let rejections = per_rep
                .iter()
                .filter(|rep| rep.iter().any(|(_, d)| d.iter().any(|&(m, _, rej)| m == method && rej)))
                .count();
            let rate = Rate { rejections, tests: cfg.reps };
            rows.push(TableRow {
                design: spec.design,
                p: spec.p,
                s: spec.s,
                method,
                metric: format!("power@{signal}"),
                value: rate.value(),
                se: rate.se(),
                reps: cfg.reps,
                tests: rate.tests,
            });
        }
    }
    Ok(rows)
}

/// CSV with columns `design,p,s,method,metric,value,se,reps`.
pub fn rows_to_csv(rows: &[TableRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["design", "p", "s", "method", "metric", "value", "se", "reps"])?;
    for r in rows {
        w.write_record([
            r.design.to_string(),
            r.p.to_string(),
            r.s.to_string(),
            r.method.to_string(),
            r.metric.clone(),
            r.value.to_string(),
            r.se.to_string(),
            r.reps.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| NextDoorError::data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| NextDoorError::data(e.to_string()))
}

/// Kolmogorov distance between the empirical law of `samples` and U(0, 1).
pub fn ks_uniform(samples: &[f64]) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Column means of the synthetic error columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanMode {
    /// Every column has mean zero.
    Zero,
    /// Means drawn once from `N(0, 1/n)`.
    NScaledRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub m: usize,
    pub n: usize,
    pub mean_mode: MeanMode,
    pub reps: usize,
    pub b: usize,
    pub h: usize,
    pub alpha: f64,
    /// Monte Carlo draws for the marginalized truth.
    pub truth_draws: usize,
    pub seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            m: 20,
            n: 100,
            mean_mode: MeanMode::Zero,
            reps: 1000,
            b: 1000,
            h: 100,
            alpha: 0.1,
            truth_draws: 200_000,
            seed: 0,
        }
    }
}

/// Left/right bootstrap p-values for the plug-in (`1`) and de-biased (`2`)
/// estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidedPvalues {
    pub p1_left: f64,
    pub p1_right: f64,
    pub p2_left: f64,
    pub p2_right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRep {
    /// Mean over draws of `Q[k*]`.
    pub plug_in: f64,
    /// Mean over draws of the inverse-alpha pseudo-error at `k*`.
    pub debiased: f64,
    pub rescaled: SidedPvalues,
    pub unrescaled: SidedPvalues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub means: Vec<f64>,
    /// Mean at the randomized selection, marginalized over selection.
    pub truth: f64,
    pub reps: Vec<CalibrationRep>,
}

impl CalibrationResult {
    pub fn plug_in_bias(&self) -> f64 {
        self.reps.iter().map(|r| r.plug_in - self.truth).sum::<f64>() / self.reps.len() as f64
    }

    pub fn debiased_bias(&self) -> f64 {
        self.reps.iter().map(|r| r.debiased - self.truth).sum::<f64>() / self.reps.len() as f64
    }

    pub fn collect(&self, rescaled: bool, pick: fn(&SidedPvalues) -> f64) -> Vec<f64> {
        self.reps.iter().map(|r| pick(if rescaled { &r.rescaled } else { &r.unrescaled })).collect()
    }
}

/// `E[mu[k*]]` with `k*` the argmin of `N(mu, (1 + alpha) I / n)` draws.
pub fn marginal_truth(means: &[f64], n: usize, alpha: f64, draws: usize, seed: u64) -> f64 {
    let sd = ((1.0 + alpha) / n as f64).sqrt();
    let mut rng = substream(seed, domain::TRUTH, 0);
    let mut buf = vec![0.0; means.len()];
    let mut total = 0.0;
    for _ in 0..draws {
        for (b, &mu) in buf.iter_mut().zip(means) {
            *b = mu + sd * f64::standard_normal(&mut rng);
        }
        total += means[argmin(&buf)];
    }
    total / draws as f64
}

/// Bootstrap calibration on `n x m` matrices of independent `N(mu_j, 1)`
/// errors, with no added noise (`gamma1 = gamma2 = 0`).
pub fn calibration_experiment(cfg: &CalibrationConfig) -> Result<CalibrationResult> {
    if cfg.m == 0 || cfg.n < 2 || cfg.reps == 0 || cfg.b == 0 || cfg.h == 0 || !(cfg.alpha > 0.0) {
        return Err(NextDoorError::invalid("calibration settings must be positive"));
    }
    let (m, n) = (cfg.m, cfg.n);
    let means: Vec<f64> = match cfg.mean_mode {
        MeanMode::Zero => vec![0.0; m],
        MeanMode::NScaledRandom => {
            let mut rng = substream(cfg.seed, domain::TRUTH, 1);
            (0..m).map(|_| f64::standard_normal(&mut rng) / (n as f64).sqrt()).collect()
        }
    };
    let truth = if means.iter().all(|&v| v == means[0]) {
        means[0]
    } else {
        marginal_truth(&means, n, cfg.alpha, cfg.truth_draws, cfg.seed)
    };
    let reps =
        (0..cfg.reps).into_par_iter().map(|r| calibration_rep(cfg, &means, truth, r as u64)).collect::<Result<_>>()?;
    Ok(CalibrationResult { means, truth, reps })
}

fn calibration_rep(cfg: &CalibrationConfig, means: &[f64], truth: f64, r: u64) -> Result<CalibrationRep> {
    let (m, n) = (cfg.m, cfg.n);
    let rep_seed = derive(cfg.seed, domain::REPLICATION, r);
    let mut rng = substream(rep_seed, domain::DESIGN, 0);
    let cols: Vec<Vec<f64>> =
        means.iter().map(|&mu| (0..n).map(|_| mu + f64::standard_normal(&mut rng)).collect()).collect();
    let x = Matrix::from_columns(n, &cols)?;
    let q = x.column_means();
    let cov = covariance_of_columns(&x);
    let model = NoiseModel::new(&cov, cfg.alpha, 0.0, n)?;
    let obs = average_over_draws(
        &q,
        &model,
        m,
        &[0],
        Criterion::RandomizedMin,
        &[],
        cfg.h,
        derive(rep_seed, domain::DEBIAS, 0),
    );
    let (plug_in, debiased) = (obs.plug_in[0], obs.debiased[0]);

    let q_s = rescale_group(&q, &cov.sigma_hat, 0, n);
    let shift: Vec<f64> = q_s.iter().zip(&q).map(|(a, b)| a - b).collect();
    let center = |pop_mean: &[f64]| {
        average_over_draws(
            pop_mean,
            &model,
            m,
            &[0],
            Criterion::RandomizedMin,
            &[],
            cfg.h,
            derive(rep_seed, domain::REFERENCE, 0),
        )
        .plug_in[0]
    };
    let (center_raw, center_s) = (center(&q), center(&q_s));

    let mut s_raw = Vec::with_capacity(cfg.b);
    let mut s_resc = Vec::with_capacity(cfg.b);
    for b in 0..cfg.b {
        let mut rng = substream(rep_seed, domain::RESAMPLE, b as u64);
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let xb = x.select_rows(&rows);
        let qb = xb.column_means();
        // the rescaled population differs by a constant column shift, so
        // both bootstraps share the covariance and the noise draws
        let covb = covariance_of_columns(&xb);
        let mb = NoiseModel::new(&covb, cfg.alpha, 0.0, n)?;
        let stream = derive(rep_seed, domain::BOOTSTRAP, b as u64);
        let raw = average_over_draws(&qb, &mb, m, &[0], Criterion::RandomizedMin, &[], cfg.h, stream);
        let qbs: Vec<f64> = qb.iter().zip(&shift).map(|(a, d)| a + d).collect();
        let resc = average_over_draws(&qbs, &mb, m, &[0], Criterion::RandomizedMin, &[], cfg.h, stream);
        s_raw.push((raw.plug_in[0] - center_raw, raw.debiased[0] - center_raw));
        s_resc.push((resc.plug_in[0] - center_s, resc.debiased[0] - center_s));
    }
    let sided = |s: &[(f64, f64)]| {
        let bf = s.len() as f64;
        let frac = |f: &dyn Fn(&(f64, f64)) -> bool| s.iter().filter(|v| f(v)).count() as f64 / bf;
        let (d1, d2) = (plug_in - truth, debiased - truth);
        SidedPvalues {
            p1_left: frac(&|v| d1 >= v.0),
            p1_right: frac(&|v| d1 <= v.0),
            p2_left: frac(&|v| d2 >= v.1),
            p2_right: frac(&|v| d2 <= v.1),
        }
    };
    Ok(CalibrationRep { plug_in, debiased, rescaled: sided(&s_resc), unrescaled: sided(&s_raw) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_formula() {
        let spec = DesignSpec { design: Design::Orthogonal, n: 10, p: 7, s: 5, seed: 0 };
        let b = spec.true_beta();
        let expect = [2.0, 1.0, 2.0 / 3.0, 0.5, 0.4, 0.0, 0.0];
        for (a, e) in b.iter().zip(expect) {
            assert!((a - e).abs() < 1e-15);
        }
        let zero = DesignSpec { s: 0, ..spec };
        assert!(zero.true_beta().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn null_predictor_rule() {
        let spec = DesignSpec { design: Design::Orthogonal, n: 10, p: 10, s: 5, seed: 0 };
        assert_eq!(spec.null_predictors(), vec![5, 6, 7, 8, 9]);
        let r = DesignSpec { design: Design::Redundant1, s: 5, ..spec };
        assert_eq!(r.null_predictors(), vec![5, 6, 7, 8, 9]);
        let big = DesignSpec { design: Design::Redundant2, p: 100, ..spec };
        assert_eq!(big.null_predictors(), vec![50, 51, 52, 53, 54]);
    }

    #[test]
    fn odd_p_rejected_for_redundant() {
        let spec = DesignSpec { design: Design::Redundant1, n: 10, p: 7, s: 2, seed: 0 };
        assert!(generate_design::<f64>(&spec).is_err());
    }

    #[test]
    fn ks_distance() {
        assert!((ks_uniform(&[0.5]) - 0.5).abs() < 1e-15);
        let grid: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_uniform(&grid) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn parsing() {
        assert_eq!("Redundant-I".parse::<Design>().unwrap(), Design::Redundant1);
        assert_eq!("post-selection".parse::<Method>().unwrap(), Method::PostSelection);
    }
}
