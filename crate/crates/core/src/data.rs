//! Datasets, CSV ingestion and column standardization.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NextDoorError, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Response family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[default]
    Gaussian,
    Binomial,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gaussian => "gaussian",
            Family::Binomial => "binomial",
        })
    }
}

impl FromStr for Family {
    type Err = NextDoorError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Family::Gaussian),
            "binomial" => Ok(Family::Binomial),
            other => Err(NextDoorError::invalid(format!("unknown family '{other}'"))),
        }
    }
}

/// Predictors, response and optional user fold labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    x: Matrix<T>,
    y: Vec<T>,
    names: Vec<String>,
    family: Family,
    folds: Option<Vec<usize>>,
}

impl<T: Scalar> Dataset<T> {
    /// Validates and builds a dataset. User fold labels are kept as given
    /// (any integers) and relabelled to `0..V` in order of first appearance.
    pub fn new(x: Matrix<T>, y: Vec<T>, names: Vec<String>, family: Family, folds: Option<Vec<i64>>) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(NextDoorError::data(format!("need at least 2 observations, got {n}")));
        }
        if x.ncols() == 0 {
            return Err(NextDoorError::data("no predictors"));
        }
        if y.len() != n {
            return Err(NextDoorError::data(format!("response has length {}, expected {n}", y.len())));
        }
        if names.len() != x.ncols() {
            return Err(NextDoorError::data("number of names does not match number of predictors"));
        }
        if x.as_col_major().iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(NextDoorError::data("missing or non-finite values"));
        }
        if family == Family::Binomial {
            if let Some(i) = y.iter().position(|&v| v != T::zero() && v != T::one()) {
                return Err(NextDoorError::data(format!(
                    "binomial response must be 0 or 1, row {} has {}",
                    i + 1,
                    y[i]
                )));
            }
        }
        let folds = match folds {
            None => None,
            Some(labels) => {
                if labels.len() != n {
                    return Err(NextDoorError::data("fold column length does not match rows"));
                }
                let mut map: HashMap<i64, usize> = HashMap::new();
                let relabelled: Vec<usize> = labels
                    .iter()
                    .map(|l| {
                        let next = map.len();
                        *map.entry(*l).or_insert(next)
                    })
                    .collect();
                if map.len() < 2 {
                    return Err(NextDoorError::data("fold column needs at least 2 distinct labels"));
                }
                Some(relabelled)
            }
        };
        Ok(Dataset { x, y, names, family, folds })
    }

    #[inline]
    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }
    #[inline]
    pub fn y(&self) -> &[T] {
        &self.y
    }
    #[inline]
    pub fn names(&self) -> &[String] {
        &self.names
    }
    #[inline]
    pub fn family(&self) -> Family {
        self.family
    }
    #[inline]
    pub fn folds(&self) -> Option<&[usize]> {
        self.folds.as_deref()
    }
    #[inline]
    pub fn n(&self) -> usize {
        self.x.nrows()
    }
    #[inline]
    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Rows `rows` (repeats allowed), keeping fold labels.
    pub fn subset(&self, rows: &[usize]) -> Self {
        Dataset {
            x: self.x.select_rows(rows),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            names: self.names.clone(),
            family: self.family,
            folds: self.folds.as_ref().map(|f| rows.iter().map(|&i| f[i]).collect()),
        }
    }

    pub(crate) fn with_parts(&self, x: Matrix<T>, y: Vec<T>) -> Self {
        Dataset { x, y, names: self.names.clone(), family: self.family, folds: self.folds.clone() }
    }
}

/// Record of the centering and scaling applied by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization<T> {
    pub means: Vec<T>,
    pub scales: Vec<T>,
    /// Subtracted from a gaussian response; zero for binomial.
    pub response_mean: T,
}

impl<T: Scalar> Standardization<T> {
    /// Maps standardized-scale coefficients back to the raw scale.
    pub fn destandardize(&self, beta: &[T], intercept: T) -> (Vec<T>, T) {
        let raw: Vec<T> = beta.iter().zip(&self.scales).map(|(&b, &s)| b / s).collect();
        let shift: T = raw.iter().zip(&self.means).map(|(&b, &m)| b * m).sum();
        (raw, intercept + self.response_mean - shift)
    }

    /// Applies the same transform to new raw predictors.
    pub fn apply(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut out = x.clone();
        for j in 0..x.ncols() {
            let (m, s) = (self.means[j], self.scales[j]);
            out.col_mut(j).iter_mut().for_each(|v| *v = (*v - m) / s);
        }
        out
    }
}

/// Linear predictor `intercept + x beta` on raw data.
pub fn linear_predictor<T: Scalar>(x: &Matrix<T>, beta: &[T], intercept: T) -> Vec<T> {
    let mut eta = vec![intercept; x.nrows()];
    for (j, &b) in beta.iter().enumerate() {
        if b != T::zero() {
            for (e, &v) in eta.iter_mut().zip(x.col(j)) {
                *e += b * v;
            }
        }
    }
    eta
}

fn column_moments<T: Scalar>(col: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(col.len());
    let mean = col.iter().copied().sum::<T>() / n;
    let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    (mean, var.sqrt())
}

fn is_degenerate<T: Scalar>(col: &[T], scale: T) -> bool {
    let max_abs = col.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    scale <= T::epsilon() * T::lit(16.0) * max_abs.max(T::min_positive_value())
}

/// Centers each predictor and scales it to mean-square one (1/n convention);
/// a gaussian response is centered.
pub fn standardize<T: Scalar>(d: &Dataset<T>) -> Result<(Dataset<T>, Standardization<T>)> {
    let (sd, st, constant) = standardize_lenient(d);
    if let Some(&j) = constant.first() {
        return Err(NextDoorError::data(format!("predictor '{}' has zero variance", d.names[j])));
    }
    Ok((sd, st))
}

/// Like [`standardize`] but tolerates constant columns: they are centered to
/// zero, given scale one, and reported so callers can exclude them.
pub(crate) fn standardize_lenient<T: Scalar>(d: &Dataset<T>) -> (Dataset<T>, Standardization<T>, Vec<usize>) {
    let p = d.p();
    let mut means = Vec::with_capacity(p);
    let mut scales = Vec::with_capacity(p);
    let mut constant = Vec::new();
    for j in 0..p {
        let (m, s) = column_moments(d.x.col(j));
        if is_degenerate(d.x.col(j), s) {
            constant.push(j);
            means.push(m);
            scales.push(T::one());
        } else {
            means.push(m);
            scales.push(s);
        }
    }
    let response_mean = match d.family {
        Family::Gaussian => crate::scalar::mean(&d.y),
        Family::Binomial => T::zero(),
    };
    let st = Standardization { means, scales, response_mean };
    let mut x = st.apply(&d.x);
    for &j in &constant {
        x.col_mut(j).iter_mut().for_each(|v| *v = T::zero());
    }
    let y = d.y.iter().map(|&v| v - response_mean).collect();
    (d.with_parts(x, y), st, constant)
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    let s = raw.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") {
        return Err(NextDoorError::data(format!("missing value in column '{column}', row {row}")));
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| NextDoorError::data(format!("non-numeric value '{s}' in column '{column}', row {row}")))
}

/// Loads a comma-separated file with a header row. Every column other than
/// the response and the optional fold column becomes a predictor.
pub fn load_csv<T: Scalar>(
    path: impl AsRef<Path>,
    response: &str,
    family: Family,
    fold_col: Option<&str>,
) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file =
        std::fs::File::open(path).map_err(|source| NextDoorError::Io { path: path.display().to_string(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let resp_idx = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| NextDoorError::data(format!("response column '{response}' not found")))?;
    let fold_idx = match fold_col {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| NextDoorError::data(format!("fold column '{name}' not found")))?,
        ),
        None => None,
    };
    let pred_idx: Vec<usize> = (0..headers.len()).filter(|&i| i != resp_idx && Some(i) != fold_idx).collect();
    if pred_idx.is_empty() {
        return Err(NextDoorError::data("no predictors"));
    }
    let mut columns: Vec<Vec<T>> = vec![Vec::new(); pred_idx.len()];
    let mut y = Vec::new();
    let mut folds = fold_idx.map(|_| Vec::new());
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != headers.len() {
            return Err(NextDoorError::data(format!(
                "row {row} has {} fields, expected {}",
                record.len(),
                headers.len()
            )));
        }
        for (c, &i) in pred_idx.iter().enumerate() {
            columns[c].push(T::lit(parse_cell(&record[i], row, &headers[i])?));
        }
        y.push(T::lit(parse_cell(&record[resp_idx], row, response)?));
        if let (Some(fi), Some(f)) = (fold_idx, folds.as_mut()) {
            let v = parse_cell(&record[fi], row, &headers[fi])?;
            if v.fract() != 0.0 {
                return Err(NextDoorError::data(format!(
                    "fold label '{}' in row {row} is not an integer",
                    &record[fi]
                )));
            }
            f.push(v as i64);
        }
    }
    let names: Vec<String> = pred_idx.iter().map(|&i| headers[i].clone()).collect();
    for (c, col) in columns.iter().enumerate() {
        let (_, s) = column_moments(col);
        if col.len() >= 2 && is_degenerate(col, s) {
            return Err(NextDoorError::data(format!("predictor '{}' is constant", names[c])));
        }
    }
    let n = y.len();
    let x = Matrix::from_columns(n, &columns)?;
    Dataset::new(x, y, names, family, folds)
}
