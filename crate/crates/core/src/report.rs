//! Rendering of analysis reports as a fixed-width table, CSV or JSON.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{ModelColumn, NextDoorReport};
use crate::error::{NextDoorError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Text,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = NextDoorError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(NextDoorError::invalid(format!("unknown report format `{other}`"))),
        }
    }
}

/// Table cells: row label then one cell per column. `None` renders blank.
struct Table {
    header: Vec<String>,
    rows: Vec<(String, Vec<Option<String>>)>,
}

fn build_table<T: Scalar>(r: &NextDoorReport<T>, fmt_num: &dyn Fn(T) -> String) -> Table {
    let cols = r.ordered_columns();
    let header = cols.iter().map(|c| c.label.clone()).collect();
    let mut rows = Vec::new();
    let shown: Vec<usize> =
        (0..r.predictors.len()).filter(|&j| cols.iter().any(|c| c.coefficients[j] != T::zero())).collect();
    for j in shown {
        let cells = cols.iter().map(|c| (c.coefficients[j] != T::zero()).then(|| fmt_num(c.coefficients[j]))).collect();
        rows.push((r.predictors[j].clone(), cells));
    }
    let mut add = |label: &str, get: &dyn Fn(&ModelColumn<T>) -> Option<String>| {
        rows.push((label.to_string(), cols.iter().map(|c| get(c)).collect()));
    };
    add("cv_error", &|c| Some(fmt_num(c.cv_error)));
    add("debiased_error", &|c| Some(fmt_num(c.debiased_error)));
    if cols.iter().any(|c| c.test_error.is_some()) {
        add("test_error", &|c| c.test_error.map(fmt_num));
    }
    if !r.proximal.is_empty() {
        add("selection_frequency", &|c| c.selection_frequency.map(fmt_num));
        add("model_pvalue", &|c| c.model_pvalue.map(fmt_num));
        add("model_score", &|c| {
            c.model_score.map(|s| match s.value() {
                Some(v) => fmt_num(v),
                None => s.to_string(),
            })
        });
        add("post_selection_pvalue", &|c| c.post_selection_pvalue.map(fmt_num));
    }
    Table { header, rows }
}

/// Fixed-width table, numbers to three decimals.
pub fn render_text<T: Scalar>(r: &NextDoorReport<T>) -> String {
    let table = build_table(r, &|v: T| format!("{:.3}", v.as_f64()));
    let label_w = table.rows.iter().map(|(l, _)| l.len()).chain([5]).max().unwrap_or(5);
    let widths: Vec<usize> = (0..table.header.len())
        .map(|c| {
            table
                .rows
                .iter()
                .filter_map(|(_, cells)| cells[c].as_ref().map(String::len))
                .chain([table.header[c].len(), 6])
                .max()
                .unwrap_or(6)
        })
        .collect();
    let mut out = String::new();
    let _ = write!(out, "{:<label_w$}", "model");
    for (h, w) in table.header.iter().zip(&widths) {
        let _ = write!(out, "  {h:>w$}");
    }
    out.push('\n');
    for (label, cells) in &table.rows {
        let _ = write!(out, "{label:<label_w$}");
        for (cell, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", cell.as_deref().unwrap_or(""));
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "\nlambda = {:.6} (index {} of {}), selection entropy = {:.3}",
        r.lambda.as_f64(),
        r.chosen_lambda_index + 1,
        r.grid.len(),
        r.selection_entropy
    );
    if let Some(n) = &r.notice {
        let _ = writeln!(out, "note: {n}");
    }
    out
}

/// Same table as [`render_text`] at full precision.
pub fn render_csv<T: Scalar>(r: &NextDoorReport<T>) -> Result<String> {
    let table = build_table(r, &|v: T| v.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(std::iter::once("model").chain(table.header.iter().map(String::as_str)))?;
    for (label, cells) in &table.rows {
        w.write_record(std::iter::once(label.as_str()).chain(cells.iter().map(|c| c.as_deref().unwrap_or(""))))?;
    }
    let bytes = w.into_inner().map_err(|e| NextDoorError::data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| NextDoorError::data(e.to_string()))
}

pub fn render_json<T: Scalar>(r: &NextDoorReport<T>) -> Result<String> {
    Ok(serde_json::to_string_pretty(r)?)
}

pub fn render<T: Scalar>(r: &NextDoorReport<T>, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Text => Ok(render_text(r)),
        ReportFormat::Csv => render_csv(r),
        ReportFormat::Json => render_json(r),
    }
}

pub fn write_report<T: Scalar>(r: &NextDoorReport<T>, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let body = render(r, format)?;
    std::fs::write(path, body).map_err(|source| NextDoorError::Io { path: path.display().to_string(), source })
}

pub fn read_report<T: Scalar>(path: impl AsRef<Path>) -> Result<NextDoorReport<T>> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path)
        .map_err(|source| NextDoorError::Io { path: path.display().to_string(), source })?;
    Ok(serde_json::from_str(&body)?)
}
