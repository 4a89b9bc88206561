//! Test-set metrics, benchmark report assembly, table emission and
//! cross-model improvement statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::WindowSampler;
use crate::error::{Error, Result};
use crate::models::{forward, ModelState};

/// Report CSV/markdown schema version.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
}

/// MSE/MAE over every window, horizon step and channel, in standardized space.
///
/// Errors are accumulated in window order, so the result does not depend on
/// `batch_size`.
pub fn evaluate(state: &ModelState, windows: &WindowSampler<'_>, batch_size: usize) -> Result<Metrics> {
    if windows.is_empty() {
        return Err(Error::EmptyWindows);
    }
    let batch_size = batch_size.max(1);
    let (mut sq, mut abs, mut count) = (0.0, 0.0, 0usize);
    let indices: Vec<usize> = (0..windows.len()).collect();
    for chunk in indices.chunks(batch_size) {
        let (x, y) = windows.batch(chunk);
        let (pred, _) = forward(state, &x)?;
        for (p, t) in pred.data().iter().zip(y.data()) {
            let d = p - t;
            sq += d * d;
            abs += d.abs();
        }
        count += y.len();
    }
    Ok(Metrics {
        mse: sq / count as f64,
        mae: abs / count as f64,
    })
}

/// One computed cell of a benchmark grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dataset: String,
    pub horizon: usize,
    pub model: String,
    pub mse: f64,
    pub mae: f64,
    /// Standard deviation across seeds when more than one seed ran.
    pub mse_std: Option<f64>,
    pub mae_std: Option<f64>,
    pub seeds: Vec<u64>,
    pub runtime_s: f64,
}

/// A published value shown for context. Never produced by this code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotedRow {
    pub task: String,
    pub dataset: String,
    pub horizon: usize,
    pub model: String,
    pub mse: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub dataset: String,
    pub horizon: usize,
    pub model: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub quoted: Vec<QuotedRow>,
    pub failures: Vec<CellFailure>,
}

const QUOTED_REFERENCE: &str = include_str!("../resources/quoted_reference.csv");

/// Published reference numbers for `task` ("univariate" or "multivariate").
pub fn quoted_reference(task: &str) -> Vec<QuotedRow> {
    let mut reader = csv::Reader::from_reader(QUOTED_REFERENCE.as_bytes());
    reader
        .deserialize::<QuotedRow>()
        .map(|r| r.expect("embedded reference table is well formed"))
        .filter(|r| r.task == task)
        .collect()
}

impl BenchReport {
    fn cells(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for r in &self.rows {
            let key = (r.dataset.clone(), r.horizon);
            if !out.contains(&key) {
                out.push(key);
            }
        }
        out
    }

    fn models(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.model) {
                out.push(r.model.clone());
            }
        }
        out
    }

    fn quoted_models(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for q in &self.quoted {
            if !out.contains(&q.model) {
                out.push(q.model.clone());
            }
        }
        out
    }

    pub fn row(&self, dataset: &str, horizon: usize, model: &str) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.horizon == horizon && r.model == model)
    }

    /// Keeps only quoted rows whose (dataset, horizon) cell was computed.
    pub fn attach_quoted(&mut self, quoted: Vec<QuotedRow>) {
        let cells = self.cells();
        self.quoted = quoted
            .into_iter()
            .filter(|q| cells.iter().any(|(d, h)| d.eq_ignore_ascii_case(&q.dataset) && *h == q.horizon))
            .collect();
    }

    /// `(best_mse, best_mae)` flags for a computed row: every model that
    /// attains the minimum within its cell is flagged.
    pub fn best_flags(&self, row: &BenchRow) -> (bool, bool) {
        let peers = self
            .rows
            .iter()
            .filter(|r| r.dataset == row.dataset && r.horizon == row.horizon);
        let (min_mse, min_mae) = peers.fold((f64::INFINITY, f64::INFINITY), |(a, b), r| {
            (a.min(r.mse), b.min(r.mae))
        });
        (row.mse == min_mse, row.mae == min_mae)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

/// Renders the report. Minima among computed models are bold in markdown and
/// flagged in CSV; quoted columns are labeled and never flagged.
pub fn emit_table(report: &BenchReport, format: TableFormat) -> String {
    match format {
        TableFormat::Markdown => emit_markdown(report),
        TableFormat::Csv => emit_csv(report),
    }
}

fn fmt_metric(v: f64, best: bool) -> String {
    if best {
        format!("**{v:.4}**")
    } else {
        format!("{v:.4}")
    }
}

fn emit_markdown(report: &BenchReport) -> String {
    let models = report.models();
    let quoted = report.quoted_models();
    let mut out = String::new();
    let mut header = vec!["Dataset".to_string(), "T".to_string()];
    for m in &models {
        header.push(format!("{m} MSE"));
        header.push(format!("{m} MAE"));
    }
    for m in &quoted {
        header.push(format!("{m} MSE (quoted)"));
        header.push(format!("{m} MAE (quoted)"));
    }
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}|", vec!["---"; header.len()].join("|"));
    for (dataset, horizon) in report.cells() {
        let mut line = vec![dataset.clone(), horizon.to_string()];
        for m in &models {
            match report.row(&dataset, horizon, m) {
                Some(r) => {
                    let (bm, ba) = report.best_flags(r);
                    line.push(fmt_metric(r.mse, bm));
                    line.push(fmt_metric(r.mae, ba));
                }
                None => line.extend(["-".to_string(), "-".to_string()]),
            }
        }
        for m in &quoted {
            match report
                .quoted
                .iter()
                .find(|q| q.dataset.eq_ignore_ascii_case(&dataset) && q.horizon == horizon && &q.model == m)
            {
                Some(q) => line.extend([format!("{:.3}", q.mse), format!("{:.3}", q.mae)]),
                None => line.extend(["-".to_string(), "-".to_string()]),
            }
        }
        let _ = writeln!(out, "| {} |", line.join(" | "));
    }
    if !report.failures.is_empty() {
        let _ = writeln!(out, "\nFailed cells:\n");
        for f in &report.failures {
            let _ = writeln!(out, "- {} T={} {}: {}", f.dataset, f.horizon, f.model, f.error);
        }
    }
    out
}

pub const CSV_HEADER: &str =
    "dataset,horizon,model,source,mse,mae,mse_std,mae_std,seeds,runtime_s,best_mse,best_mae";

fn emit_csv(report: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for r in &report.rows {
        let (bm, ba) = report.best_flags(r);
        let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(
            out,
            "{},{},{},computed,{:.6},{:.6},{},{},{},{:.3},{},{}",
            r.dataset,
            r.horizon,
            r.model,
            r.mse,
            r.mae,
            opt(r.mse_std),
            opt(r.mae_std),
            seeds.join(";"),
            r.runtime_s,
            bm,
            ba
        );
    }
    for q in &report.quoted {
        let _ = writeln!(
            out,
            "{},{},{},quoted,{:.3},{:.3},,,,,,",
            q.dataset, q.horizon, q.model, q.mse, q.mae
        );
    }
    out
}

/// Mean relative reduction `(base - new) / base` over shared cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub mse: f64,
    pub mae: f64,
    pub cells: usize,
}

pub fn improvement(report: &BenchReport, base_model: &str, new_model: &str) -> Result<Improvement> {
    let mut missing = Vec::new();
    let mut pairs = BTreeMap::new();
    for (dataset, horizon) in report.cells() {
        let base = report.row(&dataset, horizon, base_model);
        let new = report.row(&dataset, horizon, new_model);
        match (base, new) {
            (Some(b), Some(n)) => {
                pairs.insert((dataset, horizon), (b, n));
            }
            (b, n) => {
                if b.is_none() {
                    missing.push(format!("{dataset}/{horizon}/{base_model}"));
                }
                if n.is_none() {
                    missing.push(format!("{dataset}/{horizon}/{new_model}"));
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingCells(missing));
    }
    if pairs.is_empty() {
        return Err(Error::MissingCells(vec![format!("{base_model} vs {new_model}: no cells")]));
    }
    let n = pairs.len() as f64;
    let (mut mse, mut mae) = (0.0, 0.0);
    for (b, x) in pairs.values() {
        mse += (b.mse - x.mse) / b.mse;
        mae += (b.mae - x.mae) / b.mae;
    }
    Ok(Improvement {
        mse: mse / n,
        mae: mae / n,
        cells: pairs.len(),
    })
}
