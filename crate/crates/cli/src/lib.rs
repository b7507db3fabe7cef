//! Experiment runner for `dyadic-lab`: weight-family sweeps, log-log scaling
//! fits, lemma campaigns, and CSV/JSON reporting.
//!
//! The CSV has the fixed columns [`CSV_COLUMNS`], one row per
//! `(family, param, seed, depth)` in configuration order; quantities that
//! were not requested or could not be computed are empty cells. The JSON
//! summary (`schema_version` [`SCHEMA_VERSION`]) carries every row in full,
//! the fitted slopes, the largest ratios, per-row errors and the violated
//! invariants.

pub mod config;
pub mod sweep;

use std::collections::BTreeMap;
use std::io::Write;

use dyadic_lab::fit_slope;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{Experiment, Family, NormChoice, SweepConfig, SWEEP_MAX_DEPTH};
pub use sweep::{build_weight, compute_row, provenance, read_weight, row_keys, Row, RowKey};

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 10] = [
    "family",
    "param",
    "seed",
    "depth",
    "Q",
    "key_sum_max",
    "termI_max",
    "carleson_norm",
    "vavo_ratio_max",
    "duality_ratio_max",
];

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    pub used: usize,
    pub excluded_zero: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    pub row: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub row: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub config: SweepConfig,
    pub rows: Vec<Row>,
    /// Log-log slope of each quantity against `Q`.
    pub fits: BTreeMap<String, FitEntry>,
    /// Largest normalized values over the rows.
    pub max_ratios: BTreeMap<String, Option<f64>>,
    pub errors: Vec<RowError>,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<Row>,
    pub summary: Summary,
}

impl SweepOutput {
    pub fn has_violations(&self) -> bool {
        !self.summary.violations.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SweepError> {
        write_csv(&self.rows, out)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<(), SweepError> {
        serde_json::to_writer_pretty(out, &self.summary)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct CsvRecord<'a> {
    family: &'a str,
    param: f64,
    seed: u64,
    depth: u32,
    #[serde(rename = "Q")]
    q: Option<f64>,
    key_sum_max: Option<f64>,
    #[serde(rename = "termI_max")]
    term_i_max: Option<f64>,
    carleson_norm: Option<f64>,
    vavo_ratio_max: Option<f64>,
    duality_ratio_max: Option<f64>,
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<(), SweepError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.serialize(CsvRecord {
            family: &r.family,
            param: r.param,
            seed: r.seed,
            depth: r.depth,
            q: r.q,
            key_sum_max: r.key_sum_max,
            term_i_max: r.term_i_max,
            carleson_norm: r.carleson_norm,
            vavo_ratio_max: r.vavo_ratio_max,
            duality_ratio_max: r.duality_ratio_max,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every row of `cfg` (in parallel when `jobs` allows) and assembles
/// the summary. Rows keep configuration order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput, SweepError> {
    cfg.validate()?;
    let keys = row_keys(cfg);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| SweepError::Usage(format!("cannot start {:?} workers: {e}", cfg.jobs)))?;
    let rows: Vec<Row> = pool.install(|| keys.par_iter().map(|k| compute_row(cfg, k)).collect());
    let summary = summarize(cfg, &rows);
    Ok(SweepOutput { rows, summary })
}

fn fit_of(rows: &[Row], value: impl Fn(&Row) -> Option<f64>) -> FitEntry {
    let pairs: Vec<(f64, f64)> = rows.iter().filter_map(|r| Some((r.q?, value(r)?))).collect();
    match fit_slope(&pairs) {
        Ok(f) => FitEntry {
            slope: Some(f.slope),
            intercept: Some(f.intercept),
            r2: Some(f.r2),
            used: f.used,
            excluded_zero: f.excluded_zero,
            error: None,
        },
        Err(e) => FitEntry {
            slope: None,
            intercept: None,
            r2: None,
            used: 0,
            excluded_zero: pairs.iter().filter(|p| p.1 == 0.0).count(),
            error: Some(e.to_string()),
        },
    }
}

fn max_of(rows: &[Row], value: impl Fn(&Row) -> Option<f64>) -> Option<f64> {
    rows.iter().filter_map(value).fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

pub fn summarize(cfg: &SweepConfig, rows: &[Row]) -> Summary {
    let mut fits = BTreeMap::new();
    fits.insert("shift_norm".to_string(), fit_of(rows, |r| r.shift_norm));
    fits.insert("key_sum_max".to_string(), fit_of(rows, |r| r.key_sum_max));
    fits.insert("termI_max".to_string(), fit_of(rows, |r| r.term_i_max));
    fits.insert("carleson_norm".to_string(), fit_of(rows, |r| r.carleson_norm));

    let mut max_ratios = BTreeMap::new();
    let over = |v: Option<f64>, d: Option<f64>| Some(v? / d?);
    max_ratios.insert("shift_norm_over_q".to_string(), max_of(rows, |r| over(r.shift_norm, r.q)));
    max_ratios.insert("key_sum_max_over_q".to_string(), max_of(rows, |r| over(r.key_sum_max, r.q)));
    max_ratios.insert("termI_max_over_sqrt_q".to_string(), max_of(rows, |r| over(r.term_i_max, r.q.map(f64::sqrt))));
    max_ratios.insert("carleson_norm_over_q".to_string(), max_of(rows, |r| over(r.carleson_norm, r.q)));
    max_ratios.insert("key_over_terms".to_string(), max_of(rows, |r| r.key_over_terms_max));
    max_ratios.insert("ltrick_w_reading".to_string(), max_of(rows, |r| r.ltrick_w_reading_max));
    max_ratios.insert("ltrick_literal_reading".to_string(), max_of(rows, |r| r.ltrick_literal_reading_max));
    max_ratios.insert("vavo_ratio".to_string(), max_of(rows, |r| r.vavo_ratio_max));
    max_ratios.insert("duality_ratio".to_string(), max_of(rows, |r| r.duality_ratio_max));
    max_ratios.insert("carltrick".to_string(), max_of(rows, |r| r.carltrick_max_ratio));
    max_ratios.insert("c_emp".to_string(), max_of(rows, |r| r.c_emp));
    max_ratios.insert("domination".to_string(), max_of(rows, |r| r.domination_ratio_max));

    let errors = rows
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.error.clone().map(|message| RowError { row: k, message }))
        .collect();
    let violations = rows
        .iter()
        .enumerate()
        .flat_map(|(k, r)| r.violations.iter().map(move |m| Violation { row: k, message: m.clone() }))
        .collect();
    Summary {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        rows: rows.to_vec(),
        fits,
        max_ratios,
        errors,
        violations,
    }
}
