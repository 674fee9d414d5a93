//! Writing command output and checking it against its schema.

use std::io::Write;
use std::path::Path;

use crate::{CliError, CliResult};

pub fn f6(v: f64) -> String {
    format!("{v:.6}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Col {
    Float,
    Int,
    Verdict,
    /// `;`-separated 1-based indices.
    Indices,
}

pub type Schema = &'static [(&'static str, Col)];

pub const DETECT_SCHEMA: Schema = &[
    ("window", Col::Int),
    ("pos_x", Col::Float),
    ("pos_y", Col::Float),
    ("decision_value", Col::Float),
    ("verdict", Col::Verdict),
];

pub const RATE_SCHEMA: Schema = &[
    ("t_x", Col::Float),
    ("t_y", Col::Float),
    ("distance", Col::Float),
    ("lambda_t", Col::Float),
    ("delta", Col::Float),
    ("rate", Col::Float),
];

pub const DOMAIN_RATE_SCHEMA: Schema = &[("rate", Col::Float), ("std_error", Col::Float), ("samples", Col::Int)];

pub const OPTIMIZE_SCHEMA: Schema =
    &[("rank", Col::Int), ("ap_indices", Col::Indices), ("area_indices", Col::Indices), ("objective", Col::Float)];

pub const OPTIMIZE_RATE_SCHEMA: Schema = &[
    ("rank", Col::Int),
    ("ap_indices", Col::Indices),
    ("area_indices", Col::Indices),
    ("objective", Col::Float),
    ("rate", Col::Float),
];

pub const FOLDS_SCHEMA: Schema = &[
    ("fold", Col::Int),
    ("tp", Col::Int),
    ("fp", Col::Int),
    ("tn", Col::Int),
    ("fn", Col::Int),
    ("precision", Col::Float),
    ("recall", Col::Float),
    ("f_measure", Col::Float),
    ("target_acceptance", Col::Float),
    ("detection_rate", Col::Float),
];

pub const FIG2_SCHEMA: Schema = &[
    ("lambda_fade", Col::Float),
    ("n_avg", Col::Int),
    ("draws", Col::Int),
    ("single_mean", Col::Float),
    ("single_std", Col::Float),
    ("averaged_std_db", Col::Float),
    ("averaged_std_linear", Col::Float),
];

pub const FIG3_SCHEMA: Schema = &[
    ("distance", Col::Float),
    ("lambda_t", Col::Float),
    ("rate_analytic", Col::Float),
    ("rate_mc_friis", Col::Float),
    ("rate_mc_rayleigh", Col::Float),
    ("se_friis", Col::Float),
    ("se_rayleigh", Col::Float),
];

fn field_ok(col: Col, field: &str) -> bool {
    match col {
        Col::Float => field.parse::<f64>().is_ok_and(f64::is_finite),
        Col::Int => field.parse::<u64>().is_ok(),
        Col::Verdict => field == "target" || field == "non_target",
        Col::Indices => !field.is_empty() && field.split(';').all(|i| i.parse::<usize>().is_ok_and(|v| v >= 1)),
    }
}

/// Parses `text` as CSV with exactly the columns of `schema`; returns the
/// number of data rows.
pub fn check_csv(text: &str, schema: Schema) -> CliResult<usize> {
    let bad = |msg: String| CliError::Usage(format!("self-check failed: {msg}"));
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let names: Vec<&str> = schema.iter().map(|(n, _)| *n).collect();
    if header.iter().collect::<Vec<_>>() != names {
        return Err(bad(format!("header {:?} != {:?}", header.iter().collect::<Vec<_>>(), names)));
    }
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        rows += 1;
        for ((name, col), field) in schema.iter().zip(rec.iter()) {
            if !field_ok(*col, field) {
                return Err(bad(format!("row {rows}: column {name} has invalid value {field:?}")));
            }
        }
    }
    Ok(rows)
}

pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(areawatch::Error::from)?;
    for r in rows {
        w.write_record(r).map_err(areawatch::Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Core(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Writes to `path`, or stdout when absent.
pub fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Optionally validates, then emits a CSV document.
pub fn emit_csv(text: &str, schema: Schema, path: Option<&Path>, check: bool) -> CliResult<()> {
    if check {
        check_csv(text, schema)?;
    }
    emit(text, path)
}
