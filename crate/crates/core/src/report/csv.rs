//! Per-level history table.

use std::io::Write;

use crate::adapt::{AdaptHistory, LevelRecord};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "level,dof,lambda_h,eta,product,n_elements,min_angle,linf_error,eta_star,wall_ms";

/// Six significant digits with a signed two-digit exponent, e.g. `8.97050E-01`.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.5E}");
    let (mantissa, exponent) = s.split_once('E').expect("exponent marker");
    let e: i32 = exponent.parse().expect("integer exponent");
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mantissa}E{sign}{:02}", e.abs())
}

fn optional(x: Option<f64>) -> String {
    x.map(format_sci).unwrap_or_default()
}

pub fn write_csv<W: Write>(history: &AdaptHistory, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &history.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.level,
            r.dof,
            format_sci(r.lambda_h),
            format_sci(r.eta),
            format_sci(r.product),
            r.n_elements,
            format_sci(r.min_angle),
            optional(r.linf_error),
            optional(r.eta_star),
            optional(r.wall_ms),
        )?;
    }
    Ok(())
}

/// One parsed CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub level: usize,
    pub dof: usize,
    pub lambda_h: f64,
    pub eta: f64,
    pub product: f64,
    pub n_elements: usize,
    pub min_angle: f64,
    pub linf_error: Option<f64>,
    pub eta_star: Option<f64>,
    pub wall_ms: Option<f64>,
}

impl CsvRow {
    /// The row as written for `r`, i.e. rounded to the CSV precision.
    pub fn rounded(r: &LevelRecord) -> Self {
        let round = |x: f64| format_sci(x).parse::<f64>().unwrap_or(x);
        Self {
            level: r.level,
            dof: r.dof,
            lambda_h: round(r.lambda_h),
            eta: round(r.eta),
            product: round(r.product),
            n_elements: r.n_elements,
            min_angle: round(r.min_angle),
            linf_error: r.linf_error.map(round),
            eta_star: r.eta_star.map(round),
            wall_ms: r.wall_ms.map(round),
        }
    }
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(Error::Parse { line: 1, message: "missing or unexpected header".into() }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let bad = |message: String| Error::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(bad(format!("expected 10 fields, found {}", fields.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("{s:?}: {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        let opt = |s: &str| if s.is_empty() { Ok(None) } else { real(s).map(Some) };
        rows.push(CsvRow {
            level: int(fields[0])?,
            dof: int(fields[1])?,
            lambda_h: real(fields[2])?,
            eta: real(fields[3])?,
            product: real(fields[4])?,
            n_elements: int(fields[5])?,
            min_angle: real(fields[6])?,
            linf_error: opt(fields[7])?,
            eta_star: opt(fields[8])?,
            wall_ms: opt(fields[9])?,
        });
    }
    Ok(rows)
}
