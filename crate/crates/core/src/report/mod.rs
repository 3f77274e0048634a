//! Analytic benchmark, error measurement, rate fits and output artifacts.

mod bands;
mod csv;
mod svg;

use std::io::Write;

use crate::adapt::AdaptHistory;
use crate::eigensolve::EigenSolution;
use crate::error::{Error, Result};
use crate::mesh::{DomainKind, Point};

pub use bands::{check_bands, BandCheck, BandReport, BandRow, BAND_MIN_DOF, BAND_MIN_LEVELS};
pub use csv::{format_sci, parse_csv, write_csv, CsvRow, CSV_HEADER};
pub use svg::write_svg;

/// A domain with a closed-form first eigenpair, `‖u‖_L² = 1`.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticBenchmark {
    pub kind: DomainKind,
    pub lambda_exact: f64,
    pub u_exact: fn(Point) -> f64,
}

fn square_mode(p: Point) -> f64 {
    std::f64::consts::FRAC_2_PI * p[0].sin() * p[1].sin()
}

impl AnalyticBenchmark {
    /// `(0,π)²`: `λ = 2`, `u = (2/π) sin x sin y`.
    pub fn square() -> Self {
        Self { kind: DomainKind::UnitPiSquare, lambda_exact: 2.0, u_exact: square_mode }
    }
}

/// Lattice subdivisions per element for [`linf_error`].
pub const LATTICE: usize = 15;

/// `max |σ u − u_h|` over a barycentric lattice of `LATTICE` subdivisions in
/// every element, with `σ = ±1` matching the sign of `(u_h, I_h u)_M`.
pub fn linf_error(sol: &EigenSolution, bench: &AnalyticBenchmark) -> Result<f64> {
    linf_error_with(sol, bench, LATTICE)
}

pub fn linf_error_with(sol: &EigenSolution, bench: &AnalyticBenchmark, lattice: usize) -> Result<f64> {
    let space = sol.u_h.space();
    let mesh = space.mesh();
    if mesh.domain() != Some(bench.kind) {
        return Err(Error::Argument(format!(
            "benchmark is on the {} domain but the mesh is on {}",
            bench.kind,
            mesh.domain().map_or("an unknown domain".to_string(), |d| d.to_string())
        )));
    }
    if lattice == 0 {
        return Err(Error::Argument("lattice needs at least one subdivision".into()));
    }
    let m = space.assemble_mass_raw()?;
    let interpolant = space.interpolate(bench.u_exact);
    let sigma = if m.quad_form(sol.u_h.coeffs(), interpolant.coeffs()) < 0.0 { -1.0 } else { 1.0 };

    let n = lattice as f64;
    let mut worst: f64 = 0.0;
    for k in 0..mesh.n_triangles() {
        let p = mesh.corners(k);
        for i in 0..=lattice {
            for j in 0..=lattice - i {
                let b = [i as f64 / n, j as f64 / n, (lattice - i - j) as f64 / n];
                let x = [
                    b[0] * p[0][0] + b[1] * p[1][0] + b[2] * p[2][0],
                    b[0] * p[0][1] + b[1] * p[1][1] + b[2] * p[2][1],
                ];
                let e = (sigma * (bench.u_exact)(x) - sol.u_h.evaluate_unchecked(k, b)).abs();
                worst = worst.max(e);
            }
        }
    }
    Ok(worst)
}

/// Least-squares line through `(ln N_j, ln η_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Levels that entered the fit.
    pub levels_used: Vec<usize>,
    pub r_squared: f64,
}

/// Fits the records with `dof ≥ warmup_dof`; needs at least three.
pub fn fit_rate(history: &AdaptHistory, warmup_dof: usize) -> Result<RateFit> {
    let used: Vec<_> = history.records.iter().filter(|r| r.dof >= warmup_dof && r.eta > 0.0).collect();
    if used.len() < 3 {
        return Err(Error::Argument(format!(
            "rate fit needs at least 3 levels with N >= {warmup_dof}, found {}",
            used.len()
        )));
    }
    let x: Vec<f64> = used.iter().map(|r| (r.dof as f64).ln()).collect();
    let y: Vec<f64> = used.iter().map(|r| r.eta.ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&x, &y);
    Ok(RateFit { slope, intercept, levels_used: used.iter().map(|r| r.level).collect(), r_squared })
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r_squared)
}

pub fn write_json<W: Write>(history: &AdaptHistory, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, history)?;
    Ok(())
}

pub fn parse_json(text: &str) -> Result<AdaptHistory> {
    let history: AdaptHistory = serde_json::from_str(text)?;
    if history.schema != crate::adapt::HISTORY_SCHEMA {
        return Err(Error::Parse { line: 1, message: format!("unknown schema {:?}", history.schema) });
    }
    Ok(history)
}
