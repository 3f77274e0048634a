//! Empirical equivalence checks on an analytic-benchmark history.

use crate::adapt::AdaptHistory;
use crate::error::{Error, Result};

/// Levels below this dof count are treated as pre-asymptotic.
pub const BAND_MIN_DOF: usize = 500;
/// Minimum number of usable levels.
pub const BAND_MIN_LEVELS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct BandRow {
    pub level: usize,
    pub dof: usize,
    pub eta: f64,
    pub linf_error: f64,
    /// `‖e_h‖∞ / η`.
    pub reliability: f64,
    /// `η / ‖e_h‖∞`.
    pub efficiency: f64,
    /// `η* / η`, when recorded.
    pub star_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandCheck {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandReport {
    pub rows: Vec<BandRow>,
    pub checks: Vec<BandCheck>,
}

impl BandReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Evaluates the sandwich `η ≲ ‖e_h‖∞ ≲ |ln h| η` and the `η*/η` band on
/// the levels with `dof ≥ min_dof`. Fails if the history has no exact error.
pub fn check_bands(history: &AdaptHistory, min_dof: usize) -> Result<BandReport> {
    let mut rows = Vec::new();
    for r in history.records.iter().filter(|r| r.dof >= min_dof) {
        let e = r
            .linf_error
            .ok_or_else(|| Error::Argument(format!("level {} has no exact error recorded", r.level)))?;
        rows.push(BandRow {
            level: r.level,
            dof: r.dof,
            eta: r.eta,
            linf_error: e,
            reliability: e / r.eta,
            efficiency: r.eta / e,
            star_ratio: r.eta_star.map(|s| s / r.eta),
        });
    }

    let mut checks = Vec::new();
    checks.push(BandCheck {
        name: "levels",
        pass: rows.len() >= BAND_MIN_LEVELS,
        detail: format!("{} levels with N >= {min_dof} (need {BAND_MIN_LEVELS})", rows.len()),
    });
    if !rows.is_empty() {
        let rel: Vec<f64> = rows.iter().map(|r| r.reliability).collect();
        let (lo, hi) = rel.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        checks.push(BandCheck {
            name: "reliability band",
            pass: hi / lo <= 5.0,
            detail: format!("e/eta in [{lo:.4e}, {hi:.4e}], spread {:.3} (limit 5)", hi / lo),
        });
        let eff: Vec<f64> = rows.iter().map(|r| r.efficiency).collect();
        let max = eff.iter().copied().fold(0.0, f64::max);
        let med = median(eff);
        checks.push(BandCheck {
            name: "efficiency bound",
            pass: max <= 2.0 * med,
            detail: format!("max eta/e {max:.4} vs 2 x median {:.4}", 2.0 * med),
        });
        let star: Vec<f64> = rows.iter().filter_map(|r| r.star_ratio).collect();
        if !star.is_empty() {
            let max = star.iter().copied().fold(0.0, f64::max);
            let last = *star.last().unwrap();
            let med = median(star);
            checks.push(BandCheck {
                name: "eta* band",
                pass: max <= 10.0 && last <= 2.0 * med,
                detail: format!("max eta*/eta {max:.4} (limit 10), last {last:.4} vs 2 x median {:.4}", 2.0 * med),
            });
        }
    }
    Ok(BandReport { rows, checks })
}
