//! The adaptive loop: Solve → Estimate → Mark → Refine.
//!
//! Marking is the maximum strategy, `{K : η_K ≥ θ η}`. The loop stops once
//! the free-dof count reaches `max_dof`, after `level_cap` levels, or when
//! refinement leaves the mesh unchanged.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::eigensolve::{self, EigenOptions, EigenPair, EigenSolution};
use crate::error::{Error, Result};
use crate::estimator::{self, CrBoundaryJump, ElementSize, EstimatorOptions, IndicatorField};
use crate::mesh::{self, generate, DomainKind, DomainSpec};
use crate::report::{self, AnalyticBenchmark};
use crate::space::{ElementKind, FeSpace, SparseMatrix};

pub const HISTORY_SCHEMA: &str = "adapt-history-v1";

/// Environment switch for expensive cross-checks during a run.
pub const SEED_CHECKS_ENV: &str = "EIGEN_POINTWISE_SEED_CHECKS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptConfig {
    pub domain: DomainSpec,
    pub element: ElementKind,
    pub theta: f64,
    pub max_dof: usize,
    pub level_cap: usize,
    pub eigen_tol: f64,
    pub compute_exact_error: bool,
    pub compute_eta_star: bool,
    pub cr_boundary_jump: CrBoundaryJump,
    pub element_size: ElementSize,
    pub gamma_monitor: f64,
    /// Fill `wall_ms`; off by default so artifacts are reproducible byte for byte.
    pub record_timing: bool,
    /// Ablation switch for `verify`.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub drop_volume_term: bool,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::default_for(DomainKind::LShape),
            element: ElementKind::P1,
            theta: 0.7,
            max_dof: 30_000,
            level_cap: 200,
            eigen_tol: eigensolve::DEFAULT_TOL,
            compute_exact_error: false,
            compute_eta_star: false,
            cr_boundary_jump: CrBoundaryJump::Tangential,
            element_size: ElementSize::Diameter,
            gamma_monitor: 2.0,
            record_timing: false,
            drop_volume_term: false,
        }
    }
}

impl AdaptConfig {
    pub fn for_domain(kind: DomainKind) -> Self {
        Self { domain: DomainSpec::default_for(kind), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Config(format!("theta must lie in (0, 1), got {}", self.theta)));
        }
        if self.max_dof == 0 {
            return Err(Error::Config("max_dof must be positive".into()));
        }
        if self.level_cap == 0 {
            return Err(Error::Config("level_cap must be positive".into()));
        }
        if !(self.eigen_tol > 0.0 && self.eigen_tol <= 1e-6) {
            return Err(Error::Config(format!("eigen_tol must lie in (0, 1e-6], got {}", self.eigen_tol)));
        }
        if !(self.gamma_monitor.is_finite() && self.gamma_monitor > 0.0) {
            return Err(Error::Config(format!("gamma_monitor must be positive, got {}", self.gamma_monitor)));
        }
        let analytic = self.domain.kind == DomainKind::UnitPiSquare;
        if (self.compute_exact_error || self.compute_eta_star) && !analytic {
            return Err(Error::Config(format!(
                "exact error and eta* need the analytic square benchmark, not the {} domain",
                self.domain.kind
            )));
        }
        Ok(())
    }

    fn estimator_options(&self) -> EstimatorOptions {
        EstimatorOptions {
            cr_boundary_jump: self.cr_boundary_jump,
            element_size: self.element_size,
            drop_volume_term: self.drop_volume_term,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    /// Free degrees of freedom `N_j`.
    pub dof: usize,
    pub lambda_h: f64,
    pub eta: f64,
    /// `dof * eta`.
    pub product: f64,
    pub n_elements: usize,
    /// Degrees.
    pub min_angle: f64,
    pub linf_error: Option<f64>,
    pub eta_star: Option<f64>,
    pub wall_ms: Option<f64>,
    pub n_marked: usize,
    pub grading: f64,
    pub conforming: bool,
    pub eigen_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    DofBudget,
    LevelCap,
    Stagnation,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::DofBudget => "dof_budget",
            StopReason::LevelCap => "level_cap",
            StopReason::Stagnation => "stagnation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptHistory {
    pub schema: String,
    pub config: AdaptConfig,
    pub records: Vec<LevelRecord>,
    /// `None` only for a run aborted by an error.
    pub stop_reason: Option<StopReason>,
}

impl AdaptHistory {
    pub fn new(config: AdaptConfig) -> Self {
        Self { schema: HISTORY_SCHEMA.to_string(), config, records: Vec::new(), stop_reason: None }
    }
}

/// A failed run with everything recorded before the failure.
#[derive(Debug, thiserror::Error)]
#[error("adaptive run failed after {} levels: {error}", history.records.len())]
pub struct AdaptFailure {
    #[source]
    pub error: Error,
    pub history: AdaptHistory,
}

/// Everything known about one level, handed to the observer of
/// [`run_adaptive_with`].
pub struct LevelView<'a> {
    pub record: &'a LevelRecord,
    pub space: &'a FeSpace,
    pub solution: &'a EigenSolution<'a>,
    pub field: &'a IndicatorField,
}

/// `{K : η_K ≥ θ max η}` in increasing order.
pub fn mark(field: &IndicatorField, theta: f64) -> Vec<usize> {
    let eta = field.eta_k.iter().copied().fold(0.0, f64::max);
    let threshold = theta * eta;
    (0..field.len()).filter(|&k| field.eta_k[k] >= threshold).collect()
}

pub fn run_adaptive(config: &AdaptConfig) -> Result<AdaptHistory, AdaptFailure> {
    run_adaptive_with(config, |_| {})
}

pub fn run_adaptive_with(
    config: &AdaptConfig,
    mut observer: impl FnMut(&LevelView),
) -> Result<AdaptHistory, AdaptFailure> {
    let mut history = AdaptHistory::new(config.clone());
    match drive(config, &mut history, &mut observer) {
        Ok(stop) => {
            history.stop_reason = Some(stop);
            Ok(history)
        }
        Err(error) => Err(AdaptFailure { error, history }),
    }
}

fn seed_checks_enabled() -> bool {
    std::env::var(SEED_CHECKS_ENV).is_ok_and(|v| v == "1")
}

fn drive(config: &AdaptConfig, history: &mut AdaptHistory, observer: &mut impl FnMut(&LevelView)) -> Result<StopReason> {
    config.validate()?;
    let opts = config.estimator_options();
    let bench = AnalyticBenchmark::square();
    let checks = seed_checks_enabled();

    let mut mesh = Arc::new(generate(&config.domain)?);
    let mut space = FeSpace::new(mesh.clone(), config.element);
    if config.max_dof < space.n_free() {
        return Err(Error::Config(format!(
            "max_dof = {} is below the initial {} free dofs",
            config.max_dof,
            space.n_free()
        )));
    }
    let mut start: Option<Vec<f64>> = None;
    let mut previous_lambda: Option<f64> = None;

    for level in 0.. {
        let clock = Instant::now();
        let a = space.restrict(&space.assemble_stiffness_raw()?);
        let m = space.restrict(&space.assemble_mass_raw()?);
        let eopts = EigenOptions { tol: config.eigen_tol, start: start.clone(), ..EigenOptions::default() };
        let k = a.dim().min(2);
        let pairs = eigensolve::smallest_eigenpairs_with(&a, &m, k, &eopts)?;
        if pairs.len() == 2 && (pairs[1].lambda - pairs[0].lambda) <= 1e-6 * pairs[0].lambda {
            log::warn!(
                "level {level}: two smallest eigenvalues {} and {} are within 1e-6; the eigenvalue may not be simple",
                pairs[0].lambda,
                pairs[1].lambda
            );
        }
        if checks {
            cross_check(&a, &m, &pairs)?;
        }
        let chosen = eigensolve::track(previous_lambda, pairs)?;
        let chosen = eigensolve::normalize_and_orient(chosen, &m, start.as_deref())?;
        let solution = EigenSolution::from_pair(&space, &chosen);

        let field = estimator::indicators(&solution, &opts)?;
        let eta = estimator::global_eta(&field)?;
        let linf_error =
            if config.compute_exact_error { Some(report::linf_error(&solution, &bench)?) } else { None };
        let eta_star = if config.compute_eta_star {
            // the ablation targets the computable estimator only
            let full = EstimatorOptions { drop_volume_term: false, ..opts };
            Some(estimator::theoretical_estimator(&solution, bench.u_exact, &full)?.eta)
        } else {
            None
        };
        let marked = mark(&field, config.theta);
        let report = mesh.conformity_check();
        if checks && !report.ok {
            return Err(Error::Numeric(format!("level {level} mesh is not conforming: {:?}", report.violations)));
        }

        let dof = space.n_free();
        let mut record = LevelRecord {
            level,
            dof,
            lambda_h: solution.lambda_h,
            eta,
            product: dof as f64 * eta,
            n_elements: mesh.n_triangles(),
            min_angle: mesh::min_angle(&mesh),
            linf_error,
            eta_star,
            wall_ms: None,
            n_marked: marked.len(),
            grading: mesh::grading_monitor(&mesh, config.gamma_monitor),
            conforming: report.ok,
            eigen_residual: solution.residual,
        };
        if config.record_timing {
            record.wall_ms = Some(clock.elapsed().as_secs_f64() * 1e3);
        }
        log::info!("{} {} {:.6e} {:.6e} {:.4}", level, dof, record.lambda_h, eta, record.product);
        observer(&LevelView { record: &record, space: &space, solution: &solution, field: &field });
        history.records.push(record);

        if dof >= config.max_dof {
            return Ok(StopReason::DofBudget);
        }
        if level + 1 >= config.level_cap {
            return Ok(StopReason::LevelCap);
        }

        let refined = mesh.refine(&marked)?;
        if refined.mesh.n_triangles() == mesh.n_triangles() {
            return Ok(StopReason::Stagnation);
        }
        let next_mesh = Arc::new(refined.mesh);
        let next_space = FeSpace::new(next_mesh.clone(), config.element);
        start = Some(prolong(&solution, &next_space, &refined.new_vertices));
        previous_lambda = Some(solution.lambda_h);
        drop(solution);
        mesh = next_mesh;
        space = next_space;
    }
    unreachable!("the level loop only exits by returning")
}

/// Free-dof coefficients of `sol` transferred to the refined space: exact
/// P1 prolongation, and for CR the P1 prolongation of vertex averages sampled
/// at edge midpoints.
pub fn prolong(sol: &EigenSolution, next: &FeSpace, new_vertices: &[(usize, usize, usize)]) -> Vec<f64> {
    let u = &sol.u_h;
    let space = u.space();
    let old = space.mesh();
    let mut vertex = match space.kind() {
        ElementKind::P1 => u.coeffs().to_vec(),
        ElementKind::Cr => {
            let mut sum = vec![0.0; old.n_vertices()];
            let mut count = vec![0usize; old.n_vertices()];
            for k in 0..old.n_triangles() {
                for (v, value) in old.triangles()[k].iter().zip(u.vertex_values(k)) {
                    sum[*v] += value;
                    count[*v] += 1;
                }
            }
            sum.iter().zip(&count).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect()
        }
    };
    vertex.resize(next.mesh().n_vertices(), 0.0);
    for &(m, a, b) in new_vertices {
        vertex[m] = 0.5 * (vertex[a] + vertex[b]);
    }
    let full: Vec<f64> = match next.kind() {
        ElementKind::P1 => vertex,
        ElementKind::Cr => next.topology().edges.iter().map(|&(a, b)| 0.5 * (vertex[a] + vertex[b])).collect(),
    };
    next.restrict_vec(&full)
}

fn cross_check(a: &SparseMatrix, m: &SparseMatrix, pairs: &[EigenPair]) -> Result<()> {
    const DENSE_LIMIT: usize = 1500;
    if a.dim() > DENSE_LIMIT {
        return Ok(());
    }
    let (theta, _) = eigensolve::dense_generalized(&a.to_dense(), &m.to_dense())?;
    for p in pairs {
        let reference = theta[p.index - 1];
        if (p.lambda - reference).abs() > 1e-9 * reference {
            return Err(Error::Numeric(format!(
                "eigenvalue {} disagrees with the dense solve {reference}",
                p.lambda
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn field(eta_k: Vec<f64>) -> IndicatorField {
        let n = eta_k.len();
        let eta = eta_k.iter().copied().fold(0.0, f64::max);
        IndicatorField { eta_k, volume: vec![0.0; n], jump: vec![0.0; n], eta }
    }

    #[test]
    fn maximum_marking() {
        assert_eq!(mark(&field(vec![1.0, 0.8, 0.1]), 0.7), vec![0, 1]);
        assert_eq!(mark(&field(vec![0.5; 4]), 0.7), vec![0, 1, 2, 3]);
        assert_eq!(mark(&field(vec![0.3, 0.9, 0.8999]), 1.0 - 1e-12), vec![1]);
    }

    #[test]
    fn config_validation() {
        let mut c = AdaptConfig::default();
        assert!(c.validate().is_ok());
        c.theta = 1.5;
        let e = c.validate().unwrap_err();
        assert!(e.is_usage() && e.to_string().contains("(0, 1)"));
        let c = AdaptConfig { compute_exact_error: true, ..AdaptConfig::default() };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = AdaptConfig { max_dof: 10, ..AdaptConfig::default() };
        let failure = run_adaptive(&c).unwrap_err();
        assert!(failure.error.is_usage());
        assert!(failure.history.records.is_empty());
    }

    #[test]
    fn initial_budget_gives_single_record() {
        let c = AdaptConfig { max_dof: 33, ..AdaptConfig::default() };
        let h = run_adaptive(&c).unwrap();
        assert_eq!(h.records.len(), 1);
        assert_eq!(h.records[0].dof, 33);
        assert_eq!(h.stop_reason, Some(StopReason::DofBudget));
    }

    #[test]
    fn square_run_is_monotone_and_conforming() {
        let c = AdaptConfig {
            domain: DomainSpec::new(DomainKind::UnitPiSquare, PI / 4.0),
            max_dof: 500,
            ..AdaptConfig::default()
        };
        let h = run_adaptive(&c).unwrap();
        assert_eq!(h.stop_reason, Some(StopReason::DofBudget));
        assert!(h.records.len() > 3);
        for w in h.records.windows(2) {
            assert!(w[1].dof > w[0].dof);
            assert!(w[1].lambda_h <= w[0].lambda_h + 1e-12);
        }
        assert!(h.records.iter().all(|r| r.conforming && r.lambda_h >= 2.0 && r.n_marked > 0));
    }

    #[test]
    fn p1_prolongation_is_exact_for_linear_functions() {
        let mesh = Arc::new(generate(&DomainSpec::new(DomainKind::UnitPiSquare, PI / 4.0)).unwrap());
        let space = FeSpace::new(mesh.clone(), ElementKind::P1);
        let f = |p: [f64; 2]| p[0] * (PI - p[0]) * p[1] * (PI - p[1]);
        let u_h = space.interpolate(f);
        let sol = EigenSolution { lambda_h: 1.0, u_h, residual: 0.0, index: 1 };
        let refined = mesh.refine(&[0, 5]).unwrap();
        let next = FeSpace::new(Arc::new(refined.mesh), ElementKind::P1);
        let free = prolong(&sol, &next, &refined.new_vertices);
        let full = next.extend_vec(&free);
        let old = sol.u_h.coeffs();
        for (v, value) in full.iter().enumerate().take(old.len()) {
            assert_eq!(*value, old[v]);
        }
        for &(m, a, b) in &refined.new_vertices {
            assert_eq!(full[m], 0.5 * (old[a] + old[b]));
        }
    }
}
