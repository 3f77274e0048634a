//! Command-line front end: `run`, `verify` and `render`.
//!
//! Exit codes: 0 success, 1 `verify` band failure, 2 configuration or usage
//! error, 3 numeric error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::adapt::{self, AdaptConfig, AdaptHistory};
use crate::error::{Error, Result};
use crate::estimator::{CrBoundaryJump, ElementSize};
use crate::mesh::{self, DomainKind, DomainSpec, Mesh};
use crate::report;
use crate::space::ElementKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_BANDS: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "eigen-pointwise", version, about = "Adaptive eigenvalue computation with a pointwise estimator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the adaptive loop and write history and final-mesh artifacts.
    Run(RunArgs),
    /// Check the estimator against the exact error on the square benchmark.
    Verify(VerifyArgs),
    /// Render a saved mesh file as SVG.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Square,
    Lshape,
    Slit,
}

impl From<DomainArg> for DomainKind {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Square => DomainKind::UnitPiSquare,
            DomainArg::Lshape => DomainKind::LShape,
            DomainArg::Slit => DomainKind::SlitDiamond,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ElementArg {
    P1,
    Cr,
}

impl From<ElementArg> for ElementKind {
    fn from(e: ElementArg) -> Self {
        match e {
            ElementArg::P1 => ElementKind::P1,
            ElementArg::Cr => ElementKind::Cr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryJumpArg {
    Tangential,
    Full,
}

impl From<BoundaryJumpArg> for CrBoundaryJump {
    fn from(b: BoundaryJumpArg) -> Self {
        match b {
            BoundaryJumpArg::Tangential => CrBoundaryJump::Tangential,
            BoundaryJumpArg::Full => CrBoundaryJump::Full,
        }
    }
}

/// Settings shared by `run` and `verify`; flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    #[arg(long, value_enum)]
    pub domain: Option<DomainArg>,
    #[arg(long, value_enum)]
    pub element: Option<ElementArg>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub max_dof: Option<usize>,
    #[arg(long)]
    pub h0: Option<f64>,
    #[arg(long, value_enum)]
    pub cr_boundary_jump: Option<BoundaryJumpArg>,
    /// Flat `key=value` file using the flag names as keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print `j N lambda eta product` per level.
    #[arg(long)]
    pub progress: bool,
    #[arg(long, hide = true)]
    pub drop_volume_term: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub settings: Settings,
    #[arg(long)]
    pub exact_error: bool,
    #[arg(long)]
    pub eta_star: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub settings: Settings,
    /// Number of adaptive levels to run.
    #[arg(long, default_value_t = 20)]
    pub levels: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Mesh file written by `run`.
    pub mesh: PathBuf,
    /// Output path; defaults to the mesh path with an `.svg` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Config with the domain kind and `h0` tracked apart, so a domain chosen
/// without `h0` gets that domain's default.
struct Draft {
    config: AdaptConfig,
    kind: DomainKind,
    h0: Option<f64>,
}

impl Draft {
    fn new(base: AdaptConfig) -> Self {
        Self { kind: base.domain.kind, h0: None, config: base }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid value {value:?} for {key}: expected {what}"));
        let real = || value.parse::<f64>().map_err(|_| bad("a number"));
        let int = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
        let flag = || match value {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(bad("true or false")),
        };
        let c = &mut self.config;
        match key.replace('_', "-").as_str() {
            "domain" => {
                self.kind = DomainArg::from_str(value, true).map_err(|_| bad("square, lshape or slit"))?.into()
            }
            "element" => c.element = ElementArg::from_str(value, true).map_err(|_| bad("p1 or cr"))?.into(),
            "theta" => c.theta = real()?,
            "max-dof" => c.max_dof = int()?,
            "h0" => self.h0 = Some(real()?),
            "level-cap" => c.level_cap = int()?,
            "eigen-tol" => c.eigen_tol = real()?,
            "exact-error" => c.compute_exact_error = flag()?,
            "eta-star" => c.compute_eta_star = flag()?,
            "cr-boundary-jump" => c.cr_boundary_jump = value.parse()?,
            "element-size" => c.element_size = value.parse::<ElementSize>()?,
            "gamma-monitor" => c.gamma_monitor = real()?,
            "record-timing" => c.record_timing = flag()?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    fn finish(mut self) -> AdaptConfig {
        let default = DomainSpec::default_for(self.kind);
        self.config.domain = DomainSpec::new(self.kind, self.h0.unwrap_or(default.h0));
        self.config
    }
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, message: format!("expected key=value, got {line:?}") })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn build_config(base: AdaptConfig, s: &Settings) -> Result<Draft> {
    let mut draft = Draft::new(base);
    if let Some(path) = &s.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        for (k, v) in parse_config_text(&text)? {
            draft.set(&k, &v)?;
        }
    }
    if let Some(d) = s.domain {
        draft.kind = d.into();
    }
    if let Some(h0) = s.h0 {
        draft.h0 = Some(h0);
    }
    let c = &mut draft.config;
    if let Some(e) = s.element {
        c.element = e.into();
    }
    if let Some(t) = s.theta {
        c.theta = t;
    }
    if let Some(n) = s.max_dof {
        c.max_dof = n;
    }
    if let Some(b) = s.cr_boundary_jump {
        c.cr_boundary_jump = b.into();
    }
    if s.drop_volume_term {
        c.drop_volume_term = true;
    }
    Ok(draft)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_usage() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERIC
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Render(a) => cmd_render(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn progress_line(out: &mut dyn Write, r: &adapt::LevelRecord) {
    let _ = writeln!(out, "{} {} {:.6e} {:.6e} {:.4}", r.level, r.dof, r.lambda_h, r.eta, r.product);
}

fn write_history(dir: &Path, history: &AdaptHistory) -> Result<()> {
    report::write_csv(history, fs::File::create(dir.join("history.csv"))?)?;
    let mut json = fs::File::create(dir.join("history.json"))?;
    report::write_json(history, &mut json)?;
    writeln!(json)?;
    Ok(())
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<i32> {
    let mut draft = build_config(AdaptConfig::default(), &a.settings)?;
    if a.exact_error {
        draft.config.compute_exact_error = true;
    }
    if a.eta_star {
        draft.config.compute_eta_star = true;
    }
    let config = draft.finish();
    config.validate()?;
    fs::create_dir_all(&a.out)
        .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", a.out.display())))?;

    let mut last_mesh: Option<Arc<Mesh>> = None;
    let result = adapt::run_adaptive_with(&config, |view| {
        if a.settings.progress {
            progress_line(out, view.record);
        }
        last_mesh = Some(view.space.mesh_arc().clone());
    });
    let history = match result {
        Ok(h) => h,
        Err(failure) => {
            if !failure.history.records.is_empty() {
                write_history(&a.out, &failure.history)?;
            }
            return Err(failure.error);
        }
    };
    write_history(&a.out, &history)?;
    if let Some(m) = last_mesh {
        report::write_svg(&m, fs::File::create(a.out.join("mesh_final.svg"))?)?;
        mesh::write_mesh(&m, fs::File::create(a.out.join("mesh_final.mesh"))?)?;
    }
    let last = history.records.last().expect("a successful run records at least one level");
    writeln!(
        out,
        "{} levels, N = {}, lambda_h = {:.8}, eta = {:.5e}, stop: {}",
        history.records.len(),
        last.dof,
        last.lambda_h,
        last.eta,
        history.stop_reason.map_or("none", |s| s.as_str())
    )?;
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    if a.levels < report::BAND_MIN_LEVELS {
        return Err(Error::Config(format!(
            "verify needs at least {} levels, got {}",
            report::BAND_MIN_LEVELS,
            a.levels
        )));
    }
    let base = AdaptConfig {
        max_dof: 1_000_000,
        ..AdaptConfig::for_domain(DomainKind::UnitPiSquare)
    };
    let mut draft = build_config(base, &a.settings)?;
    if draft.kind != DomainKind::UnitPiSquare {
        return Err(Error::Config(format!("verify needs the square benchmark, not the {} domain", draft.kind)));
    }
    draft.config.level_cap = a.levels;
    draft.config.compute_exact_error = true;
    draft.config.compute_eta_star = true;
    let config = draft.finish();
    let history = adapt::run_adaptive_with(&config, |view| {
        if a.settings.progress {
            progress_line(out, view.record);
        }
    })
    .map_err(|f| f.error)?;

    let bands = report::check_bands(&history, report::BAND_MIN_DOF)?;
    writeln!(out, "{:>5} {:>8} {:>12} {:>12} {:>10} {:>10} {:>10}", "level", "N", "eta", "linf_error", "e/eta", "eta/e", "eta*/eta")?;
    for r in &bands.rows {
        writeln!(
            out,
            "{:>5} {:>8} {:>12.5e} {:>12.5e} {:>10.4} {:>10.4} {:>10}",
            r.level,
            r.dof,
            r.eta,
            r.linf_error,
            r.reliability,
            r.efficiency,
            r.star_ratio.map_or("-".to_string(), |s| format!("{s:.4}"))
        )?;
    }
    for c in &bands.checks {
        writeln!(out, "{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
    }
    Ok(if bands.pass() { EXIT_OK } else { EXIT_BANDS })
}

fn cmd_render(a: &RenderArgs, out: &mut dyn Write) -> Result<i32> {
    let text = fs::read_to_string(&a.mesh)
        .map_err(|e| Error::Config(format!("cannot read mesh {}: {e}", a.mesh.display())))?;
    let m = mesh::parse_mesh(&text)?;
    let target = a.out.clone().unwrap_or_else(|| a.mesh.with_extension("svg"));
    report::write_svg(&m, fs::File::create(&target)?)?;
    writeln!(out, "wrote {}", target.display())?;
    Ok(EXIT_OK)
}
