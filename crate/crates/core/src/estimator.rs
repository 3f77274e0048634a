//! Pointwise a posteriori indicators for the discrete eigenpair.
//!
//! Per element `K` with diameter `h_K`,
//!
//! ```text
//! η_K = h_K² ‖λ_h u_h‖_∞,K + h_K max_E J(E)
//! ```
//!
//! and `η = max_K η_K`. For P1, `J(E) = |[∂u_h/∂n]_E|` over the interior
//! edges of `K`. For Crouzeix–Raviart, `J(E) = ‖[∇u_h]_E‖₂` on interior
//! edges and, on boundary edges, either `|∇u_h·τ_E|` or `‖∇u_h‖₂`
//! depending on [`CrBoundaryJump`]. Everything is piecewise linear, so the
//! norms are exact: maxima of `|u_h|` sit at vertices and gradients are
//! element-constant.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eigensolve::EigenSolution;
use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::space::{DiscreteFunction, ElementKind};

/// Boundary-edge jump used by the CR estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrBoundaryJump {
    #[default]
    Tangential,
    Full,
}

impl FromStr for CrBoundaryJump {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tangential" => Ok(Self::Tangential),
            "full" => Ok(Self::Full),
            other => Err(Error::Config(format!("cr_boundary_jump must be tangential or full, got {other:?}"))),
        }
    }
}

impl std::fmt::Display for CrBoundaryJump {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Tangential => "tangential",
            Self::Full => "full",
        })
    }
}

/// The length `h_K` used in the indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementSize {
    /// Longest edge.
    #[default]
    Diameter,
    /// `√(2|K|)`, the leg length of a right isosceles triangle.
    SqrtTwiceArea,
}

impl FromStr for ElementSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diameter" => Ok(Self::Diameter),
            "sqrt-twice-area" => Ok(Self::SqrtTwiceArea),
            other => Err(Error::Config(format!("element_size must be diameter or sqrt-twice-area, got {other:?}"))),
        }
    }
}

impl std::fmt::Display for ElementSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Diameter => "diameter",
            Self::SqrtTwiceArea => "sqrt-twice-area",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EstimatorOptions {
    pub cr_boundary_jump: CrBoundaryJump,
    pub element_size: ElementSize,
    /// Ablation: omit the volume term.
    pub drop_volume_term: bool,
}

/// Gradient jump across one edge, `[∇v]_E = ∇v|K₊ − ∇v|K₋`, with `n_E`
/// the outward normal of `K₊` (the lower triangle id). On a boundary edge
/// only the `K₊` trace is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeJump {
    pub edge: usize,
    pub normal_jump: f64,
    pub full_jump: [f64; 2],
    pub tangential_jump: f64,
}

pub fn edge_jump(f: &DiscreteFunction, edge: usize) -> EdgeJump {
    edge_jump_oriented(f, edge, false)
}

fn edge_jump_oriented(f: &DiscreteFunction, edge: usize, flip: bool) -> EdgeJump {
    let space = f.space();
    let topo = space.topology();
    let (plus, minus) = topo.edge_patch(edge);
    let (plus, minus) = match (flip, minus) {
        (true, Some(m)) => (m, Some(plus)),
        _ => (plus, minus),
    };
    let local = topo.local_index(plus, edge).expect("edge belongs to its patch");
    let geo = space.mesh().geometry(plus);
    let (mut n, mut t) = (geo.normals[local], geo.tangents[local]);
    if flip && minus.is_none() {
        n = [-n[0], -n[1]];
        t = [-t[0], -t[1]];
    }
    let gp = f.gradient(plus);
    let full_jump = match minus {
        Some(m) => {
            let gm = f.gradient(m);
            [gp[0] - gm[0], gp[1] - gm[1]]
        }
        None => gp,
    };
    EdgeJump {
        edge,
        normal_jump: full_jump[0] * n[0] + full_jump[1] * n[1],
        full_jump,
        tangential_jump: full_jump[0] * t[0] + full_jump[1] * t[1],
    }
}

/// Per-element indicators and their maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    pub eta_k: Vec<f64>,
    pub volume: Vec<f64>,
    pub jump: Vec<f64>,
    pub eta: f64,
}

impl IndicatorField {
    pub fn len(&self) -> usize {
        self.eta_k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_k.is_empty()
    }

    /// Writes one `K eta_K volume jump` line per element.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for k in 0..self.len() {
            writeln!(out, "{k} {:e} {:e} {:e}", self.eta_k[k], self.volume[k], self.jump[k])?;
        }
        Ok(())
    }
}

/// `max_K η_K`; fails on an empty field.
pub fn global_eta(field: &IndicatorField) -> Result<f64> {
    if field.is_empty() {
        return Err(Error::Argument("estimator over an empty mesh".into()));
    }
    Ok(field.eta_k.iter().copied().fold(0.0, f64::max))
}

pub fn indicators_p1(sol: &EigenSolution, opts: &EstimatorOptions) -> Result<IndicatorField> {
    expect_kind(&sol.u_h, ElementKind::P1)?;
    assemble(&sol.u_h, sol.lambda_h, &sol.u_h, opts, false)
}

pub fn indicators_cr(sol: &EigenSolution, opts: &EstimatorOptions) -> Result<IndicatorField> {
    expect_kind(&sol.u_h, ElementKind::Cr)?;
    assemble(&sol.u_h, sol.lambda_h, &sol.u_h, opts, false)
}

/// Dispatches on the element kind of `sol`.
pub fn indicators(sol: &EigenSolution, opts: &EstimatorOptions) -> Result<IndicatorField> {
    assemble(&sol.u_h, sol.lambda_h, &sol.u_h, opts, false)
}

/// `η*`: volume term `h_K² ‖u_h‖_∞,K` and jumps of `T_h u`, the discrete
/// source solution with right-hand side `u_exact`. `u_exact` must be the
/// exact eigenfunction normalized and signed like `u_h`.
pub fn theoretical_estimator(
    sol: &EigenSolution,
    u_exact: impl Fn(Point) -> f64,
    opts: &EstimatorOptions,
) -> Result<IndicatorField> {
    let thu = sol.u_h.space().solve_source(u_exact)?;
    assemble(&sol.u_h, 1.0, &thu, opts, false)
}

fn expect_kind(f: &DiscreteFunction, kind: ElementKind) -> Result<()> {
    if f.space().kind() == kind {
        Ok(())
    } else {
        Err(Error::Argument(format!("expected a {kind} function, got {}", f.space().kind())))
    }
}

/// Indicators with volume term `h_K² |scale| ‖v‖_∞,K` and jump term built
/// from `w`.
fn assemble(
    v: &DiscreteFunction,
    scale: f64,
    w: &DiscreteFunction,
    opts: &EstimatorOptions,
    flip: bool,
) -> Result<IndicatorField> {
    let space = v.space();
    let topo = space.topology();
    let cr = space.kind() == ElementKind::Cr;
    let edge_value: Vec<f64> = (0..topo.n_edges())
        .map(|e| {
            let boundary = topo.is_boundary(e);
            if boundary && !cr {
                return 0.0;
            }
            let j = edge_jump_oriented(w, e, flip);
            if !cr {
                j.normal_jump.abs()
            } else if boundary && opts.cr_boundary_jump == CrBoundaryJump::Tangential {
                j.tangential_jump.abs()
            } else {
                j.full_jump[0].hypot(j.full_jump[1])
            }
        })
        .collect();

    let nt = space.mesh().n_triangles();
    let mut field = IndicatorField { eta_k: vec![0.0; nt], volume: vec![0.0; nt], jump: vec![0.0; nt], eta: 0.0 };
    for k in 0..nt {
        let data = space.element(k);
        let h = match opts.element_size {
            ElementSize::Diameter => data.diameter,
            ElementSize::SqrtTwiceArea => (2.0 * data.area).sqrt(),
        };
        let vmax = v.vertex_values(k).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let volume = if opts.drop_volume_term { 0.0 } else { h * h * scale.abs() * vmax };
        let jmax = topo.tri_edges[k].iter().fold(0.0f64, |m, &e| m.max(edge_value[e]));
        let jump = h * jmax;
        field.volume[k] = volume;
        field.jump[k] = jump;
        field.eta_k[k] = volume + jump;
    }
    if nt > 0 {
        field.eta = global_eta(&field)?;
    }
    Ok(field)
}
