//! Structured initial triangulations of the benchmark domains.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use super::{edge_key, BoundaryTag, DomainKind, DomainSpec, Mesh, Point};
use crate::error::{Error, Result};

/// How each grid cell is split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Diagonal {
    /// Every cell split along `(i,j)-(i+1,j+1)`.
    Forward,
    /// Split along the diagonal parallel to the nearest side of the diamond:
    /// `\` in the first and third quadrant, `/` in the other two.
    Diamond,
}

/// Generates the initial mesh for `spec`.
///
/// The square and L-shape use an axis-aligned grid of step `h0 = π/2^k`, the
/// slit diamond an axis-aligned grid of step `h0 = 1/2^k` clipped to the
/// diamond, with vertices on the open crack duplicated into seam pairs.
pub fn generate(spec: &DomainSpec) -> Result<Mesh> {
    let diagonal = match spec.kind {
        DomainKind::UnitPiSquare | DomainKind::LShape => Diagonal::Forward,
        DomainKind::SlitDiamond => Diagonal::Diamond,
    };
    generate_with(spec, diagonal)
}

pub(crate) fn generate_with(spec: &DomainSpec, diagonal: Diagonal) -> Result<Mesh> {
    let (length, unit) = match spec.kind {
        DomainKind::UnitPiSquare | DomainKind::LShape => (PI, "π"),
        DomainKind::SlitDiamond => (1.0, "1"),
    };
    let cells = cells_per_length(spec.h0, length).ok_or_else(|| {
        Error::Config(format!(
            "h0 = {} is not admissible for the {} domain: h0 must equal {unit}/2^k with k >= 1",
            spec.h0, spec.kind
        ))
    })?;
    let mut mesh = match spec.kind {
        DomainKind::UnitPiSquare => grid(cells, spec.h0, diagonal, |_, _| true, 0, cells as i64),
        DomainKind::LShape => {
            let half = cells as i64 / 2;
            grid(cells, spec.h0, diagonal, move |i, j| !(i >= half && j < half), 0, cells as i64)
        }
        DomainKind::SlitDiamond => slit(cells, spec.h0, diagonal),
    };
    mesh.domain = Some(spec.kind);
    Ok(mesh)
}

/// Number of cells across `length` if `h0 = length / 2^k`, `k >= 1`.
fn cells_per_length(h0: f64, length: f64) -> Option<usize> {
    if !(h0.is_finite() && h0 > 0.0) {
        return None;
    }
    let m = length / h0;
    let rounded = m.round();
    if rounded < 2.0 || rounded > (1u64 << 20) as f64 || (m - rounded).abs() > 1e-9 * rounded {
        return None;
    }
    let n = rounded as usize;
    n.is_power_of_two().then_some(n)
}

fn split_cell(i: i64, j: i64, diagonal: Diagonal) -> [[(i64, i64); 3]; 2] {
    let forward = match diagonal {
        Diagonal::Forward => true,
        Diagonal::Diamond => (2 * i + 1) * (2 * j + 1) < 0,
    };
    if forward {
        [[(i, j), (i + 1, j), (i + 1, j + 1)], [(i, j), (i + 1, j + 1), (i, j + 1)]]
    } else {
        [[(i, j), (i + 1, j), (i, j + 1)], [(i + 1, j), (i + 1, j + 1), (i, j + 1)]]
    }
}

/// Grid on `[lo, hi]²` in lattice units keeping the cells accepted by `keep`.
fn grid(
    cells: usize,
    h: f64,
    diagonal: Diagonal,
    keep: impl Fn(i64, i64) -> bool,
    lo: i64,
    hi: i64,
) -> Mesh {
    debug_assert_eq!((hi - lo) as usize, cells);
    let mut tris = Vec::new();
    for j in lo..hi {
        for i in lo..hi {
            if keep(i, j) {
                tris.extend(split_cell(i, j, diagonal));
            }
        }
    }
    assemble(tris, h, |_| false)
}

fn slit(cells: usize, h: f64, diagonal: Diagonal) -> Mesh {
    let n = cells as i64;
    let inside = |(i, j): (i64, i64)| i.abs() + j.abs() <= n;
    let mut tris = Vec::new();
    for j in -n..n {
        for i in -n..n {
            for t in split_cell(i, j, diagonal) {
                if t.iter().copied().all(inside) {
                    tris.push(t);
                }
            }
        }
    }
    // lattice points strictly inside the crack get a lower copy used by triangles below it
    assemble(tris, h, move |(i, j)| j == 0 && i > 0 && i < n)
}

/// Numbers the lattice points row-major and builds the mesh. `seam` selects
/// lattice points that are duplicated; the copy used by a triangle depends on
/// whether the triangle lies above (upper copy) or below (lower copy).
fn assemble(
    lattice_tris: Vec<[(i64, i64); 3]>,
    h: f64,
    seam: impl Fn((i64, i64)) -> bool,
) -> Mesh {
    let mut points: Vec<(i64, i64)> = lattice_tris.iter().flatten().copied().collect();
    points.sort_unstable_by_key(|&(i, j)| (j, i));
    points.dedup();

    let mut upper: HashMap<(i64, i64), usize> = HashMap::new();
    let mut lower: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut seam_pairs = Vec::new();
    for &p in &points {
        let xy = [p.0 as f64 * h, p.1 as f64 * h];
        upper.insert(p, vertices.len());
        vertices.push(xy);
        if seam(p) {
            lower.insert(p, vertices.len());
            seam_pairs.push((vertices.len() - 1, vertices.len()));
            vertices.push(xy);
        }
    }

    let mut triangles = Vec::with_capacity(lattice_tris.len());
    for t in &lattice_tris {
        let below = t.iter().map(|p| p.1).sum::<i64>() < 0;
        let id = |p: &(i64, i64)| if below { *lower.get(p).unwrap_or(&upper[p]) } else { upper[p] };
        triangles.push([id(&t[0]), id(&t[1]), id(&t[2])]);
    }

    let refinement_edge = triangles.iter().map(|t| longest_edge(&vertices, t)).collect();

    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &triangles {
        for i in 0..3 {
            *count.entry(edge_key(t[(i + 1) % 3], t[(i + 2) % 3])).or_default() += 1;
        }
    }
    let boundary: BTreeMap<(usize, usize), BoundaryTag> =
        count.into_iter().filter(|&(_, c)| c == 1).map(|(k, _)| (k, BoundaryTag::Dirichlet)).collect();

    let generation = vec![0; triangles.len()];
    Mesh { vertices, triangles, refinement_edge, generation, boundary, seam_pairs, domain: None }
}

/// Local index of the longest edge; ties go to the lowest opposite vertex id.
pub(crate) fn longest_edge(vertices: &[Point], t: &[usize; 3]) -> u8 {
    let len = |i: usize| {
        let a = vertices[t[(i + 1) % 3]];
        let b = vertices[t[(i + 2) % 3]];
        (b[0] - a[0]).hypot(b[1] - a[1])
    };
    let lengths = [len(0), len(1), len(2)];
    let max = lengths.iter().copied().fold(0.0, f64::max);
    (0..3)
        .filter(|&i| lengths[i] >= max * (1.0 - 1e-12))
        .min_by_key(|&i| t[i])
        .expect("a triangle has a longest edge") as u8
}
