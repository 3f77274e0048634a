//! Conforming triangulations of the benchmark domains.
//!
//! Triangles are stored counterclockwise. Local edge `i` of a triangle is the
//! edge opposite local vertex `i`, i.e. the segment `v[i+1] -> v[i+2]`. The
//! refinement edge of each triangle is stored as such a local index.

mod bisect;
mod generate;
mod io;
mod quality;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bisect::Refinement;
pub use generate::generate;
pub use io::{parse_mesh, write_mesh};
pub use quality::{grading_monitor, min_angle, similarity_classes, triangle_angles, SimilarityClass};

/// The three benchmark domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    /// `(0,π)²`.
    UnitPiSquare,
    /// `(0,π)² \ ([π/2,π) × (0,π/2])`.
    LShape,
    /// `{|x|+|y| < 1}` cut along `[0,1] × {0}`.
    SlitDiamond,
}

impl DomainKind {
    pub fn area(self) -> f64 {
        use std::f64::consts::PI;
        match self {
            DomainKind::UnitPiSquare => PI * PI,
            DomainKind::LShape => 0.75 * PI * PI,
            DomainKind::SlitDiamond => 2.0,
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::UnitPiSquare => "square",
            DomainKind::LShape => "lshape",
            DomainKind::SlitDiamond => "slit",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Initial mesh size (grid step of the structured mesh).
    pub h0: f64,
}

impl DomainSpec {
    pub fn new(kind: DomainKind, h0: f64) -> Self {
        Self { kind, h0 }
    }

    /// The benchmark default: `π/8` for the square and L-shape, `1/8` for the slit.
    pub fn default_for(kind: DomainKind) -> Self {
        let h0 = match kind {
            DomainKind::UnitPiSquare | DomainKind::LShape => std::f64::consts::PI / 8.0,
            DomainKind::SlitDiamond => 0.125,
        };
        Self { kind, h0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    Interior,
    Dirichlet,
}

impl BoundaryTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Interior => "interior",
            BoundaryTag::Dirichlet => "dirichlet",
        }
    }
}

pub type Point = [f64; 2];

/// Unordered vertex pair used as an edge key.
#[inline]
pub fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub(crate) vertices: Vec<Point>,
    pub(crate) triangles: Vec<[usize; 3]>,
    pub(crate) refinement_edge: Vec<u8>,
    pub(crate) generation: Vec<u32>,
    pub(crate) boundary: BTreeMap<(usize, usize), BoundaryTag>,
    pub(crate) seam_pairs: Vec<(usize, usize)>,
    pub(crate) domain: Option<DomainKind>,
}

impl Mesh {
    /// Builds a mesh from raw parts. Clockwise triangles are flipped (the
    /// refinement edge follows the flip). Fails on out-of-range indices or a
    /// refinement edge index outside `0..3`.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        refinement_edge: Vec<u8>,
        boundary: Vec<(usize, usize, BoundaryTag)>,
        seam_pairs: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if refinement_edge.len() != triangles.len() {
            return Err(Error::Argument(format!(
                "{} refinement edges for {} triangles",
                refinement_edge.len(),
                triangles.len()
            )));
        }
        let nv = vertices.len();
        let mut tris = Vec::with_capacity(triangles.len());
        let mut refs = Vec::with_capacity(triangles.len());
        for (t, (tri, &r)) in triangles.iter().zip(&refinement_edge).enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::Argument(format!("triangle {t} references a missing vertex")));
            }
            if r > 2 {
                return Err(Error::Argument(format!("triangle {t} has refinement edge {r}")));
            }
            let [a, b, c] = *tri;
            if signed_area(vertices[a], vertices[b], vertices[c]) < 0.0 {
                // swapping b and c exchanges local edges 1 and 2
                tris.push([a, c, b]);
                refs.push(match r {
                    1 => 2,
                    2 => 1,
                    r => r,
                });
            } else {
                tris.push(*tri);
                refs.push(r);
            }
        }
        for &(a, b, _) in &boundary {
            if a >= nv || b >= nv {
                return Err(Error::Argument(format!("boundary edge ({a},{b}) references a missing vertex")));
            }
        }
        for &(u, l) in &seam_pairs {
            if u >= nv || l >= nv {
                return Err(Error::Argument(format!("seam pair ({u},{l}) references a missing vertex")));
            }
        }
        let generation = vec![0; tris.len()];
        Ok(Self {
            vertices,
            triangles: tris,
            refinement_edge: refs,
            generation,
            boundary: boundary.into_iter().map(|(a, b, t)| (edge_key(a, b), t)).collect(),
            seam_pairs,
            domain: None,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn refinement_edges(&self) -> &[u8] {
        &self.refinement_edge
    }

    pub fn generations(&self) -> &[u32] {
        &self.generation
    }

    pub fn seam_pairs(&self) -> &[(usize, usize)] {
        &self.seam_pairs
    }

    pub fn domain(&self) -> Option<DomainKind> {
        self.domain
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Tagged boundary edges as sorted vertex pairs.
    pub fn boundary_edges(&self) -> impl Iterator<Item = ((usize, usize), BoundaryTag)> + '_ {
        self.boundary.iter().map(|(&k, &t)| (k, t))
    }

    pub fn boundary_tag(&self, a: usize, b: usize) -> BoundaryTag {
        self.boundary.get(&edge_key(a, b)).copied().unwrap_or(BoundaryTag::Interior)
    }

    pub fn corners(&self, k: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[k];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Vertex ids of local edge `i` of triangle `k`, in counterclockwise order.
    pub fn local_edge(&self, k: usize, i: usize) -> (usize, usize) {
        let t = self.triangles[k];
        (t[(i + 1) % 3], t[(i + 2) % 3])
    }

    pub fn geometry(&self, k: usize) -> ElementGeometry {
        ElementGeometry::of(self.corners(k))
    }

    /// Maximum element diameter.
    pub fn max_diameter(&self) -> f64 {
        (0..self.n_triangles()).map(|k| self.geometry(k).diameter).fold(0.0, f64::max)
    }

    /// Partner of each vertex across the crack seam, if any.
    pub fn seam_partner_map(&self) -> HashMap<usize, usize> {
        let mut map = HashMap::with_capacity(2 * self.seam_pairs.len());
        for &(u, l) in &self.seam_pairs {
            map.insert(u, l);
            map.insert(l, u);
        }
        map
    }

    /// Pairs of boundary edges lying on opposite faces of the crack, as
    /// `(upper edge, lower edge)` sorted vertex pairs.
    pub fn seam_edges(&self) -> Vec<((usize, usize), (usize, usize))> {
        if self.seam_pairs.is_empty() {
            return Vec::new();
        }
        let partner = self.seam_partner_map();
        let upper: std::collections::HashSet<usize> = self.seam_pairs.iter().map(|p| p.0).collect();
        let mut out = Vec::new();
        for &(a, b) in self.boundary.keys() {
            let pa = partner.get(&a).copied().unwrap_or(a);
            let pb = partner.get(&b).copied().unwrap_or(b);
            let twin = edge_key(pa, pb);
            if twin == (a, b) || !self.boundary.contains_key(&twin) {
                continue;
            }
            let is_upper = upper.contains(&a) || upper.contains(&b);
            if is_upper {
                out.push(((a, b), twin));
            }
        }
        out
    }

    pub fn topology(&self) -> Topology {
        Topology::build(self)
    }

    /// Checks the mesh invariants; see [`Violation`] for what is reported.
    pub fn conformity_check(&self) -> ConformityReport {
        conformity_check(self)
    }
}

#[inline]
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Per-element geometric quantities. Edge `i` is opposite vertex `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub diameter: f64,
    pub area: f64,
    pub barycenter: Point,
    pub edge_lengths: [f64; 3],
    pub normals: [[f64; 2]; 3],
    pub tangents: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn of(p: [Point; 3]) -> Self {
        let mut edge_lengths = [0.0; 3];
        let mut normals = [[0.0; 2]; 3];
        let mut tangents = [[0.0; 2]; 3];
        for i in 0..3 {
            let a = p[(i + 1) % 3];
            let b = p[(i + 2) % 3];
            let d = [b[0] - a[0], b[1] - a[1]];
            let len = d[0].hypot(d[1]);
            edge_lengths[i] = len;
            let n = [d[1] / len, -d[0] / len];
            normals[i] = n;
            tangents[i] = [-n[1], n[0]];
        }
        Self {
            diameter: edge_lengths.iter().copied().fold(0.0, f64::max),
            area: signed_area(p[0], p[1], p[2]),
            barycenter: [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0],
            edge_lengths,
            normals,
            tangents,
        }
    }
}

/// Edge numbering and adjacency, derived from a [`Mesh`].
///
/// Edges are numbered in order of first appearance when scanning triangles
/// and their local edges in order, so the first incident triangle of an edge
/// is always the one with the lower id.
#[derive(Debug, Clone)]
pub struct Topology {
    pub edges: Vec<(usize, usize)>,
    pub tri_edges: Vec<[usize; 3]>,
    pub edge_tris: Vec<(usize, Option<usize>)>,
    pub edge_tags: Vec<BoundaryTag>,
    index: HashMap<(usize, usize), usize>,
}

impl Topology {
    fn build(mesh: &Mesh) -> Self {
        let nt = mesh.n_triangles();
        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(nt * 2);
        let mut edges = Vec::with_capacity(nt * 3 / 2 + 8);
        let mut edge_tris: Vec<(usize, Option<usize>)> = Vec::with_capacity(edges.capacity());
        let mut tri_edges = Vec::with_capacity(nt);
        for (k, t) in mesh.triangles.iter().enumerate() {
            let mut te = [0; 3];
            for (i, slot) in te.iter_mut().enumerate() {
                let key = edge_key(t[(i + 1) % 3], t[(i + 2) % 3]);
                let id = *index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_tris.push((k, None));
                    edges.len() - 1
                });
                if edge_tris[id].0 != k {
                    // more than two incident triangles is a conformity violation; keep the first two
                    if edge_tris[id].1.is_none() {
                        edge_tris[id].1 = Some(k);
                    }
                }
                *slot = id;
            }
            tri_edges.push(te);
        }
        // Every benchmark boundary is Dirichlet. An untagged edge with a single
        // neighbour is a conformity violation and is treated as boundary here.
        let edge_tags = edge_tris
            .iter()
            .map(|&(_, other)| if other.is_some() { BoundaryTag::Interior } else { BoundaryTag::Dirichlet })
            .collect();
        Self { edges, tri_edges, edge_tris, edge_tags, index }
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.index.get(&edge_key(a, b)).copied()
    }

    pub fn is_boundary(&self, e: usize) -> bool {
        self.edge_tris[e].1.is_none()
    }

    /// `(K_plus, K_minus)` with `K_plus` the lower triangle id.
    pub fn edge_patch(&self, e: usize) -> (usize, Option<usize>) {
        self.edge_tris[e]
    }

    /// Local index of edge `e` within triangle `k`.
    pub fn local_index(&self, k: usize, e: usize) -> Option<usize> {
        self.tri_edges[k].iter().position(|&x| x == e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveArea { triangle: usize, area: f64 },
    BadRefinementEdge { triangle: usize },
    OverSharedEdge { edge: (usize, usize), triangles: Vec<usize> },
    HangingNode { vertex: usize, edge: (usize, usize), triangle: usize },
    UntaggedBoundary { edge: (usize, usize), triangle: usize },
    TaggedInteriorEdge { edge: (usize, usize) },
    SeamMismatch { upper: usize, lower: usize },
    SeamPairInTriangle { triangle: usize, upper: usize, lower: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveArea { triangle, area } => write!(f, "triangle {triangle} has area {area:e}"),
            Violation::BadRefinementEdge { triangle } => write!(f, "triangle {triangle} has an invalid refinement edge"),
            Violation::OverSharedEdge { edge, triangles } => {
                write!(f, "edge {edge:?} shared by triangles {triangles:?}")
            }
            Violation::HangingNode { vertex, edge, triangle } => {
                write!(f, "vertex {vertex} hangs on edge {edge:?} of triangle {triangle}")
            }
            Violation::UntaggedBoundary { edge, triangle } => {
                write!(f, "edge {edge:?} of triangle {triangle} has one neighbour but no boundary tag")
            }
            Violation::TaggedInteriorEdge { edge } => write!(f, "interior edge {edge:?} carries a boundary tag"),
            Violation::SeamMismatch { upper, lower } => {
                write!(f, "seam pair ({upper},{lower}) has differing coordinates")
            }
            Violation::SeamPairInTriangle { triangle, upper, lower } => {
                write!(f, "triangle {triangle} contains both seam vertices {upper} and {lower}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformityReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

fn conformity_check(mesh: &Mesh) -> ConformityReport {
    let mut violations = Vec::new();
    let mut incident: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(mesh.n_triangles() * 2);
    for (k, t) in mesh.triangles.iter().enumerate() {
        let [a, b, c] = mesh.corners(k);
        let area = signed_area(a, b, c);
        let h = ElementGeometry::of([a, b, c]).diameter;
        if !(area > 1e-14 * h * h) {
            violations.push(Violation::NonPositiveArea { triangle: k, area });
        }
        if mesh.refinement_edge[k] > 2 {
            violations.push(Violation::BadRefinementEdge { triangle: k });
        }
        for i in 0..3 {
            incident.entry(edge_key(t[(i + 1) % 3], t[(i + 2) % 3])).or_default().push(k);
        }
    }

    let mut lonely: Vec<((usize, usize), usize)> = Vec::new();
    let mut keys: Vec<_> = incident.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let tris = &incident[&key];
        match tris.len() {
            1 => {
                if mesh.boundary_tag(key.0, key.1) != BoundaryTag::Dirichlet {
                    lonely.push((key, tris[0]));
                }
            }
            2 => {
                if mesh.boundary.contains_key(&key) {
                    violations.push(Violation::TaggedInteriorEdge { edge: key });
                }
            }
            _ => violations.push(Violation::OverSharedEdge { edge: key, triangles: tris.clone() }),
        }
    }

    // An untagged edge with a single neighbour is either the long side of a
    // hanging node configuration, one of the short sides, or a genuine gap.
    let on_segment = |p: Point, a: Point, b: Point| {
        let d = [b[0] - a[0], b[1] - a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        let w = [p[0] - a[0], p[1] - a[1]];
        let cross = d[0] * w[1] - d[1] * w[0];
        let s = (d[0] * w[0] + d[1] * w[1]) / len2;
        cross.abs() <= 1e-12 * len2 && s > 1e-12 && s < 1.0 - 1e-12
    };
    let lonely_vertices: Vec<usize> = {
        let mut v: Vec<usize> = lonely.iter().flat_map(|&((a, b), _)| [a, b]).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    for &((a, b), k) in &lonely {
        let pa = mesh.vertices[a];
        let pb = mesh.vertices[b];
        let hanging: Vec<usize> = lonely_vertices
            .iter()
            .copied()
            .filter(|&v| v != a && v != b && on_segment(mesh.vertices[v], pa, pb))
            .collect();
        if let Some(&v) = hanging.first() {
            violations.push(Violation::HangingNode { vertex: v, edge: (a, b), triangle: k });
            continue;
        }
        let covered = lonely.iter().any(|&((c, d), _)| {
            (c, d) != (a, b) && {
                let pc = mesh.vertices[c];
                let pd = mesh.vertices[d];
                let inside = |p: Point| on_segment(p, pc, pd) || p == pc || p == pd;
                inside(pa) && inside(pb)
            }
        });
        if !covered {
            violations.push(Violation::UntaggedBoundary { edge: (a, b), triangle: k });
        }
    }

    for &(u, l) in &mesh.seam_pairs {
        if mesh.vertices[u] != mesh.vertices[l] || u == l {
            violations.push(Violation::SeamMismatch { upper: u, lower: l });
        }
    }
    if !mesh.seam_pairs.is_empty() {
        let partner = mesh.seam_partner_map();
        for (k, t) in mesh.triangles.iter().enumerate() {
            for &v in t {
                if let Some(&p) = partner.get(&v) {
                    if t.contains(&p) && v < p {
                        violations.push(Violation::SeamPairInTriangle { triangle: k, upper: v, lower: p });
                    }
                }
            }
        }
    }

    ConformityReport { ok: violations.is_empty(), violations }
}
