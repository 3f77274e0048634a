//! P1-conforming and Crouzeix–Raviart spaces, assembly, and discrete source
//! solves.
//!
//! P1 dofs are vertex values, numbered by vertex id. CR dofs are edge-midpoint
//! values, numbered by the edge ids of the mesh [`Topology`]. The CR basis
//! function for local edge `i` is `1 - 2 b_i`, with `b_i` the barycentric
//! coordinate of the opposite vertex.

mod quadrature;
mod sparse;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh, Point, Topology};

pub use quadrature::seven_point;
pub use sparse::{Cholesky, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    P1,
    Cr,
}

impl std::fmt::Display for ElementKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ElementKind::P1 => "p1",
            ElementKind::Cr => "cr",
        })
    }
}

/// Cached per-element data.
#[derive(Debug, Clone, Copy)]
pub struct ElementData {
    pub area: f64,
    pub diameter: f64,
    /// Gradients of the three barycentric coordinates.
    pub grad_bary: [[f64; 2]; 3],
}

#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    topo: Topology,
    kind: ElementKind,
    elements: Vec<ElementData>,
    dirichlet: Vec<bool>,
    free_dofs: Vec<usize>,
    free_position: Vec<Option<usize>>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, kind: ElementKind) -> Self {
        let topo = mesh.topology();
        let elements = (0..mesh.n_triangles())
            .map(|k| {
                let g = mesh.geometry(k);
                let mut grad_bary = [[0.0; 2]; 3];
                for i in 0..3 {
                    let s = -g.edge_lengths[i] / (2.0 * g.area);
                    grad_bary[i] = [s * g.normals[i][0], s * g.normals[i][1]];
                }
                ElementData { area: g.area, diameter: g.diameter, grad_bary }
            })
            .collect();
        let dirichlet = match kind {
            ElementKind::P1 => {
                let mut mask = vec![false; mesh.n_vertices()];
                for (e, &(a, b)) in topo.edges.iter().enumerate() {
                    if topo.edge_tags[e] == BoundaryTag::Dirichlet {
                        mask[a] = true;
                        mask[b] = true;
                    }
                }
                mask
            }
            ElementKind::Cr => topo.edge_tags.iter().map(|&t| t == BoundaryTag::Dirichlet).collect(),
        };
        let free_dofs: Vec<usize> = (0..dirichlet.len()).filter(|&i| !dirichlet[i]).collect();
        let mut free_position = vec![None; dirichlet.len()];
        for (p, &i) in free_dofs.iter().enumerate() {
            free_position[i] = Some(p);
        }
        Self { mesh, topo, kind, elements, dirichlet, free_dofs, free_position }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn n_dofs(&self) -> usize {
        self.dirichlet.len()
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn free_position(&self) -> &[Option<usize>] {
        &self.free_position
    }

    pub fn element(&self, k: usize) -> &ElementData {
        &self.elements[k]
    }

    /// Global dofs of element `k`, local dof `i` belonging to vertex `i` (P1)
    /// or to the edge opposite vertex `i` (CR).
    pub fn element_dofs(&self, k: usize) -> [usize; 3] {
        match self.kind {
            ElementKind::P1 => self.mesh.triangles()[k],
            ElementKind::Cr => self.topo.tri_edges[k],
        }
    }

    /// Location of each dof: a vertex (P1) or an edge midpoint (CR).
    pub fn dof_point(&self, dof: usize) -> Point {
        let v = self.mesh.vertices();
        match self.kind {
            ElementKind::P1 => v[dof],
            ElementKind::Cr => {
                let (a, b) = self.topo.edges[dof];
                [0.5 * (v[a][0] + v[b][0]), 0.5 * (v[a][1] + v[b][1])]
            }
        }
    }

    /// Basis values of element `k` at barycentric point `b`.
    pub fn basis(&self, b: [f64; 3]) -> [f64; 3] {
        match self.kind {
            ElementKind::P1 => b,
            ElementKind::Cr => [1.0 - 2.0 * b[0], 1.0 - 2.0 * b[1], 1.0 - 2.0 * b[2]],
        }
    }

    /// Basis gradients of element `k`.
    pub fn basis_gradients(&self, k: usize) -> [[f64; 2]; 3] {
        let g = self.elements[k].grad_bary;
        match self.kind {
            ElementKind::P1 => g,
            ElementKind::Cr => g.map(|v| [-2.0 * v[0], -2.0 * v[1]]),
        }
    }

    fn check_element(&self, k: usize) -> Result<()> {
        let e = &self.elements[k];
        if !(e.area >= 1e-14 * e.diameter * e.diameter) {
            return Err(Error::Degenerate { triangle: k, area: e.area });
        }
        Ok(())
    }

    /// Element stiffness matrix `∫_K ∇φ_i · ∇φ_j`.
    pub fn element_stiffness(&self, k: usize) -> [[f64; 3]; 3] {
        let g = self.basis_gradients(k);
        let area = self.elements[k].area;
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
            }
        }
        m
    }

    /// Element mass matrix `∫_K φ_i φ_j`.
    pub fn element_mass(&self, k: usize) -> [[f64; 3]; 3] {
        let area = self.elements[k].area;
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = match (self.kind, i == j) {
                    (ElementKind::P1, true) => area / 6.0,
                    (ElementKind::P1, false) => area / 12.0,
                    (ElementKind::Cr, true) => area / 3.0,
                    (ElementKind::Cr, false) => 0.0,
                };
            }
        }
        m
    }

    fn assemble_raw(&self, local: impl Fn(usize) -> [[f64; 3]; 3]) -> Result<SparseMatrix> {
        let mut triplets = Vec::with_capacity(9 * self.elements.len());
        for k in 0..self.elements.len() {
            self.check_element(k)?;
            let dofs = self.element_dofs(k);
            let m = local(k);
            for i in 0..3 {
                for j in 0..3 {
                    triplets.push((dofs[i], dofs[j], m[i][j]));
                }
            }
        }
        Ok(SparseMatrix::from_triplets(self.n_dofs(), triplets))
    }

    /// Global stiffness matrix before Dirichlet elimination.
    pub fn assemble_stiffness_raw(&self) -> Result<SparseMatrix> {
        self.assemble_raw(|k| self.element_stiffness(k))
    }

    /// Global mass matrix before Dirichlet elimination.
    pub fn assemble_mass_raw(&self) -> Result<SparseMatrix> {
        self.assemble_raw(|k| self.element_mass(k))
    }

    /// Stiffness matrix with constrained rows and columns replaced by the identity.
    pub fn assemble_stiffness(&self) -> Result<SparseMatrix> {
        Ok(self.assemble_stiffness_raw()?.eliminate(&self.dirichlet))
    }

    /// Mass matrix with constrained rows and columns replaced by the identity.
    pub fn assemble_mass(&self) -> Result<SparseMatrix> {
        Ok(self.assemble_mass_raw()?.eliminate(&self.dirichlet))
    }

    /// Restricts a full-size matrix to the free dofs.
    pub fn restrict(&self, m: &SparseMatrix) -> SparseMatrix {
        m.submatrix(&self.free_dofs, &self.free_position)
    }

    pub fn restrict_vec(&self, full: &[f64]) -> Vec<f64> {
        self.free_dofs.iter().map(|&i| full[i]).collect()
    }

    pub fn extend_vec(&self, free: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_dofs()];
        for (&i, &v) in self.free_dofs.iter().zip(free) {
            full[i] = v;
        }
        full
    }

    /// Nodal interpolation of `g` (vertex values for P1, midpoint values for
    /// CR), with constrained dofs set to zero.
    pub fn interpolate(&self, g: impl Fn(Point) -> f64) -> DiscreteFunction<'_> {
        let coeffs = (0..self.n_dofs()).map(|i| if self.dirichlet[i] { 0.0 } else { g(self.dof_point(i)) }).collect();
        DiscreteFunction { space: self, coeffs }
    }

    /// Lagrange interpolation into a P1 space.
    pub fn interpolate_p1(&self, g: impl Fn(Point) -> f64) -> Result<DiscreteFunction<'_>> {
        if self.kind != ElementKind::P1 {
            return Err(Error::Argument("interpolate_p1 needs a P1 space".into()));
        }
        Ok(self.interpolate(g))
    }

    /// Load vector `∫ f φ_i` over all dofs via the seven-point rule.
    pub fn load_vector(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        let rule = seven_point();
        let mut b = vec![0.0; self.n_dofs()];
        for k in 0..self.elements.len() {
            let [p0, p1, p2] = self.mesh.corners(k);
            let area = self.elements[k].area;
            let dofs = self.element_dofs(k);
            for (l, w) in &rule {
                let x = [l[0] * p0[0] + l[1] * p1[0] + l[2] * p2[0], l[0] * p0[1] + l[1] * p1[1] + l[2] * p2[1]];
                let fx = f(x) * w * area;
                let phi = self.basis(*l);
                for i in 0..3 {
                    b[dofs[i]] += fx * phi[i];
                }
            }
        }
        b
    }

    /// `T_h f`: the discrete solution of `a_h(T_h f, v) = (f, v)` for all `v`.
    pub fn solve_source(&self, f: impl Fn(Point) -> f64) -> Result<DiscreteFunction<'_>> {
        let a = self.restrict(&self.assemble_stiffness_raw()?);
        let b = self.restrict_vec(&self.load_vector(f));
        let factor = Cholesky::new(&a)?;
        let x = solve_refined(&a, &factor, &b, 1e-12)?;
        Ok(DiscreteFunction { space: self, coeffs: self.extend_vec(&x) })
    }
}

/// Direct solve with up to three steps of iterative refinement; fails if the
/// relative residual stays above `tol`.
pub fn solve_refined(a: &SparseMatrix, factor: &Cholesky, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let bnorm = norm(b);
    let mut x = factor.solve(b);
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut rel = f64::INFINITY;
    for _ in 0..4 {
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
        rel = norm(&r) / bnorm;
        if rel <= tol {
            return Ok(x);
        }
        let dx = factor.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
    }
    Err(Error::Numeric(format!("linear solve residual {rel:e} exceeds {tol:e}")))
}

/// A function in an [`FeSpace`]; constrained coefficients are zero.
#[derive(Debug, Clone)]
pub struct DiscreteFunction<'a> {
    space: &'a FeSpace,
    coeffs: Vec<f64>,
}

impl<'a> DiscreteFunction<'a> {
    /// Wraps a full coefficient vector. Fails on a length mismatch or a
    /// nonzero constrained coefficient.
    pub fn new(space: &'a FeSpace, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::Argument(format!("{} coefficients for {} dofs", coeffs.len(), space.n_dofs())));
        }
        if let Some(i) = (0..coeffs.len()).find(|&i| space.dirichlet[i] && coeffs[i] != 0.0) {
            return Err(Error::Argument(format!("constrained dof {i} has a nonzero coefficient")));
        }
        Ok(Self { space, coeffs })
    }

    pub fn from_free(space: &'a FeSpace, free: &[f64]) -> Self {
        Self { space, coeffs: space.extend_vec(free) }
    }

    #[cfg(test)]
    pub(crate) fn from_coeffs_unchecked(space: &'a FeSpace, coeffs: Vec<f64>) -> Self {
        Self { space, coeffs }
    }

    pub fn zero(space: &'a FeSpace) -> Self {
        Self { space, coeffs: vec![0.0; space.n_dofs()] }
    }

    pub fn space(&self) -> &'a FeSpace {
        self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn free_coeffs(&self) -> Vec<f64> {
        self.space.restrict_vec(&self.coeffs)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { space: self.space, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    fn local(&self, k: usize) -> [f64; 3] {
        self.space.element_dofs(k).map(|d| self.coeffs[d])
    }

    /// Value on element `k` at barycentric coordinates `b`.
    pub fn evaluate(&self, k: usize, b: [f64; 3]) -> Result<f64> {
        if b.iter().any(|&x| !(x >= -1e-12)) || (b.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!("invalid barycentric coordinates {b:?}")));
        }
        Ok(self.evaluate_unchecked(k, b))
    }

    pub(crate) fn evaluate_unchecked(&self, k: usize, b: [f64; 3]) -> f64 {
        let u = self.local(k);
        let phi = self.space.basis(b);
        u[0] * phi[0] + u[1] * phi[1] + u[2] * phi[2]
    }

    /// Values at the three vertices of element `k`.
    pub fn vertex_values(&self, k: usize) -> [f64; 3] {
        let u = self.local(k);
        match self.space.kind {
            ElementKind::P1 => u,
            // ψ_i(v_i) = -1, ψ_j(v_i) = 1 for j ≠ i
            ElementKind::Cr => {
                let s = u[0] + u[1] + u[2];
                [s - 2.0 * u[0], s - 2.0 * u[1], s - 2.0 * u[2]]
            }
        }
    }

    /// The constant gradient on element `k`.
    pub fn gradient(&self, k: usize) -> [f64; 2] {
        let u = self.local(k);
        let g = self.space.basis_gradients(k);
        [
            u[0] * g[0][0] + u[1] * g[1][0] + u[2] * g[2][0],
            u[0] * g[0][1] + u[1] * g[1][1] + u[2] * g[2][1],
        ]
    }
}
