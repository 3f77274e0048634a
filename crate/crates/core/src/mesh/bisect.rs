//! Newest-vertex bisection with conformity closure.
//!
//! Refinement works on edges: each marked triangle marks its refinement edge,
//! and any triangle touching a marked edge marks its own refinement edge until
//! nothing changes. Crack-face edges are marked together with their twin on
//! the opposite face so seam vertices stay paired. Every triangle is then cut
//! through its refinement edge, and each child whose refinement edge (one of
//! the parent's other two edges) is marked is cut again.

use super::{edge_key, Mesh, Point};
use crate::error::{Error, Result};

/// A refined mesh plus the parent edge `(new vertex, a, b)` of every vertex
/// created, in creation order. New vertex ids follow the old ones.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub mesh: Mesh,
    pub new_vertices: Vec<(usize, usize, usize)>,
}

impl Mesh {
    /// Refines the marked triangles by newest-vertex bisection and returns the
    /// new mesh; `self` is left untouched.
    pub fn bisect(&self, marked: &[usize]) -> Result<Mesh> {
        self.refine(marked).map(|r| r.mesh)
    }

    /// As [`Mesh::bisect`], also reporting where new vertices came from.
    pub fn refine(&self, marked: &[usize]) -> Result<Refinement> {
        let nt = self.n_triangles();
        if let Some(&bad) = marked.iter().find(|&&t| t >= nt) {
            return Err(Error::Argument(format!("triangle {bad} does not exist (mesh has {nt})")));
        }
        if marked.is_empty() {
            return Ok(Refinement { mesh: self.clone(), new_vertices: Vec::new() });
        }

        let topo = self.topology();
        let ne = topo.n_edges();

        let mut twin: Vec<Option<usize>> = vec![None; ne];
        let seam_edges: Vec<(usize, usize)> = self
            .seam_edges()
            .into_iter()
            .filter_map(|(u, l)| Some((topo.edge_id(u.0, u.1)?, topo.edge_id(l.0, l.1)?)))
            .collect();
        for &(u, l) in &seam_edges {
            twin[u] = Some(l);
            twin[l] = Some(u);
        }

        let ref_edge = |k: usize| topo.tri_edges[k][self.refinement_edge[k] as usize];
        let mut flagged = vec![false; ne];
        let mut stack = Vec::new();
        for &t in marked {
            let e = ref_edge(t);
            if !flagged[e] {
                flagged[e] = true;
                stack.push(e);
            }
        }
        while let Some(e) = stack.pop() {
            let (k1, k2) = topo.edge_tris[e];
            let candidates = [Some(ref_edge(k1)), k2.map(ref_edge), twin[e]];
            for f in candidates.into_iter().flatten() {
                if !flagged[f] {
                    flagged[f] = true;
                    stack.push(f);
                }
            }
        }

        let mut vertices = self.vertices.clone();
        let mut midpoint: Vec<Option<usize>> = vec![None; ne];
        let mut new_vertices = Vec::new();
        for e in (0..ne).filter(|&e| flagged[e]) {
            let (a, b) = topo.edges[e];
            let (pa, pb) = (vertices[a], vertices[b]);
            let m: Point = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
            midpoint[e] = Some(vertices.len());
            new_vertices.push((vertices.len(), a, b));
            vertices.push(m);
        }

        let mut seam_pairs = self.seam_pairs.clone();
        for &(u, l) in &seam_edges {
            if let (Some(mu), Some(ml)) = (midpoint[u], midpoint[l]) {
                seam_pairs.push((mu, ml));
            }
        }

        let mid_of = |a: usize, b: usize| topo.edge_id(a, b).and_then(|e| midpoint[e]);
        let mut triangles = Vec::with_capacity(nt + 2 * new_vertices.len());
        let mut refinement_edge = Vec::with_capacity(triangles.capacity());
        let mut generation = Vec::with_capacity(triangles.capacity());
        let mut work: Vec<([usize; 3], usize, u32)> = Vec::with_capacity(4);
        for k in 0..nt {
            work.push((self.triangles[k], self.refinement_edge[k] as usize, self.generation[k]));
            while let Some((t, r, g)) = work.pop() {
                let (a, b, c) = (t[r], t[(r + 1) % 3], t[(r + 2) % 3]);
                match mid_of(b, c) {
                    None => {
                        triangles.push(t);
                        refinement_edge.push(r as u8);
                        generation.push(g);
                    }
                    Some(m) => {
                        // pushed in reverse so the (a, b, m) child is emitted first
                        work.push(([a, m, c], 1, g + 1));
                        work.push(([a, b, m], 2, g + 1));
                    }
                }
            }
        }

        let mut boundary = std::collections::BTreeMap::new();
        for (&(a, b), &tag) in &self.boundary {
            match mid_of(a, b) {
                Some(m) => {
                    boundary.insert(edge_key(a, m), tag);
                    boundary.insert(edge_key(m, b), tag);
                }
                None => {
                    boundary.insert((a, b), tag);
                }
            }
        }

        let mesh = Mesh {
            vertices,
            triangles,
            refinement_edge,
            generation,
            boundary,
            seam_pairs,
            domain: self.domain,
        };
        Ok(Refinement { mesh, new_vertices })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, BoundaryTag, DomainKind, DomainSpec};
    use std::f64::consts::PI;

    fn single() -> Mesh {
        Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![0],
            vec![(0, 1, BoundaryTag::Dirichlet), (1, 2, BoundaryTag::Dirichlet), (2, 0, BoundaryTag::Dirichlet)],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn single_triangle_splits_in_two() {
        let m = single();
        let r = m.refine(&[0]).unwrap();
        assert_eq!(r.mesh.n_triangles(), 2);
        assert_eq!(r.mesh.n_vertices(), 4);
        assert_eq!(r.mesh.vertices()[3], [0.5, 0.5]);
        assert_eq!(r.new_vertices, vec![(3, 1, 2)]);
        assert!(r.mesh.conformity_check().ok);
        // both children have the new vertex opposite their refinement edge
        for k in 0..2 {
            let t = r.mesh.triangles()[k];
            assert_eq!(t[r.mesh.refinement_edges()[k] as usize], 3);
            assert!(r.mesh.geometry(k).diameter <= m.geometry(0).diameter);
        }
        assert_eq!(r.mesh.boundary_edges().count(), 4);
    }

    #[test]
    fn empty_marking_is_identity() {
        let m = generate(&DomainSpec::new(DomainKind::LShape, PI / 8.0)).unwrap();
        assert_eq!(m.bisect(&[]).unwrap(), m);
    }

    #[test]
    fn missing_id_is_an_error() {
        assert!(matches!(single().bisect(&[1]), Err(Error::Argument(_))));
    }

    #[test]
    fn closure_on_square() {
        let m = generate(&DomainSpec::new(DomainKind::UnitPiSquare, PI / 2.0)).unwrap();
        for k in 0..m.n_triangles() {
            let r = m.bisect(&[k]).unwrap();
            assert!(r.conformity_check().ok, "marking {k}: {:?}", r.conformity_check().violations);
            assert!(r.n_triangles() > m.n_triangles());
        }
    }

    #[test]
    fn slit_seam_stays_paired() {
        let mut m = generate(&DomainSpec::new(DomainKind::SlitDiamond, 0.25)).unwrap();
        for _ in 0..6 {
            // refine everything touching the crack tip
            let tip = m.vertices().iter().position(|p| *p == [0.0, 0.0]).unwrap();
            let marked: Vec<usize> =
                (0..m.n_triangles()).filter(|&k| m.triangles()[k].contains(&tip)).collect();
            m = m.bisect(&marked).unwrap();
            let report = m.conformity_check();
            assert!(report.ok, "{:?}", report.violations);
        }
        let mut paired = vec![0usize; m.n_vertices()];
        for &(u, l) in m.seam_pairs() {
            paired[u] += 1;
            paired[l] += 1;
        }
        for (v, p) in m.vertices().iter().enumerate() {
            if p[1] == 0.0 && p[0] > 0.0 && p[0] < 1.0 {
                assert_eq!(paired[v], 1, "vertex {v} at {p:?}");
            }
        }
    }
}
