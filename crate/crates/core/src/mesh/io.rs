//! Plain-text mesh format:
//!
//! ```text
//! mesh v1 <nv> <nt>
//! x y                  (nv lines)
//! v0 v1 v2 refedge     (nt lines)
//! va vb tag            (one line per tagged boundary edge)
//! vu vl                (one line per seam pair)
//! ```

use std::io::Write;

use super::{BoundaryTag, Mesh};
use crate::error::{Error, Result};

pub fn write_mesh<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    writeln!(out, "mesh v1 {} {}", mesh.n_vertices(), mesh.n_triangles())?;
    for p in &mesh.vertices {
        writeln!(out, "{:?} {:?}", p[0], p[1])?;
    }
    for (t, r) in mesh.triangles.iter().zip(&mesh.refinement_edge) {
        writeln!(out, "{} {} {} {}", t[0], t[1], t[2], r)?;
    }
    for (&(a, b), tag) in &mesh.boundary {
        writeln!(out, "{a} {b} {}", tag.as_str())?;
    }
    for &(u, l) in &mesh.seam_pairs {
        writeln!(out, "{u} {l}")?;
    }
    Ok(())
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let err = |line: usize, message: &str| Error::Parse { line: line + 1, message: message.to_string() };

    let (hl, header) = lines.next().ok_or_else(|| err(0, "empty input"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 4 || head[0] != "mesh" || head[1] != "v1" {
        return Err(err(hl, "expected header `mesh v1 <nv> <nt>`"));
    }
    let nv: usize = head[2].parse().map_err(|_| err(hl, "bad vertex count"))?;
    let nt: usize = head[3].parse().map_err(|_| err(hl, "bad triangle count"))?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| err(hl, "missing vertex lines"))?;
        let f: Vec<f64> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(ln, "bad coordinate"))?;
        if f.len() != 2 {
            return Err(err(ln, "expected `x y`"));
        }
        vertices.push([f[0], f[1]]);
    }
    let mut triangles = Vec::with_capacity(nt);
    let mut refs = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines.next().ok_or_else(|| err(hl, "missing triangle lines"))?;
        let f: Vec<usize> = l
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(ln, "bad triangle index"))?;
        if f.len() != 4 || f[3] > 2 {
            return Err(err(ln, "expected `v0 v1 v2 refedge`"));
        }
        triangles.push([f[0], f[1], f[2]]);
        refs.push(f[3] as u8);
    }
    let mut boundary = Vec::new();
    let mut seams = Vec::new();
    for (ln, l) in lines {
        let tok: Vec<&str> = l.split_whitespace().collect();
        let idx = |s: &str| s.parse::<usize>().map_err(|_| err(ln, "bad vertex index"));
        match tok.as_slice() {
            [a, b, tag] => {
                let tag = match *tag {
                    "dirichlet" => BoundaryTag::Dirichlet,
                    "interior" => BoundaryTag::Interior,
                    _ => return Err(err(ln, "unknown boundary tag")),
                };
                boundary.push((idx(a)?, idx(b)?, tag));
            }
            [u, l] => seams.push((idx(u)?, idx(l)?)),
            _ => return Err(err(ln, "expected a boundary or seam line")),
        }
    }
    let boundary = boundary.into_iter().filter(|&(_, _, t)| t == BoundaryTag::Dirichlet).collect();
    Mesh::from_parts(vertices, triangles, refs, boundary, seams)
}
