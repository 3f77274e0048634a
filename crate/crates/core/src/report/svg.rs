//! SVG rendering of a triangulation.

use std::io::Write;

use crate::error::Result;
use crate::mesh::Mesh;

const WIDTH: f64 = 800.0;
const MARGIN: f64 = 10.0;

/// Draws every triangle as a closed path, scaled to fit the bounding box.
/// Crack faces are drawn as two lines pulled slightly apart.
pub fn write_svg<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in mesh.vertices() {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    if mesh.n_vertices() == 0 {
        lo = [0.0; 2];
        hi = [1.0; 2];
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let scale = (WIDTH - 2.0 * MARGIN) / span;
    let width = (hi[0] - lo[0]) * scale + 2.0 * MARGIN;
    let height = (hi[1] - lo[1]) * scale + 2.0 * MARGIN;
    let map = |p: [f64; 2]| ((p[0] - lo[0]) * scale + MARGIN, (hi[1] - p[1]) * scale + MARGIN);

    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.2}" height="{height:.2}" viewBox="0 0 {width:.2} {height:.2}">"#
    )?;
    writeln!(out, r##"<g fill="#ffffff" stroke="#1f3a93" stroke-width="0.4" stroke-linejoin="round">"##)?;
    for t in mesh.triangles() {
        let [a, b, c] = t.map(|v| map(mesh.vertices()[v]));
        writeln!(
            out,
            r#"<path d="M{:.3} {:.3}L{:.3} {:.3}L{:.3} {:.3}Z"/>"#,
            a.0, a.1, b.0, b.1, c.0, c.1
        )?;
    }
    writeln!(out, "</g>")?;

    let seam = mesh.seam_edges();
    if !seam.is_empty() {
        writeln!(out, r##"<g stroke="#c0392b" stroke-width="1">"##)?;
        for ((a, b), _) in seam {
            let (p, q) = (map(mesh.vertices()[a]), map(mesh.vertices()[b]));
            for offset in [-1.0, 1.0] {
                writeln!(
                    out,
                    r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                    p.0,
                    p.1 + offset,
                    q.0,
                    q.1 + offset
                )?;
            }
        }
        writeln!(out, "</g>")?;
    }
    writeln!(out, "</svg>")?;
    Ok(())
}
