//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use eigen_pointwise::adapt::mark;
use eigen_pointwise::eigensolve::EigenSolution;
use eigen_pointwise::estimator::{CrBoundaryJump, EstimatorOptions};
use eigen_pointwise::mesh::{generate, DomainKind, DomainSpec, Mesh};
use eigen_pointwise::space::{DiscreteFunction, ElementKind, SparseMatrix};
use nalgebra::DMatrix;

/// Lattice subdivisions per element: 141·142/2 = 10011 points.
pub const ELEMENT_LATTICE: usize = 140;
pub const EDGE_SAMPLES: usize = 1000;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn physical(p: &[[f64; 2]; 3], b: [f64; 3]) -> [f64; 2] {
    [
        b[0] * p[0][0] + b[1] * p[1][0] + b[2] * p[2][0],
        b[0] * p[0][1] + b[1] * p[1][1] + b[2] * p[2][1],
    ]
}

/// Gradient of `f` on triangle `k` near the point of edge `(a, b)` with
/// parameter `t`, from two finite differences inside the triangle.
fn sampled_gradient(f: &DiscreteFunction, k: usize, a: usize, b: usize, t: f64) -> [f64; 2] {
    let mesh = f.space().mesh();
    let tri = mesh.triangles()[k];
    let p = mesh.corners(k);
    let ia = tri.iter().position(|&v| v == a).unwrap();
    let ib = tri.iter().position(|&v| v == b).unwrap();
    let io = 3 - ia - ib;
    let on_edge = |t: f64| {
        let mut bc = [0.0; 3];
        bc[ia] = 1.0 - t;
        bc[ib] = t;
        bc
    };
    let b0 = on_edge(t);
    let mut b1 = b0.map(|x| 0.75 * x);
    b1[io] += 0.25;
    let b2 = on_edge(if t < 0.5 { t + 0.3 } else { t - 0.3 });

    let (x0, x1, x2) = (physical(&p, b0), physical(&p, b1), physical(&p, b2));
    let u0 = f.evaluate(k, b0).unwrap();
    let d1 = [x1[0] - x0[0], x1[1] - x0[1]];
    let d2 = [x2[0] - x0[0], x2[1] - x0[1]];
    let r1 = f.evaluate(k, b1).unwrap() - u0;
    let r2 = f.evaluate(k, b2).unwrap() - u0;
    let det = d1[0] * d2[1] - d1[1] * d2[0];
    [(r1 * d2[1] - r2 * d1[1]) / det, (d1[0] * r2 - d2[0] * r1) / det]
}

/// Edge-to-triangle incidence recomputed from the triangle list.
fn incident(mesh: &Mesh, a: usize, b: usize) -> Vec<usize> {
    (0..mesh.n_triangles()).filter(|&k| mesh.triangles()[k].contains(&a) && mesh.triangles()[k].contains(&b)).collect()
}

/// Brute-force `η_K` for every element: dense lattice for the volume term
/// and finite-difference gradients sampled along every edge for the jumps.
pub fn sampled_indicators(sol: &EigenSolution, opts: &EstimatorOptions) -> Vec<f64> {
    let f = &sol.u_h;
    let mesh = f.space().mesh();
    let cr = f.space().kind() == ElementKind::Cr;
    let n = ELEMENT_LATTICE;
    (0..mesh.n_triangles())
        .map(|k| {
            let p = mesh.corners(k);
            let h = dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]));
            let mut umax: f64 = 0.0;
            for i in 0..=n {
                for j in 0..=n - i {
                    let b = [i as f64 / n as f64, j as f64 / n as f64, (n - i - j) as f64 / n as f64];
                    umax = umax.max((sol.lambda_h * f.evaluate(k, b).unwrap()).abs());
                }
            }
            let volume = if opts.drop_volume_term { 0.0 } else { h * h * umax };

            let tri = mesh.triangles()[k];
            let mut jmax: f64 = 0.0;
            for e in 0..3 {
                let (a, b) = (tri[(e + 1) % 3], tri[(e + 2) % 3]);
                let patch = incident(mesh, a, b);
                let boundary = patch.len() == 1;
                if boundary && !cr {
                    continue;
                }
                // normal pointing out of the first incident triangle
                let plus = patch[0];
                let opposite = mesh.triangles()[plus].iter().copied().find(|&v| v != a && v != b).unwrap();
                let (pa, pb, po) = (mesh.vertices()[a], mesh.vertices()[b], mesh.vertices()[opposite]);
                let len = dist(pa, pb);
                let mut nrm = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
                let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
                if nrm[0] * (po[0] - mid[0]) + nrm[1] * (po[1] - mid[1]) > 0.0 {
                    nrm = [-nrm[0], -nrm[1]];
                }
                let tau = [-nrm[1], nrm[0]];
                for s in 0..EDGE_SAMPLES {
                    let t = (s as f64 + 0.5) / EDGE_SAMPLES as f64;
                    let gp = sampled_gradient(f, plus, a, b, t);
                    let jump = match patch.get(1) {
                        Some(&minus) => {
                            let gm = sampled_gradient(f, minus, a, b, t);
                            [gp[0] - gm[0], gp[1] - gm[1]]
                        }
                        None => gp,
                    };
                    let normal = jump[0] * nrm[0] + jump[1] * nrm[1];
                    let value = if !cr {
                        normal.abs()
                    } else if boundary && opts.cr_boundary_jump == CrBoundaryJump::Tangential {
                        (jump[0] * tau[0] + jump[1] * tau[1]).abs()
                    } else {
                        jump[0].hypot(jump[1])
                    };
                    jmax = jmax.max(value);
                }
            }
            volume + h * jmax
        })
        .collect()
}

/// Smallest eigenvalues of `A x = λ M x` through `M^{-1/2} A M^{-1/2}`,
/// with `M^{-1/2}` from a symmetric eigendecomposition of `M`.
pub fn dense_eigenvalues(a: &SparseMatrix, m: &SparseMatrix) -> Vec<f64> {
    let md = m.to_dense();
    let eig = md.symmetric_eigen();
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    let w = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    let c = &w * a.to_dense() * &w;
    let c = (&c + c.transpose()) * 0.5;
    let mut values: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Meshes with at most 200 elements: initial meshes of every domain plus
/// a few that have been refined by marking the largest indicators.
pub fn small_meshes() -> Vec<(String, Arc<Mesh>)> {
    let mut out = Vec::new();
    for (kind, h0) in [
        (DomainKind::UnitPiSquare, PI / 2.0),
        (DomainKind::UnitPiSquare, PI / 4.0),
        (DomainKind::UnitPiSquare, PI / 8.0),
        (DomainKind::LShape, PI / 4.0),
        (DomainKind::LShape, PI / 8.0),
        (DomainKind::SlitDiamond, 0.5),
        (DomainKind::SlitDiamond, 0.25),
    ] {
        out.push((format!("{kind} h0={h0:.4}"), Arc::new(generate(&DomainSpec::new(kind, h0)).unwrap())));
    }
    for (kind, h0) in [(DomainKind::LShape, PI / 4.0), (DomainKind::SlitDiamond, 0.5)] {
        let mut mesh = generate(&DomainSpec::new(kind, h0)).unwrap();
        let mut level = 0;
        while mesh.n_triangles() <= 200 {
            out.push((format!("{kind} refined {level}"), Arc::new(mesh.clone())));
            let space = eigen_pointwise::space::FeSpace::new(Arc::new(mesh.clone()), ElementKind::P1);
            let sol = eigen_pointwise::eigensolve::solve_space(&space, 1, &Default::default()).unwrap().remove(0);
            let field = eigen_pointwise::estimator::indicators(&sol, &EstimatorOptions::default()).unwrap();
            mesh = mesh.bisect(&mark(&field, 0.7)).unwrap();
            level += 1;
        }
    }
    out
}
