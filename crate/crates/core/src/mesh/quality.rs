//! Shape statistics: angles, similarity classes and the grading monitor.

use std::collections::BTreeSet;

use super::Mesh;

/// Interior angles of triangle `k` in radians, opposite vertices 0, 1, 2.
pub fn triangle_angles(mesh: &Mesh, k: usize) -> [f64; 3] {
    let l = mesh.geometry(k).edge_lengths;
    let angle = |i: usize| {
        let (a, b, c) = (l[i], l[(i + 1) % 3], l[(i + 2) % 3]);
        ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0).acos()
    };
    [angle(0), angle(1), angle(2)]
}

/// Smallest interior angle over the mesh, in degrees.
pub fn min_angle(mesh: &Mesh) -> f64 {
    (0..mesh.n_triangles())
        .flat_map(|k| triangle_angles(mesh, k))
        .fold(f64::INFINITY, f64::min)
        .to_degrees()
}

/// A triangle shape up to similarity: the two shorter edge lengths divided by
/// the longest, quantised to 1e-8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimilarityClass(i64, i64);

pub fn similarity_classes(mesh: &Mesh) -> BTreeSet<SimilarityClass> {
    (0..mesh.n_triangles())
        .map(|k| {
            let mut l = mesh.geometry(k).edge_lengths;
            l.sort_by(f64::total_cmp);
            let q = |x: f64| (x / l[2] * 1e8).round() as i64;
            SimilarityClass(q(l[0]), q(l[1]))
        })
        .collect()
}

/// `max_K h / h_K^gamma` with `h` the largest diameter.
pub fn grading_monitor(mesh: &Mesh, gamma: f64) -> f64 {
    let diams: Vec<f64> = (0..mesh.n_triangles()).map(|k| mesh.geometry(k).diameter).collect();
    let h = diams.iter().copied().fold(0.0, f64::max);
    diams.iter().map(|&hk| h / hk.powf(gamma)).fold(0.0, f64::max)
}
