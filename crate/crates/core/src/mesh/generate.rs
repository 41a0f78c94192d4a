//! Test surfaces: the flat square torus and the genus-2 regular octagon.

use std::f64::consts::PI;

use super::TriangleMesh;
use crate::error::{Error, Result};

/// Unit-area flat square torus on an `n x n` periodic vertex grid.
///
/// Vertex `(i, j)` has index `i + n * j`. Each grid cell is split along the
/// diagonal from `(i, j)` to `(i + 1, j + 1)`, so all faces are congruent
/// right isosceles triangles.
pub fn flat_torus(n: usize) -> Result<TriangleMesh> {
    if n < 2 {
        return Err(Error::Precondition(format!("torus resolution must be at least 2, got {n}")));
    }
    let vid = |i: usize, j: usize| (i % n) + n * (j % n);
    // Edge ids: 3 per grid vertex, horizontal / vertical / diagonal.
    let horizontal = |i: usize, j: usize| 3 * vid(i, j);
    let vertical = |i: usize, j: usize| 3 * vid(i, j) + 1;
    let diagonal = |i: usize, j: usize| 3 * vid(i, j) + 2;

    let h = 1.0 / n as f64;
    let mut lengths = vec![0.0; 3 * n * n];
    for v in 0..n * n {
        lengths[3 * v] = h;
        lengths[3 * v + 1] = h;
        lengths[3 * v + 2] = std::f64::consts::SQRT_2 * h;
    }

    let mut faces = Vec::with_capacity(2 * n * n);
    let mut face_edges = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            faces.push([v00, v10, v11]);
            face_edges.push([horizontal(i, j), vertical(i + 1, j), diagonal(i, j)]);
            faces.push([v00, v11, v01]);
            face_edges.push([diagonal(i, j), horizontal(i, j + 1), vertical(i, j)]);
        }
    }
    Ok(TriangleMesh::from_glued(n * n, faces, face_edges, lengths)?.normalize_area())
}

/// Points of the Clifford torus in R^4 for the [`flat_torus`] grid.
///
/// The chord lengths of this embedding reproduce the flat torus geometry up
/// to a uniform scale, so it is a lossless way to ship the flat torus in a
/// vertex-position file format.
pub fn flat_torus_clifford_points(n: usize) -> Vec<[f64; 4]> {
    let mut points = Vec::with_capacity(n * n);
    let r = 1.0 / (2.0 * PI);
    for j in 0..n {
        for i in 0..n {
            let (a, b) = (2.0 * PI * i as f64 / n as f64, 2.0 * PI * j as f64 / n as f64);
            points.push([r * a.cos(), r * a.sin(), r * b.cos(), r * b.sin()]);
        }
    }
    points
}

/// A triangulated cell complex that tolerates loops and repeated vertices
/// within a face. Only used to refine the octagon until it is a valid mesh.
#[derive(Clone, Debug)]
struct CellComplex {
    vertex_count: usize,
    faces: Vec<[usize; 3]>,
    /// Edge on each side of each face and whether the side follows the edge's
    /// reference direction.
    sides: Vec<[(usize, bool); 3]>,
    lengths: Vec<f64>,
}

impl CellComplex {
    /// One round of midpoint subdivision: each face splits into four similar
    /// triangles with halved side lengths.
    fn subdivide(&self) -> Self {
        let edge_count = self.lengths.len();
        let mid = |e: usize| self.vertex_count + e;
        let mut lengths = Vec::with_capacity(2 * edge_count + 3 * self.faces.len());
        for &l in &self.lengths {
            lengths.push(0.5 * l);
            lengths.push(0.5 * l);
        }
        // Halves of edge e: 2e from its reference start to the midpoint, 2e+1
        // from the midpoint to its reference end.
        let first_half = |(e, fwd): (usize, bool)| if fwd { (2 * e, true) } else { (2 * e + 1, false) };
        let second_half = |(e, fwd): (usize, bool)| if fwd { (2 * e + 1, true) } else { (2 * e, false) };

        let mut faces = Vec::with_capacity(4 * self.faces.len());
        let mut sides = Vec::with_capacity(4 * self.faces.len());
        for (t, (f, s)) in self.faces.iter().zip(&self.sides).enumerate() {
            let side_len = |k: usize| self.lengths[s[k].0];
            let [m0, m1, m2] = [mid(s[0].0), mid(s[1].0), mid(s[2].0)];
            // Midlines of the central triangle, each parallel to one side.
            let p = lengths.len();
            lengths.push(0.5 * side_len(2));
            lengths.push(0.5 * side_len(0));
            lengths.push(0.5 * side_len(1));
            debug_assert_eq!(p, 2 * edge_count + 3 * t);
            let (m0m1, m1m2, m2m0) = (p, p + 1, p + 2);

            faces.push([f[0], m0, m2]);
            sides.push([first_half(s[0]), (m2m0, false), second_half(s[2])]);
            faces.push([m0, f[1], m1]);
            sides.push([second_half(s[0]), first_half(s[1]), (m0m1, false)]);
            faces.push([m2, m1, f[2]]);
            sides.push([(m1m2, false), second_half(s[1]), first_half(s[2])]);
            faces.push([m0, m1, m2]);
            sides.push([(m0m1, true), (m1m2, true), (m2m0, true)]);
        }
        Self { vertex_count: self.vertex_count + edge_count, faces, sides, lengths }
    }

    fn into_mesh(self) -> Result<TriangleMesh> {
        let face_edges = self.sides.iter().map(|s| [s[0].0, s[1].0, s[2].0]).collect();
        TriangleMesh::from_glued(self.vertex_count, self.faces, face_edges, self.lengths)
    }
}

/// The regular Euclidean octagon with opposite sides glued by translation,
/// fanned from its center and midpoint-subdivided `refinement` times.
///
/// Vertex 0 is the single identified octagon corner (cone angle 6π) and
/// vertex 1 the octagon center. The metric is flat away from vertex 0 and the
/// result is scaled to unit area.
pub fn genus2_octagon(refinement: usize) -> Result<TriangleMesh> {
    if refinement < 1 {
        return Err(Error::Precondition("genus-2 refinement must be at least 1".into()));
    }
    let (corner, center) = (0usize, 1usize);
    let radius = 1.0;
    let side = 2.0 * radius * (PI / 8.0).sin();
    // Spokes 0..8 run center -> corner k; sides 8..12 run corner k -> corner k+1
    // for k < 4 and are traversed backwards by the opposite side k + 4.
    let mut lengths = vec![radius; 8];
    lengths.extend([side; 4]);
    let mut faces = Vec::with_capacity(8);
    let mut sides = Vec::with_capacity(8);
    for k in 0..8 {
        faces.push([center, corner, corner]);
        sides.push([(k, true), (8 + k % 4, k < 4), ((k + 1) % 8, false)]);
    }
    let mut complex = CellComplex { vertex_count: 2, faces, sides, lengths };
    for _ in 0..refinement {
        complex = complex.subdivide();
    }
    Ok(complex.into_mesh()?.normalize_area())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_counts() {
        for (n, v, e, f) in [(8, 64, 192, 128), (2, 4, 12, 8), (3, 9, 27, 18)] {
            let topo = flat_torus(n).unwrap().topology();
            assert_eq!((topo.vertex_count, topo.edge_count, topo.face_count), (v, e, f));
            assert_eq!((topo.euler_characteristic, topo.genus, topo.betti1), (0, 1, 2));
        }
        assert!(matches!(flat_torus(1), Err(Error::Precondition(_))));
        assert!(!flat_torus(2).unwrap().is_pair_keyed());
        assert!(flat_torus(3).unwrap().is_pair_keyed());
    }

    #[test]
    fn torus_is_flat_and_unit_area() {
        let mesh = flat_torus(8).unwrap();
        assert!((mesh.total_area() - 1.0).abs() < 1e-14);
        for s in mesh.angle_sums() {
            assert!((s - 2.0 * PI).abs() < 1e-12);
        }
        let a0 = mesh.face_area(0);
        assert!(mesh.face_areas().iter().all(|a| (a - a0).abs() < 1e-16));
    }

    #[test]
    fn clifford_chords_match_flat_lengths() {
        let n = 6;
        let pts = flat_torus_clifford_points(n);
        let faces = flat_torus(n).unwrap().faces().to_vec();
        let mesh = TriangleMesh::from_points(&pts, faces).unwrap().normalize_area();
        let flat = flat_torus(n).unwrap();
        for (a, b) in mesh.face_areas().iter().zip(flat.face_areas()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn genus2_counts_and_refinement() {
        let mut prev_faces = None;
        for r in 1..=3 {
            let mesh = genus2_octagon(r).unwrap();
            let topo = mesh.topology();
            assert_eq!(topo.euler_characteristic, -2);
            assert_eq!((topo.genus, topo.betti1), (2, 4));
            assert_eq!(topo.face_count, 8 * 4usize.pow(r as u32));
            if let Some(p) = prev_faces {
                assert_eq!(topo.face_count, 4 * p);
            }
            prev_faces = Some(topo.face_count);
            assert!((mesh.total_area() - 1.0).abs() < 1e-14);
        }
        assert!(genus2_octagon(0).is_err());
    }

    #[test]
    fn genus2_has_one_cone_point() {
        for r in 1..=3 {
            let mesh = genus2_octagon(r).unwrap();
            // Independent law-of-cosines oracle.
            let mut sums = vec![0.0; mesh.vertex_count()];
            for (t, f) in mesh.faces().iter().enumerate() {
                let l = mesh.face_edges(t).map(|e| mesh.edge_length(e));
                for k in 0..3 {
                    let (b, c, a) = (l[k], l[(k + 2) % 3], l[(k + 1) % 3]);
                    sums[f[k]] += ((b * b + c * c - a * a) / (2.0 * b * c)).acos();
                }
            }
            let lib = mesh.angle_sums();
            for (x, y) in sums.iter().zip(&lib) {
                assert!((x - y).abs() < 1e-10);
            }
            assert!((sums[0] - 6.0 * PI).abs() < 1e-10, "corner sum {}", sums[0]);
            for s in &sums[1..] {
                assert!((s - 2.0 * PI).abs() < 1e-10);
            }
        }
    }
}
