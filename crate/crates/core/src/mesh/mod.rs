//! Closed oriented triangle meshes carrying intrinsic (edge-length) geometry.
//!
//! Edges are identified by the face gluing rather than by vertex pairs, so
//! two distinct edges may join the same pair of vertices. That happens on
//! coarse periodic grids and on the first subdivision of the genus-2 octagon.
//! Edges still carry a canonical orientation from the lower to the higher
//! vertex index, which fixes the signs of the coboundary operators.
//!
//! Lengths are stored as base lengths times a uniform scale factor. Angles and
//! cotangents only ever see the base lengths, which makes them bitwise
//! invariant under uniform rescaling and area normalization.

pub mod generate;
pub mod io;

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Side `k` of a face runs from corner `k` to corner `(k + 1) % 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Side {
    pub face: usize,
    pub k: usize,
}

/// Area, interior angles and angle cotangents of one triangle.
///
/// `angles[k]` and `cotangents[k]` belong to corner `k`, which is opposite
/// side `(k + 1) % 3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceGeometry {
    pub area: f64,
    pub angles: [f64; 3],
    pub cotangents: [f64; 3],
}

impl FaceGeometry {
    /// Geometry of a triangle from its side lengths, `lengths[k]` being side `k`.
    pub fn from_lengths(lengths: [f64; 3]) -> Result<Self> {
        if lengths.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return Err(Error::Geometry(format!("edge lengths must be positive and finite, got {lengths:?}")));
        }
        let mut sorted = lengths;
        sorted.sort_by(|a, b| b.total_cmp(a));
        let [a, b, c] = sorted;
        // Kahan's arrangement of Heron's formula for a >= b >= c.
        if c - (a - b) <= 0.0 {
            return Err(Error::Geometry(format!("triangle inequality violated by lengths {lengths:?}")));
        }
        let area = 0.25 * ((a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))).sqrt();
        if area.is_nan() || area <= 0.0 {
            return Err(Error::Geometry(format!("degenerate triangle {lengths:?}")));
        }
        let mut angles = [0.0; 3];
        let mut cotangents = [0.0; 3];
        for k in 0..3 {
            let opposite = lengths[(k + 1) % 3];
            let adj1 = lengths[k];
            let adj2 = lengths[(k + 2) % 3];
            let twice_dot = adj1 * adj1 + adj2 * adj2 - opposite * opposite;
            cotangents[k] = twice_dot / (4.0 * area);
            angles[k] = (4.0 * area).atan2(twice_dot);
        }
        Ok(Self { area, angles, cotangents })
    }

    fn scaled(&self, scale: f64) -> Self {
        Self { area: self.area * scale * scale, ..*self }
    }
}

/// Combinatorial invariants of a closed oriented surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct MeshTopology {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub face_count: usize,
    pub euler_characteristic: i64,
    pub genus: usize,
    pub betti1: usize,
}

/// A validated closed, connected, oriented triangulated surface.
#[derive(Clone, Debug)]
pub struct TriangleMesh {
    vertex_count: usize,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    face_edges: Vec<[usize; 3]>,
    face_signs: Vec<[i8; 3]>,
    edge_sides: Vec<[Side; 2]>,
    base_lengths: Vec<f64>,
    base_geometry: Vec<FaceGeometry>,
    base_area: f64,
    scale: f64,
    positions: Option<Vec<[f64; 3]>>,
}

impl TriangleMesh {
    /// Builds a mesh from faces and an explicit gluing: `face_edges[t][k]` is
    /// the edge on side `k` of face `t`, and `lengths[e]` its length.
    pub fn from_glued(
        vertex_count: usize,
        faces: Vec<[usize; 3]>,
        face_edges: Vec<[usize; 3]>,
        lengths: Vec<f64>,
    ) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::Topology("mesh has no faces".into()));
        }
        if face_edges.len() != faces.len() {
            return Err(Error::Parse(format!("{} faces but {} face-edge records", faces.len(), face_edges.len())));
        }
        for (t, f) in faces.iter().enumerate() {
            if let Some(v) = f.iter().find(|&&v| v >= vertex_count) {
                return Err(Error::Parse(format!("face {t} references vertex {v}, but there are only {vertex_count}")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[2] == f[0] {
                return Err(Error::Topology(format!("face {t} repeats a vertex: {f:?}")));
            }
        }

        let edge_count = lengths.len();
        let mut endpoints: Vec<Option<[usize; 2]>> = vec![None; edge_count];
        let mut sides: Vec<Vec<Side>> = vec![Vec::new(); edge_count];
        for (t, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let e = face_edges[t][k];
                if e >= edge_count {
                    return Err(Error::Parse(format!(
                        "face {t} side {k} references edge {e}, but there are only {edge_count}"
                    )));
                }
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let pair = [a.min(b), a.max(b)];
                match endpoints[e] {
                    None => endpoints[e] = Some(pair),
                    Some(p) if p == pair => {}
                    Some(p) => {
                        return Err(Error::Topology(format!("edge {e} glued between vertices {p:?} and {pair:?}")))
                    }
                }
                sides[e].push(Side { face: t, k });
            }
        }

        let mut edges = Vec::with_capacity(edge_count);
        let mut edge_sides = Vec::with_capacity(edge_count);
        for (e, incident) in sides.iter().enumerate() {
            let pair = endpoints[e].ok_or_else(|| Error::Topology(format!("edge {e} is not used by any face")))?;
            match incident.len() {
                2 => {}
                1 => return Err(Error::Topology(format!("boundary edge {pair:?}: surface is not closed"))),
                n => return Err(Error::Topology(format!("non-manifold edge {pair:?} shared by {n} faces"))),
            }
            let agrees = |s: &Side| faces[s.face][s.k] == pair[0];
            let (first, second) = (incident[0], incident[1]);
            let ordered = match (agrees(&first), agrees(&second)) {
                (true, false) => [first, second],
                (false, true) => [second, first],
                _ => {
                    return Err(Error::Topology(format!(
                        "faces {} and {} traverse edge {pair:?} in the same direction \
                         (inconsistent orientation or non-orientable surface)",
                        first.face, second.face
                    )))
                }
            };
            edges.push(pair);
            edge_sides.push(ordered);
        }

        let face_signs = faces
            .iter()
            .zip(&face_edges)
            .map(|(f, fe)| {
                let mut s = [0i8; 3];
                for k in 0..3 {
                    s[k] = if f[k] == edges[fe[k]][0] { 1 } else { -1 };
                }
                s
            })
            .collect();

        let mut mesh = Self {
            vertex_count,
            faces,
            edges,
            face_edges,
            face_signs,
            edge_sides,
            base_lengths: lengths,
            base_geometry: Vec::new(),
            base_area: 0.0,
            scale: 1.0,
            positions: None,
        };
        mesh.check_vertex_links()?;
        mesh.check_connected()?;
        mesh.base_geometry = mesh
            .faces
            .iter()
            .enumerate()
            .map(|(t, _)| {
                FaceGeometry::from_lengths(mesh.side_lengths_base(t))
                    .map_err(|err| Error::Geometry(format!("face {t}: {err}")))
            })
            .collect::<Result<_>>()?;
        mesh.base_area = mesh.base_geometry.iter().map(|g| g.area).sum();
        Ok(mesh)
    }

    /// Builds a mesh whose edges are keyed by vertex pair, with lengths given
    /// as `(i, j, length)` triples in either vertex order.
    pub fn from_edge_lengths(
        vertex_count: usize,
        faces: Vec<[usize; 3]>,
        lengths: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let index = pair_index(vertex_count, &faces)?;
        let mut edge_lengths = vec![f64::NAN; index.len()];
        for &(i, j, len) in lengths {
            let key = (i.min(j), i.max(j));
            let e = *index
                .get(&key)
                .ok_or_else(|| Error::Parse(format!("length given for ({i}, {j}), which is not an edge")))?;
            if !edge_lengths[e].is_nan() && edge_lengths[e] != len {
                return Err(Error::Parse(format!("conflicting lengths for edge ({i}, {j})")));
            }
            edge_lengths[e] = len;
        }
        if let Some((&(i, j), _)) = index.iter().find(|(_, &e)| edge_lengths[e].is_nan()) {
            return Err(Error::Parse(format!("no length given for edge ({i}, {j})")));
        }
        let face_edges = pair_face_edges(&faces, &index);
        Self::from_glued(vertex_count, faces, face_edges, edge_lengths)
    }

    /// Builds a mesh from embedded 3D positions; lengths are Euclidean distances.
    pub fn from_positions(positions: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let points: Vec<&[f64]> = positions.iter().map(|p| p.as_slice()).collect();
        let mut mesh = Self::from_points(&points, faces)?;
        mesh.positions = Some(positions);
        Ok(mesh)
    }

    /// Like [`TriangleMesh::from_positions`] for points of any dimension.
    /// The points only seed the edge lengths and are not retained.
    pub fn from_points<P: AsRef<[f64]>>(points: &[P], faces: Vec<[usize; 3]>) -> Result<Self> {
        let vertex_count = points.len();
        let index = pair_index(vertex_count, &faces)?;
        let mut lengths = vec![0.0; index.len()];
        for (&(i, j), &e) in &index {
            let (p, q) = (points[i].as_ref(), points[j].as_ref());
            if p.len() != q.len() {
                return Err(Error::Parse("points have inconsistent dimensions".into()));
            }
            let len = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if !len.is_finite() || len <= 0.0 {
                return Err(Error::Geometry(format!("edge ({i}, {j}) has length {len}")));
            }
            lengths[e] = len;
        }
        let face_edges = pair_face_edges(&faces, &index);
        Self::from_glued(vertex_count, faces, face_edges, lengths)
    }

    fn side_lengths_base(&self, t: usize) -> [f64; 3] {
        let fe = self.face_edges[t];
        [self.base_lengths[fe[0]], self.base_lengths[fe[1]], self.base_lengths[fe[2]]]
    }

    fn check_vertex_links(&self) -> Result<()> {
        // Corners around a vertex are chained by crossing the outgoing side.
        let corner_id = |t: usize, k: usize| 3 * t + k;
        let mut visited = vec![false; 3 * self.faces.len()];
        let mut orbits = vec![0usize; self.vertex_count];
        for t in 0..self.faces.len() {
            for k in 0..3 {
                if visited[corner_id(t, k)] {
                    continue;
                }
                let v = self.faces[t][k];
                orbits[v] += 1;
                let (mut ct, mut ck) = (t, k);
                while !visited[corner_id(ct, ck)] {
                    visited[corner_id(ct, ck)] = true;
                    let e = self.face_edges[ct][ck];
                    let other = self.other_side(e, Side { face: ct, k: ck });
                    ct = other.face;
                    ck = (other.k + 1) % 3;
                    debug_assert_eq!(self.faces[ct][ck], v);
                }
            }
        }
        for (v, &n) in orbits.iter().enumerate() {
            match n {
                1 => {}
                0 => return Err(Error::Topology(format!("vertex {v} is not used by any face"))),
                _ => return Err(Error::Topology(format!("vertex {v} is non-manifold ({n} separate face fans)"))),
            }
        }
        Ok(())
    }

    fn check_connected(&self) -> Result<()> {
        let mut seen = vec![false; self.faces.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(t) = queue.pop_front() {
            for k in 0..3 {
                let other = self.other_side(self.face_edges[t][k], Side { face: t, k });
                if !seen[other.face] {
                    seen[other.face] = true;
                    count += 1;
                    queue.push_back(other.face);
                }
            }
        }
        if count != self.faces.len() {
            return Err(Error::Topology(format!(
                "mesh is disconnected: {count} of {} faces reachable from face 0",
                self.faces.len()
            )));
        }
        Ok(())
    }

    fn other_side(&self, e: usize, side: Side) -> Side {
        let [a, b] = self.edge_sides[e];
        if a == side {
            b
        } else {
            a
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Canonical edges as `[low, high]` vertex pairs, indexed by edge id.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Edge ids on the three sides of face `t`.
    pub fn face_edges(&self, t: usize) -> [usize; 3] {
        self.face_edges[t]
    }

    /// `+1` where side `k` of face `t` runs along the canonical edge
    /// orientation, `-1` where it runs against it.
    pub fn face_signs(&self, t: usize) -> [i8; 3] {
        self.face_signs[t]
    }

    /// The two sides glued along edge `e`: the one traversing it low to high
    /// first, then the opposing one.
    pub fn edge_sides(&self, e: usize) -> [Side; 2] {
        self.edge_sides[e]
    }

    /// True when no two edges join the same pair of vertices, so the mesh can
    /// be described by faces and vertex-pair lengths alone.
    pub fn is_pair_keyed(&self) -> bool {
        let mut pairs = self.edges.clone();
        pairs.sort_unstable();
        pairs.windows(2).all(|w| w[0] != w[1])
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.scale * self.base_lengths[e]
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        self.base_lengths.iter().map(|l| self.scale * l).collect()
    }

    /// The uniform factor applied to the stored base lengths.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn positions(&self) -> Option<&[[f64; 3]]> {
        self.positions.as_deref()
    }

    pub fn total_area(&self) -> f64 {
        self.scale * self.scale * self.base_area
    }

    pub fn face_area(&self, t: usize) -> f64 {
        self.scale * self.scale * self.base_geometry[t].area
    }

    pub fn face_areas(&self) -> Vec<f64> {
        (0..self.faces.len()).map(|t| self.face_area(t)).collect()
    }

    /// Per-face area and angles at the current scale.
    pub fn face_geometry(&self) -> Vec<FaceGeometry> {
        self.base_geometry.iter().map(|g| g.scaled(self.scale)).collect()
    }

    /// Cotangent of the angle at corner `k` of face `t`; scale-free.
    pub fn cotangent(&self, t: usize, k: usize) -> f64 {
        self.base_geometry[t].cotangents[k]
    }

    /// Sum of the interior angles incident to each vertex.
    pub fn angle_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.vertex_count];
        for (f, g) in self.faces.iter().zip(&self.base_geometry) {
            for k in 0..3 {
                sums[f[k]] += g.angles[k];
            }
        }
        sums
    }

    pub fn topology(&self) -> MeshTopology {
        let (v, e, f) = (self.vertex_count, self.edges.len(), self.faces.len());
        let chi = v as i64 - e as i64 + f as i64;
        // Closed orientable connected surfaces always have even chi <= 2.
        debug_assert!(chi % 2 == 0 && chi <= 2);
        let genus = ((2 - chi) / 2) as usize;
        MeshTopology {
            vertex_count: v,
            edge_count: e,
            face_count: f,
            euler_characteristic: chi,
            genus,
            betti1: 2 * genus,
        }
    }

    /// The same surface with every length multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !k.is_finite() || k <= 0.0 {
            return Err(Error::Precondition(format!("scale factor must be positive, got {k}")));
        }
        let mut out = self.clone();
        out.scale *= k;
        if let Some(p) = out.positions.as_mut() {
            for x in p.iter_mut().flatten() {
                *x *= k;
            }
        }
        Ok(out)
    }

    /// Rescales lengths by `1/sqrt(total_area)` so the surface has unit area.
    pub fn normalize_area(&self) -> Self {
        let area = self.total_area();
        let mut out = self.clone();
        if area != 1.0 {
            let k = 1.0 / area.sqrt();
            out.scale *= k;
            if let Some(p) = out.positions.as_mut() {
                for x in p.iter_mut().flatten() {
                    *x *= k;
                }
            }
        }
        out
    }

    /// Replaces the edge lengths while keeping the combinatorics.
    pub fn with_edge_lengths(&self, lengths: Vec<f64>) -> Result<Self> {
        crate::error::check_len(self.edges.len(), lengths.len())?;
        Self::from_glued(self.vertex_count, self.faces.clone(), self.face_edges.clone(), lengths)
    }
}

/// Total interior angle at vertex `v` minus the flat value `2π`.
pub fn angle_defects(mesh: &TriangleMesh) -> Vec<f64> {
    mesh.angle_sums().into_iter().map(|s| 2.0 * PI - s).collect()
}

fn pair_index(vertex_count: usize, faces: &[[usize; 3]]) -> Result<BTreeMap<(usize, usize), usize>> {
    let mut pairs = BTreeMap::new();
    for (t, f) in faces.iter().enumerate() {
        if let Some(v) = f.iter().find(|&&v| v >= vertex_count) {
            return Err(Error::Parse(format!("face {t} references vertex {v}, but there are only {vertex_count}")));
        }
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            pairs.insert((a.min(b), a.max(b)), 0);
        }
    }
    for (e, id) in pairs.values_mut().enumerate() {
        *id = e;
    }
    Ok(pairs)
}

fn pair_face_edges(faces: &[[usize; 3]], index: &BTreeMap<(usize, usize), usize>) -> Vec<[usize; 3]> {
    faces
        .iter()
        .map(|f| {
            let mut fe = [0; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                fe[k] = index[&(a.min(b), a.max(b))];
            }
            fe
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetrahedron() -> TriangleMesh {
        let faces = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
        let lengths: Vec<_> =
            [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)].iter().map(|&(i, j)| (i, j, 1.0)).collect();
        TriangleMesh::from_edge_lengths(4, faces, &lengths).unwrap()
    }

    #[test]
    fn face_geometry_examples() {
        let eq = FaceGeometry::from_lengths([1.0, 1.0, 1.0]).unwrap();
        assert!((eq.area - 3f64.sqrt() / 4.0).abs() < 1e-15);
        for a in eq.angles {
            assert!((a - PI / 3.0).abs() < 1e-15);
        }
        let right = FaceGeometry::from_lengths([3.0, 4.0, 5.0]).unwrap();
        assert!((right.area - 6.0).abs() < 1e-14);
        // Corner 1 sits between sides 0 (3) and 1 (4), opposite the hypotenuse.
        assert!((right.angles[1] - PI / 2.0).abs() < 1e-15);
        assert!((right.angles.iter().sum::<f64>() - PI).abs() < 1e-12);
        assert!(matches!(FaceGeometry::from_lengths([1.0, 1.0, 2.5]), Err(Error::Geometry(_))));
        assert!(FaceGeometry::from_lengths([1.0, 1.0, 2.0]).is_err());
        assert!(FaceGeometry::from_lengths([1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn tetrahedron_topology() {
        let tet = tetrahedron();
        let topo = tet.topology();
        assert_eq!((topo.vertex_count, topo.edge_count, topo.face_count), (4, 6, 4));
        assert_eq!((topo.euler_characteristic, topo.genus, topo.betti1), (2, 0, 0));
    }

    #[test]
    fn rejects_open_and_inconsistent_surfaces() {
        let faces = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2]];
        let lengths: Vec<_> =
            [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)].iter().map(|&(i, j)| (i, j, 1.0)).collect();
        let err = TriangleMesh::from_edge_lengths(4, faces, &lengths).unwrap_err();
        assert!(matches!(err, Error::Topology(_)), "{err}");

        let flipped = vec![[0, 1, 2], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
        let err = TriangleMesh::from_edge_lengths(4, flipped, &lengths).unwrap_err();
        assert!(matches!(err, Error::Topology(_)), "{err}");
    }

    #[test]
    fn rejects_disconnected_and_pinched() {
        let tet = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
        let mut faces: Vec<[usize; 3]> = tet.to_vec();
        faces.extend(tet.iter().map(|f| [f[0] + 4, f[1] + 4, f[2] + 4]));
        let points: Vec<[f64; 3]> = (0..8)
            .map(|i| {
                let base = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
                let mut p = base[i % 4];
                p[0] += if i >= 4 { 5.0 } else { 0.0 };
                p
            })
            .collect();
        let err = TriangleMesh::from_positions(points.clone(), faces.clone()).unwrap_err();
        assert!(err.to_string().contains("disconnected"), "{err}");

        // Glue the two tetrahedra at a single vertex.
        let pinched: Vec<[usize; 3]> = faces.iter().map(|f| f.map(|v| if v == 4 { 0 } else { v })).collect();
        let err = TriangleMesh::from_positions(points, pinched).unwrap_err();
        assert!(matches!(err, Error::Topology(_)), "{err}");
    }

    #[test]
    fn normalize_area_examples() {
        let tet = tetrahedron();
        let big = tet.scaled(2.0 / (3f64.sqrt()).sqrt()).unwrap();
        assert!((big.total_area() - 4.0).abs() < 1e-13);
        let unit = big.normalize_area();
        assert!((unit.total_area() - 1.0).abs() < 1e-14);
        for e in 0..6 {
            let ratio = unit.edge_length(e) / big.edge_length(e);
            assert!((ratio - 0.5).abs() < 1e-14);
        }
        let again = unit.normalize_area();
        for e in 0..6 {
            assert!((again.edge_length(e) / unit.edge_length(e) - 1.0).abs() <= 1e-15);
        }
        assert_eq!(unit.angle_sums(), big.angle_sums());
    }

    #[test]
    fn normalize_keeps_unit_meshes_bitwise() {
        let torus = generate::flat_torus(4).unwrap();
        assert_eq!(torus.total_area(), 1.0);
        let again = torus.normalize_area();
        assert_eq!(torus.edge_lengths(), again.edge_lengths());
    }
}
