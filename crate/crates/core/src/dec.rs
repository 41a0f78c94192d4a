//! Discrete exterior calculus on a [`TriangleMesh`]: coboundaries, lumped
//! Hodge stars, the codifferential on 1-forms and the cotan Laplacian.
//!
//! Stars are diagonal. `star0` uses barycentric dual areas, `star1` the cotan
//! weights, `star2` inverse face areas.

use crate::error::{check_len, Error, Result};
use crate::mesh::TriangleMesh;
use crate::sparse::SparseOperator;

/// A degree-`k` cochain: values on vertices (`k = 0`), canonically oriented
/// edges (`k = 1`) or faces (`k = 2`).
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteForm {
    degree: usize,
    values: Vec<f64>,
}

impl DiscreteForm {
    pub fn new(degree: usize, values: Vec<f64>) -> Result<Self> {
        if degree > 2 {
            return Err(Error::Precondition(format!("form degree {degree} on a surface")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!("non-finite cochain value at index {i}")));
        }
        Ok(Self { degree, values })
    }

    pub fn zeros(mesh: &TriangleMesh, degree: usize) -> Result<Self> {
        Self::new(degree, vec![0.0; cell_count(mesh, degree)?])
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { degree: self.degree, values: self.values.iter().map(|v| k * v).collect() }
    }

    /// Checks degree and length against `mesh`.
    pub fn check_on(&self, mesh: &TriangleMesh, degree: usize) -> Result<()> {
        if self.degree != degree {
            return Err(Error::Precondition(format!("expected a {degree}-form, got a {}-form", self.degree)));
        }
        check_len(cell_count(mesh, degree)?, self.values.len())
    }
}

fn cell_count(mesh: &TriangleMesh, degree: usize) -> Result<usize> {
    match degree {
        0 => Ok(mesh.vertex_count()),
        1 => Ok(mesh.edge_count()),
        2 => Ok(mesh.face_count()),
        k => Err(Error::Precondition(format!("form degree {k} on a surface"))),
    }
}

/// `(d0 u)_e = u_hi - u_lo` for each canonical edge.
pub fn d0(mesh: &TriangleMesh) -> SparseOperator {
    SparseOperator::from_triplets(
        mesh.edge_count(),
        mesh.vertex_count(),
        mesh.edges().iter().enumerate().flat_map(|(e, &[lo, hi])| [(e, lo, -1.0), (e, hi, 1.0)]),
    )
}

/// Signed sum of a 1-cochain around each counterclockwise face boundary.
pub fn d1(mesh: &TriangleMesh) -> SparseOperator {
    SparseOperator::from_triplets(
        mesh.face_count(),
        mesh.edge_count(),
        (0..mesh.face_count()).flat_map(|t| {
            let (edges, signs) = (mesh.face_edges(t), mesh.face_signs(t));
            (0..3).map(move |k| (t, edges[k], f64::from(signs[k])))
        }),
    )
}

/// Barycentric dual areas: a third of the incident face areas per vertex.
pub fn star0_diagonal(mesh: &TriangleMesh) -> Vec<f64> {
    let mut dual = vec![0.0; mesh.vertex_count()];
    for (t, f) in mesh.faces().iter().enumerate() {
        let third = mesh.face_area(t) / 3.0;
        for &v in f {
            dual[v] += third;
        }
    }
    dual
}

/// Cotan weights `(cot α + cot β) / 2` of the angles opposite each edge.
///
/// Depends only on angles, so uniform rescaling leaves it bitwise unchanged.
/// Negative weights (non-Delaunay edges) are allowed and logged.
pub fn star1_diagonal(mesh: &TriangleMesh) -> Vec<f64> {
    let weights: Vec<f64> = (0..mesh.edge_count())
        .map(|e| {
            let [a, b] = mesh.edge_sides(e);
            let cot_a = mesh.cotangent(a.face, (a.k + 2) % 3);
            let cot_b = mesh.cotangent(b.face, (b.k + 2) % 3);
            0.5 * (cot_a + cot_b)
        })
        .collect();
    let floor = -1e-12 * weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let negative = weights.iter().filter(|w| **w < floor).count();
    if negative > 0 {
        log::warn!("{negative} edges have negative cotan weight (mesh is not Delaunay)");
    }
    weights
}

pub fn star2_diagonal(mesh: &TriangleMesh) -> Vec<f64> {
    mesh.face_areas().into_iter().map(|a| 1.0 / a).collect()
}

pub fn star0(mesh: &TriangleMesh) -> SparseOperator {
    SparseOperator::diagonal(star0_diagonal(mesh))
}

pub fn star1(mesh: &TriangleMesh) -> SparseOperator {
    SparseOperator::diagonal(star1_diagonal(mesh))
}

pub fn star2(mesh: &TriangleMesh) -> SparseOperator {
    SparseOperator::diagonal(star2_diagonal(mesh))
}

/// Weak-form cotan Laplacian `d0ᵀ · star1 · d0`.
pub fn laplacian0(mesh: &TriangleMesh) -> SparseOperator {
    DecOperators::new(mesh).laplacian0()
}

/// The operators of one mesh assembled together, stars kept as diagonals.
#[derive(Clone, Debug)]
pub struct DecOperators {
    pub d0: SparseOperator,
    pub d1: SparseOperator,
    pub star0: Vec<f64>,
    pub star1: Vec<f64>,
    pub star2: Vec<f64>,
}

impl DecOperators {
    pub fn new(mesh: &TriangleMesh) -> Self {
        Self {
            d0: d0(mesh),
            d1: d1(mesh),
            star0: star0_diagonal(mesh),
            star1: star1_diagonal(mesh),
            star2: star2_diagonal(mesh),
        }
    }

    pub fn laplacian0(&self) -> SparseOperator {
        let n = self.d0.cols();
        let triplets = self.d0.entries().collect::<Vec<_>>();
        // Each row of d0 holds exactly the two endpoints of one edge.
        let mut t = Vec::with_capacity(2 * triplets.len());
        for pair in triplets.chunks(2) {
            let (e, i, j) = (pair[0].0, pair[0].1, pair[1].1);
            let w = self.star1[e];
            t.extend([(i, i, w), (j, j, w), (i, j, -w), (j, i, -w)]);
        }
        SparseOperator::from_triplets(n, n, t)
    }

    /// `d0ᵀ · star1 · α`, the weak divergence of a 1-form.
    pub fn weak_divergence(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        check_len(self.star1.len(), alpha.len())?;
        let weighted: Vec<f64> = alpha.iter().zip(&self.star1).map(|(a, w)| a * w).collect();
        self.d0.apply_transpose(&weighted)
    }

    /// `δα = star0⁻¹ · d0ᵀ · star1 · α`, the L² adjoint of `d0`.
    pub fn codifferential1(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        let div = self.weak_divergence(alpha)?;
        Ok(div.iter().zip(&self.star0).map(|(d, a)| d / a).collect())
    }

    pub fn inner_product_0(&self, u: &[f64], w: &[f64]) -> Result<f64> {
        weighted_dot(&self.star0, u, w)
    }

    pub fn inner_product_1(&self, alpha: &[f64], beta: &[f64]) -> Result<f64> {
        weighted_dot(&self.star1, alpha, beta)
    }
}

fn weighted_dot(weights: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
    check_len(weights.len(), a.len())?;
    check_len(weights.len(), b.len())?;
    Ok(a.iter().zip(b).zip(weights).map(|((x, y), w)| x * w * y).sum())
}

/// L² product of two 1-forms, `αᵀ · star1 · β`.
pub fn inner_product_1(mesh: &TriangleMesh, alpha: &DiscreteForm, beta: &DiscreteForm) -> Result<f64> {
    alpha.check_on(mesh, 1)?;
    beta.check_on(mesh, 1)?;
    weighted_dot(&star1_diagonal(mesh), alpha.values(), beta.values())
}

/// L² product of two 0-forms, `uᵀ · star0 · w`.
pub fn inner_product_0(mesh: &TriangleMesh, u: &DiscreteForm, w: &DiscreteForm) -> Result<f64> {
    u.check_on(mesh, 0)?;
    w.check_on(mesh, 0)?;
    weighted_dot(&star0_diagonal(mesh), u.values(), w.values())
}

pub fn codifferential1(mesh: &TriangleMesh, alpha: &DiscreteForm) -> Result<DiscreteForm> {
    alpha.check_on(mesh, 1)?;
    DiscreteForm::new(0, DecOperators::new(mesh).codifferential1(alpha.values())?)
}

/// Edge integrals of the constant 1-form `a dx + b dy` on the flat torus
/// produced by [`crate::mesh::generate::flat_torus`], in unit-square
/// coordinates.
pub fn flat_torus_constant_form(mesh: &TriangleMesh, n: usize, a: f64, b: f64) -> Result<DiscreteForm> {
    check_len(n * n, mesh.vertex_count())?;
    let coords = |v: usize| ((v % n) as i64, (v / n) as i64);
    let wrap = |d: i64| {
        let d = d.rem_euclid(n as i64);
        if d > n as i64 / 2 {
            d - n as i64
        } else {
            d
        }
    };
    let h = 1.0 / n as f64;
    let values = (0..mesh.edge_count())
        .map(|e| {
            // The side that runs low -> high gives the edge direction in the grid.
            let side = mesh.edge_sides(e)[0];
            let f = mesh.faces()[side.face];
            let (from, to) = (f[side.k], f[(side.k + 1) % 3]);
            let (x0, y0) = coords(from);
            let (x1, y1) = coords(to);
            let (mut dx, mut dy) = (wrap(x1 - x0), wrap(y1 - y0));
            if n == 2 {
                // On the 2x2 grid +1 and -1 coincide mod n; use the face layout.
                (dx, dy) = grid_step(side.face, side.k);
            }
            a * dx as f64 * h + b * dy as f64 * h
        })
        .collect();
    DiscreteForm::new(1, values)
}

fn grid_step(face: usize, k: usize) -> (i64, i64) {
    // Matches the face layout of `flat_torus`: lower faces (v00, v10, v11),
    // upper faces (v00, v11, v01).
    if face.is_multiple_of(2) {
        [(1, 0), (0, 1), (-1, -1)][k]
    } else {
        [(1, 1), (-1, 0), (0, -1)][k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::{flat_torus, genus2_octagon};

    #[test]
    fn d0_examples() {
        let mesh = flat_torus(4).unwrap();
        let d = d0(&mesh);
        let ones = vec![1.0; mesh.vertex_count()];
        assert!(d.apply(&ones).unwrap().iter().all(|v| *v == 0.0));
        let e = 0;
        let [lo, hi] = mesh.edges()[e];
        let mut ind = vec![0.0; mesh.vertex_count()];
        ind[hi] = 1.0;
        assert_eq!(d.apply(&ind).unwrap()[e], 1.0);
        ind[hi] = 0.0;
        ind[lo] = 1.0;
        assert_eq!(d.apply(&ind).unwrap()[e], -1.0);
    }

    #[test]
    fn dd_is_exactly_zero() {
        for mesh in [flat_torus(2).unwrap(), flat_torus(7).unwrap(), genus2_octagon(2).unwrap()] {
            let dd = d1(&mesh).compose(&d0(&mesh)).unwrap();
            assert!(dd.entries().all(|(_, _, v)| v == 0.0));
        }
    }

    #[test]
    fn d1_single_edge_support() {
        let mesh = flat_torus(5).unwrap();
        let mut alpha = vec![0.0; mesh.edge_count()];
        alpha[7] = 1.0;
        let out = d1(&mesh).apply(&alpha).unwrap();
        let nz: Vec<f64> = out.into_iter().filter(|v| *v != 0.0).collect();
        assert_eq!(nz.len(), 2);
        assert_eq!(nz[0], -nz[1]);
    }

    #[test]
    fn d1_row_sign_pattern() {
        // Face (v00, v10, v11) with increasing indices: sides 0 and 1 follow
        // the canonical orientation, the closing side runs against it.
        let mesh = flat_torus(4).unwrap();
        let row: Vec<(usize, f64)> = d1(&mesh).entries().filter(|e| e.0 == 0).map(|e| (e.1, e.2)).collect();
        let [v00, v10, v11] = mesh.faces()[0];
        assert!(v00 < v10 && v10 < v11);
        let mut signs: Vec<f64> = row.iter().map(|r| r.1).collect();
        signs.sort_by(f64::total_cmp);
        assert_eq!(signs, vec![-1.0, 1.0, 1.0]);
    }

    #[test]
    fn star_examples_flat_torus() {
        let n = 8;
        let mesh = flat_torus(n).unwrap();
        for a in star0_diagonal(&mesh) {
            assert!((a - 1.0 / (n * n) as f64).abs() < 1e-15);
        }
        assert!((star0_diagonal(&mesh).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for s in star2_diagonal(&mesh) {
            assert!((s - 128.0).abs() < 1e-10);
        }
        let vol: Vec<f64> = mesh.face_areas();
        let density: Vec<f64> = vol.iter().zip(star2_diagonal(&mesh)).map(|(a, s)| a * s).collect();
        assert!(density.iter().all(|d| (d - 1.0).abs() < 1e-14));
        let norm2: f64 = vol.iter().zip(star2_diagonal(&mesh)).map(|(a, s)| a * a * s).sum();
        assert!((norm2 - 1.0).abs() < 1e-12);

        let w = star1_diagonal(&mesh);
        for (e, [lo, hi]) in mesh.edges().iter().enumerate() {
            let diagonal = mesh.edge_length(e) > 1.2 / n as f64;
            let expected = if diagonal { 0.0 } else { 1.0 };
            assert!((w[e] - expected).abs() < 1e-15, "edge {lo}-{hi}: {}", w[e]);
        }
    }

    #[test]
    fn star_examples_tetrahedron() {
        let faces = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
        let lengths: Vec<_> =
            [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)].iter().map(|&(i, j)| (i, j, 1.0)).collect();
        let tet = TriangleMesh::from_edge_lengths(4, faces, &lengths).unwrap();
        for a in star0_diagonal(&tet) {
            assert!((a - 3f64.sqrt() / 4.0).abs() < 1e-15);
        }
        for w in star1_diagonal(&tet) {
            assert!((w - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn star1_is_scale_invariant_bitwise() {
        let mesh = genus2_octagon(2).unwrap();
        let base = star1_diagonal(&mesh);
        for k in [0.1, 3.7, 42.0] {
            assert_eq!(star1_diagonal(&mesh.scaled(k).unwrap()), base);
            let s0 = star0_diagonal(&mesh.scaled(k).unwrap());
            assert!((s0[3] / star0_diagonal(&mesh)[3] - k * k).abs() < 1e-12 * k * k);
        }
    }

    #[test]
    fn laplacian_hand_assembled_on_2x2_torus() {
        // Axis edges sit opposite two 45° angles (weight 1), diagonals opposite
        // two right angles (weight 0). Each vertex has two distinct horizontal
        // and two vertical edges to its single x- and y-neighbor.
        let mesh = flat_torus(2).unwrap();
        let lap = laplacian0(&mesh).to_dense();
        let expected = [[4.0, -2.0, -2.0, 0.0], [-2.0, 4.0, 0.0, -2.0], [-2.0, 0.0, 4.0, -2.0], [0.0, -2.0, -2.0, 4.0]];
        for i in 0..4 {
            for j in 0..4 {
                assert!((lap[i][j] - expected[i][j]).abs() < 1e-15, "({i},{j}) = {}", lap[i][j]);
            }
        }
    }

    #[test]
    fn laplacian_kernel_and_symmetry() {
        let mesh = genus2_octagon(2).unwrap();
        let lap = laplacian0(&mesh);
        assert_eq!(lap.max_asymmetry(), 0.0);
        let ones = vec![1.0; mesh.vertex_count()];
        assert!(lap.apply(&ones).unwrap().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dx_is_coclosed_on_flat_torus() {
        let n = 8;
        let mesh = flat_torus(n).unwrap();
        let dx = flat_torus_constant_form(&mesh, n, 1.0, 0.0).unwrap();
        assert!(d1(&mesh).apply(dx.values()).unwrap().iter().all(|v| *v == 0.0));
        let delta = codifferential1(&mesh, &dx).unwrap();
        assert!(delta.max_abs() < 1e-12);
        // ∫ dx ∧ *dx = area = 1.
        assert!((inner_product_1(&mesh, &dx, &dx).unwrap() - 1.0).abs() < 1e-12);
        let zero = DiscreteForm::zeros(&mesh, 1).unwrap();
        assert_eq!(inner_product_1(&mesh, &zero, &zero).unwrap(), 0.0);
        assert!(inner_product_1(&mesh, &dx, &DiscreteForm::zeros(&mesh, 0).unwrap()).is_err());
    }

    #[test]
    fn constant_form_on_2x2_torus() {
        let mesh = flat_torus(2).unwrap();
        let dy = flat_torus_constant_form(&mesh, 2, 0.0, 1.0).unwrap();
        assert!(d1(&mesh).apply(dy.values()).unwrap().iter().all(|v| v.abs() < 1e-15));
        assert!((inner_product_1(&mesh, &dy, &dy).unwrap() - 1.0).abs() < 1e-12);
        assert!(codifferential1(&mesh, &dy).unwrap().max_abs() < 1e-12);
    }
}
