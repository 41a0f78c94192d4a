//! L²-orthonormal bases of discrete harmonic 1-forms.
//!
//! Cohomology generators come from a tree–cotree decomposition. Each one is
//! made harmonic by subtracting the exact part found with a Poisson solve,
//! then the set is orthonormalized under the `star1` inner product. Because
//! `star1` only depends on angles, the basis is the same for every metric
//! in the uniform-scaling class of the input mesh.

use std::collections::VecDeque;

use serde::Serialize;

use crate::dec::{DecOperators, DiscreteForm};
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::sparse::{conjugate_gradient, SolverOptions, SparseOperator};

/// Signed edge sequence of a closed path; a form's period over it is
/// `Σ sign · ω[edge]`.
pub type Cycle = Vec<(usize, f64)>;

/// Spanning tree of the vertex graph, spanning cotree of the face graph
/// avoiding tree edges, and the `2g` edges left over.
///
/// Both traversals are breadth-first from cell 0, visiting neighbors in
/// ascending (neighbor index, edge index) order.
#[derive(Clone, Debug)]
pub struct TreeCotree {
    in_tree: Vec<bool>,
    vertex_parent: Vec<Option<(usize, usize)>>,
    vertex_depth: Vec<usize>,
    face_parent: Vec<Option<(usize, usize)>>,
    face_depth: Vec<usize>,
    generators: Vec<usize>,
}

impl TreeCotree {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let (nv, nf, ne) = (mesh.vertex_count(), mesh.face_count(), mesh.edge_count());

        let mut vertex_adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
        for (e, &[a, b]) in mesh.edges().iter().enumerate() {
            vertex_adj[a].push((b, e));
            vertex_adj[b].push((a, e));
        }
        vertex_adj.iter_mut().for_each(|adj| adj.sort_unstable());

        let mut in_tree = vec![false; ne];
        let mut vertex_parent = vec![None; nv];
        let mut vertex_depth = vec![0; nv];
        let mut seen = vec![false; nv];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for &(w, e) in &vertex_adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    in_tree[e] = true;
                    vertex_parent[w] = Some((v, e));
                    vertex_depth[w] = vertex_depth[v] + 1;
                    queue.push_back(w);
                }
            }
        }

        let mut face_adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nf];
        for e in (0..ne).filter(|&e| !in_tree[e]) {
            let [a, b] = mesh.edge_sides(e);
            face_adj[a.face].push((b.face, e));
            face_adj[b.face].push((a.face, e));
        }
        face_adj.iter_mut().for_each(|adj| adj.sort_unstable());

        let mut in_cotree = vec![false; ne];
        let mut face_parent = vec![None; nf];
        let mut face_depth = vec![0; nf];
        let mut seen = vec![false; nf];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(t) = queue.pop_front() {
            for &(u, e) in &face_adj[t] {
                if !seen[u] {
                    seen[u] = true;
                    in_cotree[e] = true;
                    face_parent[u] = Some((t, e));
                    face_depth[u] = face_depth[t] + 1;
                    queue.push_back(u);
                }
            }
        }

        let generators = (0..ne).filter(|&e| !in_tree[e] && !in_cotree[e]).collect();
        Self { in_tree, vertex_parent, vertex_depth, face_parent, face_depth, generators }
    }

    /// Edges in neither the tree nor the cotree, ascending; there are `2g`.
    pub fn generator_edges(&self) -> &[usize] {
        &self.generators
    }

    pub fn is_tree_edge(&self, e: usize) -> bool {
        self.in_tree[e]
    }

    /// Dual loop through generator edge `e`: cross `e` from its agreeing face
    /// to its opposing face, then return through the cotree. The result is
    /// the closed 1-cochain counting signed crossings.
    pub fn dual_cycle_form(&self, mesh: &TriangleMesh, e: usize) -> Vec<f64> {
        let mut values = vec![0.0; mesh.edge_count()];
        let [left, right] = mesh.edge_sides(e);
        values[e] = 1.0;
        // Crossing edge c from face `from` to its neighbor counts +1 when
        // `from` traverses c along its canonical orientation.
        let crossing = |c: usize, from: usize| if mesh.edge_sides(c)[0].face == from { 1.0 } else { -1.0 };
        let (mut a, mut b) = (right.face, left.face);
        let mut tail_from_b = Vec::new();
        while a != b {
            if self.face_depth[a] >= self.face_depth[b] {
                let (p, c) = self.face_parent[a].expect("cotree root reached early");
                values[c] += crossing(c, a);
                a = p;
            } else {
                let (p, c) = self.face_parent[b].expect("cotree root reached early");
                tail_from_b.push((c, p));
                b = p;
            }
        }
        // Walk down from the common ancestor towards `left`.
        for (c, parent) in tail_from_b.into_iter().rev() {
            values[c] += crossing(c, parent);
        }
        values
    }

    /// Primal loop through generator edge `e`: traverse `e` low to high, then
    /// return to the low vertex through the spanning tree.
    pub fn primal_cycle(&self, mesh: &TriangleMesh, e: usize) -> Cycle {
        let [lo, hi] = mesh.edges()[e];
        let step = |c: usize, from: usize| if mesh.edges()[c][0] == from { 1.0 } else { -1.0 };
        let mut cycle = vec![(e, 1.0)];
        let (mut a, mut b) = (hi, lo);
        let mut tail = Vec::new();
        while a != b {
            if self.vertex_depth[a] >= self.vertex_depth[b] {
                let (p, c) = self.vertex_parent[a].expect("tree root reached early");
                cycle.push((c, step(c, a)));
                a = p;
            } else {
                let (p, c) = self.vertex_parent[b].expect("tree root reached early");
                tail.push((c, p));
                b = p;
            }
        }
        for (c, parent) in tail.into_iter().rev() {
            cycle.push((c, step(c, parent)));
        }
        cycle
    }
}

/// Integral of a 1-cochain over a cycle.
pub fn period(form: &[f64], cycle: &[(usize, f64)]) -> f64 {
    cycle.iter().map(|&(e, s)| s * form[e]).sum()
}

fn require_genus(mesh: &TriangleMesh) -> Result<usize> {
    let genus = mesh.topology().genus;
    if genus == 0 {
        return Err(Error::Assumption("surface has genus 0, so H¹ = 0 and no harmonic 1-forms exist".into()));
    }
    Ok(genus)
}

/// Closed 1-cochains representing a basis of first cohomology, one per
/// tree–cotree generator edge.
pub fn homology_generators(mesh: &TriangleMesh) -> Result<Vec<DiscreteForm>> {
    let genus = require_genus(mesh)?;
    let tc = TreeCotree::new(mesh);
    if tc.generator_edges().len() != 2 * genus {
        return Err(Error::Topology(format!(
            "tree-cotree left {} edges, expected 2g = {}",
            tc.generator_edges().len(),
            2 * genus
        )));
    }
    tc.generator_edges().iter().map(|&e| DiscreteForm::new(1, tc.dual_cycle_form(mesh, e))).collect()
}

/// Assembled state for repeated harmonic projections on one mesh.
pub struct HodgeProjector {
    ops: DecOperators,
    laplacian: SparseOperator,
    options: SolverOptions,
}

impl HodgeProjector {
    pub fn new(mesh: &TriangleMesh, options: SolverOptions) -> Self {
        let ops = DecOperators::new(mesh);
        let laplacian = ops.laplacian0();
        Self { ops, laplacian, options }
    }

    pub fn operators(&self) -> &DecOperators {
        &self.ops
    }

    /// Returns `ω - d0 u` with `u` solving `(d0ᵀ star1 d0) u = d0ᵀ star1 ω`,
    /// gauge-fixed to zero `star0`-weighted mean, plus the CG iteration count.
    pub fn project(&self, omega: &[f64]) -> Result<(Vec<f64>, usize)> {
        let closure = self.ops.d1.apply(omega)?;
        let scale = omega.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let worst = closure.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if worst > 1e-12 * scale {
            return Err(Error::Precondition(format!("1-form is not closed (max |dω| = {worst:e})")));
        }
        let rhs = self.ops.weak_divergence(omega)?;
        let sol = conjugate_gradient(&self.laplacian, &rhs, &self.options)?;
        let mut u = sol.x;
        let mass: f64 = self.ops.star0.iter().sum();
        let mean = u.iter().zip(&self.ops.star0).map(|(u, a)| u * a).sum::<f64>() / mass;
        u.iter_mut().for_each(|v| *v -= mean);
        let du = self.ops.d0.apply(&u)?;
        let xi = omega.iter().zip(&du).map(|(w, d)| w - d).collect();
        Ok((xi, sol.iterations))
    }
}

/// Harmonic representative of the cohomology class of a closed 1-form.
pub fn harmonic_projection(mesh: &TriangleMesh, omega: &DiscreteForm) -> Result<DiscreteForm> {
    omega.check_on(mesh, 1)?;
    let (xi, _) = HodgeProjector::new(mesh, SolverOptions::from_env()).project(omega.values())?;
    DiscreteForm::new(1, xi)
}

/// Modified Gram–Schmidt under the `star1` inner product, in input order.
pub fn orthonormalize(mesh: &TriangleMesh, forms: &[DiscreteForm]) -> Result<Vec<DiscreteForm>> {
    for f in forms {
        f.check_on(mesh, 1)?;
    }
    let ops = DecOperators::new(mesh);
    let raw: Vec<Vec<f64>> = forms.iter().map(|f| f.values().to_vec()).collect();
    orthonormalize_with(&ops, raw)?.into_iter().map(|v| DiscreteForm::new(1, v)).collect()
}

fn orthonormalize_with(ops: &DecOperators, mut forms: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let norm = |v: &[f64]| ops.inner_product_1(v, v).map(f64::sqrt);
    for i in 0..forms.len() {
        let initial = norm(&forms[i])?;
        // Two sweeps keep the Gram matrix at rounding level for nearly
        // dependent inputs.
        for _ in 0..2 {
            for j in 0..i {
                let proj = ops.inner_product_1(&forms[i], &forms[j])?;
                let (head, tail) = forms.split_at_mut(i);
                tail[0].iter_mut().zip(&head[j]).for_each(|(x, q)| *x -= proj * q);
            }
        }
        let remaining = norm(&forms[i])?;
        if remaining.is_nan() || remaining <= 1e-12 * initial || initial == 0.0 {
            return Err(Error::RankDeficiency(format!(
                "form {i} is numerically dependent on its predecessors (norm {remaining:e} of {initial:e})"
            )));
        }
        forms[i].iter_mut().for_each(|x| *x /= remaining);
    }
    Ok(forms)
}

/// Orthonormal harmonic 1-forms spanning first cohomology, with diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct HarmonicBasis {
    #[serde(serialize_with = "serialize_forms")]
    pub forms: Vec<DiscreteForm>,
    /// `max |Gram - I|` under the `star1` inner product.
    pub gram_residual: f64,
    /// `max |d1 ξ|` over all basis forms.
    pub closedness_residual: f64,
    /// `max |d0ᵀ star1 ξ|` over all basis forms.
    pub coclosedness_residual: f64,
    pub solver_iterations: Vec<usize>,
    /// Tree–cotree edges the generators were built from.
    pub generator_edges: Vec<usize>,
    /// Primal homology cycles dual to the generators.
    #[serde(skip)]
    pub cycles: Vec<Cycle>,
}

fn serialize_forms<S: serde::Serializer>(forms: &[DiscreteForm], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(forms.iter().map(DiscreteForm::values))
}

impl HarmonicBasis {
    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    /// `periods[i][j]` is the period of basis form `j` over cycle `i`.
    pub fn period_matrix(&self) -> Vec<Vec<f64>> {
        self.cycles.iter().map(|c| self.forms.iter().map(|f| period(f.values(), c)).collect()).collect()
    }

    pub fn gram_matrix(&self, mesh: &TriangleMesh) -> Result<Vec<Vec<f64>>> {
        let ops = DecOperators::new(mesh);
        gram(&ops, &self.forms.iter().map(|f| f.values().to_vec()).collect::<Vec<_>>())
    }
}

fn gram(ops: &DecOperators, forms: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    forms.iter().map(|a| forms.iter().map(|b| ops.inner_product_1(a, b)).collect()).collect()
}

/// Generators → harmonic projection → orthonormalization.
pub fn harmonic_basis(mesh: &TriangleMesh) -> Result<HarmonicBasis> {
    harmonic_basis_with(mesh, &SolverOptions::from_env())
}

pub fn harmonic_basis_with(mesh: &TriangleMesh, options: &SolverOptions) -> Result<HarmonicBasis> {
    let generators = homology_generators(mesh)?;
    let tc = TreeCotree::new(mesh);
    let projector = HodgeProjector::new(mesh, *options);
    let mut projected = Vec::with_capacity(generators.len());
    let mut solver_iterations = Vec::with_capacity(generators.len());
    for g in &generators {
        let (xi, iters) = projector.project(g.values())?;
        projected.push(xi);
        solver_iterations.push(iters);
    }
    let ops = projector.operators();
    let forms = orthonormalize_with(ops, projected)?;

    let g = gram(ops, &forms)?;
    let mut gram_residual = 0.0f64;
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            gram_residual = gram_residual.max((v - target).abs());
        }
    }
    let mut closedness_residual = 0.0f64;
    let mut coclosedness_residual = 0.0f64;
    for f in &forms {
        closedness_residual = ops.d1.apply(f)?.iter().fold(closedness_residual, |m, v| m.max(v.abs()));
        coclosedness_residual = ops.weak_divergence(f)?.iter().fold(coclosedness_residual, |m, v| m.max(v.abs()));
    }

    let generator_edges = tc.generator_edges().to_vec();
    let cycles = generator_edges.iter().map(|&e| tc.primal_cycle(mesh, e)).collect();
    Ok(HarmonicBasis {
        forms: forms.into_iter().map(|f| DiscreteForm::new(1, f)).collect::<Result<_>>()?,
        gram_residual,
        closedness_residual,
        coclosedness_residual,
        solver_iterations,
        generator_edges,
        cycles,
    })
}
