//! Harmonic energy of a conformal factor and its closed-form minimizer.
//!
//! With an orthonormal harmonic basis `ξ_i`, the wedge densities
//! `ξ_i ∧ ξ_j = f_ij Vol₀` and constants `c_ij = ∫ ξ_i ∧ ξ_j` determine the
//! energy of every metric `ρ g₀` in the normalized conformal class:
//!
//! ```text
//! E(ρ) = Σ_ij ∫ (f_ij ρ⁻ⁿ - c_ij)² ρⁿ Vol₀ = ∫ f² ρ⁻ⁿ Vol₀ - C²
//! ```
//!
//! where `f = sqrt(Σ_ij f_ij²)` and `C² = Σ_ij c_ij²` (ordered pairs). The
//! unique minimizer is `ρ* = (f / ∫ f Vol₀)^(1/n)`, with minimal energy
//! `(∫ f Vol₀)² - C²`. On meshes `f_ij` is constant per face and `n = 1`.

use std::time::Instant;

use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::harmonic::{harmonic_basis_with, HarmonicBasis};
use crate::mesh::TriangleMesh;
use crate::sparse::SolverOptions;

/// `min_f` below this fraction of the mean of `f` marks the class degenerate.
pub const DEGENERACY_RATIO: f64 = 1e-8;

/// Integral over a triangle of the wedge product of two Whitney 1-forms.
///
/// `a` and `b` hold the cochain values on the directed sides `0→1`, `1→2`,
/// `2→0`. The result only depends on these values, never on the metric.
/// It is exactly antisymmetric: swapping the arguments negates it bitwise,
/// and equal arguments give exactly zero.
pub fn whitney_wedge_face(a: [f64; 3], b: [f64; 3]) -> f64 {
    let [a01, a12, a20] = a;
    let [b01, b12, b20] = b;
    ((a01 * b12 - a12 * b01) + (a12 * b20 - a20 * b12) + (a20 * b01 - a01 * b20)) / 6.0
}

/// Values of a 1-cochain pulled back onto the directed sides of face `t`.
pub fn face_coefficients(mesh: &TriangleMesh, form: &[f64], t: usize) -> [f64; 3] {
    let (edges, signs) = (mesh.face_edges(t), mesh.face_signs(t));
    [0, 1, 2].map(|k| f64::from(signs[k]) * form[edges[k]])
}

/// Row-major `p × p` matrices of wedge densities per face and their integrals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WedgeData {
    pub dim: usize,
    /// `density[t][i * dim + j] = (∫_T ξ_i ∧ ξ_j) / area(T)`.
    pub density: Vec<Vec<f64>>,
    /// `c[i * dim + j] = Σ_T ∫_T ξ_i ∧ ξ_j`.
    pub c: Vec<f64>,
}

impl WedgeData {
    pub fn f(&self, t: usize, i: usize, j: usize) -> f64 {
        self.density[t][i * self.dim + j]
    }

    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.c[i * self.dim + j]
    }

    pub fn c_matrix(&self) -> Vec<Vec<f64>> {
        self.c.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// `C² = Σ c_ij²` over ordered pairs.
    pub fn c_sq(&self) -> f64 {
        self.c.iter().map(|c| c * c).sum()
    }

    /// Largest `|M_ij + M_ji|` over `c` and every face matrix.
    pub fn antisymmetry_residual(&self) -> f64 {
        let p = self.dim;
        std::iter::once(&self.c)
            .chain(&self.density)
            .flat_map(|m| (0..p).flat_map(move |i| (0..p).map(move |j| (m[i * p + j] + m[j * p + i]).abs())))
            .fold(0.0, f64::max)
    }
}

/// Per-face wedge integrals of a set of 1-cochains, `wedges[t][i*p+j]`.
fn face_wedges(mesh: &TriangleMesh, forms: &[&[f64]]) -> Vec<Vec<f64>> {
    let p = forms.len();
    (0..mesh.face_count())
        .map(|t| {
            let coeffs: Vec<[f64; 3]> = forms.iter().map(|f| face_coefficients(mesh, f, t)).collect();
            let mut m = vec![0.0; p * p];
            for i in 0..p {
                for j in i + 1..p {
                    let w = whitney_wedge_face(coeffs[i], coeffs[j]);
                    m[i * p + j] = w;
                    m[j * p + i] = -w;
                }
            }
            m
        })
        .collect()
}

/// Wedge densities `f_ij` and constants `c_ij` of a harmonic basis.
pub fn wedge_data(mesh: &TriangleMesh, basis: &HarmonicBasis) -> Result<WedgeData> {
    let forms: Vec<&[f64]> = basis.forms.iter().map(|f| f.values()).collect();
    for f in &forms {
        check_len(mesh.edge_count(), f.len())?;
    }
    let p = forms.len();
    let wedges = face_wedges(mesh, &forms);
    let mut c = vec![0.0; p * p];
    for i in 0..p {
        for j in i + 1..p {
            let total: f64 = wedges.iter().map(|m| m[i * p + j]).sum();
            c[i * p + j] = total;
            c[j * p + i] = -total;
        }
    }
    let density = wedges
        .into_iter()
        .enumerate()
        .map(|(t, m)| {
            let area = mesh.face_area(t);
            m.into_iter().map(|w| w / area).collect()
        })
        .collect();
    Ok(WedgeData { dim: p, density, c })
}

/// The pointwise norm `f`, its integral and its minimum.
#[derive(Clone, Debug, PartialEq)]
pub struct FField {
    pub values: Vec<f64>,
    pub integral: f64,
    pub min: f64,
}

/// `f(T) = sqrt(Σ_ij f_ij(T)²)` over ordered pairs.
pub fn f_field(wd: &WedgeData, mesh: &TriangleMesh) -> Result<FField> {
    check_len(mesh.face_count(), wd.density.len())?;
    let values: Vec<f64> = wd.density.iter().map(|m| m.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let integral = values.iter().enumerate().map(|(t, f)| f * mesh.face_area(t)).sum();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(FField { values, integral, min })
}

/// `ρ* = (f / ∫ f Vol₀)^(1/n)` per face.
pub fn canonical_factor(f: &[f64], integral_f: f64, n: u32) -> Result<Vec<f64>> {
    if !integral_f.is_finite() || integral_f <= 0.0 {
        return Err(Error::DegenerateClass(format!("∫ f Vol₀ = {integral_f}; the wedge densities vanish identically")));
    }
    if n == 0 {
        return Err(Error::Precondition("dimension parameter n must be at least 1".into()));
    }
    Ok(f.iter()
        .map(|f| {
            let ratio = f / integral_f;
            if n == 1 {
                ratio
            } else {
                ratio.powf(1.0 / f64::from(n))
            }
        })
        .collect())
}

/// `(∫ f Vol₀)² - C²`.
pub fn minimal_energy(integral_f: f64, c_sq: f64) -> f64 {
    integral_f * integral_f - c_sq
}

fn rho_pow(rho: f64, n: u32) -> f64 {
    if n == 1 {
        rho
    } else {
        rho.powi(n as i32)
    }
}

/// Checks positivity and the volume constraint `Σ ρⁿ area = 1` (to 1e-8).
pub fn check_normalized(mesh: &TriangleMesh, rho: &[f64], n: u32) -> Result<()> {
    check_len(mesh.face_count(), rho.len())?;
    if let Some((face, &value)) = rho.iter().enumerate().find(|(_, r)| !r.is_finite() || **r <= 0.0) {
        return Err(Error::NonPositiveRho { face, value });
    }
    let volume: f64 = rho.iter().enumerate().map(|(t, &r)| rho_pow(r, n) * mesh.face_area(t)).sum();
    if (volume - 1.0).abs() > 1e-8 {
        return Err(Error::Normalization(volume));
    }
    Ok(())
}

/// `E(ρ) = Σ_T f(T)² ρ(T)⁻ⁿ area(T) - C²`.
pub fn energy_of(mesh: &TriangleMesh, wd: &WedgeData, rho: &[f64], n: u32) -> Result<f64> {
    check_normalized(mesh, rho, n)?;
    let f = f_field(wd, mesh)?;
    let weighted: f64 =
        (0..mesh.face_count()).map(|t| f.values[t] * f.values[t] / rho_pow(rho[t], n) * mesh.face_area(t)).sum();
    Ok(weighted - wd.c_sq())
}

/// The energy as the squared norm of `A(ξ_i ⊗ ξ_j) = ξ_i ∧ ξ_j - c_ij Vol_g`
/// in the metric `g = ρ g₀`, summed over ordered pairs.
///
/// Everything is recomputed from the basis: per-face wedge integrals, the
/// constants `c_ij`, and the `g`-volume `ρⁿ area` of each face. A 2-form with
/// integral `w` over a face of `g`-volume `v` has squared norm `w² / v`.
pub fn energy_direct(mesh: &TriangleMesh, basis: &HarmonicBasis, rho: &[f64], n: u32) -> Result<f64> {
    check_normalized(mesh, rho, n)?;
    let forms: Vec<&[f64]> = basis.forms.iter().map(|f| f.values()).collect();
    let p = forms.len();
    let wedges = face_wedges(mesh, &forms);
    let mut c = vec![0.0; p * p];
    for m in &wedges {
        c.iter_mut().zip(m).for_each(|(c, w)| *c += w);
    }
    let mut energy = 0.0;
    for (t, m) in wedges.iter().enumerate() {
        let volume_g = rho_pow(rho[t], n) * mesh.face_area(t);
        for (w, c) in m.iter().zip(&c) {
            let residual = w - c * volume_g;
            energy += residual * residual / volume_g;
        }
    }
    Ok(energy)
}

/// Area-weighted average of a per-face field onto vertices.
pub fn vertex_average(mesh: &TriangleMesh, per_face: &[f64]) -> Result<Vec<f64>> {
    check_len(mesh.face_count(), per_face.len())?;
    let mut num = vec![0.0; mesh.vertex_count()];
    let mut den = vec![0.0; mesh.vertex_count()];
    for (t, f) in mesh.faces().iter().enumerate() {
        let a = mesh.face_area(t);
        for &v in f {
            num[v] += per_face[t] * a;
            den[v] += a;
        }
    }
    Ok(num.iter().zip(&den).map(|(n, d)| n / d).collect())
}

/// Edge lengths scaled by `sqrt` of the endpoint-averaged vertex factor.
///
/// Approximate: a per-face conformal factor has no exact edge-length
/// realization. Intended for visualization and export only.
pub fn approximate_conformal_lengths(mesh: &TriangleMesh, rho_vertex: &[f64]) -> Result<Vec<f64>> {
    check_len(mesh.vertex_count(), rho_vertex.len())?;
    Ok(mesh
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &[a, b])| mesh.edge_length(e) * (0.5 * (rho_vertex[a] + rho_vertex[b])).sqrt())
        .collect())
}

/// The canonical conformal factor and critical energy of a mesh.
#[derive(Clone, Debug, Serialize)]
pub struct CanonicalResult {
    /// `f(T)` per face.
    pub f_field: Vec<f64>,
    pub integral_f: f64,
    pub c_matrix: Vec<Vec<f64>>,
    pub c_sq: f64,
    /// Minimizing conformal factor `ρ*` per face.
    pub rho: Vec<f64>,
    /// `ρ*` averaged onto vertices, for visualization.
    pub rho_vertex: Vec<f64>,
    pub e_min: f64,
    pub min_f: f64,
    pub n: u32,
    pub degenerate: bool,
}

/// Everything produced by one pipeline run.
#[derive(Clone, Debug)]
pub struct CanonicalRun {
    /// The input rescaled to unit area.
    pub mesh: TriangleMesh,
    pub basis: HarmonicBasis,
    pub wedge: WedgeData,
    pub result: CanonicalResult,
    /// Wall time per stage in milliseconds, in execution order.
    pub timings_ms: Vec<(&'static str, f64)>,
}

/// Normalize → harmonic basis → wedge data → `f` → `ρ*` → critical energy.
pub fn canonical_metric(mesh: &TriangleMesh) -> Result<CanonicalResult> {
    Ok(run_canonical(mesh, &SolverOptions::from_env())?.result)
}

pub fn run_canonical(mesh: &TriangleMesh, options: &SolverOptions) -> Result<CanonicalRun> {
    let n = 1;
    let mut timings_ms = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, timings: &mut Vec<(&'static str, f64)>| {
        let now = Instant::now();
        timings.push((name, (now - clock).as_secs_f64() * 1e3));
        clock = now;
    };

    if mesh.topology().genus == 0 {
        return Err(Error::Assumption(
            "surface has genus 0: no harmonic 1-forms, so the energy has nothing to minimize".into(),
        ));
    }
    let mesh = mesh.normalize_area();
    lap("normalize", &mut timings_ms);
    let basis = harmonic_basis_with(&mesh, options)?;
    lap("harmonic_basis", &mut timings_ms);
    let wedge = wedge_data(&mesh, &basis)?;
    lap("wedge_data", &mut timings_ms);
    let f = f_field(&wedge, &mesh)?;
    let rho = canonical_factor(&f.values, f.integral, n)?;
    let rho_vertex = vertex_average(&mesh, &rho)?;
    let c_sq = wedge.c_sq();
    let e_min = minimal_energy(f.integral, c_sq);
    let degenerate = f.min < DEGENERACY_RATIO * (f.integral / mesh.total_area());
    if degenerate {
        log::warn!("conformal class is numerically degenerate: min f = {:e}", f.min);
    }
    lap("canonical_factor", &mut timings_ms);

    let result = CanonicalResult {
        c_matrix: wedge.c_matrix(),
        f_field: f.values,
        integral_f: f.integral,
        c_sq,
        rho,
        rho_vertex,
        e_min,
        min_f: f.min,
        n,
        degenerate,
    };
    Ok(CanonicalRun { mesh, basis, wedge, result, timings_ms })
}
