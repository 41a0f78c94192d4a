//! Invariant checks over one mesh, shared by `harmcanon validate` and the
//! acceptance tests.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::canonical::{energy_direct, energy_of, run_canonical, CanonicalRun};
use crate::dec::{star1_diagonal, DecOperators};
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::sparse::SolverOptions;

/// Deliberate defects for exercising the checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Perturb the `star1` used by the codifferential only.
    CorruptStar1,
}

#[derive(Clone, Debug)]
pub struct ValidationConfig {
    pub seed: u64,
    /// Random pairs / fields per sampled check.
    pub samples: usize,
    pub fault: Option<Fault>,
    pub solver: SolverOptions,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self { seed: 0, samples: 100, fault: None, solver: SolverOptions::from_env() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub first_failure: Option<&'static str>,
    pub checks: Vec<Check>,
    pub diagnostics: BTreeMap<&'static str, f64>,
}

pub const SCALE_FACTORS: [f64; 3] = [0.1, 3.7, 42.0];

/// A strictly positive per-face field normalized to `Σ ρ area = 1`.
///
/// Even `index` values draw independent factors in `[0.2, 5]`; odd ones
/// perturb `rho_star` multiplicatively by up to `exp(±s)` with `s` itself
/// random in `[0.001, 0.5]`, so samples land both near and far from the
/// minimizer.
pub fn random_rho(mesh: &TriangleMesh, rho_star: &[f64], rng: &mut impl Rng, index: usize) -> Vec<f64> {
    let mut rho: Vec<f64> = if index.is_multiple_of(2) {
        (0..mesh.face_count()).map(|_| rng.gen_range(0.2..5.0)).collect()
    } else {
        let s: f64 = rng.gen_range(0.001..0.5);
        rho_star.iter().map(|r| r * (s * rng.gen_range(-1.0..1.0)).exp()).collect()
    };
    let volume: f64 = rho.iter().enumerate().map(|(t, r)| r * mesh.face_area(t)).sum();
    rho.iter_mut().for_each(|r| *r /= volume);
    rho
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

struct Checks(Vec<Check>);

impl Checks {
    /// Records `value <= threshold`.
    fn at_most(&mut self, name: &'static str, value: f64, threshold: f64) {
        self.0.push(Check { name, passed: value <= threshold, value, threshold });
    }

    fn at_least(&mut self, name: &'static str, value: f64, threshold: f64) {
        self.0.push(Check { name, passed: value >= threshold, value, threshold });
    }
}

/// Runs every invariant check on `mesh`. Fails with
/// [`Error::Assumption`] for genus-0 input.
pub fn validate(mesh: &TriangleMesh, config: &ValidationConfig) -> Result<ValidationReport> {
    let topo = mesh.topology();
    if topo.genus == 0 {
        return Err(Error::Assumption("genus 0 surface: the pipeline invariants do not apply".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut checks = Checks(Vec::new());
    let mut diagnostics = BTreeMap::new();

    let unit = mesh.normalize_area();
    let ops = DecOperators::new(&unit);
    let dd = ops.d1.compose(&ops.d0)?;
    checks.at_most("d_squared", dd.max_abs_entry(), 0.0);

    let mut codiff_ops = ops.clone();
    if config.fault == Some(Fault::CorruptStar1) {
        for (e, w) in codiff_ops.star1.iter_mut().enumerate() {
            *w *= 1.0 + 0.25 * ((e % 7) as f64 - 3.0) / 3.0;
        }
    }
    let mut adjointness = 0.0f64;
    let mut psd = f64::INFINITY;
    let lap = ops.laplacian0();
    for _ in 0..config.samples {
        let alpha: Vec<f64> = (0..unit.edge_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..unit.vertex_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lhs = ops.inner_product_0(&codiff_ops.codifferential1(&alpha)?, &u)?;
        let rhs = ops.inner_product_1(&alpha, &ops.d0.apply(&u)?)?;
        adjointness = adjointness.max((lhs - rhs).abs() / rhs.abs().max(1.0));
        let lu = lap.apply(&u)?;
        psd = psd.min(u.iter().zip(&lu).map(|(a, b)| a * b).sum());
    }
    checks.at_most("adjointness", adjointness, 1e-12);
    checks.at_least("laplacian_psd", psd, -1e-12);

    let run = run_canonical(mesh, &config.solver)?;
    let CanonicalRun { mesh: unit, basis, wedge, result, .. } = &run;
    checks.at_most("gram", basis.gram_residual, 1e-10);
    checks.at_most("closedness", basis.closedness_residual, 1e-13);
    // Residual noise scales with the magnitude of the terms being summed.
    let mut term_scale = 0.0f64;
    for f in &basis.forms {
        let mut per_vertex = vec![0.0; unit.vertex_count()];
        for (e, &[a, b]) in unit.edges().iter().enumerate() {
            let t = (ops.star1[e] * f.values()[e]).abs();
            per_vertex[a] += t;
            per_vertex[b] += t;
        }
        term_scale = per_vertex.into_iter().fold(term_scale, f64::max);
    }
    checks.at_most("coclosedness", basis.coclosedness_residual, 10.0 * config.solver.tolerance * term_scale + 1e-12);
    checks.at_most("antisymmetry", wedge.antisymmetry_residual(), 1e-14);
    let volume: f64 = result.rho.iter().enumerate().map(|(t, r)| r * unit.face_area(t)).sum();
    checks.at_most("rho_normalization", (volume - 1.0).abs(), 1e-10);
    checks.at_least("e_min_lower_bound", result.e_min, -1e-10);

    let e_star = energy_of(unit, wedge, &result.rho, 1)?;
    let mut min_excess = f64::INFINITY;
    let mut min_far_gap = f64::INFINITY;
    let mut consistency = (energy_direct(unit, basis, &result.rho, 1)? - e_star).abs();
    for i in 0..config.samples {
        let rho = random_rho(unit, &result.rho, &mut rng, i);
        let e = energy_of(unit, wedge, &rho, 1)?;
        min_excess = min_excess.min(e - result.e_min);
        if max_abs_diff(&rho, &result.rho) >= 0.1 {
            min_far_gap = min_far_gap.min(e - result.e_min);
        }
        if i < 5 {
            consistency = consistency.max((energy_direct(unit, basis, &rho, 1)? - e).abs());
        }
    }
    checks.at_least("minimality", min_excess, -1e-10);
    if min_far_gap.is_finite() {
        checks.at_least("uniqueness_gap", min_far_gap, 1e-6);
    }
    checks.at_most("energy_consistency", consistency, 1e-10 * (1.0 + result.e_min.abs()));
    checks.at_most("minimizer_attains_minimum", (e_star - result.e_min).abs(), 1e-10);

    let star1 = star1_diagonal(mesh);
    let mut star1_changed = 0.0f64;
    let mut pipeline_drift = 0.0f64;
    for k in SCALE_FACTORS {
        let scaled = mesh.scaled(k)?;
        if star1_diagonal(&scaled) != star1 {
            star1_changed = star1_changed.max(max_abs_diff(&star1_diagonal(&scaled), &star1).max(f64::MIN_POSITIVE));
        }
        let other = run_canonical(&scaled, &config.solver)?.result;
        pipeline_drift = pipeline_drift
            .max(max_abs_diff(&other.rho, &result.rho))
            .max((other.e_min - result.e_min).abs())
            .max((other.c_sq - result.c_sq).abs());
    }
    checks.at_most("star1_scale_invariance", star1_changed, 0.0);
    checks.at_most("scale_invariance", pipeline_drift, 1e-12);

    let two_g = topo.betti1 as f64;
    diagnostics.insert("genus", topo.genus as f64);
    diagnostics.insert("c_sq", result.c_sq);
    diagnostics.insert("c_sq_relative_error", (result.c_sq - two_g).abs() / two_g);
    diagnostics.insert("e_min", result.e_min);
    diagnostics.insert("integral_f", result.integral_f);
    diagnostics.insert("min_f", result.min_f);

    let checks = checks.0;
    let first_failure = checks.iter().find(|c| !c.passed).map(|c| c.name);
    Ok(ValidationReport { passed: first_failure.is_none(), first_failure, checks, diagnostics })
}
