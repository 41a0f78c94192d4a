//! Compressed-row sparse matrices and a Jacobi-preconditioned conjugate
//! gradient solver for symmetric positive semidefinite systems.
//!
//! All products and reductions run in ascending index order, so results are
//! bitwise reproducible for identical input.

use crate::error::{check_len, Error, Result};

/// Sparse linear map between cochain spaces, stored row-compressed.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Assembles from `(row, col, value)` triplets, summing duplicates.
    /// Entries that sum to zero are kept as explicit zeros.
    ///
    /// Panics if an index is out of range.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut t: Vec<_> = triplets.into_iter().collect();
        for &(r, c, _) in &t {
            assert!(r < rows && c < cols, "entry ({r}, {c}) outside {rows}x{cols}");
        }
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; rows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_ptr[r + 1] += 1;
                col_idx.push(c);
                values.push(v);
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { rows, cols, row_ptr, col_idx, values }
    }

    pub fn diagonal(values: Vec<f64>) -> Self {
        let n = values.len();
        Self { rows: n, cols: n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.col_idx[range.clone()].binary_search(&col) {
            Ok(i) => self.values[range.start + i],
            Err(_) => 0.0,
        }
    }

    /// Stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |i| (r, self.col_idx[i], self.values[i]))
        })
    }

    /// Diagonal entries; zero where nothing is stored.
    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, x.len())?;
        let mut y = vec![0.0; self.rows];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    pub(crate) fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[i] * x[self.col_idx[i]];
            }
            *out = acc;
        }
    }

    /// Computes `Aᵀ x` without forming the transpose.
    pub fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows, x.len())?;
        let mut y = vec![0.0; self.cols];
        for (r, &xr) in x.iter().enumerate() {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[i]] += self.values[i] * xr;
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.entries().map(|(r, c, v)| (c, r, v)))
    }

    /// The product `self · rhs`.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        check_len(self.cols, rhs.rows)?;
        let mut triplets = Vec::new();
        for r in 0..self.rows {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (k, a) = (self.col_idx[i], self.values[i]);
                for j in rhs.row_ptr[k]..rhs.row_ptr[k + 1] {
                    triplets.push((r, rhs.col_idx[j], a * rhs.values[j]));
                }
            }
        }
        Ok(Self::from_triplets(self.rows, rhs.cols, triplets))
    }

    /// Multiplies each column `c` by `weights[c]`, i.e. `A · diag(weights)`.
    pub fn scale_columns(&self, weights: &[f64]) -> Result<Self> {
        check_len(self.cols, weights.len())?;
        let mut out = self.clone();
        for (v, &c) in out.values.iter_mut().zip(&out.col_idx) {
            *v *= weights[c];
        }
        Ok(out)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - Aᵀ|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        self.entries().fold(0.0, |m, (r, c, v)| {
            if c < self.rows && r < self.cols {
                m.max((v - self.get(c, r)).abs())
            } else {
                m.max(v.abs())
            }
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (r, c, v) in self.entries() {
            d[r][c] = v;
        }
        d
    }
}

/// Stopping rule for [`conjugate_gradient`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Required `‖b - Ax‖∞ / ‖b‖∞`.
    pub tolerance: f64,
    /// Absolute residual that is always accepted, for right-hand sides that
    /// are pure rounding noise.
    pub absolute_tolerance: f64,
    /// Iteration cap; `None` means `10 n + 100`.
    pub max_iterations: Option<usize>,
}

pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;
pub const SOLVER_TOL_ENV: &str = "HARMCANON_SOLVER_TOL";

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tolerance: DEFAULT_SOLVER_TOL, absolute_tolerance: 1e-12, max_iterations: None }
    }
}

impl SolverOptions {
    /// Defaults, with the tolerance overridden by `HARMCANON_SOLVER_TOL` when
    /// it holds a positive number.
    pub fn from_env() -> Self {
        let mut opts = Self::default();
        if let Ok(raw) = std::env::var(SOLVER_TOL_ENV) {
            match raw.trim().parse::<f64>() {
                Ok(tol) if tol > 0.0 && tol.is_finite() => opts.tolerance = tol,
                _ => log::warn!("ignoring invalid {SOLVER_TOL_ENV}={raw:?}"),
            }
        }
        opts
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final true residual `‖b - Ax‖∞`.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Solves `A x = b` for symmetric positive semidefinite `A` and `b` in the
/// range of `A`, starting from zero. Singular systems are fine as long as
/// they are consistent; the caller fixes the gauge afterwards.
pub fn conjugate_gradient(a: &SparseOperator, b: &[f64], opts: &SolverOptions) -> Result<Solution> {
    check_len(a.rows(), a.cols())?;
    check_len(a.rows(), b.len())?;
    let n = b.len();
    let b_norm = max_abs(b);
    if b_norm == 0.0 {
        return Ok(Solution { x: vec![0.0; n], iterations: 0, residual: 0.0 });
    }
    let target = opts.tolerance * b_norm + opts.absolute_tolerance;
    let cap = opts.max_iterations.unwrap_or(10 * n + 100);
    let inv_diag: Vec<f64> = a.diagonal_values().into_iter().map(|d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    while iterations < cap {
        iterations += 1;
        a.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() || pap <= 0.0 {
            let mut true_r = vec![0.0; n];
            a.apply_into(&x, &mut true_r);
            let residual = b.iter().zip(&true_r).fold(0.0f64, |m, (b, ax)| m.max((b - ax).abs()));
            if residual <= target {
                return Ok(Solution { x, iterations, residual });
            }
            return Err(Error::Solver(format!("conjugate gradient breakdown at iteration {iterations} (pAp = {pap})")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if max_abs(&r) <= target {
            // Confirm against the true residual before accepting.
            a.apply_into(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            let residual = max_abs(&r);
            if residual <= target {
                return Ok(Solution { x, iterations, residual });
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!(
        "conjugate gradient did not reach relative residual {} within {cap} iterations (at {:.3e})",
        opts.tolerance,
        max_abs(&r) / b_norm
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> SparseOperator {
        let mut t = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            t.extend([(i, i, 1.0), (j, j, 1.0), (i, j, -1.0), (j, i, -1.0)]);
        }
        SparseOperator::from_triplets(n, n, t)
    }

    #[test]
    fn assembly_sums_duplicates() {
        let a = SparseOperator::from_triplets(2, 3, [(0, 1, 1.0), (1, 2, 2.0), (0, 1, 0.5), (1, 0, -1.0)]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 1), 1.5);
        assert_eq!(a.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![3.0, 5.0]);
        assert_eq!(a.apply_transpose(&[1.0, 1.0]).unwrap(), vec![-1.0, 1.5, 2.0]);
        assert_eq!(a.transpose().to_dense(), vec![vec![0.0, -1.0], vec![1.5, 0.0], vec![0.0, 2.0]]);
        assert!(a.apply(&[1.0]).is_err());
    }

    #[test]
    fn compose_matches_dense() {
        let a = SparseOperator::from_triplets(2, 2, [(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0)]);
        let b = SparseOperator::from_triplets(2, 2, [(0, 0, 4.0), (1, 0, 5.0), (1, 1, 6.0)]);
        let ab = a.compose(&b).unwrap().to_dense();
        assert_eq!(ab, vec![vec![14.0, 12.0], vec![15.0, 18.0]]);
    }

    #[test]
    fn cg_solves_singular_consistent_system() {
        let n = 40;
        let lap = path_laplacian(n);
        let mut b: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64).collect();
        let mean = b.iter().sum::<f64>() / n as f64;
        b.iter_mut().for_each(|v| *v -= mean);
        let sol = conjugate_gradient(&lap, &b, &SolverOptions::default()).unwrap();
        let r = lap.apply(&sol.x).unwrap();
        let err = r.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(err <= 1e-10 * max_abs(&b));
        assert_eq!(err, sol.residual);
    }

    #[test]
    fn cg_reports_iteration_cap() {
        let lap = path_laplacian(50);
        let mut b = vec![0.0; 50];
        b[0] = 1.0;
        b[25] = -1.0;
        let opts = SolverOptions { tolerance: 1e-14, absolute_tolerance: 0.0, max_iterations: Some(2) };
        assert!(matches!(conjugate_gradient(&lap, &b, &opts), Err(Error::Solver(_))));
    }
}
