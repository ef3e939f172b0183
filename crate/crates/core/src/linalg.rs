//! Compressed-row sparse matrices, Jacobi-preconditioned conjugate gradients
//! and a shift-invert eigensolver for the smallest generalized eigenpair.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("matrix is not positive definite (curvature {curvature:e} at iteration {iteration})")]
    NotPositiveDefinite { iteration: usize, curvature: f64 },
    #[error("non-positive diagonal entry {value:e} in row {row}")]
    BadDiagonal { row: usize, value: f64 },
    #[error("eigensolver failed: {0}")]
    Eigen(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
        .pruned()
    }
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut b = TripletBuilder::new(d.len());
        for (i, &v) in d.iter().enumerate() {
            b.add(i, i, v);
        }
        b.build()
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let mut b = TripletBuilder::new(rows.len());
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                b.add(i, j, v);
            }
        }
        b.build()
    }

    /// Drops stored entries that are exactly zero.
    fn pruned(self) -> Self {
        if self.values.iter().all(|v| *v != 0.0) {
            return self;
        }
        let mut b = TripletBuilder::new(self.n);
        b.entries = self.triplets().filter(|t| t.2 != 0.0).collect();
        b.build()
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0; n + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    /// `alpha * self + beta * other` on the union of the two patterns.
    pub fn combine(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> CsrMatrix {
        assert_eq!(self.n, other.n, "combine: dimension mismatch");
        let mut b = TripletBuilder::new(self.n);
        b.entries.reserve(self.nnz() + other.nnz());
        b.entries.extend(self.triplets().map(|(i, j, v)| (i, j, alpha * v)));
        b.entries.extend(other.triplets().map(|(i, j, v)| (i, j, beta * v)));
        b.build()
    }

    pub fn scaled(&self, alpha: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out.pruned()
    }

    /// Restriction to the rows and columns listed in `keep` (in that order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut b = TripletBuilder::new(keep.len());
        for (new_i, &old_i) in keep.iter().enumerate() {
            for (j, v) in self.row(old_i) {
                if map[j] != usize::MAX {
                    b.add(new_i, map[j], v);
                }
            }
        }
        b.build()
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        self.combine(1.0, other, -1.0)
            .values
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.triplets() {
            out[i][j] = v;
        }
        out
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Target relative residual `||Ax - b|| / ||b||`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub fn cg_solve(a: &CsrMatrix, b: &[f64], opts: &CgOptions) -> Result<CgSolution, LinalgError> {
    cg_solve_from(a, b, None, opts)
}

/// Jacobi-preconditioned CG started from `x0` (zero when `None`).
pub fn cg_solve_from(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &CgOptions,
) -> Result<CgSolution, LinalgError> {
    let n = a.dim();
    if b.len() != n {
        return Err(LinalgError::Dimension {
            expected: n,
            got: b.len(),
        });
    }
    let diag = a.diagonal();
    if let Some((row, &value)) = diag.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
        return Err(LinalgError::BadDiagonal { row, value });
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let b_norm = norm2(b);
    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => {
            return Err(LinalgError::Dimension {
                expected: n,
                got: x0.len(),
            })
        }
        None => vec![0.0; n],
    };
    if b_norm == 0.0 {
        return Ok(CgSolution {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = b.to_vec();
    if x0.is_some() {
        let ax = a.mul_vec(&x);
        axpy(-1.0, &ax, &mut r);
    }
    let mut residual = norm2(&r) / b_norm;
    if residual <= opts.tol {
        return Ok(CgSolution {
            x,
            iterations: 0,
            residual,
        });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=opts.max_iter {
        a.mul_vec_into(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(LinalgError::NotPositiveDefinite {
                iteration: it,
                curvature,
            });
        }
        let alpha = rz / curvature;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        residual = norm2(&r) / b_norm;
        if residual <= opts.tol {
            return Ok(CgSolution {
                x,
                iterations: it,
                residual,
            });
        }
        for ((zi, ri), di) in z.iter_mut().zip(&r).zip(&inv_diag) {
            *zi = ri * di;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(LinalgError::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Convergence of the Rayleigh quotient: `|d mu| <= tol * (1 + |mu|)`.
    pub tol: f64,
    pub max_iter: usize,
    /// A value known to lie strictly below the spectrum. When absent the
    /// conservative bound `-||A||_inf / min diag(M) - 1` is used.
    pub shift: Option<f64>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 2000,
            shift: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Normalized so that `v^T M v = 1`, with non-negative sum.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// `||A v - mu M v||_2 / ||M v||_2`.
    pub residual: f64,
}

/// Smallest `mu` with `A v = mu M v` for symmetric `A` and SPD `M`.
///
/// Each step solves `(A - sigma M) y = M x` by CG with `sigma` below the
/// spectrum, then takes the Rayleigh-Ritz minimizer over
/// `span{x, y, x - x_prev}`. The extra directions only accelerate plain
/// inverse iteration; the fixed point is the same.
pub fn smallest_eigpair(a: &CsrMatrix, m: &CsrMatrix, opts: &EigenOptions) -> Result<EigenPair, LinalgError> {
    let n = a.dim();
    if m.dim() != n {
        return Err(LinalgError::Dimension {
            expected: n,
            got: m.dim(),
        });
    }
    let mdiag = m.diagonal();
    let min_mdiag = mdiag.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_mdiag > 0.0) {
        return Err(LinalgError::Eigen("mass matrix has a non-positive diagonal".into()));
    }
    let mut shift = opts.shift.unwrap_or(-a.norm_inf() / min_mdiag - 1.0);
    let inner = CgOptions {
        tol: (0.01 * opts.tol).max(1e-14),
        max_iter: 20 * n + 100,
    };

    let mut x = vec![1.0; n];
    m_normalize(m, &mut x);
    let mut prev: Option<Vec<f64>> = None;
    let mut mu = a.bilinear(&x, &x);
    let mut y_guess: Option<Vec<f64>> = None;
    let mut lowered = 0;
    let mut shifted = a.combine(1.0, m, -shift);
    let mut it = 0;
    while it < opts.max_iter {
        it += 1;
        let mx = m.mul_vec(&x);
        let y = match cg_solve_from(&shifted, &mx, y_guess.as_deref(), &inner) {
            Ok(sol) => sol.x,
            Err(LinalgError::NotPositiveDefinite { .. } | LinalgError::BadDiagonal { .. }) if lowered < 8 => {
                // The shift was not below the spectrum after all.
                shift -= 2.0 * (shift.abs() + 1.0);
                shifted = a.combine(1.0, m, -shift);
                lowered += 1;
                y_guess = None;
                it -= 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        y_guess = Some(y.clone());

        let mut basis = vec![x.clone(), y];
        if let Some(p) = &prev {
            basis.push(x.iter().zip(p).map(|(a, b)| a - b).collect());
        }
        let (value, next) = rayleigh_ritz(a, m, basis)?;
        prev = Some(std::mem::replace(&mut x, next));
        let converged = (value - mu).abs() <= opts.tol * (1.0 + value.abs());
        mu = value;
        if converged {
            let mut v = x;
            if v.iter().sum::<f64>() < 0.0 {
                v.iter_mut().for_each(|e| *e = -*e);
            }
            let residual = eig_residual(a, m, mu, &v);
            return Ok(EigenPair {
                value: mu,
                vector: v,
                iterations: it,
                residual,
            });
        }
    }
    Err(LinalgError::Eigen(format!(
        "no convergence in {} iterations (last estimate {mu})",
        opts.max_iter
    )))
}

pub fn eig_residual(a: &CsrMatrix, m: &CsrMatrix, mu: f64, v: &[f64]) -> f64 {
    let av = a.mul_vec(v);
    let mv = m.mul_vec(v);
    let r: Vec<f64> = av.iter().zip(&mv).map(|(a, b)| a - mu * b).collect();
    norm2(&r) / norm2(&mv)
}

fn m_normalize(m: &CsrMatrix, x: &mut [f64]) {
    let s = m.bilinear(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= s);
}

/// Minimizes the Rayleigh quotient of `(A, M)` over the span of `basis`.
fn rayleigh_ritz(a: &CsrMatrix, m: &CsrMatrix, basis: Vec<Vec<f64>>) -> Result<(f64, Vec<f64>), LinalgError> {
    // M-orthonormalize with two passes of modified Gram-Schmidt.
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
    for mut v in basis {
        let scale = m.bilinear(&v, &v).sqrt();
        for _ in 0..2 {
            for u in &q {
                let c = m.bilinear(u, &v);
                axpy(-c, u, &mut v);
            }
        }
        let norm = m.bilinear(&v, &v).sqrt();
        if norm > 1e-10 * scale && norm > 0.0 {
            v.iter_mut().for_each(|e| *e /= norm);
            q.push(v);
        }
    }
    let k = q.len();
    let aq: Vec<Vec<f64>> = q.iter().map(|v| a.mul_vec(v)).collect();
    let small = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&q[i], &aq[j]) + dot(&q[j], &aq[i])));
    let eig = SymmetricEigen::new(small);
    let (imin, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| LinalgError::Eigen("empty search space".into()))?;
    if !value.is_finite() {
        return Err(LinalgError::Eigen("non-finite Ritz value".into()));
    }
    let c = eig.eigenvectors.column(imin);
    let mut x = vec![0.0; a.dim()];
    for (j, v) in q.iter().enumerate() {
        axpy(c[j], v, &mut x);
    }
    m_normalize(m, &mut x);
    Ok((value, x))
}
