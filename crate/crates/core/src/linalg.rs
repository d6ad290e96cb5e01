//! Dense symmetric linear algebra: eigenvalues, factorized solves and
//! reciprocal-condition estimates.
//!
//! Matrices are small-to-moderate (n up to a few thousand) and dense, so
//! everything here works on a flat row-major `Vec<f64>`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default rcond below which a solve is reported as near-singular.
pub const DEFAULT_RCOND_THRESHOLD: f64 = 1e-12;

const MAX_QL_ITERS: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix must have dimension at least 1")]
    Empty,
    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {diff:e}")]
    Asymmetric { i: usize, j: usize, diff: f64 },
    #[error("eigenvalue iteration did not converge for {name} (eigenvalue {index})")]
    NoConvergence { name: String, index: usize },
    #[error("matrix is near-singular (rcond = {rcond:e})")]
    NearSingular { rcond: f64 },
}

/// A real symmetric matrix stored densely in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "SymMatrix dimension must be >= 1");
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    /// Builds from rows, rejecting input that is not symmetric within `tol`
    /// (absolute). Pass `symmetrize = true` to average the two triangles instead.
    pub fn from_rows(rows: &[Vec<f64>], tol: f64, symmetrize: bool) -> Result<Self, LinalgError> {
        let n = rows.len();
        if n == 0 {
            return Err(LinalgError::Empty);
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        let mut m = Self { n, data };
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (m.get(i, j), m.get(j, i));
                let diff = (a - b).abs();
                if symmetrize {
                    let avg = 0.5 * (a + b);
                    m.data[i * n + j] = avg;
                    m.data[j * n + i] = avg;
                } else if diff > tol {
                    return Err(LinalgError::Asymmetric { i, j, diff });
                }
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both (i, j) and (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Adds `v` to (i, j) and, off the diagonal, to (j, i).
    #[inline]
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
        if i != j {
            self.data[j * self.n + i] += v;
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &SymMatrix) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn add_diag(&mut self, diag: &[f64]) {
        for (i, v) in diag.iter().enumerate() {
            self.data[i * self.n + i] += v;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `xᵀ M y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    /// Induced ∞-norm (max absolute row sum). Equals the 1-norm by symmetry.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Eigenvalues in ascending order.
pub fn sym_eigvals(m: &SymMatrix) -> Result<Vec<f64>, LinalgError> {
    let (vals, _) = tridiag_ql(m, false, "sym_eigvals input")?;
    Ok(vals)
}

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors,
/// returned as columns: `vectors[k]` is the eigenvector of `values[k]`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn sym_eigen(m: &SymMatrix) -> Result<SymEigen, LinalgError> {
    let (values, z) = tridiag_ql(m, true, "sym_eigen input")?;
    let z = z.expect("vectors requested");
    let n = m.dim();
    let vectors = (0..n)
        .map(|k| (0..n).map(|i| z[i * n + k]).collect())
        .collect();
    Ok(SymEigen { values, vectors })
}

pub fn lambda_min(m: &SymMatrix) -> Result<f64, LinalgError> {
    Ok(sym_eigvals(m)?[0])
}

// Householder reduction to tridiagonal form followed by the implicit-shift
// QL iteration (tred2/tql2 of the EISPACK lineage). `z` accumulates the
// orthogonal transforms only when eigenvectors are wanted.
fn tridiag_ql(
    m: &SymMatrix,
    want_vectors: bool,
    name: &str,
) -> Result<(Vec<f64>, Option<Vec<f64>>), LinalgError> {
    let n = m.dim();
    let mut a = m.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];

    if n == 1 {
        return Ok((vec![a[0]], want_vectors.then(|| vec![1.0])));
    }

    // tred2
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[i * n + k].abs()).sum();
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    if want_vectors {
                        a[j * n + i] = a[i * n + j] / h;
                    }
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    if want_vectors {
        for i in 0..n {
            if d[i] != 0.0 {
                for j in 0..i {
                    let mut g = 0.0;
                    for k in 0..i {
                        g += a[i * n + k] * a[k * n + j];
                    }
                    for k in 0..i {
                        a[k * n + j] -= g * a[k * n + i];
                    }
                }
            }
            d[i] = a[i * n + i];
            a[i * n + i] = 1.0;
            for j in 0..i {
                a[j * n + i] = 0.0;
                a[i * n + j] = 0.0;
            }
        }
    } else {
        for i in 0..n {
            d[i] = a[i * n + i];
        }
    }

    // tql2
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut mm = l;
            while mm < n - 1 {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= f64::EPSILON * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERS {
                return Err(LinalgError::NoConvergence {
                    name: name.to_string(),
                    index: l,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[mm] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = mm;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if want_vectors {
                    for k in 0..n {
                        let f = a[k * n + i + 1];
                        a[k * n + i + 1] = s * a[k * n + i] + c * f;
                        a[k * n + i] = c * a[k * n + i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }

    // sort ascending, permuting vector columns alongside
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = want_vectors.then(|| {
        let mut z = vec![0.0; n * n];
        for (new, &old) in order.iter().enumerate() {
            for k in 0..n {
                z[k * n + new] = a[k * n + old];
            }
        }
        z
    });
    Ok((values, vectors))
}

/// How a [`SymFactor`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Cholesky,
    Ldlt,
}

/// A factorization of a symmetric matrix: Cholesky `LLᵀ` when the matrix is
/// positive definite, otherwise Bunch–Kaufman `PLDLᵀPᵀ` with 1×1 and 2×2 pivots.
#[derive(Debug, Clone)]
pub struct SymFactor {
    n: usize,
    kind: FactorKind,
    // Cholesky: lower triangle holds L.
    // LDLᵀ: strict lower triangle holds unit-L multipliers, `d`/`offd` hold
    // the block diagonal, `perm` the accumulated symmetric interchanges.
    l: Vec<f64>,
    d: Vec<f64>,
    offd: Vec<f64>,
    block2: Vec<bool>,
    perm: Vec<usize>,
    anorm: f64,
}

impl SymFactor {
    pub fn new(m: &SymMatrix) -> Result<Self, LinalgError> {
        let anorm = m.norm_inf();
        if let Some(l) = cholesky(m) {
            return Ok(Self {
                n: m.dim(),
                kind: FactorKind::Cholesky,
                l,
                d: Vec::new(),
                offd: Vec::new(),
                block2: Vec::new(),
                perm: Vec::new(),
                anorm,
            });
        }
        bunch_kaufman(m, anorm)
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        match self.kind {
            FactorKind::Cholesky => self.solve_cholesky(b),
            FactorKind::Ldlt => self.solve_ldlt(b),
        }
    }

    fn solve_cholesky(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        y
    }

    fn solve_ldlt(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let l = &self.l;
        // y = Pᵀ b
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward with unit L
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s;
        }
        // block diagonal
        let mut i = 0;
        while i < n {
            if self.block2[i] {
                let (a, bb, c) = (self.d[i], self.offd[i], self.d[i + 1]);
                let det = a * c - bb * bb;
                let (y0, y1) = (y[i], y[i + 1]);
                y[i] = (c * y0 - bb * y1) / det;
                y[i + 1] = (a * y1 - bb * y0) / det;
                i += 2;
            } else {
                y[i] /= self.d[i];
                i += 1;
            }
        }
        // backward with unit Lᵀ
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * y[k];
            }
            y[i] = s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Reciprocal condition number in the 1-norm, `1 / (‖A‖₁ ‖A⁻¹‖₁)`, with
    /// `‖A⁻¹‖₁` estimated by Hager's method (Higham's refinement).
    pub fn rcond(&self) -> f64 {
        if self.anorm == 0.0 {
            return 0.0;
        }
        let inv_norm = self.inv_norm1_estimate();
        if !inv_norm.is_finite() || inv_norm == 0.0 {
            return 0.0;
        }
        1.0 / (self.anorm * inv_norm)
    }

    fn inv_norm1_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        let mut last_sign: Vec<f64> = Vec::new();
        for iter in 0..5 {
            let y = self.solve(&x);
            let y_norm: f64 = y.iter().map(|v| v.abs()).sum();
            if !y_norm.is_finite() {
                return f64::INFINITY;
            }
            let sign: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            if iter > 0 && (y_norm <= est || sign == last_sign) {
                est = est.max(y_norm);
                break;
            }
            est = y_norm;
            // A is symmetric so A⁻ᵀ = A⁻¹.
            let z = self.solve(&sign);
            last_sign = sign;
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |(bj, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) });
            if zmax <= dot(&z, &x) {
                break;
            }
            x = vec![0.0; n];
            x[jmax] = 1.0;
        }
        // Higham's alternating-sign probe guards against the classic
        // underestimates of the plain Hager iteration.
        let probe: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
            })
            .collect();
        let w = self.solve(&probe);
        let alt = 2.0 * w.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt)
    }
}

fn cholesky(m: &SymMatrix) -> Option<Vec<f64>> {
    let n = m.dim();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut s = m.get(j, j);
        for k in 0..j {
            s -= l[j * n + k] * l[j * n + k];
        }
        if !(s > 0.0) || !s.is_finite() {
            return None;
        }
        let ljj = s.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    Some(l)
}

// Bunch–Kaufman partial pivoting on the full symmetric working copy.
fn bunch_kaufman(m: &SymMatrix, anorm: f64) -> Result<SymFactor, LinalgError> {
    let n = m.dim();
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let mut a = m.data.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut d = vec![0.0; n];
    let mut offd = vec![0.0; n];
    let mut block2 = vec![false; n];
    // multipliers stored into a separate unit-lower matrix
    let mut l = vec![0.0; n * n];

    let swap_sym = |a: &mut Vec<f64>, l: &mut Vec<f64>, perm: &mut Vec<usize>, p: usize, q: usize, k: usize| {
        if p == q {
            return;
        }
        for c in 0..n {
            a.swap(p * n + c, q * n + c);
        }
        for r in 0..n {
            a.swap(r * n + p, r * n + q);
        }
        // already computed multiplier columns (< k) must follow the row swap
        for c in 0..k {
            l.swap(p * n + c, q * n + c);
        }
        perm.swap(p, q);
    };

    let mut k = 0;
    while k < n {
        let akk = a[k * n + k].abs();
        let (imax, colmax) = ((k + 1)..n)
            .map(|i| (i, a[i * n + k].abs()))
            .fold((k, 0.0), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });

        if akk.max(colmax) == 0.0 {
            return Err(LinalgError::NearSingular { rcond: 0.0 });
        }

        let two_by_two;
        if akk >= alpha * colmax {
            two_by_two = false;
        } else {
            let rowmax = (k..n)
                .filter(|&j| j != imax)
                .map(|j| a[imax * n + j].abs())
                .fold(0.0, f64::max);
            if akk * rowmax >= alpha * colmax * colmax {
                two_by_two = false;
            } else if a[imax * n + imax].abs() >= alpha * rowmax {
                swap_sym(&mut a, &mut l, &mut perm, k, imax, k);
                two_by_two = false;
            } else {
                swap_sym(&mut a, &mut l, &mut perm, k + 1, imax, k);
                two_by_two = true;
            }
        }

        if !two_by_two {
            let piv = a[k * n + k];
            d[k] = piv;
            l[k * n + k] = 1.0;
            for i in (k + 1)..n {
                l[i * n + k] = a[i * n + k] / piv;
            }
            for i in (k + 1)..n {
                let li = l[i * n + k];
                for j in (k + 1)..n {
                    a[i * n + j] -= li * piv * l[j * n + k];
                }
            }
            k += 1;
        } else {
            let (p, q, r) = (a[k * n + k], a[(k + 1) * n + k], a[(k + 1) * n + k + 1]);
            let det = p * r - q * q;
            d[k] = p;
            offd[k] = q;
            d[k + 1] = r;
            block2[k] = true;
            l[k * n + k] = 1.0;
            l[(k + 1) * n + k + 1] = 1.0;
            for i in (k + 2)..n {
                let (u, v) = (a[i * n + k], a[i * n + k + 1]);
                // [l_ik, l_ik+1] = [u, v] · D⁻¹
                l[i * n + k] = (u * r - v * q) / det;
                l[i * n + k + 1] = (v * p - u * q) / det;
            }
            for i in (k + 2)..n {
                let (li0, li1) = (l[i * n + k], l[i * n + k + 1]);
                for j in (k + 2)..n {
                    let (u, v) = (a[j * n + k], a[j * n + k + 1]);
                    a[i * n + j] -= li0 * u + li1 * v;
                }
            }
            k += 2;
        }
    }
    // clear the unit diagonal for the solve loops, which assume implicit ones
    for i in 0..n {
        l[i * n + i] = 0.0;
    }
    Ok(SymFactor {
        n,
        kind: FactorKind::Ldlt,
        l,
        d,
        offd,
        block2,
        perm,
        anorm,
    })
}

/// Solution of a symmetric system with its condition estimate.
#[derive(Debug, Clone)]
pub struct SymSolution {
    pub x: Vec<f64>,
    pub rcond: f64,
    pub kind: FactorKind,
}

/// Solves `M x = b` for symmetric `M`, failing with
/// [`LinalgError::NearSingular`] when the estimated rcond is below
/// `rcond_threshold`.
pub fn solve_sym(m: &SymMatrix, b: &[f64], rcond_threshold: f64) -> Result<SymSolution, LinalgError> {
    if b.len() != m.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: m.dim(),
            got: b.len(),
        });
    }
    let factor = SymFactor::new(m)?;
    let rcond = factor.rcond();
    if !(rcond >= rcond_threshold) {
        return Err(LinalgError::NearSingular { rcond });
    }
    let x = factor.solve(b);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NearSingular { rcond });
    }
    Ok(SymSolution {
        x,
        rcond,
        kind: factor.kind(),
    })
}
