//! Dense complex linear algebra used by every algebra model.
//!
//! Everything here is small-scale (matrices up to a few hundred rows) and
//! dependency-free: a cyclic Jacobi eigensolver for hermitian matrices, a
//! one-sided Jacobi SVD, SVD-based least squares, and real polynomial roots
//! through companion-matrix eigenvalues.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("iteration budget of {sweeps} sweeps exhausted")]
    NoConvergence { sweeps: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("rank deficient: smallest singular value {smallest:.3e} vs largest {largest:.3e}")]
    RankDeficient { smallest: f64, largest: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Numerical tolerance policy shared by every comparison in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_eps: f64,
    pub rel_eps: f64,
    /// Eigenvalues or roots closer than this (relative to `1 + max|x|`) are merged.
    pub cluster_eps: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs_eps: 1e-9, rel_eps: 1e-9, cluster_eps: 1e-7 }
    }
}

impl Tolerance {
    pub fn new(abs_eps: f64, rel_eps: f64, cluster_eps: f64) -> Result<Self> {
        let tol = Tolerance { abs_eps, rel_eps, cluster_eps };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("abs_eps", self.abs_eps),
            ("rel_eps", self.rel_eps),
            ("cluster_eps", self.cluster_eps),
        ] {
            if !(v > 0.0 && v < 1e-2) {
                return Err(LinalgError::InvalidTolerance(format!(
                    "{name} = {v} must lie in (0, 1e-2)"
                )));
            }
        }
        Ok(())
    }

    /// Combined test `|x - y| <= abs_eps + rel_eps * max(|x|, |y|)`.
    pub fn close(&self, x: f64, y: f64) -> bool {
        (x - y).abs() <= self.abs_eps + self.rel_eps * x.abs().max(y.abs())
    }

    /// Residual acceptance against a problem scale.
    pub fn accepts(&self, residual: f64, scale: f64) -> bool {
        residual <= self.abs_eps + self.rel_eps * scale.abs()
    }
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::DegenerateInput("non-finite matrix entry"));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Shape("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diagonal(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(LinalgError::Shape(format!(
                    "column {j} has {} entries, expected {rows}",
                    col.len()
                )));
            }
            m.set_column(j, col);
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[C64]) {
        for (i, &z) in col.iter().enumerate() {
            self[(i, j)] = z;
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &ComplexMatrix) -> ComplexMatrix {
        &self.matmul(other) - &other.matmul(self)
    }

    /// `||self - self^dagger||_F`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Eigen-decomposition `m = V diag(values) V^dagger` of a hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d: Vec<C64> = self.values.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.vectors.matmul(&ComplexMatrix::diagonal(&d)).matmul(&self.vectors.adjoint())
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Cyclic Jacobi eigensolver for hermitian matrices.
pub fn hermitian_eig(m: &ComplexMatrix, tol: &Tolerance) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(LinalgError::Shape(format!("{}x{} is not square", m.rows(), m.cols())));
    }
    let n = m.rows();
    let scale = m.frobenius_norm();
    let defect = m.hermitian_defect();
    if defect > tol.abs_eps * (1.0 + scale) {
        return Err(LinalgError::NotHermitian { defect });
    }
    // Symmetrize so the rotations act on an exactly hermitian matrix.
    let mut a = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
        }
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    let mut v = ComplexMatrix::identity(n);
    let max_sweeps = (100 * n * n).max(50);
    let target = f64::EPSILON * scale.max(f64::MIN_POSITIVE);

    let mut sweeps = 0;
    while n >= 2 && off_diagonal_norm(&a) > target {
        if sweeps == max_sweeps {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / g;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let zeta = (aqq - app) / (2.0 * g);
                let t = if zeta.is_finite() {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                } else {
                    0.0
                };
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let ph_conj = phase.conj();
                // A <- A W with W = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * ph_conj * s;
                    a[(k, q)] = akp * s + akq * ph_conj * c;
                }
                // A <- W^dagger A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * phase * s;
                    a[(q, k)] = apk * s + aqk * phase * c;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * ph_conj * s;
                    v[(k, q)] = vkp * s + vkq * ph_conj * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    Ok(HermitianEig { values, vectors })
}

/// Largest singular value, as the square root of the top eigenvalue of `m^dagger m`.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    let gram = m.adjoint().matmul(m);
    match hermitian_eig(&gram, &Tolerance::default()) {
        Ok(eig) => eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        // The Gram matrix is hermitian by construction; fall back to a safe upper bound.
        Err(_) => m.frobenius_norm(),
    }
}

/// Thin singular value decomposition `a = U diag(s) V^dagger` with `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    /// Columns of `U` whose singular value exceeds `threshold`.
    pub fn range_basis(&self, threshold: f64) -> Vec<Vec<C64>> {
        self.singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > threshold)
            .map(|(j, _)| self.u.column(j))
            .collect()
    }
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        let t = svd(&a.adjoint())?;
        return Ok(Svd { u: t.v, singular_values: t.singular_values, v: t.u });
    }
    let mut w = a.clone();
    let mut v = ComplexMatrix::identity(n);
    let max_sweeps = 80;
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = C64::new(0.0, 0.0);
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    alpha += wp.norm_sqr();
                    beta += wq.norm_sqr();
                    gamma += wp.conj() * wq;
                }
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g <= f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let ph_conj = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)] * ph_conj;
                    w[(i, p)] = wp * c - wq * s;
                    w[(i, q)] = wp * s + wq * c;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)] * ph_conj;
                    v[(i, p)] = vp * c - vq * s;
                    v[(i, q)] = vp * s + vq * c;
                }
            }
        }
        sweeps += 1;
        if !rotated {
            break;
        }
        if sweeps == max_sweeps {
            return Err(LinalgError::NoConvergence { sweeps });
        }
    }

    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = ComplexMatrix::zeros(m, n);
    let mut vv = ComplexMatrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        singular_values.push(s);
        if s > 0.0 {
            let col: Vec<C64> = (0..m).map(|i| w[(i, src)] / s).collect();
            u.set_column(dst, &col);
        }
        vv.set_column(dst, &v.column(src));
    }
    Ok(Svd { u, singular_values, v: vv })
}

/// Least-squares solution together with its Frobenius residual `||a x - b||`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: ComplexMatrix,
    pub residual: f64,
}

/// Minimizes `||a x - b||_F` for a tall (or square) full-column-rank `a`.
pub fn solve_least_squares(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    tol: &Tolerance,
) -> Result<LeastSquares> {
    if a.rows() < a.cols() {
        return Err(LinalgError::Shape(format!(
            "least squares needs rows >= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() != b.rows() {
        return Err(LinalgError::Shape(format!(
            "right-hand side has {} rows, expected {}",
            b.rows(),
            a.rows()
        )));
    }
    let dec = svd(a)?;
    let largest = dec.singular_values.first().copied().unwrap_or(0.0);
    let smallest = dec.singular_values.last().copied().unwrap_or(0.0);
    if largest == 0.0 || smallest <= tol.abs_eps * largest {
        return Err(LinalgError::RankDeficient { smallest, largest });
    }
    // x = V diag(1/s) U^dagger b
    let mut ub = dec.u.adjoint().matmul(b);
    for (i, &s) in dec.singular_values.iter().enumerate() {
        for j in 0..ub.cols() {
            ub[(i, j)] /= s;
        }
    }
    let solution = dec.v.matmul(&ub);
    let residual = (&a.matmul(&solution) - b).frobenius_norm();
    Ok(LeastSquares { solution, residual })
}

/// Evaluates a real polynomial with ascending coefficients.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_derivative_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &c)| acc * x + c * k as f64)
}

/// Distinct real roots of a real polynomial (ascending coefficients), sorted.
pub fn real_roots(coeffs: &[f64], tol: &Tolerance) -> Result<Vec<f64>> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(LinalgError::DegenerateInput("non-finite coefficient"));
    }
    let cmax = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if cmax <= tol.abs_eps {
        return Err(LinalgError::DegenerateInput("all coefficients vanish"));
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg] == 0.0 {
        deg -= 1;
    }
    if deg == 0 {
        return Err(LinalgError::DegenerateInput("polynomial has degree zero"));
    }
    let lead = coeffs[deg];
    let monic: Vec<f64> = coeffs[..=deg].iter().map(|c| c / lead).collect();

    // Upper-Hessenberg companion matrix.
    let mut h = vec![vec![0.0; deg]; deg];
    for j in 0..deg {
        h[0][j] = -monic[deg - 1 - j];
    }
    for i in 1..deg {
        h[i][i - 1] = 1.0;
    }
    balance(&mut h);
    let eigs = hessenberg_eigenvalues(&mut h)?;

    let mut roots = Vec::new();
    for (re, im) in eigs {
        if im.abs() > tol.cluster_eps * (1.0 + re.abs()) {
            continue;
        }
        // Newton polish on the original polynomial.
        let mut x = re;
        for _ in 0..8 {
            let d = poly_derivative_eval(&monic, x);
            if d == 0.0 {
                break;
            }
            let step = poly_eval(&monic, x) / d;
            if !step.is_finite() {
                break;
            }
            let nx = x - step;
            if (poly_eval(&monic, nx)).abs() > (poly_eval(&monic, x)).abs() {
                break;
            }
            x = nx;
        }
        let scale: f64 = monic
            .iter()
            .enumerate()
            .map(|(k, c)| c.abs() * x.abs().powi(k as i32))
            .sum();
        if poly_eval(&monic, x).abs() <= tol.abs_eps * scale.max(1.0) {
            roots.push(x);
        }
    }
    roots.sort_by(f64::total_cmp);
    Ok(merge_clusters(&roots, tol.cluster_eps))
}

/// Merges sorted values closer than `eps * (1 + max|x|)` into their mean.
pub fn merge_clusters(sorted: &[f64], eps: f64) -> Vec<f64> {
    let max_abs = sorted.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let gap = eps * (1.0 + max_abs);
    let mut out: Vec<f64> = Vec::new();
    let mut group: Vec<f64> = Vec::new();
    for &x in sorted {
        if let Some(&last) = group.last() {
            if x - last > gap {
                out.push(group.iter().sum::<f64>() / group.len() as f64);
                group.clear();
            }
        }
        group.push(x);
    }
    if !group.is_empty() {
        out.push(group.iter().sum::<f64>() / group.len() as f64);
    }
    out
}

fn balance(a: &mut [Vec<f64>]) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let n = a.len();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[i][j] *= g;
                    }
                    for row in a.iter_mut() {
                        row[i] *= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues `(re, im)` of a real upper-Hessenberg matrix by shifted QR.
/// The matrix is destroyed.
fn hessenberg_eigenvalues(a: &mut [Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    let n = a.len() as isize;
    let mut wr = vec![0.0; n as usize];
    let mut wi = vec![0.0; n as usize];
    let mut anorm = 0.0;
    for i in 0..n as usize {
        for j in i.saturating_sub(1)..n as usize {
            anorm += a[i][j].abs();
        }
    }
    let at = |a: &[Vec<f64>], i: isize, j: isize| a[i as usize][j as usize];

    let mut nn = n - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 1 {
                let mut s = at(a, l - 1, l - 1).abs() + at(a, l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if at(a, l, l - 1).abs() + s == s {
                    a[l as usize][(l - 1) as usize] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = at(a, nn, nn);
            if l == nn {
                wr[nn as usize] = x + t;
                wi[nn as usize] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = at(a, nn - 1, nn - 1);
            let mut w = at(a, nn, nn - 1) * at(a, nn - 1, nn);
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + sign(z, p);
                    wr[(nn - 1) as usize] = x + z;
                    wr[nn as usize] = x + z;
                    if z != 0.0 {
                        wr[nn as usize] = x - w / z;
                    }
                    wi[(nn - 1) as usize] = 0.0;
                    wi[nn as usize] = 0.0;
                } else {
                    wr[(nn - 1) as usize] = x + p;
                    wr[nn as usize] = x + p;
                    wi[(nn - 1) as usize] = -z;
                    wi[nn as usize] = z;
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return Err(LinalgError::NoConvergence { sweeps: its });
            }
            if its == 10 || its == 20 {
                t += x;
                for i in 0..=nn {
                    a[i as usize][i as usize] -= x;
                }
                let s = at(a, nn, nn - 1).abs() + at(a, nn - 1, nn - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = at(a, m, m);
                r = x - z;
                let s = y - z;
                p = (r * s - w) / at(a, m + 1, m) + at(a, m, m + 1);
                q = at(a, m + 1, m + 1) - z - r - s;
                r = at(a, m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = at(a, m, m - 1).abs() * (q.abs() + r.abs());
                let v = p.abs() * (at(a, m - 1, m - 1).abs() + z.abs() + at(a, m + 1, m + 1).abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a[i as usize][(i - 2) as usize] = 0.0;
                if i != m + 2 {
                    a[i as usize][(i - 3) as usize] = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = at(a, k, k - 1);
                    q = at(a, k + 1, k - 1);
                    r = 0.0;
                    if k != nn - 1 {
                        r = at(a, k + 2, k - 1);
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k as usize][(k - 1) as usize] = -at(a, k, k - 1);
                        }
                    } else {
                        a[k as usize][(k - 1) as usize] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let (ku, ju) = (k as usize, j as usize);
                        let mut pp = a[ku][ju] + q * a[ku + 1][ju];
                        if k != nn - 1 {
                            pp += r * a[ku + 2][ju];
                            a[ku + 2][ju] -= pp * z;
                        }
                        a[ku + 1][ju] -= pp * y;
                        a[ku][ju] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let (iu, ku) = (i as usize, k as usize);
                        let mut pp = x * a[iu][ku] + y * a[iu][ku + 1];
                        if k != nn - 1 {
                            pp += z * a[iu][ku + 2];
                            a[iu][ku + 2] -= pp * r;
                        }
                        a[iu][ku + 1] -= pp * q;
                        a[iu][ku] -= pp;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn eig_of_identity_and_diagonal() {
        let eig = hermitian_eig(&ComplexMatrix::identity(3), &tol()).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
        let d = ComplexMatrix::diagonal(&[c(2.0, 0.0), c(-1.0, 0.0)]);
        let eig = hermitian_eig(&d, &tol()).unwrap();
        assert_eq!(eig.values, vec![-1.0, 2.0]);
    }

    #[test]
    fn eig_of_pauli_x() {
        // lambda^2 - 1 = 0
        let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let eig = hermitian_eig(&x, &tol()).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        assert!((&eig.reconstruct() - &x).frobenius_norm() < 1e-14);
    }

    #[test]
    fn eig_handles_complex_offdiagonal() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.0, -2.0), c(0.5, 0.5)],
            vec![c(0.0, 2.0), c(-1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.5, -0.5), c(0.0, 0.0), c(3.0, 0.0)],
        ])
        .unwrap();
        let eig = hermitian_eig(&m, &tol()).unwrap();
        assert!((&eig.reconstruct() - &m).frobenius_norm() < 1e-12);
        let vtv = eig.vectors.adjoint().matmul(&eig.vectors);
        assert!((&vtv - &ComplexMatrix::identity(3)).frobenius_norm() < 1e-12);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_eig(&m, &tol()), Err(LinalgError::NotHermitian { .. })));
    }

    #[test]
    fn operator_norm_examples() {
        assert_eq!(operator_norm(&ComplexMatrix::zeros(3, 3)), 0.0);
        assert!((operator_norm(&ComplexMatrix::identity(4)) - 1.0).abs() < 1e-15);
        let d = ComplexMatrix::diagonal(&[c(3.0, 0.0), c(-4.0, 0.0)]);
        assert!((operator_norm(&d) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn real_roots_examples() {
        assert_eq!(real_roots(&[-5.0, 1.0], &tol()).unwrap(), vec![5.0]);
        let r = real_roots(&[2.0, -3.0, 1.0], &tol()).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] - 2.0).abs() < 1e-12);
        assert!(real_roots(&[1.0, 0.0, 1.0], &tol()).unwrap().is_empty());
        assert!(matches!(
            real_roots(&[1e-12, 0.0], &tol()),
            Err(LinalgError::DegenerateInput(_))
        ));
    }

    #[test]
    fn real_roots_merges_double_root() {
        let r = real_roots(&[1.0, -2.0, 1.0], &tol()).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn least_squares_examples() {
        let b = ComplexMatrix::from_rows(&[vec![c(1.0, 2.0)], vec![c(-3.0, 0.5)]]).unwrap();
        let ls = solve_least_squares(&ComplexMatrix::identity(2), &b, &tol()).unwrap();
        assert!((&ls.solution - &b).frobenius_norm() < 1e-14);

        // Normal equations: 2x = 2, so x = 1 with residual sqrt(2).
        let a = ComplexMatrix::from_real(2, 1, &[1.0, 1.0]).unwrap();
        let b = ComplexMatrix::from_real(2, 1, &[0.0, 2.0]).unwrap();
        let ls = solve_least_squares(&a, &b, &tol()).unwrap();
        assert!((ls.solution[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((ls.residual - 2f64.sqrt()).abs() < 1e-14);

        // Duplicated consistent rows.
        let a = ComplexMatrix::from_real(4, 2, &[1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let x = ComplexMatrix::from_real(2, 1, &[0.5, -1.5]).unwrap();
        let ls = solve_least_squares(&a, &a.matmul(&x), &tol()).unwrap();
        assert!((&ls.solution - &x).frobenius_norm() < 1e-12);
        assert!(ls.residual < 1e-12);
    }

    #[test]
    fn least_squares_rank_deficient() {
        let a = ComplexMatrix::from_real(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]).unwrap();
        let b = ComplexMatrix::zeros(3, 1);
        assert!(matches!(
            solve_least_squares(&a, &b, &tol()),
            Err(LinalgError::RankDeficient { .. })
        ));
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerance::default().validate().is_ok());
        assert!(Tolerance::new(0.0, 1e-9, 1e-7).is_err());
        assert!(Tolerance::new(1e-9, 0.5, 1e-7).is_err());
    }
}
