//! Dense symmetric matrices, the `vec`/`mat` vectorization maps and
//! positive-definite solves.
//!
//! A symmetric `d x d` matrix is identified with a vector of length
//! `d(d+1)/2` listing its upper triangle column by column:
//! `X11, X12, X22, X13, X23, X33, ...`. Off-diagonal entries are stored
//! once, so `|vec(X)|` is *not* the Frobenius norm of `X`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq)]
pub enum LinalgError {
    /// Operand shapes do not agree.
    DimensionMismatch { expected: usize, found: usize },
    /// A vectorized symmetric matrix must have triangular length.
    NotTriangular(usize),
    /// Input to a symmetric routine was not symmetric.
    NotSymmetric,
    /// Factorization failed even after the largest diagonal shift.
    Singular,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            LinalgError::NotTriangular(n) => {
                write!(f, "length {n} is not a triangular number d(d+1)/2")
            }
            LinalgError::NotSymmetric => f.write_str("matrix is not symmetric"),
            LinalgError::Singular => f.write_str("matrix is numerically singular"),
        }
    }
}

impl core::error::Error for LinalgError {}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter()
        .fold(0.0, |m, v| if v.abs() > m { v.abs() } else { m })
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Position of entry `(i, j)`, `i <= j`, inside `vec(X)`.
#[inline]
pub fn packed_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

/// Returns `d` with `d(d+1)/2 == len`, if there is one.
pub fn triangular_dim(len: usize) -> Option<usize> {
    let mut d = (sqrt(2.0 * len as f64) as usize).saturating_sub(1);
    while d * (d + 1) / 2 < len {
        d += 1;
    }
    (d * (d + 1) / 2 == len).then_some(d)
}

/// Dense real symmetric matrix with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "symmetric matrix must have dimension at least 1");
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, v) in diag.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    /// Builds the matrix from `f(i, j)` evaluated on the upper triangle.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for j in 0..dim {
            for i in 0..=j {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Parses square rows, requiring exact symmetry.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        Self::from_rows_with_tol(rows, 0.0)
    }

    /// Parses square rows, accepting `|a_ij - a_ji| <= rel_tol * max(|a_ij|, |a_ji|)`.
    /// The upper-triangle value is kept.
    pub fn from_rows_with_tol(rows: &[Vec<f64>], rel_tol: f64) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(LinalgError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        for row in rows {
            if row.len() != dim {
                return Err(LinalgError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (rows[i][j], rows[j][i]);
                let scale = a.abs().max(b.abs());
                if (a - b).abs() > rel_tol * scale || a.is_nan() || b.is_nan() {
                    return Err(LinalgError::NotSymmetric);
                }
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    /// `y y^T`
    pub fn outer(y: &[f64]) -> Self {
        Self::from_fn(y.len(), |i, j| y[i] * y[j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Trace inner product `<self, other>`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        dot(&self.data, &other.data)
    }

    pub fn mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.dim);
        (0..self.dim).map(|i| dot(self.row(i), y)).collect()
    }

    /// `y^T X y`
    pub fn quad_form(&self, y: &[f64]) -> f64 {
        dot(&self.mul_vec(y), y)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn to_vec(&self) -> SymVec {
        vec(self)
    }
}

/// Vectorized symmetric matrix (upper triangle, column by column).
#[derive(Debug, Clone, PartialEq)]
pub struct SymVec(Vec<f64>);

impl SymVec {
    pub fn new(values: Vec<f64>) -> Result<Self, LinalgError> {
        triangular_dim(values.len()).ok_or(LinalgError::NotTriangular(values.len()))?;
        Ok(SymVec(values))
    }

    /// Matrix dimension `d` with `len == d(d+1)/2`.
    pub fn dim(&self) -> usize {
        triangular_dim(self.0.len()).expect("length checked at construction")
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl Index<usize> for SymVec {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub fn vec(x: &SymMatrix) -> SymVec {
    let d = x.dim();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for j in 0..d {
        for i in 0..=j {
            out.push(x.get(i, j));
        }
    }
    SymVec(out)
}

/// Inverse of [`vec`].
pub fn mat(x: &[f64]) -> Result<SymMatrix, LinalgError> {
    let d = triangular_dim(x.len()).ok_or(LinalgError::NotTriangular(x.len()))?;
    if d == 0 {
        return Err(LinalgError::NotTriangular(0));
    }
    Ok(SymMatrix::from_fn(d, |i, j| x[packed_index(i, j)]))
}

/// Adjoint of [`mat`]: `dot(mat_adjoint(C), x) == <C, mat(x)>`.
/// Diagonal entries are copied and off-diagonal entries doubled.
pub fn mat_adjoint(c: &SymMatrix) -> SymVec {
    let d = c.dim();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for j in 0..d {
        for i in 0..=j {
            let v = c.get(i, j);
            out.push(if i == j { v } else { 2.0 * v });
        }
    }
    SymVec(out)
}

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `self += alpha * u v^T`
    pub fn add_outer(&mut self, alpha: f64, u: &[f64], v: &[f64]) {
        for (i, ui) in u.iter().enumerate() {
            let s = alpha * ui;
            if s != 0.0 {
                axpy(s, v, &mut self.data[i * self.cols..(i + 1) * self.cols]);
            }
        }
    }

    pub fn add_diag(&mut self, alpha: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] += alpha;
        }
    }

    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let tol = rel_tol * self.max_abs().max(1.0);
        (0..self.rows)
            .all(|i| ((i + 1)..self.cols).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor `L` with `M + shift I = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Returns `None` when a pivot is not strictly positive.
    pub fn factor(m: &Matrix, shift: f64) -> Option<Self> {
        let n = m.nrows();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut diag = m[(j, j)] + shift;
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return None;
            }
            let ljj = sqrt(diag);
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Some(Cholesky { n, l })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

/// Smallest diagonal shift tried after a failed factorization.
pub const SHIFT_START: f64 = 1e-12;
/// Largest diagonal shift; failure beyond it is reported as singular.
pub const SHIFT_MAX: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct PdSolution {
    pub x: Vec<f64>,
    /// Diagonal shift that made the factorization succeed (0 when none was needed).
    pub shift: f64,
}

/// Cholesky factorization with the diagonal-shift fallback of [`solve_pd`].
/// Returns the factor and the absolute shift applied.
pub fn factor_pd(m: &Matrix) -> Result<(Cholesky, f64), LinalgError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    if !m.is_symmetric(1e-10) {
        return Err(LinalgError::NotSymmetric);
    }
    let scale = (0..n).fold(1.0f64, |s, i| s.max(m[(i, i)].abs()));
    let mut shift = 0.0;
    loop {
        if let Some(chol) = Cholesky::factor(m, shift * scale) {
            return Ok((chol, shift * scale));
        }
        shift = if shift == 0.0 {
            SHIFT_START
        } else {
            shift * 10.0
        };
        if shift > SHIFT_MAX * (1.0 + 1e-9) {
            return Err(LinalgError::Singular);
        }
    }
}

/// Solves `M v = rhs` for symmetric positive definite `M`.
///
/// When the factorization breaks down, the diagonal is shifted by
/// `1e-12 * max(1, max_i M_ii)`, growing tenfold per retry up to `1e-6`.
pub fn solve_pd(m: &Matrix, rhs: &[f64]) -> Result<PdSolution, LinalgError> {
    if rhs.len() != m.nrows() {
        return Err(LinalgError::DimensionMismatch {
            expected: m.nrows(),
            found: rhs.len(),
        });
    }
    let (chol, shift) = factor_pd(m)?;
    let x = chol.solve(rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::Singular);
    }
    Ok(PdSolution { x, shift })
}
