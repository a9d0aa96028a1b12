//! Dense linear algebra for small, tall-thin matrices.
//!
//! Everything here works on `n × m` matrices with `m` at most a handful
//! of columns: thin Householder QR, triangular solves and the Gram
//! (metric) matrix.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Diagonal entries of `R` below this fraction of the original column
/// norm are treated as a collapsed tangent direction.
pub const RANK_TOL: f64 = 1e-13;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
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

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    /// Builds an `n × m` matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let c = columns.len();
        let r = columns.first().map_or(0, |col| col.len());
        let mut m = Self::zeros(r, c);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for (i, v) in col.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scaled(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

/// Thin QR factors with `diag(R) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QrPair {
    /// `n × m`, orthonormal columns.
    pub q: Mat,
    /// `m × m`, upper triangular.
    pub r: Mat,
}

impl QrPair {
    /// `det R`, positive by construction.
    pub fn det_r(&self) -> f64 {
        (0..self.r.rows()).map(|k| self.r[(k, k)]).product()
    }
}

/// Householder thin QR of a full-column-rank `n × m` matrix (`n ≥ m`).
///
/// The signs of the Householder vectors are fixed afterwards so that
/// every diagonal entry of `R` is positive.
pub fn thin_qr(a: &Mat) -> Result<QrPair> {
    let (n, m) = (a.rows(), a.cols());
    if m == 0 || n < m {
        return Err(Error::DimensionMismatch {
            context: "thin_qr (need n >= m >= 1)",
            expected: m.max(1),
            got: n,
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite { context: "thin_qr input" });
    }
    let col_norms: Vec<f64> = (0..m).map(|j| norm(&a.column(j))).collect();

    let mut work = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(m);
    for k in 0..m {
        let mut v: Vec<f64> = (k..n).map(|i| work[(i, k)]).collect();
        let alpha = norm(&v);
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vnorm = norm(&v);
        if vnorm > 0.0 {
            for vi in v.iter_mut() {
                *vi /= vnorm;
            }
            for j in k..m {
                let s: f64 = (k..n).map(|i| v[i - k] * work[(i, j)]).sum();
                for i in k..n {
                    work[(i, j)] -= 2.0 * s * v[i - k];
                }
            }
        }
        reflectors.push(v);
    }

    let mut r = Mat::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            r[(i, j)] = work[(i, j)];
        }
    }

    // Q = H_0 H_1 ... H_{m-1} applied to the first m columns of I.
    let mut q = Mat::zeros(n, m);
    for j in 0..m {
        q[(j, j)] = 1.0;
    }
    for k in (0..m).rev() {
        let v = &reflectors[k];
        if v.iter().all(|x| *x == 0.0) {
            continue;
        }
        for j in 0..m {
            let s: f64 = (k..n).map(|i| v[i - k] * q[(i, j)]).sum();
            for i in k..n {
                q[(i, j)] -= 2.0 * s * v[i - k];
            }
        }
    }

    for k in 0..m {
        let rkk = r[(k, k)];
        if !(rkk.abs() >= RANK_TOL * col_norms[k]) || col_norms[k] == 0.0 {
            return Err(Error::RankDeficient {
                column: k,
                value: rkk.abs(),
                column_norm: col_norms[k],
            });
        }
        if rkk < 0.0 {
            for j in k..m {
                r[(k, j)] = -r[(k, j)];
            }
            for i in 0..n {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    Ok(QrPair { q, r })
}

/// Solves `R y = b` for upper-triangular `R`.
pub fn back_substitute(r: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let m = r.rows();
    if r.cols() != m || b.len() != m {
        return Err(Error::DimensionMismatch {
            context: "back_substitute",
            expected: m,
            got: b.len(),
        });
    }
    let mut y = vec![0.0; m];
    for i in (0..m).rev() {
        let rii = r[(i, i)];
        if rii == 0.0 {
            return Err(Error::SingularR { index: i });
        }
        let s: f64 = ((i + 1)..m).map(|j| r[(i, j)] * y[j]).sum();
        y[i] = (b[i] - s) / rii;
    }
    Ok(y)
}

/// Solves `Rᵀ z = b` for upper-triangular `R` (forward substitution).
pub fn forward_substitute_transposed(r: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    let m = r.rows();
    if r.cols() != m || b.len() != m {
        return Err(Error::DimensionMismatch {
            context: "forward_substitute_transposed",
            expected: m,
            got: b.len(),
        });
    }
    let mut z = vec![0.0; m];
    for i in 0..m {
        let rii = r[(i, i)];
        if rii == 0.0 {
            return Err(Error::SingularR { index: i });
        }
        let s: f64 = (0..i).map(|j| r[(j, i)] * z[j]).sum();
        z[i] = (b[i] - s) / rii;
    }
    Ok(z)
}

/// Gram matrix `AᵀA` of the columns of `A`.
pub fn metric_tensor(a: &Mat) -> Mat {
    let m = a.cols();
    let cols: Vec<Vec<f64>> = (0..m).map(|j| a.column(j)).collect();
    let mut c = Mat::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = dot(&cols[i], &cols[j]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

/// Determinant by partial-pivot elimination; only used on tiny matrices.
pub fn determinant(a: &Mat) -> f64 {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut w = a.clone();
    let mut det = 1.0;
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| w[(i, k)].abs().total_cmp(&w[(j, k)].abs()))
            .unwrap();
        if w[(p, k)] == 0.0 {
            return 0.0;
        }
        if p != k {
            for j in 0..n {
                let t = w[(k, j)];
                w[(k, j)] = w[(p, j)];
                w[(p, j)] = t;
            }
            det = -det;
        }
        det *= w[(k, k)];
        for i in (k + 1)..n {
            let f = w[(i, k)] / w[(k, k)];
            for j in k..n {
                w[(i, j)] -= f * w[(k, j)];
            }
        }
    }
    det
}
