//! Small dense matrices and a one-sided Jacobi SVD.
//!
//! Everything here is sized for desk-scale problems (tens of rows and
//! columns). Storage is row-major.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math::{abs, dot, norm, sqrt};

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Mat { rows, cols, data }
    }

    /// Builds a matrix whose rows are the given vectors. `cols` is needed for
    /// the empty case.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Self {
        let mut m = Mat::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "row {i} has wrong length");
            m.data[i * cols..(i + 1) * cols].copy_from_slice(r);
        }
        m
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vec<f64>], rows: usize) -> Self {
        let mut m = Mat::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows, "column {j} has wrong length");
            for (i, v) in c.iter().enumerate() {
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
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

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            if *yi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += yi * a;
            }
        }
        out
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(abs(*v)))
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Thin singular value decomposition `A = U diag(s) Vᵀ`, singular values
/// sorted descending. `u` is `rows × cols`, `v` is `cols × cols`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

const SVD_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD. Accurate for small singular values,
/// which is what rank decisions need.
pub fn svd(a: &Mat) -> Svd {
    let (m, n) = (a.rows, a.cols);
    let mut u = a.clone();
    let mut v = Mat::identity(n);
    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma == 0.0 || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if abs(gamma) <= 1e-15 * sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (abs(zeta) + sqrt(1.0 + zeta * zeta));
                let c = 1.0 / sqrt(1.0 + t * t);
                let s = c * t;
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = c * up - s * uq;
                    u[(i, q)] = s * up + c * uq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sing: Vec<(f64, usize)> = (0..n)
        .map(|j| {
            let col: Vec<f64> = (0..m).map(|i| u[(i, j)]).collect();
            (norm(&col), j)
        })
        .collect();
    // stable: equal singular values keep column order
    sing.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(core::cmp::Ordering::Equal));

    let mut uu = Mat::zeros(m, n);
    let mut vv = Mat::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &(sigma, j)) in sing.iter().enumerate() {
        s.push(sigma);
        for i in 0..m {
            uu[(i, k)] = if sigma > 0.0 { u[(i, j)] / sigma } else { 0.0 };
        }
        for i in 0..n {
            vv[(i, k)] = v[(i, j)];
        }
    }
    Svd { u: uu, s, v: vv }
}

/// Threshold below which a singular value counts as zero.
///
/// Relative to the largest singular value, with unit floor so that
/// round-off-sized families register as rank zero.
pub fn rank_threshold(s: &[f64], tol: f64) -> f64 {
    let smax = s.first().copied().unwrap_or(0.0);
    tol * smax.max(1.0)
}

pub fn rank_from_singular(s: &[f64], tol: f64) -> usize {
    let thr = rank_threshold(s, tol);
    s.iter().filter(|&&x| x > thr).count()
}

impl Svd {
    pub fn rank(&self, tol: f64) -> usize {
        rank_from_singular(&self.s, tol)
    }

    /// Minimum-norm least-squares solution of `A x = b`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Vec<f64> {
        let r = self.rank(tol);
        let n = self.v.rows();
        let mut x = vec![0.0; n];
        for k in 0..r {
            let coef = (0..self.u.rows()).map(|i| self.u[(i, k)] * b[i]).sum::<f64>() / self.s[k];
            for i in 0..n {
                x[i] += coef * self.v[(i, k)];
            }
        }
        x
    }

    /// Orthonormal basis (as vectors) of the right null space.
    pub fn null_space(&self, tol: f64) -> Vec<Vec<f64>> {
        let r = self.rank(tol);
        (r..self.v.cols()).map(|k| self.v.col(k)).collect()
    }

    /// Orthonormal basis of the row space (right singular vectors with
    /// nonzero singular value).
    pub fn row_space(&self, tol: f64) -> Vec<Vec<f64>> {
        let r = self.rank(tol);
        (0..r).map(|k| self.v.col(k)).collect()
    }
}

/// Minimum-norm least-squares solve.
pub fn lstsq(a: &Mat, b: &[f64], tol: f64) -> Vec<f64> {
    svd(a).solve(b, tol)
}

/// Orthogonal projector onto the complement of `span(vectors)`, as a
/// closure-friendly matrix (`dim × dim`).
pub fn complement_projector(vectors: &[Vec<f64>], dim: usize, tol: f64) -> Mat {
    let mut p = Mat::identity(dim);
    if vectors.is_empty() {
        return p;
    }
    let a = Mat::from_cols(vectors, dim);
    // left singular vectors of A span the range
    let dec = svd(&a);
    let r = dec.rank(tol);
    for k in 0..r {
        let uk = dec.u.col(k);
        for i in 0..dim {
            for j in 0..dim {
                p[(i, j)] -= uk[i] * uk[j];
            }
        }
    }
    p
}
