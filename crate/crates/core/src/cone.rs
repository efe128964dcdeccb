//! Second-order cone and PSD cone primitives: Jordan product, projections,
//! boundary classification and a cyclic Jacobi eigensolver.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::Mat;
use crate::math::{abs, dot, norm, sqrt};

pub const DEFAULT_TOL_ACT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConeError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("Jacobi eigensolver did not converge (max off-diagonal {max_off_diagonal:e})")]
    NoConvergence { max_off_diagonal: f64 },
    #[error("second-order cone vectors need dimension at least 1")]
    Empty,
}

/// `(z₀, z̄)` with `z̄` of length `m − 1`. For `m = 1` the cone is ℝ₊.
#[derive(Debug, Clone, PartialEq)]
pub struct SocVector {
    pub z0: f64,
    pub zbar: Vec<f64>,
}

impl SocVector {
    pub fn new(z0: f64, zbar: Vec<f64>) -> Self {
        SocVector { z0, zbar }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self, ConeError> {
        let (&z0, rest) = v.split_first().ok_or(ConeError::Empty)?;
        Ok(SocVector { z0, zbar: rest.to_vec() })
    }

    pub fn zeros(m: usize) -> Self {
        SocVector { z0: 0.0, zbar: vec![0.0; m.saturating_sub(1)] }
    }

    /// The Jordan identity `e = (1, 0̄)`.
    pub fn identity(m: usize) -> Self {
        SocVector { z0: 1.0, zbar: vec![0.0; m.saturating_sub(1)] }
    }

    pub fn dim(&self) -> usize {
        self.zbar.len() + 1
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(self.z0);
        v.extend_from_slice(&self.zbar);
        v
    }

    pub fn norm(&self) -> f64 {
        norm(&self.to_vec())
    }

    pub fn bar_norm(&self) -> f64 {
        norm(&self.zbar)
    }

    /// `R_m z = (z₀, −z̄)`.
    pub fn reflect(&self) -> SocVector {
        SocVector { z0: self.z0, zbar: self.zbar.iter().map(|v| -v).collect() }
    }

    pub fn inner(&self, other: &SocVector) -> f64 {
        self.z0 * other.z0 + dot(&self.zbar, &other.zbar)
    }
}

/// `y ∘ s = (⟨y, s⟩, y₀ s̄ + s₀ ȳ)`.
pub fn jordan_product(y: &SocVector, s: &SocVector) -> Result<SocVector, ConeError> {
    if y.dim() != s.dim() {
        return Err(ConeError::DimensionMismatch { left: y.dim(), right: s.dim() });
    }
    let zbar = y.zbar.iter().zip(&s.zbar).map(|(yb, sb)| y.z0 * sb + s.z0 * yb).collect();
    Ok(SocVector { z0: y.inner(s), zbar })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SocPosition {
    Interior,
    BoundaryNonzero,
    Vertex,
    Infeasible,
}

impl fmt::Display for SocPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SocPosition::Interior => "interior",
            SocPosition::BoundaryNonzero => "boundary",
            SocPosition::Vertex => "vertex",
            SocPosition::Infeasible => "infeasible",
        })
    }
}

/// Position of `z` relative to `K_m`. The vertex test runs first, so a point
/// near both the origin and the boundary is reported as `Vertex`.
pub fn classify_soc(z: &SocVector, tol_act: f64) -> SocPosition {
    if z.dim() == 1 {
        return if abs(z.z0) <= tol_act {
            SocPosition::Vertex
        } else if z.z0 > tol_act {
            SocPosition::Interior
        } else {
            SocPosition::Infeasible
        };
    }
    let zn = z.norm();
    if zn <= tol_act {
        return SocPosition::Vertex;
    }
    let bn = z.bar_norm();
    if abs(z.z0 - bn) <= tol_act * zn.max(1.0) {
        SocPosition::BoundaryNonzero
    } else if z.z0 > bn {
        SocPosition::Interior
    } else {
        SocPosition::Infeasible
    }
}

pub fn project_soc(z: &SocVector) -> SocVector {
    if z.dim() == 1 {
        return SocVector::new(z.z0.max(0.0), Vec::new());
    }
    let bn = z.bar_norm();
    if z.z0 >= bn {
        z.clone()
    } else if -z.z0 >= bn {
        SocVector::zeros(z.dim())
    } else {
        let t = 0.5 * (z.z0 + bn);
        SocVector::new(t, z.zbar.iter().map(|v| t * v / bn).collect())
    }
}

pub fn soc_distance(z: &SocVector) -> f64 {
    let p = project_soc(z);
    norm(&crate::math::sub(&z.to_vec(), &p.to_vec()))
}

/// Dense symmetric matrix; the full square is stored and kept exactly
/// symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(m: usize) -> Self {
        SymMatrix { m, data: vec![0.0; m * m] }
    }

    pub fn identity(m: usize) -> Self {
        let mut a = SymMatrix::zeros(m);
        for i in 0..m {
            a.data[i * m + i] = 1.0;
        }
        a
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut a = SymMatrix::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            a.set(i, i, *v);
        }
        a
    }

    /// From a full row-major square. Rejects inputs whose asymmetry exceeds
    /// `1e-12‖A‖`, then stores `(A + Aᵀ)/2`.
    pub fn from_full(m: usize, data: &[f64]) -> Result<Self, ConeError> {
        if data.len() != m * m {
            return Err(ConeError::DimensionMismatch { left: data.len(), right: m * m });
        }
        let scale = norm(data);
        let mut asym = 0.0_f64;
        for i in 0..m {
            for j in (i + 1)..m {
                asym = asym.max(abs(data[i * m + j] - data[j * m + i]));
            }
        }
        if asym > 1e-12 * scale {
            return Err(ConeError::NotSymmetric { asymmetry: asym });
        }
        let mut a = SymMatrix::zeros(m);
        for i in 0..m {
            for j in i..m {
                a.set(i, j, 0.5 * (data[i * m + j] + data[j * m + i]));
            }
        }
        Ok(a)
    }

    /// From the upper triangle listed row by row (`m(m+1)/2` entries).
    pub fn from_upper(m: usize, upper: &[f64]) -> Result<Self, ConeError> {
        if upper.len() != m * (m + 1) / 2 {
            return Err(ConeError::DimensionMismatch { left: upper.len(), right: m * (m + 1) / 2 });
        }
        let mut a = SymMatrix::zeros(m);
        let mut k = 0;
        for i in 0..m {
            for j in i..m {
                a.set(i, j, upper[k]);
                k += 1;
            }
        }
        Ok(a)
    }

    /// `v vᵀ`
    pub fn outer(v: &[f64]) -> Self {
        let m = v.len();
        let mut a = SymMatrix::zeros(m);
        for i in 0..m {
            for j in i..m {
                a.set(i, j, v[i] * v[j]);
            }
        }
        a
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.m + j] = v;
        self.data[j * self.m + i] = v;
    }

    pub fn as_full(&self) -> &[f64] {
        &self.data
    }

    pub fn upper(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.m * (self.m + 1) / 2);
        for i in 0..self.m {
            for j in i..self.m {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// Trace inner product `A · B = tr(AB)`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        dot(&self.data, &other.data)
    }

    pub fn frobenius(&self) -> f64 {
        norm(&self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.m).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix { m: self.m, data: self.data.iter().map(|v| s * v).collect() }
    }

    pub fn add_scaled(&mut self, s: f64, other: &SymMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix { m: self.m, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    /// `Eᵀ A E` for `E` with orthonormal columns (`m × r`).
    pub fn congruence(&self, e: &Mat) -> SymMatrix {
        let r = e.cols();
        let mut out = SymMatrix::zeros(r);
        for a in 0..r {
            for b in a..r {
                let mut s = 0.0;
                for i in 0..self.m {
                    let ei = e[(i, a)];
                    if ei == 0.0 {
                        continue;
                    }
                    for j in 0..self.m {
                        s += ei * self.get(i, j) * e[(j, b)];
                    }
                }
                out.set(a, b, s);
            }
        }
        out
    }

    /// `E W Eᵀ`, the inverse lift of [`SymMatrix::congruence`].
    pub fn lift(w: &SymMatrix, e: &Mat) -> SymMatrix {
        let m = e.rows();
        let mut out = SymMatrix::zeros(m);
        for i in 0..m {
            for j in i..m {
                let mut s = 0.0;
                for a in 0..w.m {
                    for b in 0..w.m {
                        s += e[(i, a)] * w.get(a, b) * e[(j, b)];
                    }
                }
                out.set(i, j, s);
            }
        }
        out
    }

    /// Isometric half-vectorisation: upper triangle row by row, off-diagonal
    /// entries scaled by √2 so that `svec(A)·svec(B) = A · B`.
    pub fn svec(&self) -> Vec<f64> {
        let r2 = core::f64::consts::SQRT_2;
        let mut out = Vec::with_capacity(self.m * (self.m + 1) / 2);
        for i in 0..self.m {
            for j in i..self.m {
                out.push(if i == j { self.get(i, j) } else { r2 * self.get(i, j) });
            }
        }
        out
    }

    pub fn from_svec(m: usize, v: &[f64]) -> SymMatrix {
        let r2 = core::f64::consts::SQRT_2;
        let mut a = SymMatrix::zeros(m);
        let mut k = 0;
        for i in 0..m {
            for j in i..m {
                a.set(i, j, if i == j { v[k] } else { v[k] / r2 });
                k += 1;
            }
        }
        a
    }
}

/// Ascending eigenvalues and matching orthonormal eigenvectors (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl SpectralData {
    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::INFINITY)
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.col(i)
    }

    /// Gap between the two smallest eigenvalues; infinite for 1×1 blocks.
    pub fn min_gap(&self) -> f64 {
        if self.values.len() < 2 {
            f64::INFINITY
        } else {
            self.values[1] - self.values[0]
        }
    }

    /// Columns spanning the eigenspace of the eigenvalues within `width`
    /// of the smallest one.
    pub fn bottom_space(&self, width: f64) -> Mat {
        let lo = self.min_value();
        let r = self.values.iter().filter(|&&v| v - lo <= width).count();
        let m = self.values.len();
        let mut e = Mat::zeros(m, r);
        for k in 0..r {
            for i in 0..m {
                e[(i, k)] = self.vectors[(i, k)];
            }
        }
        e
    }

    pub fn reconstruct(&self, map: impl Fn(f64) -> f64) -> SymMatrix {
        let m = self.values.len();
        let mut out = SymMatrix::zeros(m);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = map(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..m {
                let vi = self.vectors[(i, k)];
                for j in i..m {
                    let cur = out.get(i, j);
                    out.set(i, j, cur + w * vi * self.vectors[(j, k)]);
                }
            }
        }
        out
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition. Eigenvalues ascend; each eigenvector
/// has its first nonzero component positive.
pub fn eig_sym(a: &SymMatrix) -> Result<SpectralData, ConeError> {
    let m = a.dim();
    let mut w = Mat::from_row_major(m, m, a.as_full().to_vec());
    let mut v = Mat::identity(m);
    let scale = a.frobenius();
    let off = |w: &Mat| {
        let mut s = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                s += w[(i, j)] * w[(i, j)];
            }
        }
        sqrt(s)
    };
    let mut converged = m < 2 || scale == 0.0;
    let mut sweep = 0;
    while !converged && sweep < JACOBI_MAX_SWEEPS {
        sweep += 1;
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = w[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (abs(theta) + sqrt(theta * theta + 1.0));
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..m {
                    let (kp, kq) = (w[(k, p)], w[(k, q)]);
                    w[(k, p)] = c * kp - s * kq;
                    w[(k, q)] = s * kp + c * kq;
                }
                for k in 0..m {
                    let (pk, qk) = (w[(p, k)], w[(q, k)]);
                    w[(p, k)] = c * pk - s * qk;
                    w[(q, k)] = s * pk + c * qk;
                }
                w[(p, q)] = 0.0;
                w[(q, p)] = 0.0;
                for k in 0..m {
                    let (kp, kq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * kp - s * kq;
                    v[(k, q)] = s * kp + c * kq;
                }
            }
        }
        converged = off(&w) <= 1e-15 * scale;
    }
    if !converged {
        let mut worst = 0.0_f64;
        for i in 0..m {
            for j in (i + 1)..m {
                worst = worst.max(abs(w[(i, j)]));
            }
        }
        return Err(ConeError::NoConvergence { max_off_diagonal: worst });
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| w[(i, i)].partial_cmp(&w[(j, j)]).unwrap_or(core::cmp::Ordering::Equal));
    let mut values = Vec::with_capacity(m);
    let mut vectors = Mat::zeros(m, m);
    for (k, &src) in order.iter().enumerate() {
        values.push(w[(src, src)]);
        let mut col = v.col(src);
        if let Some(first) = col.iter().find(|c| abs(**c) > 1e-14) {
            if *first < 0.0 {
                col.iter_mut().for_each(|c| *c = -*c);
            }
        }
        for i in 0..m {
            vectors[(i, k)] = col[i];
        }
    }
    Ok(SpectralData { values, vectors })
}

pub fn project_psd(a: &SymMatrix) -> Result<SymMatrix, ConeError> {
    let sd = eig_sym(a)?;
    Ok(sd.reconstruct(|l| l.max(0.0)))
}

pub fn psd_distance(a: &SymMatrix) -> Result<f64, ConeError> {
    let sd = eig_sym(a)?;
    Ok(sqrt(sd.values.iter().map(|l| if *l < 0.0 { l * l } else { 0.0 }).sum()))
}

/// Shape of one conic block: `Soc(m)` is `K_m`, `Psd(m)` is `S^m₊`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    Soc(usize),
    Psd(usize),
}

impl ConeKind {
    pub fn size(&self) -> usize {
        match self {
            ConeKind::Soc(m) | ConeKind::Psd(m) => *m,
        }
    }

    /// Length of the coordinate vector (svec coordinates for PSD).
    pub fn coord_len(&self) -> usize {
        match self {
            ConeKind::Soc(m) => *m,
            ConeKind::Psd(m) => m * (m + 1) / 2,
        }
    }

    /// Euclidean projection of coordinates onto the cone, in place.
    pub fn project_coords(&self, v: &mut [f64]) -> Result<(), ConeError> {
        match self {
            ConeKind::Soc(_) => {
                let p = project_soc(&SocVector::from_slice(v)?);
                v.copy_from_slice(&p.to_vec());
            }
            ConeKind::Psd(m) => {
                let p = project_psd(&SymMatrix::from_svec(*m, v))?;
                v.copy_from_slice(&p.svec());
            }
        }
        Ok(())
    }

    pub fn distance_coords(&self, v: &[f64]) -> Result<f64, ConeError> {
        let mut p = v.to_vec();
        self.project_coords(&mut p)?;
        Ok(crate::math::dist(v, &p))
    }

    /// Weights of the linear functional that is strictly positive on the
    /// cone minus the origin: first component for SOC, trace for PSD.
    pub fn normalization_weights(&self) -> Vec<f64> {
        match self {
            ConeKind::Soc(m) => {
                let mut w = vec![0.0; *m];
                w[0] = 1.0;
                w
            }
            ConeKind::Psd(m) => {
                let mut w = Vec::with_capacity(self.coord_len());
                for i in 0..*m {
                    for j in i..*m {
                        w.push(if i == j { 1.0 } else { 0.0 });
                    }
                }
                w
            }
        }
    }

    /// Depth of `v` inside the cone: `z₀ − ‖z̄‖` or the smallest eigenvalue.
    /// Positive exactly on the interior.
    pub fn margin(&self, v: &[f64]) -> Result<f64, ConeError> {
        match self {
            ConeKind::Soc(_) => Ok(v[0] - norm(&v[1..])),
            ConeKind::Psd(m) => Ok(eig_sym(&SymMatrix::from_svec(*m, v))?.min_value()),
        }
    }

    /// A unit-norm supergradient of [`ConeKind::margin`] at `v`.
    pub fn margin_supergradient(&self, v: &[f64]) -> Result<Vec<f64>, ConeError> {
        match self {
            ConeKind::Soc(m) => {
                let mut g = vec![0.0; *m];
                g[0] = 1.0;
                let bn = norm(&v[1..]);
                if bn > 0.0 {
                    for i in 1..*m {
                        g[i] = -v[i] / bn;
                    }
                }
                Ok(g)
            }
            ConeKind::Psd(m) => {
                let sd = eig_sym(&SymMatrix::from_svec(*m, v))?;
                Ok(SymMatrix::outer(&sd.vector(0)).svec())
            }
        }
    }
}

impl fmt::Display for ConeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeKind::Soc(m) => write!(f, "soc {m}"),
            ConeKind::Psd(m) => write!(f, "psd {m}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soc(v: &[f64]) -> SocVector {
        SocVector::from_slice(v).unwrap()
    }

    #[test]
    fn jordan_identity_and_hand_cases() {
        let s = soc(&[0.3, -1.2, 2.0]);
        assert_eq!(jordan_product(&SocVector::identity(3), &s).unwrap(), s);
        assert_eq!(jordan_product(&soc(&[1.0, 1.0]), &soc(&[1.0, -1.0])).unwrap(), soc(&[0.0, 0.0]));
        assert_eq!(jordan_product(&soc(&[2.0, 1.0, 0.0]), &soc(&[1.0, 0.0, 1.0])).unwrap(), soc(&[2.0, 1.0, 2.0]));
        assert!(jordan_product(&soc(&[1.0]), &soc(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn classify_cases() {
        assert_eq!(classify_soc(&soc(&[1.0, 1.0]), 1e-8), SocPosition::BoundaryNonzero);
        assert_eq!(classify_soc(&soc(&[0.0, 0.0]), 1e-8), SocPosition::Vertex);
        assert_eq!(classify_soc(&soc(&[2.0, 1.0]), 1e-8), SocPosition::Interior);
        assert_eq!(classify_soc(&soc(&[1.0, 2.0]), 1e-8), SocPosition::Infeasible);
        assert_eq!(classify_soc(&soc(&[0.5]), 1e-8), SocPosition::Interior);
        assert_eq!(classify_soc(&soc(&[1e-9]), 1e-8), SocPosition::Vertex);
        assert_eq!(classify_soc(&soc(&[-0.1]), 1e-8), SocPosition::Infeasible);
        // vertex wins over boundary near the origin
        assert_eq!(classify_soc(&soc(&[5e-9, 5e-9]), 1e-8), SocPosition::Vertex);
    }

    #[test]
    fn soc_projection_cases() {
        assert_eq!(project_soc(&soc(&[-3.0, 0.0])), soc(&[0.0, 0.0]));
        let p = project_soc(&soc(&[0.0, 2.0]));
        assert!((p.z0 - 1.0).abs() < 1e-15 && (p.zbar[0] - 1.0).abs() < 1e-15);
        // Moreau: z = Π(z) − Π(−z) with orthogonal parts
        let z = soc(&[0.0, 2.0]);
        let q = project_soc(&SocVector::new(-z.z0, z.zbar.iter().map(|v| -v).collect()));
        assert!((p.z0 - q.z0 - z.z0).abs() < 1e-15);
        assert!((p.zbar[0] - q.zbar[0] - z.zbar[0]).abs() < 1e-15);
        assert!(p.inner(&q).abs() < 1e-15);
    }

    #[test]
    fn psd_projection_clips() {
        let p = project_psd(&SymMatrix::diag(&[2.0, -1.0])).unwrap();
        assert_eq!(p, SymMatrix::diag(&[2.0, 0.0]));
    }

    #[test]
    fn eig_of_rank_one_block() {
        let a = SymMatrix::from_full(2, &[0.5, -0.5, -0.5, 0.5]).unwrap();
        let sd = eig_sym(&a).unwrap();
        let r = core::f64::consts::FRAC_1_SQRT_2;
        assert!(sd.values[0].abs() < 1e-15 && (sd.values[1] - 1.0).abs() < 1e-15);
        assert!((sd.vector(0)[0] - r).abs() < 1e-15 && (sd.vector(0)[1] - r).abs() < 1e-15);
        assert!((sd.vector(1)[0] - r).abs() < 1e-15 && (sd.vector(1)[1] + r).abs() < 1e-15);
    }

    #[test]
    fn eig_identity() {
        let sd = eig_sym(&SymMatrix::identity(3)).unwrap();
        assert_eq!(sd.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn rejects_asymmetric() {
        assert!(matches!(SymMatrix::from_full(2, &[1.0, 2.0, 2.1, 1.0]), Err(ConeError::NotSymmetric { .. })));
    }

    #[test]
    fn svec_is_isometric() {
        let a = SymMatrix::from_upper(3, &[1.0, 2.0, -1.0, 0.5, 3.0, 4.0]).unwrap();
        let b = SymMatrix::from_upper(3, &[0.1, -2.0, 1.0, 1.5, 0.0, 2.0]).unwrap();
        assert!((dot(&a.svec(), &b.svec()) - a.dot(&b)).abs() < 1e-13);
        assert_eq!(SymMatrix::from_svec(3, &a.svec()), a);
    }

    #[test]
    fn congruence_and_lift_are_adjoint() {
        let a = SymMatrix::from_upper(2, &[1.0, 2.0, 3.0]).unwrap();
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let e = Mat::from_row_major(2, 1, vec![r, r]);
        let w = SymMatrix::diag(&[2.0]);
        let lhs = a.congruence(&e).dot(&w);
        let rhs = a.dot(&SymMatrix::lift(&w, &e));
        assert!((lhs - rhs).abs() < 1e-14);
    }
}
