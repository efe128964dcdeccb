use alloc::vec;
use alloc::vec::Vec;

use super::rank::is_independent;
use crate::linalg::{lstsq, svd, Mat};
use crate::math::{axpy, norm};

/// Relative tolerance on the reconstruction of the target.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CaratheodoryResult {
    /// Positions in the `coned` input that survive, ascending.
    pub kept: Vec<usize>,
    /// New coefficients of the fixed vectors.
    pub fixed_coeffs: Vec<f64>,
    /// New coefficients of the kept coned vectors, all strictly positive.
    pub coeffs: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CaratheodoryError {
    #[error("fixed vectors are linearly dependent")]
    FixedDependent,
    #[error("coefficient {index} is negative ({value:e})")]
    NegativeCoefficient { index: usize, value: f64 },
    #[error("reconstruction residual {residual:e} exceeds {bound:e}")]
    Reconstruction { residual: f64, bound: f64 },
}

fn combination(fixed: &[Vec<f64>], fc: &[f64], coned: &[(Vec<f64>, f64)], kept: &[usize], cc: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (v, c) in fixed.iter().zip(fc) {
        axpy(*c, v, &mut out);
    }
    for (&k, c) in kept.iter().zip(cc) {
        axpy(*c, &coned[k].0, &mut out);
    }
    out
}

fn refit(fixed: &[Vec<f64>], coned: &[(Vec<f64>, f64)], kept: &[usize], target: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = target.len();
    let mut cols: Vec<Vec<f64>> = fixed.to_vec();
    cols.extend(kept.iter().map(|&k| coned[k].0.clone()));
    if cols.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let sol = lstsq(&Mat::from_cols(&cols, n), target, 1e-14);
    let (a, b) = sol.split_at(fixed.len());
    (a.to_vec(), b.to_vec())
}

/// Rewrites `target = Σ fixed·c + Σ coned·β` (β ≥ 0) over a linearly
/// independent subfamily, keeping every fixed vector and only coned vectors
/// whose new coefficient is strictly positive.
pub fn caratheodory_reduce(
    fixed: &[Vec<f64>],
    coned: &[(Vec<f64>, f64)],
    target: &[f64],
    tol_rank: f64,
) -> Result<CaratheodoryResult, CaratheodoryError> {
    let n = target.len();
    if !fixed.is_empty() && !is_independent(fixed, tol_rank) {
        return Err(CaratheodoryError::FixedDependent);
    }
    for (i, (_, b)) in coned.iter().enumerate() {
        if *b < 0.0 {
            return Err(CaratheodoryError::NegativeCoefficient { index: i, value: *b });
        }
    }
    let scale = 1f64.max(norm(target)).max(coned.iter().map(|(v, b)| b * norm(v)).sum::<f64>());
    let bound = RECONSTRUCTION_TOL * scale;

    let mut kept: Vec<usize> = (0..coned.len()).filter(|&k| coned[k].1 > 0.0 && norm(&coned[k].0) > 0.0).collect();
    let mut beta: Vec<f64> = kept.iter().map(|&k| coned[k].1).collect();
    // fixed coefficients are implied by the target
    let mut rest = target.to_vec();
    for (&k, b) in kept.iter().zip(&beta) {
        axpy(-*b, &coned[k].0, &mut rest);
    }
    let mut fc = if fixed.is_empty() { Vec::new() } else { lstsq(&Mat::from_cols(fixed, n), &rest, 1e-14) };

    loop {
        let mut cols: Vec<Vec<f64>> = fixed.to_vec();
        cols.extend(kept.iter().map(|&k| coned[k].0.clone()));
        if cols.is_empty() || is_independent(&cols, tol_rank) {
            break;
        }
        let dec = svd(&Mat::from_cols(&cols, n));
        let z = dec.v.col(dec.v.cols() - 1);
        let (zf, zc) = z.split_at(fixed.len());
        let sign = if zc.iter().any(|&v| v > 0.0) { 1.0 } else { -1.0 };
        let mut step = f64::INFINITY;
        let mut hit = None;
        for (i, &v) in zc.iter().enumerate() {
            let v = sign * v;
            if v > 0.0 {
                let t = beta[i] / v;
                if t < step {
                    step = t;
                    hit = Some(i);
                }
            }
        }
        let Some(hit) = hit else { return Err(CaratheodoryError::FixedDependent) };
        for (b, v) in beta.iter_mut().zip(zc) {
            *b -= step * sign * v;
        }
        for (c, v) in fc.iter_mut().zip(zf) {
            *c -= step * sign * v;
        }
        beta[hit] = 0.0;
        let mut i = 0;
        while i < kept.len() {
            if beta[i] <= 0.0 {
                kept.remove(i);
                beta.remove(i);
            } else {
                i += 1;
            }
        }
    }

    let stepped = combination(fixed, &fc, coned, &kept, &beta, n);
    let stepped_res = crate::math::dist(&stepped, target);
    let (rf, rc) = refit(fixed, coned, &kept, target);
    let refit_res = crate::math::dist(&combination(fixed, &rf, coned, &kept, &rc, n), target);
    let (fc, beta, residual) = if rc.iter().all(|&b| b > 0.0) && refit_res <= stepped_res {
        (rf, rc, refit_res)
    } else {
        (fc, beta, stepped_res)
    };
    if !(residual <= bound) {
        return Err(CaratheodoryError::Reconstruction { residual, bound });
    }
    Ok(CaratheodoryResult { kept, fixed_coeffs: fc, coeffs: beta, residual })
}
