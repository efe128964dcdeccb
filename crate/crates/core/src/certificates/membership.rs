use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{complement_projector, lstsq, Mat};
use crate::math::{axpy, dist, dot, norm};

#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    Member { free: Vec<f64>, coned: Vec<f64>, residual: f64 },
    NotMember { residual: f64 },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member { .. })
    }

    pub fn residual(&self) -> f64 {
        match self {
            Membership::Member { residual, .. } | Membership::NotMember { residual } => *residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MembershipError {
    #[error("active-set iteration budget exhausted (best residual {best_residual:e})")]
    BudgetExhausted { best_residual: f64 },
}

/// Lawson–Hanson active-set solution of `min ‖A x − b‖, x ≥ 0`, with `A`
/// given by columns.
pub fn nnls(cols: &[Vec<f64>], b: &[f64], max_iter: usize) -> Result<Vec<f64>, MembershipError> {
    let q = cols.len();
    let m = b.len();
    let mut x = vec![0.0; q];
    if q == 0 {
        return Ok(x);
    }
    let scale = cols.iter().map(|c| norm(c)).fold(0.0, f64::max) * norm(b).max(1.0);
    let tol_w = 1e-13 * scale.max(1.0);
    let mut passive = vec![false; q];
    let residual_of = |x: &[f64]| {
        let mut r = b.to_vec();
        for (c, xi) in cols.iter().zip(x) {
            axpy(-*xi, c, &mut r);
        }
        r
    };
    let solve_passive = |passive: &[bool]| {
        let idx: Vec<usize> = (0..q).filter(|&i| passive[i]).collect();
        let sub: Vec<Vec<f64>> = idx.iter().map(|&i| cols[i].clone()).collect();
        let sol = lstsq(&Mat::from_cols(&sub, m), b, 1e-14);
        let mut s = vec![0.0; q];
        for (k, &i) in idx.iter().enumerate() {
            s[i] = sol[k];
        }
        s
    };
    let mut iter = 0;
    loop {
        let r = residual_of(&x);
        let w: Vec<f64> = cols.iter().map(|c| dot(c, &r)).collect();
        let pick = (0..q).filter(|&i| !passive[i] && w[i] > tol_w).max_by(|&a, &b| {
            w[a].partial_cmp(&w[b]).unwrap_or(core::cmp::Ordering::Equal).then(b.cmp(&a))
        });
        let Some(t) = pick else { return Ok(x) };
        passive[t] = true;
        loop {
            iter += 1;
            if iter > max_iter {
                return Err(MembershipError::BudgetExhausted { best_residual: norm(&residual_of(&x)) });
            }
            let s = solve_passive(&passive);
            if (0..q).filter(|&i| passive[i]).all(|i| s[i] > 0.0) {
                x = s;
                break;
            }
            let mut alpha = 1.0f64;
            for i in 0..q {
                if passive[i] && s[i] <= 0.0 {
                    let denom = x[i] - s[i];
                    if denom > 0.0 {
                        alpha = alpha.min(x[i] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            for i in 0..q {
                x[i] += alpha * (s[i] - x[i]);
                if passive[i] && x[i] <= 1e-15 * (1.0 + s[i].abs()) {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
}

/// Decides whether `target ∈ span(free) + cone(coned)` up to
/// `tol·max(1, ‖target‖)`.
pub fn cone_membership(target: &[f64], free: &[Vec<f64>], coned: &[Vec<f64>], tol: f64) -> Result<Membership, MembershipError> {
    let n = target.len();
    let p = complement_projector(free, n, 1e-12);
    let pt = p.mul_vec(target);
    let pc: Vec<Vec<f64>> = coned.iter().map(|c| p.mul_vec(c)).collect();
    let alpha = nnls(&pc, &pt, 50 * (coned.len() + 1))?;
    let mut rest = target.to_vec();
    for (c, a) in coned.iter().zip(&alpha) {
        axpy(-*a, c, &mut rest);
    }
    let lambda = if free.is_empty() { Vec::new() } else { lstsq(&Mat::from_cols(free, n), &rest, 1e-12) };
    let mut fit = vec![0.0; n];
    for (f, l) in free.iter().zip(&lambda) {
        axpy(*l, f, &mut fit);
    }
    for (c, a) in coned.iter().zip(&alpha) {
        axpy(*a, c, &mut fit);
    }
    let residual = dist(&fit, target);
    if residual <= tol * norm(target).max(1.0) {
        Ok(Membership::Member { free: lambda, coned: alpha, residual })
    } else {
        Ok(Membership::NotMember { residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_orthant() {
        let m = cone_membership(&[1.0, 1.0], &[], &[vec![1.0, 0.0], vec![0.0, 1.0]], 1e-9).unwrap();
        match m {
            Membership::Member { coned, .. } => {
                assert!((coned[0] - 1.0).abs() < 1e-14 && (coned[1] - 1.0).abs() < 1e-14)
            }
            _ => panic!(),
        }
    }

    #[test]
    fn opposite_ray_is_not_member() {
        let m = cone_membership(&[-1.0, 0.0], &[], &[vec![1.0, 0.0]], 1e-9).unwrap();
        assert_eq!(m, Membership::NotMember { residual: 1.0 });
    }

    #[test]
    fn zero_target() {
        let m = cone_membership(&[0.0, 0.0], &[vec![1.0, 1.0]], &[vec![1.0, 0.0]], 1e-9).unwrap();
        assert!(matches!(m, Membership::Member { ref coned, .. } if coned == &vec![0.0]));
    }

    #[test]
    fn free_directions_absorb_sign() {
        let m = cone_membership(&[-1.0, 2.0], &[vec![1.0, 0.0]], &[vec![0.0, 1.0]], 1e-9).unwrap();
        assert!(m.is_member());
    }
}
