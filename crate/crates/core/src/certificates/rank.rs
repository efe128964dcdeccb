use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{rank_threshold, svd, Mat};
use crate::math::{axpy, dot, norm};

pub const DEFAULT_TOL_RANK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankInfo {
    pub rank: usize,
    /// Indices of a maximal independent subfamily, ascending.
    pub basis: Vec<usize>,
}

fn dimension(vectors: &[Vec<f64>]) -> usize {
    vectors.first().map_or(0, Vec::len)
}

fn singular_values(vectors: &[Vec<f64>]) -> Vec<f64> {
    let n = dimension(vectors);
    if vectors.is_empty() || n == 0 {
        return Vec::new();
    }
    svd(&Mat::from_cols(vectors, n)).s
}

pub fn rank(vectors: &[Vec<f64>], tol_rank: f64) -> usize {
    let s = singular_values(vectors);
    let thr = rank_threshold(&s, tol_rank);
    s.iter().filter(|&&x| x > thr).count()
}

pub fn is_independent(vectors: &[Vec<f64>], tol_rank: f64) -> bool {
    rank(vectors, tol_rank) == vectors.len()
}

/// Singular-value rank plus a basis picked by column-pivoted Gram–Schmidt
/// (largest remaining residual first, lowest index on ties).
pub fn numerical_rank(vectors: &[Vec<f64>], tol_rank: f64) -> RankInfo {
    let r = rank(vectors, tol_rank);
    let mut residuals: Vec<Vec<f64>> = vectors.to_vec();
    let mut picked = Vec::with_capacity(r);
    let mut used = vec![false; vectors.len()];
    for _ in 0..r {
        let mut best = None;
        let mut best_norm = -1.0;
        for (i, v) in residuals.iter().enumerate() {
            if used[i] {
                continue;
            }
            let nv = norm(v);
            if nv > best_norm {
                best_norm = nv;
                best = Some(i);
            }
        }
        let Some(i) = best else { break };
        if best_norm == 0.0 {
            break;
        }
        used[i] = true;
        picked.push(i);
        let q: Vec<f64> = residuals[i].iter().map(|v| v / best_norm).collect();
        for (k, v) in residuals.iter_mut().enumerate() {
            if !used[k] {
                let c = dot(&q, v);
                axpy(-c, &q, v);
            }
        }
    }
    picked.sort_unstable();
    RankInfo { rank: r, basis: picked }
}

/// Greedy in-order selection: index `i` is kept when it raises the rank of
/// the vectors kept so far. Earlier indices take priority.
pub fn greedy_basis(vectors: &[Vec<f64>], tol_rank: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    let mut family: Vec<Vec<f64>> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        family.push(v.clone());
        if is_independent(&family, tol_rank) {
            kept.push(i);
        } else {
            family.pop();
        }
    }
    kept
}
