//! Scalar reductions of active blocks: `φ_j = ½(g₀² − ‖ḡ‖²)` on the SOC
//! boundary, `g_j` itself for active scalar blocks, and `σ_min ∘ g_j` for PSD
//! blocks whose zero eigenvalue is simple.
//!
//! Only the quadratic SOC reduction is provided; the alternative
//! `g₀ − ‖ḡ‖` is not differentiable at `ḡ = 0` and would yield a different
//! constant-rank condition.

use alloc::vec::Vec;
use core::fmt;

use crate::classify::{cluster_width, BlockStatus, IndexClassification};
use crate::cone::{SocVector, SymMatrix};
use crate::problem::{BlockValue, ConeValue, EvaluatedPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionRule {
    SocBoundary,
    ScalarActive,
    SigmaMin,
}

impl fmt::Display for ReductionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReductionRule::SocBoundary => "soc-boundary",
            ReductionRule::ScalarActive => "scalar-active",
            ReductionRule::SigmaMin => "sigma-min",
        })
    }
}

impl ReductionRule {
    pub fn for_status(s: &BlockStatus) -> Option<ReductionRule> {
        match s {
            BlockStatus::SocBoundary => Some(ReductionRule::SocBoundary),
            BlockStatus::SocScalarActive => Some(ReductionRule::ScalarActive),
            BlockStatus::PsdReducible { .. } => Some(ReductionRule::SigmaMin),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReductionError {
    #[error("block {block} has the wrong kind for {rule}")]
    WrongKind { block: usize, rule: ReductionRule },
    #[error("smallest eigenvalue of block {block} is not simple (gap {gap:e})")]
    NonSimpleEigenvalue { block: usize, gap: f64 },
    #[error("classification and reduction disagree on block {block}: {detail}")]
    Inconsistent { block: usize, detail: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedEntry {
    pub block: usize,
    pub rule: ReductionRule,
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Eigenvalue gap backing a `SigmaMin` entry.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReducedGradients {
    pub entries: Vec<ReducedEntry>,
}

impl ReducedGradients {
    pub fn gradient_of(&self, block: usize) -> Option<&[f64]> {
        self.entries.iter().find(|e| e.block == block).map(|e| e.gradient.as_slice())
    }
}

/// `φ_j(x)` and `∇φ_j(x) = J_gᵀ R_m g(x)` for an SOC block with `m > 1`.
pub fn phi_soc(pt: &EvaluatedPoint, j: usize) -> Result<(f64, Vec<f64>), ReductionError> {
    match &pt.blocks[j] {
        BlockValue::Soc { value, jacobian } if value.dim() > 1 => {
            let phi = 0.5 * (value.z0 * value.z0 - value.zbar.iter().map(|v| v * v).sum::<f64>());
            let grad = jacobian.tr_mul_vec(&value.reflect().to_vec());
            Ok((phi, grad))
        }
        _ => Err(ReductionError::WrongKind { block: j, rule: ReductionRule::SocBoundary }),
    }
}

/// `g_j(x)` and its gradient for a one-dimensional SOC block.
pub fn scalar_block(pt: &EvaluatedPoint, j: usize) -> Result<(f64, Vec<f64>), ReductionError> {
    match &pt.blocks[j] {
        BlockValue::Soc { value, jacobian } if value.dim() == 1 => Ok((value.z0, jacobian.row(0).to_vec())),
        _ => Err(ReductionError::WrongKind { block: j, rule: ReductionRule::ScalarActive }),
    }
}

/// `σ_min(g_j(x))` and `∇σ_min = (∂_i g_j · ν_min ν_minᵀ)_i`, computed from
/// the eigenpair at this point. Fails if the smallest eigenvalue is not
/// simple with respect to `tol_gap`.
pub fn sigma_min_grad(pt: &EvaluatedPoint, j: usize, tol_gap: f64) -> Result<(f64, Vec<f64>), ReductionError> {
    let (value, grad, gap) = sigma_min_grad_unchecked(pt, j)?;
    let norm = match &pt.blocks[j] {
        BlockValue::Psd { value, .. } => value.frobenius(),
        _ => unreachable!(),
    };
    if gap <= cluster_width(tol_gap, norm) {
        return Err(ReductionError::NonSimpleEigenvalue { block: j, gap });
    }
    Ok((value, grad))
}

/// As [`sigma_min_grad`] but never rejects; also returns the gap so callers
/// can flag near-multiple eigenvalues.
pub fn sigma_min_grad_unchecked(pt: &EvaluatedPoint, j: usize) -> Result<(f64, Vec<f64>, f64), ReductionError> {
    match &pt.blocks[j] {
        BlockValue::Psd { partials, spectral, .. } => {
            let nu = spectral.vector(0);
            let proj = SymMatrix::outer(&nu);
            let grad = partials.iter().map(|p| p.dot(&proj)).collect();
            Ok((spectral.min_value(), grad, spectral.min_gap()))
        }
        _ => Err(ReductionError::WrongKind { block: j, rule: ReductionRule::SigmaMin }),
    }
}

/// The reduced gradient of block `j` under `rule`, evaluated at `pt`
/// (which may differ from the point the rule was chosen at). Returns the
/// eigenvalue gap for `SigmaMin`.
pub fn reduced_gradient(pt: &EvaluatedPoint, j: usize, rule: ReductionRule) -> Result<(f64, Vec<f64>, Option<f64>), ReductionError> {
    match rule {
        ReductionRule::SocBoundary => phi_soc(pt, j).map(|(v, g)| (v, g, None)),
        ReductionRule::ScalarActive => scalar_block(pt, j).map(|(v, g)| (v, g, None)),
        ReductionRule::SigmaMin => sigma_min_grad_unchecked(pt, j).map(|(v, g, gap)| (v, g, Some(gap))),
    }
}

/// Reduced gradients for `I_B ∪ A ∪ I_R`; interior, inactive and
/// irreducible blocks are left out.
pub fn reduced_view(pt: &EvaluatedPoint, cls: &IndexClassification) -> Result<ReducedGradients, ReductionError> {
    let mut entries = Vec::new();
    for (j, s) in cls.status.iter().enumerate() {
        let Some(rule) = ReductionRule::for_status(s) else { continue };
        let (value, gradient, gap) = match rule {
            ReductionRule::SigmaMin => {
                let (v, g) = sigma_min_grad(pt, j, cls.tol_gap).map_err(|e| match e {
                    ReductionError::NonSimpleEigenvalue { block, .. } => {
                        ReductionError::Inconsistent { block, detail: "classified reducible but eigenvalue not simple" }
                    }
                    other => other,
                })?;
                let gap = match s {
                    BlockStatus::PsdReducible { gap } => Some(*gap),
                    _ => None,
                };
                (v, g, gap)
            }
            _ => reduced_gradient(pt, j, rule)?,
        };
        entries.push(ReducedEntry { block: j, rule, value, gradient, gap });
    }
    Ok(ReducedGradients { entries })
}

/// Cone element of block `j` carrying a reduced coefficient `α ≥ 0`:
/// `α R g` on the SOC boundary, `α` for scalar blocks, `α ν_min ν_minᵀ`
/// for PSD blocks.
pub fn lift_ray(pt: &EvaluatedPoint, j: usize, alpha: f64) -> ConeValue {
    match &pt.blocks[j] {
        BlockValue::Soc { value, .. } if value.dim() == 1 => ConeValue::Soc(SocVector::new(alpha, Vec::new())),
        BlockValue::Soc { value, .. } => {
            let r = value.reflect();
            ConeValue::Soc(SocVector::new(alpha * r.z0, r.zbar.iter().map(|v| alpha * v).collect()))
        }
        BlockValue::Psd { spectral, .. } => ConeValue::Psd(SymMatrix::outer(&spectral.vector(0)).scale(alpha)),
    }
}

/// Inverse of [`lift_ray`] in the least-squares sense, clamped at zero:
/// `⟨μ, Rg⟩/‖Rg‖²`, `μ` itself, or `ν_minᵀ μ ν_min`.
pub fn ray_coefficient(pt: &EvaluatedPoint, j: usize, mu: &ConeValue) -> f64 {
    let a = match (&pt.blocks[j], mu) {
        (BlockValue::Soc { value, .. }, ConeValue::Soc(m)) if value.dim() == 1 => m.z0,
        (BlockValue::Soc { value, .. }, ConeValue::Soc(m)) => {
            let r = value.reflect();
            let nn = r.inner(&r);
            if nn > 0.0 {
                r.inner(m) / nn
            } else {
                0.0
            }
        }
        (BlockValue::Psd { spectral, .. }, ConeValue::Psd(m)) => m.dot(&SymMatrix::outer(&spectral.vector(0))),
        _ => 0.0,
    };
    a.max(0.0)
}
