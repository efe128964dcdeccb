//! Index sets of a feasible point: where each SOC block sits relative to its
//! cone and whether each active PSD block has a simple zero eigenvalue.

use alloc::vec::Vec;
use core::fmt;

use crate::cone::{classify_soc, SocPosition};
use crate::problem::{BlockValue, EvaluatedPoint};

pub const DEFAULT_TOL_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockStatus {
    /// `I_int`
    SocInterior,
    /// `I_B`
    SocBoundary,
    /// `A`: a vertex block of dimension one, i.e. an active scalar inequality.
    SocScalarActive,
    /// `Ĩ₀`
    SocVertex,
    PsdInactive,
    /// `I_R`; `gap` is the distance between the two smallest eigenvalues.
    PsdReducible { gap: f64 },
    /// `I_N`; `kernel_dim` counts the eigenvalues clustered at the bottom.
    PsdIrreducible { gap: f64, kernel_dim: usize },
}

impl BlockStatus {
    /// Blocks that are replaced by a scalar constraint in the reduced view.
    pub fn is_reduced(&self) -> bool {
        matches!(self, BlockStatus::SocBoundary | BlockStatus::SocScalarActive | BlockStatus::PsdReducible { .. })
    }

    /// Active blocks that stay conic.
    pub fn is_irreducible(&self) -> bool {
        matches!(self, BlockStatus::SocVertex | BlockStatus::PsdIrreducible { .. })
    }

    pub fn is_active(&self) -> bool {
        !matches!(self, BlockStatus::SocInterior | BlockStatus::PsdInactive)
    }

    pub fn label(&self) -> &'static str {
        match self {
            BlockStatus::SocInterior => "soc-interior",
            BlockStatus::SocBoundary => "soc-boundary",
            BlockStatus::SocScalarActive => "soc-scalar-active",
            BlockStatus::SocVertex => "soc-vertex",
            BlockStatus::PsdInactive => "psd-inactive",
            BlockStatus::PsdReducible { .. } => "psd-reducible",
            BlockStatus::PsdIrreducible { .. } => "psd-irreducible",
        }
    }
}

impl fmt::Display for BlockStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexClassification {
    pub status: Vec<BlockStatus>,
    pub tol_act: f64,
    pub tol_gap: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("point is infeasible: residual {residual:e} exceeds tolerance {tol_act:e}")]
    InfeasiblePoint { residual: f64, tol_act: f64, block_distances: Vec<f64>, equality_residual: f64 },
}

impl IndexClassification {
    fn select(&self, pred: impl Fn(&BlockStatus) -> bool) -> Vec<usize> {
        self.status.iter().enumerate().filter(|(_, s)| pred(s)).map(|(j, _)| j).collect()
    }

    pub fn soc_interior(&self) -> Vec<usize> {
        self.select(|s| matches!(s, BlockStatus::SocInterior))
    }

    pub fn soc_boundary(&self) -> Vec<usize> {
        self.select(|s| matches!(s, BlockStatus::SocBoundary))
    }

    /// `I₀ = A ∪ Ĩ₀`
    pub fn soc_vertex(&self) -> Vec<usize> {
        self.select(|s| matches!(s, BlockStatus::SocVertex | BlockStatus::SocScalarActive))
    }

    pub fn soc_scalar_active(&self) -> Vec<usize> {
        self.select(|s| matches!(s, BlockStatus::SocScalarActive))
    }

    pub fn soc_vertex_multi(&self) -> Vec<usize> {
        self.select(|s| matches!(s, BlockStatus::SocVertex))
    }

    pub fn psd_inactive(&self) -> Vec<usize> {
        self.select(|s| matches!(s, BlockStatus::PsdInactive))
    }

    pub fn psd_reducible(&self) -> Vec<usize> {
        self.select(|s| matches!(s, BlockStatus::PsdReducible { .. }))
    }

    pub fn psd_irreducible(&self) -> Vec<usize> {
        self.select(|s| matches!(s, BlockStatus::PsdIrreducible { .. }))
    }

    /// `I_B ∪ A ∪ I_R` in block order.
    pub fn reduced(&self) -> Vec<usize> {
        self.select(BlockStatus::is_reduced)
    }

    /// `Ĩ₀ ∪ I_N` in block order.
    pub fn irreducible(&self) -> Vec<usize> {
        self.select(BlockStatus::is_irreducible)
    }

    pub fn active(&self) -> Vec<usize> {
        self.select(BlockStatus::is_active)
    }
}

/// Width of the eigenvalue cluster treated as the zero eigenspace.
pub fn cluster_width(tol_gap: f64, block_norm: f64) -> f64 {
    tol_gap * block_norm.max(1.0)
}

pub fn classify(pt: &EvaluatedPoint, tol_act: f64, tol_gap: f64) -> Result<IndexClassification, ClassifyError> {
    let infeasible = || ClassifyError::InfeasiblePoint {
        residual: pt.residual,
        tol_act,
        block_distances: pt.block_distances.clone(),
        equality_residual: crate::math::norm_inf(&pt.h),
    };
    if !(pt.residual <= tol_act) {
        return Err(infeasible());
    }
    let mut status = Vec::with_capacity(pt.blocks.len());
    for b in &pt.blocks {
        let s = match b {
            BlockValue::Soc { value, .. } => match classify_soc(value, tol_act) {
                SocPosition::Interior => BlockStatus::SocInterior,
                SocPosition::BoundaryNonzero => BlockStatus::SocBoundary,
                SocPosition::Vertex if value.dim() == 1 => BlockStatus::SocScalarActive,
                SocPosition::Vertex => BlockStatus::SocVertex,
                SocPosition::Infeasible => return Err(infeasible()),
            },
            BlockValue::Psd { value, spectral, .. } => {
                if spectral.min_value() > tol_act {
                    BlockStatus::PsdInactive
                } else {
                    let gap = spectral.min_gap();
                    let width = cluster_width(tol_gap, value.frobenius());
                    if gap > width {
                        BlockStatus::PsdReducible { gap }
                    } else {
                        let lo = spectral.min_value();
                        let kernel_dim = spectral.values.iter().filter(|&&v| v - lo <= width).count();
                        BlockStatus::PsdIrreducible { gap, kernel_dim }
                    }
                }
            }
        };
        status.push(s);
    }
    Ok(IndexClassification { status, tol_act, tol_gap })
}
