//! Multifold conic programs and their evaluation at a point.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::cone::{eig_sym, project_soc, psd_distance, soc_distance, ConeError, ConeKind, SocVector, SpectralData, SymMatrix};
use crate::expr::{eval, eval_grad, EvalError, Expr};
use crate::linalg::Mat;
use crate::math::norm_inf;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("block `{block}` ({kind}) needs {expected} entries, got {got}")]
    EntryCount { block: String, kind: ConeKind, expected: usize, got: usize },
    #[error("{context} references x{index} but the program has {n} variables")]
    VariableOutOfRange { context: String, index: usize, n: usize },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("cone dimension must be positive in block `{0}`")]
    EmptyBlock(String),
    #[error("point has {got} coordinates, program has {n} variables")]
    PointDimension { got: usize, n: usize },
    #[error("evaluating {context}: {source}")]
    Eval { context: String, source: EvalError },
    #[error("block `{block}`: {source}")]
    Cone { block: String, source: ConeError },
    #[error("block-diagonal embedding needs PSD blocks only; `{0}` is a second-order cone")]
    NotPsd(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equality {
    pub name: String,
    pub expr: Expr,
}

/// One conic constraint `g_j(x) ∈ K`. SOC blocks list the `m` components;
/// PSD blocks list the upper triangle row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicBlock {
    pub name: String,
    pub kind: ConeKind,
    pub entries: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    n: usize,
    objective: Expr,
    equalities: Vec<Equality>,
    blocks: Vec<ConicBlock>,
}

impl ConicProgram {
    pub fn new(n: usize, objective: Expr, equalities: Vec<Equality>, blocks: Vec<ConicBlock>) -> Result<Self, ProblemError> {
        let check = |context: String, e: &Expr| {
            let bound = e.var_bound();
            if bound > n {
                Err(ProblemError::VariableOutOfRange { context, index: bound, n })
            } else {
                Ok(())
            }
        };
        check("objective".to_owned(), &objective)?;
        let mut names: Vec<&str> = Vec::new();
        for eq in &equalities {
            check(format!("equality `{}`", eq.name), &eq.expr)?;
            if names.contains(&eq.name.as_str()) {
                return Err(ProblemError::DuplicateName(eq.name.clone()));
            }
            names.push(&eq.name);
        }
        for b in &blocks {
            if b.kind.size() == 0 {
                return Err(ProblemError::EmptyBlock(b.name.clone()));
            }
            if names.contains(&b.name.as_str()) {
                return Err(ProblemError::DuplicateName(b.name.clone()));
            }
            names.push(&b.name);
            let expected = match b.kind {
                ConeKind::Soc(m) => m,
                ConeKind::Psd(m) => m * (m + 1) / 2,
            };
            if b.entries.len() != expected {
                return Err(ProblemError::EntryCount { block: b.name.clone(), kind: b.kind, expected, got: b.entries.len() });
            }
            for (k, e) in b.entries.iter().enumerate() {
                check(format!("block `{}` entry {}", b.name, k + 1), e)?;
            }
        }
        Ok(ConicProgram { n, objective, equalities, blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn objective(&self) -> &Expr {
        &self.objective
    }

    pub fn equalities(&self) -> &[Equality] {
        &self.equalities
    }

    pub fn blocks(&self) -> &[ConicBlock] {
        &self.blocks
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    /// Same constraints, different objective.
    pub fn with_objective(&self, objective: Expr) -> Result<Self, ProblemError> {
        ConicProgram::new(self.n, objective, self.equalities.clone(), self.blocks.clone())
    }
}

/// A block's value and first derivatives at a point.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockValue {
    Soc {
        value: SocVector,
        /// `m × n`, row `i` is `∇g_{j,i}ᵀ`.
        jacobian: Mat,
    },
    Psd {
        value: SymMatrix,
        /// `∂_i g_j` for `i = 1..n`.
        partials: Vec<SymMatrix>,
        spectral: SpectralData,
    },
}

/// A multiplier (or any element) of one block's cone.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeValue {
    Soc(SocVector),
    Psd(SymMatrix),
}

impl ConeValue {
    pub fn zero(kind: ConeKind) -> ConeValue {
        match kind {
            ConeKind::Soc(m) => ConeValue::Soc(SocVector::zeros(m)),
            ConeKind::Psd(m) => ConeValue::Psd(SymMatrix::zeros(m)),
        }
    }

    pub fn kind(&self) -> ConeKind {
        match self {
            ConeValue::Soc(v) => ConeKind::Soc(v.dim()),
            ConeValue::Psd(a) => ConeKind::Psd(a.dim()),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            ConeValue::Soc(v) => v.norm(),
            ConeValue::Psd(a) => a.frobenius(),
        }
    }

    pub fn inner(&self, other: &ConeValue) -> f64 {
        match (self, other) {
            (ConeValue::Soc(a), ConeValue::Soc(b)) => a.inner(b),
            (ConeValue::Psd(a), ConeValue::Psd(b)) => a.dot(b),
            _ => f64::NAN,
        }
    }

    pub fn cone_distance(&self) -> Result<f64, ConeError> {
        match self {
            ConeValue::Soc(v) => Ok(soc_distance(v)),
            ConeValue::Psd(a) => psd_distance(a),
        }
    }

    pub fn project(&self) -> Result<ConeValue, ConeError> {
        Ok(match self {
            ConeValue::Soc(v) => ConeValue::Soc(project_soc(v)),
            ConeValue::Psd(a) => ConeValue::Psd(crate::cone::project_psd(a)?),
        })
    }

    /// Flat coordinates: SOC components or the upper triangle row by row.
    pub fn to_flat(&self) -> Vec<f64> {
        match self {
            ConeValue::Soc(v) => v.to_vec(),
            ConeValue::Psd(a) => a.upper(),
        }
    }

    pub fn from_flat(kind: ConeKind, v: &[f64]) -> Result<ConeValue, ConeError> {
        Ok(match kind {
            ConeKind::Soc(m) => {
                if v.len() != m {
                    return Err(ConeError::DimensionMismatch { left: v.len(), right: m });
                }
                ConeValue::Soc(SocVector::from_slice(v)?)
            }
            ConeKind::Psd(m) => ConeValue::Psd(SymMatrix::from_upper(m, v)?),
        })
    }
}

impl BlockValue {
    pub fn kind(&self) -> ConeKind {
        match self {
            BlockValue::Soc { value, .. } => ConeKind::Soc(value.dim()),
            BlockValue::Psd { value, .. } => ConeKind::Psd(value.dim()),
        }
    }

    pub fn value(&self) -> ConeValue {
        match self {
            BlockValue::Soc { value, .. } => ConeValue::Soc(value.clone()),
            BlockValue::Psd { value, .. } => ConeValue::Psd(value.clone()),
        }
    }

    /// `J_gᵀ z`; for PSD blocks `(∂₁g·z, …, ∂ₙg·z)`.
    pub fn adjoint(&self, z: &ConeValue) -> Vec<f64> {
        match (self, z) {
            (BlockValue::Soc { jacobian, .. }, ConeValue::Soc(v)) => jacobian.tr_mul_vec(&v.to_vec()),
            (BlockValue::Psd { partials, .. }, ConeValue::Psd(a)) => partials.iter().map(|p| p.dot(a)).collect(),
            _ => panic!("multiplier kind does not match block kind"),
        }
    }

    /// `J_g d`.
    pub fn directional(&self, d: &[f64]) -> ConeValue {
        match self {
            BlockValue::Soc { jacobian, .. } => {
                ConeValue::Soc(SocVector::from_slice(&jacobian.mul_vec(d)).expect("nonempty block"))
            }
            BlockValue::Psd { value, partials, .. } => {
                let mut out = SymMatrix::zeros(value.dim());
                for (p, di) in partials.iter().zip(d) {
                    out.add_scaled(*di, p);
                }
                ConeValue::Psd(out)
            }
        }
    }

    /// Rows of the adjoint map written in the block's isometric coordinates
    /// (components for SOC, svec for PSD); one row per coordinate.
    pub fn coordinate_jacobian(&self) -> Mat {
        match self {
            BlockValue::Soc { jacobian, .. } => jacobian.clone(),
            BlockValue::Psd { value, partials, .. } => {
                let len = value.dim() * (value.dim() + 1) / 2;
                let n = partials.len();
                let mut out = Mat::zeros(len, n);
                for (i, p) in partials.iter().enumerate() {
                    for (k, v) in p.svec().into_iter().enumerate() {
                        out[(k, i)] = v;
                    }
                }
                out
            }
        }
    }
}

/// Everything the diagnostics need at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedPoint {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_f: Vec<f64>,
    pub h: Vec<f64>,
    /// `p × n`
    pub jac_h: Mat,
    pub blocks: Vec<BlockValue>,
    pub block_distances: Vec<f64>,
    /// `max(‖h‖∞, max_j dist(g_j, K_j))`
    pub residual: f64,
}

impl EvaluatedPoint {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn eq_gradients(&self) -> Vec<Vec<f64>> {
        (0..self.jac_h.rows()).map(|i| self.jac_h.row(i).to_vec()).collect()
    }
}

fn eval_ctx(context: impl FnOnce() -> String, e: &Expr, x: &[f64]) -> Result<crate::expr::GradedValue, ProblemError> {
    eval_grad(e, x).map_err(|source| ProblemError::Eval { context: context(), source })
}

pub fn evaluate(prog: &ConicProgram, x: &[f64]) -> Result<EvaluatedPoint, ProblemError> {
    let n = prog.n;
    if x.len() != n {
        return Err(ProblemError::PointDimension { got: x.len(), n });
    }
    let obj = eval_ctx(|| "objective".to_owned(), &prog.objective, x)?;
    let mut h = Vec::with_capacity(prog.equalities.len());
    let mut jac_h = Mat::zeros(prog.equalities.len(), n);
    for (i, eq) in prog.equalities.iter().enumerate() {
        let g = eval_ctx(|| format!("equality `{}`", eq.name), &eq.expr, x)?;
        h.push(g.value);
        for (k, p) in g.partials.iter().enumerate() {
            jac_h[(i, k)] = *p;
        }
    }

    let mut blocks = Vec::with_capacity(prog.blocks.len());
    let mut distances = Vec::with_capacity(prog.blocks.len());
    for b in &prog.blocks {
        let mut vals = Vec::with_capacity(b.entries.len());
        let mut rows = Vec::with_capacity(b.entries.len());
        for (k, e) in b.entries.iter().enumerate() {
            let g = eval_ctx(|| format!("block `{}` entry {}", b.name, k + 1), e, x)?;
            vals.push(g.value);
            rows.push(g.partials);
        }
        let cone_err = |source| ProblemError::Cone { block: b.name.clone(), source };
        match b.kind {
            ConeKind::Soc(_) => {
                let value = SocVector::from_slice(&vals).map_err(cone_err)?;
                distances.push(soc_distance(&value));
                blocks.push(BlockValue::Soc { value, jacobian: Mat::from_rows(&rows, n) });
            }
            ConeKind::Psd(m) => {
                let value = SymMatrix::from_upper(m, &vals).map_err(cone_err)?;
                let partials = (0..n)
                    .map(|i| {
                        let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
                        SymMatrix::from_upper(m, &col)
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(cone_err)?;
                let spectral = eig_sym(&value).map_err(cone_err)?;
                let neg: f64 = spectral.values.iter().map(|l| if *l < 0.0 { l * l } else { 0.0 }).sum();
                distances.push(crate::math::sqrt(neg));
                blocks.push(BlockValue::Psd { value, partials, spectral });
            }
        }
    }
    let residual = distances.iter().fold(norm_inf(&h), |m, d| m.max(*d));
    Ok(EvaluatedPoint { x: x.to_vec(), f: obj.value, grad_f: obj.partials, h, jac_h, blocks, block_distances: distances, residual })
}

/// Objective, equality and block values without derivatives.
#[derive(Debug, Clone)]
pub struct PointValues {
    pub f: f64,
    pub h: Vec<f64>,
    pub blocks: Vec<ConeValue>,
}

pub fn evaluate_values(prog: &ConicProgram, x: &[f64]) -> Result<PointValues, ProblemError> {
    if x.len() != prog.n {
        return Err(ProblemError::PointDimension { got: x.len(), n: prog.n });
    }
    let ev = |context: &dyn Fn() -> String, e: &Expr| eval(e, x).map_err(|source| ProblemError::Eval { context: context(), source });
    let f = ev(&|| "objective".to_owned(), &prog.objective)?;
    let h = prog
        .equalities
        .iter()
        .map(|eq| ev(&|| format!("equality `{}`", eq.name), &eq.expr))
        .collect::<Result<Vec<_>, _>>()?;
    let mut blocks = Vec::with_capacity(prog.blocks.len());
    for b in &prog.blocks {
        let vals = b
            .entries
            .iter()
            .enumerate()
            .map(|(k, e)| ev(&|| format!("block `{}` entry {}", b.name, k + 1), e))
            .collect::<Result<Vec<_>, _>>()?;
        blocks.push(ConeValue::from_flat(b.kind, &vals).map_err(|source| ProblemError::Cone { block: b.name.clone(), source })?);
    }
    Ok(PointValues { f, h, blocks })
}

/// Rewrites a multifold PSD program as a single block-diagonal PSD
/// constraint whose off-diagonal entries are the literal 0.
pub fn embed_block_diagonal(prog: &ConicProgram) -> Result<ConicProgram, ProblemError> {
    if let Some(b) = prog.blocks.iter().find(|b| matches!(b.kind, ConeKind::Soc(_))) {
        return Err(ProblemError::NotPsd(b.name.clone()));
    }
    if prog.blocks.len() <= 1 {
        return Ok(prog.clone());
    }
    let total: usize = prog.blocks.iter().map(|b| b.kind.size()).sum();
    // owner[i] = (block, local row)
    let mut owner = Vec::with_capacity(total);
    for (j, b) in prog.blocks.iter().enumerate() {
        for r in 0..b.kind.size() {
            owner.push((j, r));
        }
    }
    let mut entries = Vec::with_capacity(total * (total + 1) / 2);
    for i in 0..total {
        for k in i..total {
            let (bi, ri) = owner[i];
            let (bk, rk) = owner[k];
            if bi == bk {
                let m = prog.blocks[bi].kind.size();
                entries.push(prog.blocks[bi].entries[upper_index(m, ri, rk)].clone());
            } else {
                entries.push(Expr::Lit(0.0));
            }
        }
    }
    let name = prog.blocks.iter().map(|b| b.name.as_str()).collect::<Vec<_>>().join("_");
    let block = ConicBlock { name, kind: ConeKind::Psd(total), entries };
    ConicProgram::new(prog.n, prog.objective.clone(), prog.equalities.clone(), vec![block])
}

/// Index of `(i, j)`, `i ≤ j`, in a row-major upper-triangle listing.
pub fn upper_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < m);
    i * m - i * (i + 1) / 2 + j
}

/// Stationarity of the Lagrangian `∇f + J_hᵀλ − Σ J_gᵀμ_j` at a point.
pub fn lagrangian_gradient(pt: &EvaluatedPoint, lambda: &[f64], mu: &[ConeValue]) -> Vec<f64> {
    let mut g = pt.grad_f.clone();
    crate::math::axpy(1.0, &pt.jac_h.tr_mul_vec(lambda), &mut g);
    for (b, m) in pt.blocks.iter().zip(mu) {
        crate::math::axpy(-1.0, &b.adjoint(m), &mut g);
    }
    g
}

/// Complementarity gap `⟨μ_j, g_j⟩` for every block.
pub fn complementarity(pt: &EvaluatedPoint, mu: &[ConeValue]) -> Vec<f64> {
    pt.blocks
        .iter()
        .zip(mu)
        .map(|(b, m)| match (b, m) {
            (BlockValue::Soc { value, .. }, ConeValue::Soc(v)) => value.inner(v),
            (BlockValue::Psd { value, .. }, ConeValue::Psd(a)) => value.dot(a),
            _ => f64::NAN,
        })
        .collect()
}
