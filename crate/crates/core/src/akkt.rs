//! Approximate-KKT residuals, certification of a finite trace, and the
//! constructive recovery of KKT multipliers (or of an unbounded
//! dependence witness) from such a trace.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::certificates::{
    caratheodory_reduce, check_witness, cone_membership, numerical_rank, CaratheodoryError, ConeTerm, ConicSystem,
    MembershipError, Witness, WitnessCheck, DEFAULT_TOL_RANK,
};
use crate::classify::{classify, cluster_width, BlockStatus, ClassifyError, IndexClassification, DEFAULT_TOL_GAP};
use crate::cone::{eig_sym, jordan_product, ConeError, SocVector, SymMatrix, DEFAULT_TOL_ACT};
use crate::linalg::{lstsq, Mat};
use crate::math::{axpy, dist, norm, norm_inf};
use crate::problem::{evaluate, BlockValue, ConeValue, ConicProgram, EvaluatedPoint, ProblemError};
use crate::reduction::{lift_ray, ray_coefficient, reduced_gradient, ReductionError, ReductionRule};

pub const DEFAULT_AKKT_TOL: f64 = 1e-6;
pub const DEFAULT_M_CAP: f64 = 1e8;
pub const DEFAULT_GROWTH: f64 = 10.0;
/// Trace invariants: multipliers this close to their cone, ray
/// coefficients at least this negative.
pub const TRACE_CONE_TOL: f64 = 1e-9;
pub const TRACE_ALPHA_TOL: f64 = 1e-12;

/// A block's multiplier in a trace record: a cone element, or a reduced
/// coefficient standing for `lift_ray(α)`.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockMultiplier {
    Cone(ConeValue),
    Ray(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AkktRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    /// One entry per block.
    pub multipliers: Vec<BlockMultiplier>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AkktTrace {
    pub records: Vec<AkktRecord>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AkktError {
    #[error("record {k}: {what} has length {found}, expected {expected}")]
    Dimension { k: usize, what: &'static str, expected: usize, found: usize },
    #[error("record {k}: multiplier of block {block} has the wrong cone")]
    WrongCone { k: usize, block: usize },
    #[error("record {k}: multiplier of block {block} violates its cone by {violation:e}")]
    Infeasible { k: usize, block: usize, violation: f64 },
    #[error("records out of order at index {index}")]
    Order { index: usize },
    #[error("trace is empty")]
    Empty,
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Membership(#[from] MembershipError),
}

impl AkktTrace {
    /// Dimension and cone checks against a program.
    pub fn validate(&self, prog: &ConicProgram) -> Result<(), AkktError> {
        let p = prog.equalities().len();
        for (index, r) in self.records.iter().enumerate() {
            if index > 0 && r.k <= self.records[index - 1].k {
                return Err(AkktError::Order { index });
            }
            let k = r.k;
            let dims = [("x", prog.n(), r.x.len()), ("lambda", p, r.lambda.len()), ("multipliers", prog.blocks().len(), r.multipliers.len())];
            for (what, expected, found) in dims {
                if expected != found {
                    return Err(AkktError::Dimension { k, what, expected, found });
                }
            }
            for (block, (m, b)) in r.multipliers.iter().zip(prog.blocks()).enumerate() {
                match m {
                    BlockMultiplier::Cone(v) => {
                        if v.kind() != b.kind {
                            return Err(AkktError::WrongCone { k, block });
                        }
                        let violation = v.cone_distance()?;
                        if violation > TRACE_CONE_TOL {
                            return Err(AkktError::Infeasible { k, block, violation });
                        }
                    }
                    BlockMultiplier::Ray(a) => {
                        if *a < -TRACE_ALPHA_TOL {
                            return Err(AkktError::Infeasible { k, block, violation: -a });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AkktConfig {
    pub tol: f64,
    pub tol_act: f64,
    pub tol_gap: f64,
    pub tol_rank: f64,
    pub m_cap: f64,
    pub growth: f64,
}

impl Default for AkktConfig {
    fn default() -> Self {
        AkktConfig {
            tol: DEFAULT_AKKT_TOL,
            tol_act: DEFAULT_TOL_ACT,
            tol_gap: DEFAULT_TOL_GAP,
            tol_rank: DEFAULT_TOL_RANK,
            m_cap: DEFAULT_M_CAP,
            growth: DEFAULT_GROWTH,
        }
    }
}

/// Multipliers of one record in the form dictated by the classification at
/// the reference point: `α` for reduced blocks, `μ` for irreducible ones.
struct SplitRecord {
    pt: EvaluatedPoint,
    alpha: BTreeMap<usize, f64>,
    mu: BTreeMap<usize, ConeValue>,
}

fn split_record(prog: &ConicProgram, cls: &IndexClassification, r: &AkktRecord) -> Result<SplitRecord, AkktError> {
    let pt = evaluate(prog, &r.x)?;
    let mut alpha = BTreeMap::new();
    let mut mu = BTreeMap::new();
    for (j, s) in cls.status.iter().enumerate() {
        if s.is_reduced() {
            let a = match &r.multipliers[j] {
                BlockMultiplier::Ray(a) => a.max(0.0),
                BlockMultiplier::Cone(m) => ray_coefficient(&pt, j, m),
            };
            alpha.insert(j, a);
        } else if s.is_irreducible() {
            let m = match &r.multipliers[j] {
                BlockMultiplier::Cone(m) => m.clone(),
                BlockMultiplier::Ray(a) => lift_ray(&pt, j, a.max(0.0)),
            };
            mu.insert(j, m);
        }
    }
    Ok(SplitRecord { pt, alpha, mu })
}

fn rule_of(s: &BlockStatus) -> ReductionRule {
    ReductionRule::for_status(s).expect("reduced block")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualInfo {
    pub residual: f64,
    /// Reducible PSD blocks whose smallest eigenvalue at `x^k` is not
    /// simple; their gradient still uses the eigenpair at `x^k`.
    pub flagged: Vec<usize>,
}

fn stationarity(sr: &SplitRecord, lambda: &[f64], cls: &IndexClassification) -> Result<(Vec<f64>, Vec<usize>), AkktError> {
    let pt = &sr.pt;
    let mut v = pt.grad_f.clone();
    axpy(1.0, &pt.jac_h.tr_mul_vec(lambda), &mut v);
    for (&j, m) in &sr.mu {
        axpy(-1.0, &pt.blocks[j].adjoint(m), &mut v);
    }
    let mut flagged = Vec::new();
    for (&j, &a) in &sr.alpha {
        let (_, g, gap) = reduced_gradient(pt, j, rule_of(&cls.status[j]))?;
        if let (Some(gap), BlockValue::Psd { value, .. }) = (gap, &pt.blocks[j]) {
            if gap <= cluster_width(cls.tol_gap, value.frobenius()) {
                flagged.push(j);
            }
        }
        axpy(-a, &g, &mut v);
    }
    Ok((v, flagged))
}

/// `‖∇f + J_hᵀλ − Σ_{I₀,I_N} J_gᵀμ − Σ_{I_B,A,I_R} α∇φ‖` at `x^k`, with the
/// index sets taken from `cls`.
pub fn akkt_residual(prog: &ConicProgram, cls: &IndexClassification, record: &AkktRecord) -> Result<ResidualInfo, AkktError> {
    AkktTrace { records: vec![record.clone()] }.validate(prog)?;
    let sr = split_record(prog, cls, record)?;
    let (v, flagged) = stationarity(&sr, &record.lambda, cls)?;
    Ok(ResidualInfo { residual: norm(&v), flagged })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rejection {
    InsufficientTail { records: usize },
    Distance { k: usize, distance: f64 },
    NotApproaching { first: f64, last: f64 },
    Residual { k: usize, residual: f64 },
    /// Mass of `μ^k` along an eigenvector of a positive eigenvalue of `g(x*)`.
    Alignment { block: usize, k: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certification {
    Certified { window: usize, max_distance: f64, max_residual: f64 },
    Rejected(Rejection),
}

/// Size of the tail window used to judge convergence.
pub fn tail_window(len: usize) -> usize {
    2usize.max(len.div_ceil(4))
}

/// Greedy pairing of eigenvectors by absolute inner product, largest
/// first. Returns, for each column of `b`, the matched column of `a`.
fn match_eigenvectors(a: &Mat, b: &Mat) -> Vec<usize> {
    let m = a.cols();
    let mut pairs = Vec::with_capacity(m * m);
    for i in 0..m {
        for l in 0..m {
            let ip: f64 = (0..a.rows()).map(|r| a[(r, i)] * b[(r, l)]).sum();
            pairs.push((ip.abs(), i, l));
        }
    }
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(core::cmp::Ordering::Equal).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut used_a = vec![false; m];
    let mut of_b = vec![usize::MAX; m];
    for (_, i, l) in pairs {
        if !used_a[i] && of_b[l] == usize::MAX {
            used_a[i] = true;
            of_b[l] = i;
        }
    }
    of_b
}

pub fn certify_akkt(prog: &ConicProgram, x_star: &[f64], trace: &AkktTrace, cfg: &AkktConfig) -> Result<Certification, AkktError> {
    if trace.records.is_empty() {
        return Err(AkktError::Empty);
    }
    trace.validate(prog)?;
    let len = trace.records.len();
    if len < 2 {
        return Ok(Certification::Rejected(Rejection::InsufficientTail { records: len }));
    }
    let pt_star = evaluate(prog, x_star)?;
    let cls = classify(&pt_star, cfg.tol_act, cfg.tol_gap)?;
    let window = tail_window(len).min(len);
    let tail = &trace.records[len - window..];

    let dists: Vec<f64> = tail.iter().map(|r| dist(&r.x, x_star)).collect();
    for (r, &d) in tail.iter().zip(&dists) {
        if !(d <= cfg.tol) {
            return Ok(Certification::Rejected(Rejection::Distance { k: r.k, distance: d }));
        }
    }
    let (first, last) = (dists[0], dists[window - 1]);
    if last > first + 1e-3 * cfg.tol {
        return Ok(Certification::Rejected(Rejection::NotApproaching { first, last }));
    }

    let mut max_residual: f64 = 0.0;
    let mut splits = Vec::with_capacity(window);
    for r in tail {
        let sr = split_record(prog, &cls, r)?;
        let residual = norm(&stationarity(&sr, &r.lambda, &cls)?.0);
        if !(residual <= cfg.tol) {
            return Ok(Certification::Rejected(Rejection::Residual { k: r.k, residual }));
        }
        max_residual = max_residual.max(residual);
        splits.push(sr);
    }

    for j in cls.psd_irreducible() {
        let BlockValue::Psd { spectral: g_spec, .. } = &pt_star.blocks[j] else { continue };
        for (r, sr) in tail.iter().zip(&splits) {
            let ConeValue::Psd(mu) = &sr.mu[&j] else { continue };
            let mu_spec = eig_sym(mu)?;
            let matched = match_eigenvectors(&mu_spec.vectors, &g_spec.vectors);
            for (l, &sigma) in g_spec.values.iter().enumerate() {
                if sigma > cfg.tol_act {
                    let value = mu_spec.values[matched[l]];
                    if value.abs() > cfg.tol {
                        return Ok(Certification::Rejected(Rejection::Alignment { block: j, k: r.k, value }));
                    }
                }
            }
        }
    }
    let max_distance = dists.iter().copied().fold(0.0, f64::max);
    Ok(Certification::Certified { window, max_distance, max_residual })
}

/// Multipliers for every equality and block.
#[derive(Debug, Clone, PartialEq)]
pub struct KktMultipliers {
    pub lambda: Vec<f64>,
    pub mu: Vec<ConeValue>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktCheck {
    /// `‖∇f + J_hᵀλ − Σ J_gᵀμ‖`
    pub stationarity: f64,
    /// Feasibility residual of the point.
    pub feasibility: f64,
    pub cone_distance: f64,
    /// Largest `‖μ ∘ g‖` (SOC) or `‖μ g‖_F` (PSD).
    pub complementarity: f64,
}

impl KktCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.stationarity <= tol && self.feasibility <= tol && self.cone_distance <= tol && self.complementarity <= tol
    }

    pub fn worst(&self) -> f64 {
        self.stationarity.max(self.feasibility).max(self.cone_distance).max(self.complementarity)
    }
}

fn matrix_product_norm(a: &SymMatrix, b: &SymMatrix) -> f64 {
    let m = a.dim();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            let v: f64 = (0..m).map(|k| a.get(i, k) * b.get(k, j)).sum();
            s += v * v;
        }
    }
    crate::math::sqrt(s)
}

/// Direct check of the KKT system at `x`, independent of how the
/// multipliers were obtained.
pub fn verify_kkt(prog: &ConicProgram, x: &[f64], mult: &KktMultipliers) -> Result<KktCheck, AkktError> {
    let pt = evaluate(prog, x)?;
    if mult.lambda.len() != pt.h.len() {
        return Err(AkktError::Dimension { k: 0, what: "lambda", expected: pt.h.len(), found: mult.lambda.len() });
    }
    if mult.mu.len() != pt.blocks.len() {
        return Err(AkktError::Dimension { k: 0, what: "multipliers", expected: pt.blocks.len(), found: mult.mu.len() });
    }
    let mut v = pt.grad_f.clone();
    let p = pt.jac_h.rows();
    for i in 0..p {
        axpy(mult.lambda[i], pt.jac_h.row(i), &mut v);
    }
    let mut cone_distance: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    for (j, (b, m)) in pt.blocks.iter().zip(&mult.mu).enumerate() {
        let comp = match (b, m) {
            (BlockValue::Soc { value, jacobian }, ConeValue::Soc(mv)) => {
                for r in 0..jacobian.rows() {
                    let c = if r == 0 { mv.z0 } else { mv.zbar[r - 1] };
                    axpy(-c, jacobian.row(r), &mut v);
                }
                jordan_product(mv, value)?.norm()
            }
            (BlockValue::Psd { value, partials, .. }, ConeValue::Psd(mm)) => {
                for (i, pi) in partials.iter().enumerate() {
                    v[i] -= pi.dot(mm);
                }
                matrix_product_norm(mm, value)
            }
            _ => return Err(AkktError::WrongCone { k: 0, block: j }),
        };
        complementarity = complementarity.max(comp);
        cone_distance = cone_distance.max(m.cone_distance()?);
    }
    Ok(KktCheck { stationarity: norm(&v), feasibility: pt.residual, cone_distance, complementarity })
}

/// The normalized multipliers of a diverging subsequence: a nonzero
/// solution of the homogeneous system at `x*`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnboundedWitness {
    pub lambda: Vec<f64>,
    /// Cone multipliers of the irreducible blocks, by block.
    pub mu: Vec<(usize, ConeValue)>,
    /// Reduced coefficients, by block.
    pub alpha: Vec<(usize, f64)>,
    pub check: WitnessCheck,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecoveryVerdict {
    Kkt { multipliers: KktMultipliers, check: KktCheck, polished: bool },
    Unbounded(UnboundedWitness),
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOutcome {
    pub verdict: RecoveryVerdict,
    /// Equality indices of the basis `I`.
    pub basis: Vec<usize>,
    /// Most frequent Carathéodory subset over the tail half, as blocks.
    pub dominant: Vec<usize>,
    pub frequency: usize,
    /// Number of records in the tail half.
    pub window: usize,
    /// `M^k` at the first and last record of the subsequence, and its
    /// maximum.
    pub m_first: f64,
    pub m_last: f64,
    pub m_max: f64,
}

struct ReducedRecord {
    lambda_basis: Vec<f64>,
    alpha: BTreeMap<usize, f64>,
    mu: BTreeMap<usize, ConeValue>,
    kept: Vec<usize>,
    m: f64,
}

fn reduce_record(
    prog: &ConicProgram,
    cls: &IndexClassification,
    basis: &[usize],
    r: &AkktRecord,
    tol_rank: f64,
) -> Result<Result<ReducedRecord, CaratheodoryError>, AkktError> {
    let sr = split_record(prog, cls, r)?;
    let pt = &sr.pt;
    let n = pt.n();
    let fixed: Vec<Vec<f64>> = basis.iter().map(|&i| pt.jac_h.row(i).to_vec()).collect();
    let eq_term = pt.jac_h.tr_mul_vec(&r.lambda);
    let lambda_hat = if fixed.is_empty() { Vec::new() } else { lstsq(&Mat::from_cols(&fixed, n), &eq_term, 1e-14) };

    let blocks: Vec<usize> = sr.alpha.keys().copied().collect();
    let mut coned = Vec::with_capacity(blocks.len());
    let mut target = vec![0.0; n];
    for (k, &l) in basis.iter().enumerate() {
        axpy(lambda_hat[k], pt.jac_h.row(l), &mut target);
    }
    for &j in &blocks {
        let g: Vec<f64> = reduced_gradient(pt, j, rule_of(&cls.status[j]))?.1.iter().map(|v| -v).collect();
        let a = sr.alpha[&j];
        axpy(a, &g, &mut target);
        coned.push((g, a));
    }
    let res = match caratheodory_reduce(&fixed, &coned, &target, tol_rank) {
        Ok(res) => res,
        Err(e) => return Ok(Err(e)),
    };
    let mut alpha = BTreeMap::new();
    for (&k, &c) in res.kept.iter().zip(&res.coeffs) {
        alpha.insert(blocks[k], c);
    }
    let kept: Vec<usize> = res.kept.iter().map(|&k| blocks[k]).collect();
    let mut m = norm_inf(&res.fixed_coeffs);
    for v in sr.mu.values() {
        m = m.max(v.norm());
    }
    for &a in alpha.values() {
        m = m.max(a);
    }
    Ok(Ok(ReducedRecord { lambda_basis: res.fixed_coeffs, alpha, mu: sr.mu, kept, m }))
}

fn inconclusive(reason: impl Into<String>) -> RecoveryVerdict {
    RecoveryVerdict::Inconclusive { reason: reason.into() }
}

/// Completes the multipliers of one reduced record at `x*`: reduced
/// coefficients are lifted with `x*`'s data, irreducible PSD multipliers
/// are compressed onto the kernel of `g(x*)`.
fn complete(pt: &EvaluatedPoint, cls: &IndexClassification, basis: &[usize], rr: &ReducedRecord) -> Result<KktMultipliers, AkktError> {
    let mut lambda = vec![0.0; pt.h.len()];
    for (k, &i) in basis.iter().enumerate() {
        lambda[i] = rr.lambda_basis[k];
    }
    let mut mu: Vec<ConeValue> = pt.blocks.iter().map(|b| ConeValue::zero(b.kind())).collect();
    for (&j, &a) in &rr.alpha {
        mu[j] = lift_ray(pt, j, a);
    }
    for (&j, m) in &rr.mu {
        let projected = m.project()?;
        mu[j] = match (&pt.blocks[j], projected) {
            (BlockValue::Psd { value, spectral, .. }, ConeValue::Psd(a)) => {
                let e = spectral.bottom_space(cluster_width(cls.tol_gap, value.frobenius()));
                ConeValue::Psd(SymMatrix::lift(&a.congruence(&e), &e))
            }
            (_, other) => other,
        };
    }
    Ok(KktMultipliers { lambda, mu })
}

/// Re-fits equality and reduced coefficients at `x*` by nonnegative least
/// squares, holding the irreducible multipliers fixed.
fn polish(pt: &EvaluatedPoint, cls: &IndexClassification, basis: &[usize], start: &KktMultipliers, tol: f64) -> Result<Option<KktMultipliers>, AkktError> {
    let mut target: Vec<f64> = pt.grad_f.iter().map(|v| -v).collect();
    for j in cls.irreducible() {
        axpy(1.0, &pt.blocks[j].adjoint(&start.mu[j]), &mut target);
    }
    let free: Vec<Vec<f64>> = basis.iter().map(|&i| pt.jac_h.row(i).to_vec()).collect();
    let reduced = cls.reduced();
    let mut coned = Vec::with_capacity(reduced.len());
    for &j in &reduced {
        coned.push(reduced_gradient(pt, j, rule_of(&cls.status[j]))?.1.iter().map(|v| -v).collect());
    }
    Ok(match cone_membership(&target, &free, &coned, tol)? {
        crate::certificates::Membership::Member { free: lam, coned: alpha, .. } => {
            let mut out = start.clone();
            out.lambda.iter_mut().for_each(|v| *v = 0.0);
            for (k, &i) in basis.iter().enumerate() {
                out.lambda[i] = lam[k];
            }
            for (&j, &a) in reduced.iter().zip(&alpha) {
                out.mu[j] = lift_ray(pt, j, a);
            }
            Some(out)
        }
        _ => None,
    })
}

/// The normalized last record of the subsequence, checked by substitution
/// as a solution of the homogeneous system at `x*`.
fn unbounded_witness(pt: &EvaluatedPoint, cls: &IndexClassification, basis: &[usize], rr: &ReducedRecord) -> Result<UnboundedWitness, AkktError> {
    let mut sys = ConicSystem::new(pt.n());
    sys.eq_basis = basis.iter().map(|&i| pt.jac_h.row(i).to_vec()).collect();
    let mut mu_coords = Vec::new();
    let mut mu_blocks = Vec::new();
    for (&j, m) in &rr.mu {
        match (&pt.blocks[j], m) {
            (BlockValue::Soc { jacobian, .. }, ConeValue::Soc(v)) => {
                sys.blocks.push(ConeTerm::soc(jacobian.clone()));
                mu_coords.push(v.to_vec());
            }
            (BlockValue::Psd { value, partials, .. }, ConeValue::Psd(a)) => {
                sys.blocks.push(ConeTerm::psd(value.dim(), partials));
                mu_coords.push(a.svec());
            }
            _ => return Err(AkktError::WrongCone { k: 0, block: j }),
        }
        mu_blocks.push(j);
    }
    let mut ray_blocks = Vec::new();
    let mut alphas = Vec::new();
    for (&j, &a) in &rr.alpha {
        sys.rays.push(reduced_gradient(pt, j, rule_of(&cls.status[j]))?.1);
        ray_blocks.push(j);
        alphas.push(a);
    }
    let raw = Witness { lambda: rr.lambda_basis.iter().map(|v| -v).collect(), mu: mu_coords, alpha: alphas };
    let m = rr.m.max(f64::MIN_POSITIVE);
    let mut w = raw.scaled(1.0 / m);
    let norm0 = check_witness(&sys, &w)?.normalization;
    if norm0 > 0.0 && norm0 < 0.5 {
        w = w.scaled(1.0 / norm0);
    }
    let check = check_witness(&sys, &w)?;
    let mu = mu_blocks
        .iter()
        .zip(&w.mu)
        .map(|(&j, y)| {
            let v = match &pt.blocks[j] {
                BlockValue::Soc { .. } => ConeValue::Soc(SocVector::from_slice(y).expect("nonempty block")),
                BlockValue::Psd { value, .. } => ConeValue::Psd(SymMatrix::from_svec(value.dim(), y)),
            };
            (j, v)
        })
        .collect();
    let mut lambda = vec![0.0; pt.h.len()];
    for (k, &i) in basis.iter().enumerate() {
        lambda[i] = w.lambda[k];
    }
    Ok(UnboundedWitness { lambda, mu, alpha: ray_blocks.into_iter().zip(w.alpha).collect(), check })
}

/// The recovery procedure: Carathéodory reduction of every record, modal
/// subset over the tail half, then either completed KKT multipliers (when
/// bounded and verified) or the normalized witness of a diverging
/// subsequence.
pub fn recover_kkt(prog: &ConicProgram, x_star: &[f64], trace: &AkktTrace, cfg: &AkktConfig) -> Result<RecoveryOutcome, AkktError> {
    if trace.records.is_empty() {
        return Err(AkktError::Empty);
    }
    trace.validate(prog)?;
    let pt = evaluate(prog, x_star)?;
    let cls = classify(&pt, cfg.tol_act, cfg.tol_gap)?;
    let basis = if pt.h.is_empty() { Vec::new() } else { numerical_rank(&pt.eq_gradients(), cfg.tol_rank).basis };
    let len = trace.records.len();
    let start = len / 2;
    let mut outcome = RecoveryOutcome {
        verdict: inconclusive(""),
        basis: basis.clone(),
        dominant: Vec::new(),
        frequency: 0,
        window: len - start,
        m_first: 0.0,
        m_last: 0.0,
        m_max: 0.0,
    };

    let mut reduced = Vec::with_capacity(len);
    for r in &trace.records {
        match reduce_record(prog, &cls, &basis, r, cfg.tol_rank)? {
            Ok(rr) => reduced.push(rr),
            Err(e) => {
                outcome.verdict = inconclusive(format!("record {}: {e}", r.k));
                return Ok(outcome);
            }
        }
    }

    // modal subset over the tail half; ties go to the most recent
    let mut counts: BTreeMap<Vec<usize>, (usize, usize)> = BTreeMap::new();
    for (i, rr) in reduced.iter().enumerate().skip(start) {
        let e = counts.entry(rr.kept.clone()).or_insert((0, i));
        e.0 += 1;
        e.1 = i;
    }
    let (dominant, &(frequency, _)) = counts
        .iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(a.1 .1.cmp(&b.1 .1)))
        .expect("tail half is nonempty");
    outcome.dominant = dominant.clone();
    outcome.frequency = frequency;
    let subseq: Vec<usize> = (0..len).filter(|&i| reduced[i].kept == *dominant).collect();
    let ms: Vec<f64> = subseq.iter().map(|&i| reduced[i].m).collect();
    outcome.m_first = ms[0];
    outcome.m_last = *ms.last().expect("nonempty");
    outcome.m_max = ms.iter().copied().fold(0.0, f64::max);
    let last = &reduced[*subseq.last().expect("nonempty")];

    let mut kkt_note = String::new();
    if outcome.m_last <= cfg.m_cap {
        let plain = complete(&pt, &cls, &basis, last)?;
        let plain_check = verify_kkt(prog, x_star, &plain)?;
        let mut best = (plain, plain_check, false);
        if let Some(p) = polish(&pt, &cls, &basis, &best.0, cfg.tol)? {
            let c = verify_kkt(prog, x_star, &p)?;
            if c.worst() < best.1.worst() {
                best = (p, c, true);
            }
        }
        if best.1.passes(cfg.tol) {
            outcome.verdict = RecoveryVerdict::Kkt { multipliers: best.0, check: best.1, polished: best.2 };
            return Ok(outcome);
        }
        kkt_note = format!("completed multipliers miss the KKT system by {:e}", best.1.worst());
    }

    let tail_ms: Vec<f64> = subseq.iter().filter(|&&i| i >= start).map(|&i| reduced[i].m).collect();
    let monotone = tail_ms.windows(2).all(|w| w[1] >= 0.99 * w[0]);
    let diverging = outcome.m_last > cfg.m_cap || (monotone && outcome.m_last >= cfg.growth * outcome.m_first && outcome.m_last > 0.0);
    if diverging {
        let w = unbounded_witness(&pt, &cls, &basis, last)?;
        if w.check.passes(cfg.tol) {
            outcome.verdict = RecoveryVerdict::Unbounded(w);
            return Ok(outcome);
        }
        outcome.verdict = inconclusive(format!("normalized multipliers leave residual {:e}", w.check.residual));
        return Ok(outcome);
    }
    if kkt_note.is_empty() {
        kkt_note = format!("multipliers exceed the cap without monotone growth ({:e})", outcome.m_last);
    }
    outcome.verdict = inconclusive(kkt_note);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::ConeKind;
    use crate::expr::parse;
    use crate::problem::ConicBlock;
    use alloc::string::ToString;

    fn boundary_program(objective: &str) -> ConicProgram {
        let g = ConicBlock { name: "g".to_string(), kind: ConeKind::Soc(2), entries: vec![parse("x1", 1).unwrap(), parse("x1", 1).unwrap()] };
        ConicProgram::new(1, parse(objective, 1).unwrap(), vec![], vec![g]).unwrap()
    }

    fn record(k: usize, x: f64, alpha: f64) -> AkktRecord {
        AkktRecord { k, x: vec![x], lambda: vec![], multipliers: vec![BlockMultiplier::Ray(alpha)] }
    }

    #[test]
    fn residual_is_objective_gradient_without_multipliers() {
        let prog = boundary_program("(x1-1)^2");
        let cls = classify(&evaluate(&prog, &[1.0]).unwrap(), 1e-8, 1e-6).unwrap();
        for k in 1..5 {
            let r = akkt_residual(&prog, &cls, &record(k, 1.0 + 1.0 / k as f64, 0.0)).unwrap();
            assert!((r.residual - 2.0 / k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn one_record_is_not_enough() {
        let prog = boundary_program("(x1-1)^2");
        let trace = AkktTrace { records: vec![record(0, 1.0, 0.0)] };
        let c = certify_akkt(&prog, &[1.0], &trace, &AkktConfig::default()).unwrap();
        assert_eq!(c, Certification::Rejected(Rejection::InsufficientTail { records: 1 }));
    }

    #[test]
    fn constant_nonstationary_trace_is_rejected() {
        let prog = boundary_program("x1");
        let trace = AkktTrace { records: (0..8).map(|k| record(k, 1.0, 0.0)).collect() };
        let c = certify_akkt(&prog, &[1.0], &trace, &AkktConfig::default()).unwrap();
        assert!(matches!(c, Certification::Rejected(Rejection::Residual { .. })));
    }

    #[test]
    fn stationary_point_recovers_zero_multiplier() {
        let prog = boundary_program("(x1-1)^2");
        let trace = AkktTrace { records: (0..8).map(|k| record(k, 1.0, 0.0)).collect() };
        let out = recover_kkt(&prog, &[1.0], &trace, &AkktConfig::default()).unwrap();
        match out.verdict {
            RecoveryVerdict::Kkt { check, .. } => assert!(check.passes(1e-8)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vanishing_scalar_gradient_gives_unbounded_witness() {
        let g = ConicBlock { name: "g".to_string(), kind: ConeKind::Soc(1), entries: vec![parse("(x1-1)^2", 1).unwrap()] };
        let prog = ConicProgram::new(1, parse("2*x1", 1).unwrap(), vec![], vec![g]).unwrap();
        let records = (1..=40).map(|k| record(k, 1.0 + 1.0 / k as f64, k as f64)).collect();
        let out = recover_kkt(&prog, &[1.0], &AkktTrace { records }, &AkktConfig::default()).unwrap();
        match out.verdict {
            RecoveryVerdict::Unbounded(w) => {
                assert!(w.check.passes(1e-8));
                assert!((w.alpha[0].1 - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_psd_blocks_recover_kkt() {
        let b = |name: &str, e: [&str; 3]| ConicBlock { name: name.to_string(), kind: ConeKind::Psd(2), entries: e.iter().map(|s| parse(s, 1).unwrap()).collect() };
        let g1 = b("g1", ["0.5*(x1+1)", "0.5*(x1-1)", "0.5*(x1+1)"]);
        let g2 = b("g2", ["0.5*(1-x1)", "0.5*(-x1-1)", "0.5*(1-x1)"]);
        let prog = ConicProgram::new(1, parse("x1", 1).unwrap(), vec![], vec![g1, g2]).unwrap();
        let records = (0..8)
            .map(|k| AkktRecord { k, x: vec![0.0], lambda: vec![], multipliers: vec![BlockMultiplier::Ray(1.0), BlockMultiplier::Ray(0.0)] })
            .collect();
        let trace = AkktTrace { records };
        assert!(matches!(certify_akkt(&prog, &[0.0], &trace, &AkktConfig::default()).unwrap(), Certification::Certified { .. }));
        match recover_kkt(&prog, &[0.0], &trace, &AkktConfig::default()).unwrap().verdict {
            RecoveryVerdict::Kkt { check, .. } => assert!(check.passes(1e-9)),
            other => panic!("{other:?}"),
        }
    }
}
