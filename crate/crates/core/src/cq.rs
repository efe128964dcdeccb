//! Nondegeneracy, Robinson's CQ, RCPLD and CRSC at a classified point.
//!
//! Rank constancy is tested on seeded samples from a small ball, so a
//! `Holds` verdict for RCPLD or CRSC means no violation was found among the
//! samples drawn.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::certificates::{
    cone_membership, conic_dependence, greedy_basis, numerical_rank, rank, Certificate, ConeTerm, ConicSystem,
    MembershipError, Verdict, Witness, DEFAULT_BUDGET, DEFAULT_TOL_CERT, DEFAULT_TOL_RANK,
};
use crate::classify::{cluster_width, BlockStatus, IndexClassification};
use crate::cone::{ConeError, SocVector, SymMatrix};
use crate::linalg::{svd, Mat};
use crate::math::{axpy, norm};
use crate::problem::{evaluate, BlockValue, ConeValue, ConicProgram, EvaluatedPoint, ProblemError};
use crate::reduction::{lift_ray, reduced_gradient, reduced_view, ReductionError, ReductionRule};
use crate::sampling::{ball_samples, DEFAULT_RADIUS, DEFAULT_SAMPLES, DEFAULT_SEED};

pub const DEFAULT_SUBSET_CAP: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqConfig {
    pub tol_rank: f64,
    pub tol_cert: f64,
    pub budget: usize,
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub subset_cap: usize,
}

impl Default for CqConfig {
    fn default() -> Self {
        CqConfig {
            tol_rank: DEFAULT_TOL_RANK,
            tol_cert: DEFAULT_TOL_CERT,
            budget: DEFAULT_BUDGET,
            radius: DEFAULT_RADIUS,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            subset_cap: DEFAULT_SUBSET_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqKind {
    Nondegeneracy,
    Robinson,
    Rcpld,
    Crsc,
}

impl CqKind {
    pub const ALL: [CqKind; 4] = [CqKind::Nondegeneracy, CqKind::Robinson, CqKind::Rcpld, CqKind::Crsc];

    pub fn name(&self) -> &'static str {
        match self {
            CqKind::Nondegeneracy => "nondegeneracy",
            CqKind::Robinson => "robinson",
            CqKind::Rcpld => "rcpld",
            CqKind::Crsc => "crsc",
        }
    }

    pub fn from_name(s: &str) -> Option<CqKind> {
        CqKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for CqKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqVerdict {
    Holds,
    Fails,
    Undecided,
}

impl CqVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            CqVerdict::Holds => "holds",
            CqVerdict::Fails => "fails",
            CqVerdict::Undecided => "undecided",
        }
    }
}

impl fmt::Display for CqVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A nonzero multiplier combination written per program block.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierWitness {
    /// One entry per equality (zero outside the basis used).
    pub lambda: Vec<f64>,
    /// One entry per block. Reduced blocks with nonnegative coefficient are
    /// lifted to cone elements; everything else is zero.
    pub mu: Vec<ConeValue>,
    /// `(block, α)` for every reduced index in the system.
    pub alpha: Vec<(usize, f64)>,
    /// `‖Σ λ∇h + Σ J_gᵀμ + Σ α∇φ‖` with each reduced index counted once.
    pub residual: f64,
    pub cone_distance: f64,
    pub normalization: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CqWitness {
    RankDeficit { rank: usize, count: usize },
    EqualityDependence { lambda: Vec<f64> },
    ConicDependence(MultiplierWitness),
    RankChange { sample: Vec<f64>, rank_at_point: usize, rank_at_sample: usize },
    PersistenceBroken { subset: Vec<usize>, sample: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsetOutcome {
    Independent { margin: f64 },
    /// Dependent at the point and linearly dependent at every sample.
    DependentPersistent,
    /// Dependent at the point but independent at the given sample
    /// (0 is the point itself, `s` is sample `s − 1`).
    DependentBroken { sample: usize },
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetLog {
    pub subset: Vec<usize>,
    pub outcome: SubsetOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CqReport {
    pub kind: CqKind,
    pub verdict: CqVerdict,
    pub witness: Option<CqWitness>,
    pub certificate: Option<Certificate>,
    pub sampling: Option<Sampling>,
    pub tol_rank: f64,
    pub tol_cert: f64,
    pub subsets: Vec<SubsetLog>,
    /// Equality indices of the basis `I`.
    pub basis_eq: Vec<usize>,
    /// CRSC: reduced blocks in the basis `J`.
    pub basis_reduced: Vec<usize>,
    pub j_minus: Vec<usize>,
    pub j_plus: Vec<usize>,
    pub notes: Vec<String>,
}

impl CqReport {
    fn new(kind: CqKind, cfg: &CqConfig) -> Self {
        CqReport {
            kind,
            verdict: CqVerdict::Undecided,
            witness: None,
            certificate: None,
            sampling: None,
            tol_rank: cfg.tol_rank,
            tol_cert: cfg.tol_cert,
            subsets: Vec::new(),
            basis_eq: Vec::new(),
            basis_reduced: Vec::new(),
            j_minus: Vec::new(),
            j_plus: Vec::new(),
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CqError {
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Membership(#[from] MembershipError),
    #[error("evaluation at sample {index} failed: {source}")]
    Sample { index: usize, source: ProblemError },
}

/// Active blocks that stay conic, with the kernel basis used to compress
/// irreducible PSD blocks.
struct ConicPart {
    blocks: Vec<usize>,
    terms: Vec<ConeTerm>,
    kernels: Vec<Option<Mat>>,
}

fn conic_part(pt: &EvaluatedPoint, cls: &IndexClassification) -> ConicPart {
    let mut part = ConicPart { blocks: Vec::new(), terms: Vec::new(), kernels: Vec::new() };
    for j in cls.irreducible() {
        match &pt.blocks[j] {
            BlockValue::Soc { jacobian, .. } => {
                part.terms.push(ConeTerm::soc(jacobian.clone()));
                part.kernels.push(None);
            }
            BlockValue::Psd { value, partials, spectral } => {
                let e = spectral.bottom_space(cluster_width(cls.tol_gap, value.frobenius()));
                let compressed: Vec<SymMatrix> = partials.iter().map(|p| p.congruence(&e)).collect();
                part.terms.push(ConeTerm::psd(e.cols(), &compressed));
                part.kernels.push(Some(e));
            }
        }
        part.blocks.push(j);
    }
    part
}

/// Reduced indices with their gradients at the point.
struct ReducedPart {
    blocks: Vec<usize>,
    rules: Vec<ReductionRule>,
    grads: Vec<Vec<f64>>,
}

fn reduced_part(pt: &EvaluatedPoint, cls: &IndexClassification) -> Result<ReducedPart, CqError> {
    let view = reduced_view(pt, cls)?;
    Ok(ReducedPart {
        blocks: view.entries.iter().map(|e| e.block).collect(),
        rules: view.entries.iter().map(|e| e.rule).collect(),
        grads: view.entries.into_iter().map(|e| e.gradient).collect(),
    })
}

fn lift_conic(pt: &EvaluatedPoint, j: usize, kernel: &Option<Mat>, coords: &[f64]) -> ConeValue {
    match (&pt.blocks[j], kernel) {
        (BlockValue::Soc { .. }, _) => ConeValue::Soc(SocVector::from_slice(coords).expect("nonempty block")),
        (BlockValue::Psd { .. }, Some(e)) => ConeValue::Psd(SymMatrix::lift(&SymMatrix::from_svec(e.cols(), coords), e)),
        (BlockValue::Psd { value, .. }, None) => ConeValue::Psd(SymMatrix::from_svec(value.dim(), coords)),
    }
}

struct WitnessLayout<'a> {
    eq_index: &'a [usize],
    /// Reduced blocks entering as free coefficients after the equalities.
    free_reduced: &'a [usize],
    conic: &'a ConicPart,
    rays: &'a [usize],
}

/// Rewrites a system-level witness per program block and re-checks it by
/// substitution with the program's own Jacobians.
fn block_witness(pt: &EvaluatedPoint, reduced: &ReducedPart, layout: &WitnessLayout, w: &Witness) -> Result<MultiplierWitness, CqError> {
    let p = pt.h.len();
    let mut lambda = vec![0.0; p];
    for (k, &i) in layout.eq_index.iter().enumerate() {
        lambda[i] = w.lambda[k];
    }
    let mut mu: Vec<ConeValue> = pt.blocks.iter().map(|b| ConeValue::zero(b.kind())).collect();
    let mut alpha = Vec::new();
    let grad_of = |j: usize| reduced.grads[reduced.blocks.iter().position(|&b| b == j).expect("reduced block")].clone();

    let mut comb = vec![0.0; pt.n()];
    axpy(1.0, &pt.jac_h.tr_mul_vec(&lambda), &mut comb);
    let mut normalization = 0.0;
    for (k, &j) in layout.free_reduced.iter().enumerate() {
        let a = w.lambda[layout.eq_index.len() + k];
        alpha.push((j, a));
        axpy(a, &grad_of(j), &mut comb);
    }
    for (k, &j) in layout.conic.blocks.iter().enumerate() {
        let m = lift_conic(pt, j, &layout.conic.kernels[k], &w.mu[k]);
        axpy(1.0, &pt.blocks[j].adjoint(&m), &mut comb);
        normalization += match &m {
            ConeValue::Soc(v) => v.z0,
            ConeValue::Psd(a) => a.trace(),
        };
        mu[j] = m;
    }
    for (k, &j) in layout.rays.iter().enumerate() {
        let a = w.alpha[k];
        alpha.push((j, a));
        normalization += a;
        let m = lift_ray(pt, j, a.max(0.0));
        axpy(1.0, &pt.blocks[j].adjoint(&m), &mut comb);
        mu[j] = m;
    }
    let mut cone_distance: f64 = 0.0;
    for m in &mu {
        cone_distance = cone_distance.max(m.cone_distance()?);
    }
    Ok(MultiplierWitness { lambda, mu, alpha, residual: norm(&comb), cone_distance, normalization })
}

fn rows_of(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Conic analogue of LICQ. SOC blocks contribute all Jacobian rows at the
/// vertex and `∇φ` on the boundary; active PSD blocks contribute the
/// compressed partials `Eᵀ∂_i g E` on their zero eigenspace.
pub fn check_nondegeneracy(pt: &EvaluatedPoint, cls: &IndexClassification, cfg: &CqConfig) -> Result<CqReport, CqError> {
    let mut report = CqReport::new(CqKind::Nondegeneracy, cfg);
    let mut rows = pt.eq_gradients();
    for (j, s) in cls.status.iter().enumerate() {
        match (s, &pt.blocks[j]) {
            (BlockStatus::SocVertex | BlockStatus::SocScalarActive, BlockValue::Soc { jacobian, .. }) => {
                rows.extend(rows_of(jacobian));
            }
            (BlockStatus::SocBoundary, _) => rows.push(crate::reduction::phi_soc(pt, j)?.1),
            (BlockStatus::PsdReducible { .. } | BlockStatus::PsdIrreducible { .. }, BlockValue::Psd { value, partials, spectral }) => {
                let width = if s.is_reduced() { 0.0 } else { cluster_width(cls.tol_gap, value.frobenius()) };
                let e = spectral.bottom_space(width);
                let compressed: Vec<SymMatrix> = partials.iter().map(|p| p.congruence(&e)).collect();
                rows.extend(rows_of(&ConeTerm::psd(e.cols(), &compressed).rows));
            }
            _ => {}
        }
    }
    let count = rows.len();
    let r = if count == 0 { 0 } else { rank(&rows, cfg.tol_rank) };
    if r == count {
        report.verdict = CqVerdict::Holds;
    } else {
        report.verdict = CqVerdict::Fails;
        report.witness = Some(CqWitness::RankDeficit { rank: r, count });
    }
    report.notes.push(format!("rank {r} of {count} rows"));
    Ok(report)
}

/// A nonzero `λ` with `J_hᵀλ ≈ 0`, if the equality gradients are dependent.
fn equality_dependence(pt: &EvaluatedPoint, tol_rank: f64) -> Option<Vec<f64>> {
    let grads = pt.eq_gradients();
    if grads.is_empty() || rank(&grads, tol_rank) == grads.len() {
        return None;
    }
    let dec = svd(&Mat::from_cols(&grads, pt.n()));
    dec.null_space(tol_rank).into_iter().next()
}

fn system(n: usize, eq: Vec<Vec<f64>>, conic: &ConicPart, rays: Vec<Vec<f64>>) -> ConicSystem {
    ConicSystem { n, eq_basis: eq, blocks: conic.terms.clone(), rays }
}

pub fn check_robinson(pt: &EvaluatedPoint, cls: &IndexClassification, cfg: &CqConfig) -> Result<CqReport, CqError> {
    let mut report = CqReport::new(CqKind::Robinson, cfg);
    if let Some(lambda) = equality_dependence(pt, cfg.tol_rank) {
        report.verdict = CqVerdict::Fails;
        report.witness = Some(CqWitness::EqualityDependence { lambda });
        return Ok(report);
    }
    let conic = conic_part(pt, cls);
    let reduced = reduced_part(pt, cls)?;
    let eq_index: Vec<usize> = (0..pt.h.len()).collect();
    let sys = system(pt.n(), pt.eq_gradients(), &conic, reduced.grads.clone());
    let cert = conic_dependence(&sys, cfg.budget, cfg.tol_cert)?;
    report.basis_eq = eq_index.clone();
    match cert.verdict {
        Verdict::Independent { .. } => report.verdict = CqVerdict::Holds,
        Verdict::Dependent => {
            let layout = WitnessLayout { eq_index: &eq_index, free_reduced: &[], conic: &conic, rays: &reduced.blocks };
            let w = block_witness(pt, &reduced, &layout, cert.witness.as_ref().expect("dependent carries witness"))?;
            report.verdict = CqVerdict::Fails;
            report.witness = Some(CqWitness::ConicDependence(w));
        }
        Verdict::Undecided => report.notes.push(undecided_note(&cert)),
    }
    report.certificate = Some(cert);
    Ok(report)
}

fn undecided_note(cert: &Certificate) -> String {
    format!("search undecided: best gap {:e}, best margin {:e}, {} iterations", cert.gap, cert.margin, cert.iterations)
}

struct Samples {
    points: Vec<Vec<f64>>,
    evaluated: Vec<EvaluatedPoint>,
}

fn draw_samples(prog: &ConicProgram, pt: &EvaluatedPoint, cfg: &CqConfig) -> Result<Samples, CqError> {
    let points = ball_samples(&pt.x, cfg.radius, cfg.samples, cfg.seed);
    let mut evaluated = Vec::with_capacity(points.len());
    for (index, x) in points.iter().enumerate() {
        evaluated.push(evaluate(prog, x).map_err(|source| CqError::Sample { index, source })?);
    }
    Ok(Samples { points, evaluated })
}

fn sampling_notes(report: &mut CqReport, cfg: &CqConfig) {
    report.sampling = Some(Sampling { radius: cfg.radius, samples: cfg.samples, seed: cfg.seed });
    report.notes.push(String::from("one sampling neighborhood is shared by all subsets"));
}

fn positive_sampling_note(report: &mut CqReport, cfg: &CqConfig) {
    report.notes.push(format!("no violation found in {} samples of radius {:e}", cfg.samples, cfg.radius));
}

/// Gradients of the chosen equalities and reduced blocks at another point,
/// using the reduction rules fixed at the reference point.
fn family_at(pt: &EvaluatedPoint, eq: &[usize], reduced: &ReducedPart, blocks: &[usize]) -> Result<Vec<Vec<f64>>, CqError> {
    let mut fam: Vec<Vec<f64>> = eq.iter().map(|&i| pt.jac_h.row(i).to_vec()).collect();
    for &j in blocks {
        let k = reduced.blocks.iter().position(|&b| b == j).expect("reduced block");
        fam.push(reduced_gradient(pt, j, reduced.rules[k])?.1);
    }
    Ok(fam)
}

fn rank_of(fam: &[Vec<f64>], tol: f64) -> usize {
    if fam.is_empty() {
        0
    } else {
        rank(fam, tol)
    }
}

/// Compares the rank of the equality gradients at each sample with the
/// rank at the point.
fn equality_rank_change(pt: &EvaluatedPoint, samples: &Samples, cfg: &CqConfig) -> Option<CqWitness> {
    let at_point = rank_of(&pt.eq_gradients(), cfg.tol_rank);
    for (s, sp) in samples.evaluated.iter().enumerate() {
        let r = rank_of(&sp.eq_gradients(), cfg.tol_rank);
        if r != at_point {
            return Some(CqWitness::RankChange { sample: samples.points[s].clone(), rank_at_point: at_point, rank_at_sample: r });
        }
    }
    None
}

pub fn check_rcpld(prog: &ConicProgram, pt: &EvaluatedPoint, cls: &IndexClassification, cfg: &CqConfig) -> Result<CqReport, CqError> {
    let mut report = CqReport::new(CqKind::Rcpld, cfg);
    sampling_notes(&mut report, cfg);
    let samples = draw_samples(prog, pt, cfg)?;
    if let Some(w) = equality_rank_change(pt, &samples, cfg) {
        report.verdict = CqVerdict::Fails;
        report.witness = Some(w);
        return Ok(report);
    }
    let eq_basis = if pt.h.is_empty() { Vec::new() } else { numerical_rank(&pt.eq_gradients(), cfg.tol_rank).basis };
    report.basis_eq = eq_basis.clone();
    let conic = conic_part(pt, cls);
    let reduced = reduced_part(pt, cls)?;
    let q = reduced.blocks.len();
    if q >= usize::BITS as usize || (1usize << q) > cfg.subset_cap {
        report.notes.push(format!("{q} reduced indices exceed the subset cap of {}", cfg.subset_cap));
        return Ok(report);
    }
    let eq_vectors: Vec<Vec<f64>> = eq_basis.iter().map(|&i| pt.jac_h.row(i).to_vec()).collect();
    let mut undecided = false;
    for mask in 0..(1usize << q) {
        let subset: Vec<usize> = (0..q).filter(|k| mask >> k & 1 == 1).map(|k| reduced.blocks[k]).collect();
        let rays: Vec<Vec<f64>> = (0..q).filter(|k| mask >> k & 1 == 1).map(|k| reduced.grads[k].clone()).collect();
        let cert = conic_dependence(&system(pt.n(), eq_vectors.clone(), &conic, rays), cfg.budget, cfg.tol_cert)?;
        let outcome = match cert.verdict {
            Verdict::Independent { margin } => SubsetOutcome::Independent { margin },
            Verdict::Undecided => {
                undecided = true;
                SubsetOutcome::Undecided
            }
            Verdict::Dependent => {
                let size = eq_basis.len() + subset.len();
                let mut broken = None;
                let points = core::iter::once(pt).chain(samples.evaluated.iter());
                for (s, sp) in points.enumerate() {
                    if rank_of(&family_at(sp, &eq_basis, &reduced, &subset)?, cfg.tol_rank) == size {
                        broken = Some(s);
                        break;
                    }
                }
                match broken {
                    None => SubsetOutcome::DependentPersistent,
                    Some(s) => {
                        let sample = if s == 0 { pt.x.clone() } else { samples.points[s - 1].clone() };
                        report.subsets.push(SubsetLog { subset: subset.clone(), outcome: SubsetOutcome::DependentBroken { sample: s } });
                        report.verdict = CqVerdict::Fails;
                        report.witness = Some(CqWitness::PersistenceBroken { subset, sample });
                        report.certificate = Some(cert);
                        return Ok(report);
                    }
                }
            }
        };
        report.subsets.push(SubsetLog { subset, outcome });
    }
    if undecided {
        report.notes.push(String::from("at least one subset query was undecided"));
    } else {
        report.verdict = CqVerdict::Holds;
        positive_sampling_note(&mut report, cfg);
    }
    Ok(report)
}

pub fn check_crsc(prog: &ConicProgram, pt: &EvaluatedPoint, cls: &IndexClassification, cfg: &CqConfig) -> Result<CqReport, CqError> {
    let mut report = CqReport::new(CqKind::Crsc, cfg);
    sampling_notes(&mut report, cfg);
    let conic = conic_part(pt, cls);
    let reduced = reduced_part(pt, cls)?;
    let eq_all = pt.eq_gradients();

    for (k, &j0) in reduced.blocks.iter().enumerate() {
        let target: Vec<f64> = reduced.grads[k].iter().map(|v| -v).collect();
        if cone_membership(&target, &eq_all, &reduced.grads, cfg.tol_cert)?.is_member() {
            report.j_minus.push(j0);
        } else {
            report.j_plus.push(j0);
        }
    }

    let p = eq_all.len();
    let mut family = eq_all.clone();
    for &j in &report.j_minus {
        let k = reduced.blocks.iter().position(|&b| b == j).expect("reduced block");
        family.push(reduced.grads[k].clone());
    }
    let basis = greedy_basis(&family, cfg.tol_rank);
    report.basis_eq = basis.iter().copied().filter(|&i| i < p).collect();
    report.basis_reduced = basis.iter().filter(|&&i| i >= p).map(|&i| report.j_minus[i - p]).collect();

    let samples = draw_samples(prog, pt, cfg)?;
    let all_eq: Vec<usize> = (0..p).collect();
    let at_point = rank_of(&family, cfg.tol_rank);
    for (s, sp) in samples.evaluated.iter().enumerate() {
        let r = rank_of(&family_at(sp, &all_eq, &reduced, &report.j_minus)?, cfg.tol_rank);
        if r != at_point {
            report.verdict = CqVerdict::Fails;
            report.witness = Some(CqWitness::RankChange { sample: samples.points[s].clone(), rank_at_point: at_point, rank_at_sample: r });
            return Ok(report);
        }
    }

    let eq_vectors: Vec<Vec<f64>> = basis.iter().map(|&i| family[i].clone()).collect();
    let rays: Vec<Vec<f64>> = report
        .j_plus
        .iter()
        .map(|j| reduced.grads[reduced.blocks.iter().position(|b| b == j).expect("reduced block")].clone())
        .collect();
    let cert = conic_dependence(&system(pt.n(), eq_vectors, &conic, rays), cfg.budget, cfg.tol_cert)?;
    match cert.verdict {
        Verdict::Independent { .. } => {
            report.verdict = CqVerdict::Holds;
            positive_sampling_note(&mut report, cfg);
        }
        Verdict::Dependent => {
            let layout = WitnessLayout {
                eq_index: &report.basis_eq,
                free_reduced: &report.basis_reduced,
                conic: &conic,
                rays: &report.j_plus,
            };
            let w = block_witness(pt, &reduced, &layout, cert.witness.as_ref().expect("dependent carries witness"))?;
            report.verdict = CqVerdict::Fails;
            report.witness = Some(CqWitness::ConicDependence(w));
        }
        Verdict::Undecided => report.notes.push(undecided_note(&cert)),
    }
    report.certificate = Some(cert);
    Ok(report)
}

pub fn check(kind: CqKind, prog: &ConicProgram, pt: &EvaluatedPoint, cls: &IndexClassification, cfg: &CqConfig) -> Result<CqReport, CqError> {
    match kind {
        CqKind::Nondegeneracy => check_nondegeneracy(pt, cls, cfg),
        CqKind::Robinson => check_robinson(pt, cls, cfg),
        CqKind::Rcpld => check_rcpld(prog, pt, cls, cfg),
        CqKind::Crsc => check_crsc(prog, pt, cls, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::classify;
    use crate::cone::ConeKind;
    use crate::expr::parse;
    use crate::problem::{ConicBlock, Equality};
    use alloc::string::ToString;

    fn block(name: &str, kind: ConeKind, entries: &[&str], n: usize) -> ConicBlock {
        ConicBlock { name: name.to_string(), kind, entries: entries.iter().map(|e| parse(e, n).unwrap()).collect() }
    }

    fn run(prog: &ConicProgram, x: &[f64]) -> Vec<CqReport> {
        let pt = evaluate(prog, x).unwrap();
        let cls = classify(&pt, 1e-8, 1e-6).unwrap();
        CqKind::ALL.iter().map(|&k| check(k, prog, &pt, &cls, &CqConfig::default()).unwrap()).collect()
    }

    #[test]
    fn boundary_block_with_vanishing_phi() {
        let prog = ConicProgram::new(1, parse("(x1-1)^2", 1).unwrap(), vec![], vec![block("g", ConeKind::Soc(2), &["x1", "x1"], 1)]).unwrap();
        let r = run(&prog, &[1.0]);
        let v: Vec<CqVerdict> = r.iter().map(|r| r.verdict).collect();
        assert_eq!(v, vec![CqVerdict::Fails, CqVerdict::Fails, CqVerdict::Holds, CqVerdict::Holds]);
        assert_eq!(r[3].j_minus, vec![0]);
        assert!(r[3].basis_reduced.is_empty());
    }

    #[test]
    fn opposite_eigenvalue_blocks() {
        let prog = ConicProgram::new(
            1,
            parse("x1", 1).unwrap(),
            vec![],
            vec![
                block("g1", ConeKind::Psd(2), &["0.5*(x1+1)", "0.5*(x1-1)", "0.5*(x1+1)"], 1),
                block("g2", ConeKind::Psd(2), &["0.5*(1-x1)", "0.5*(-x1-1)", "0.5*(1-x1)"], 1),
            ],
        )
        .unwrap();
        let r = run(&prog, &[0.0]);
        let v: Vec<CqVerdict> = r.iter().map(|r| r.verdict).collect();
        assert_eq!(v, vec![CqVerdict::Fails, CqVerdict::Fails, CqVerdict::Holds, CqVerdict::Holds]);
        assert_eq!(r[3].j_minus, vec![0, 1]);
        assert_eq!(r[3].basis_reduced.len(), 1);
        match &r[1].witness {
            Some(CqWitness::ConicDependence(w)) => {
                assert!(w.residual <= 1e-7);
                assert!(w.cone_distance <= 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nonzero_phi_gradient_satisfies_robinson() {
        let prog = ConicProgram::new(1, parse("x1", 1).unwrap(), vec![], vec![block("g", ConeKind::Soc(2), &["x1", "0"], 1)]).unwrap();
        let r = run(&prog, &[1.0]);
        assert_eq!(r[1].verdict, CqVerdict::Holds);
    }

    #[test]
    fn vanishing_equality_gradient_breaks_rcpld() {
        let prog = ConicProgram::new(1, parse("0", 1).unwrap(), vec![Equality { name: "h".to_string(), expr: parse("x1^2", 1).unwrap() }], vec![]).unwrap();
        let r = run(&prog, &[0.0]);
        assert_eq!(r[2].verdict, CqVerdict::Fails);
        assert!(matches!(r[2].witness, Some(CqWitness::RankChange { rank_at_point: 0, rank_at_sample: 1, .. })));
    }

    #[test]
    fn single_injective_ray_satisfies_crsc() {
        let prog = ConicProgram::new(2, parse("0", 2).unwrap(), vec![], vec![block("g", ConeKind::Soc(1), &["x1"], 2)]).unwrap();
        let r = run(&prog, &[0.0, 0.0]);
        assert!(r[3].j_minus.is_empty());
        assert_eq!(r[3].j_plus, vec![0]);
        assert_eq!(r[3].verdict, CqVerdict::Holds);
    }
}
