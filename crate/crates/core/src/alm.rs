//! Safeguarded augmented Lagrangian method with a gradient-descent inner
//! solver. Every outer iterate is emitted as an AKKT trace record.

use alloc::vec;
use alloc::vec::Vec;

use crate::akkt::{tail_window, AkktRecord, AkktTrace, BlockMultiplier};
use crate::classify::{classify, DEFAULT_TOL_GAP};
use crate::cone::{ConeError, DEFAULT_TOL_ACT};
use crate::math::{axpy, dot, norm, norm_inf, sub};
use crate::problem::{evaluate, evaluate_values, ConeValue, ConicProgram, ProblemError};
use crate::reduction::ray_coefficient;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlmConfig {
    pub rho0: f64,
    pub gamma: f64,
    /// Componentwise bound on the safeguarded `λ̂`.
    pub lambda_cap: f64,
    /// Bound on the largest coordinate of each safeguarded `μ̂_j`.
    pub mu_cap: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// `ε_k = max(eps0·2^{-k}, eps_min)`
    pub eps0: f64,
    pub eps_min: f64,
    /// Outer iterations always performed before declaring convergence.
    pub min_outer: usize,
    /// Residual and infeasibility bound that must hold on every iterate of
    /// the final `tail_window`.
    pub stop_tol: f64,
    pub unbounded_below: f64,
}

impl Default for AlmConfig {
    fn default() -> Self {
        AlmConfig {
            rho0: 1.0,
            gamma: 4.0,
            lambda_cap: 1e6,
            mu_cap: 1e6,
            max_outer: 100,
            max_inner: 20_000,
            eps0: 0.1,
            eps_min: 1e-10,
            min_outer: 4,
            stop_tol: 1e-9,
            unbounded_below: -1e12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlmError {
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error("starting point has a non-finite entry")]
    NonFinite,
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

impl AlmConfig {
    pub fn validate(&self) -> Result<(), AlmError> {
        if !(self.rho0 > 0.0) {
            return Err(AlmError::Config("rho0 must be positive"));
        }
        if !(self.gamma > 1.0) {
            return Err(AlmError::Config("gamma must exceed 1"));
        }
        if !(self.eps0 > 0.0 && self.eps_min > 0.0 && self.eps_min <= self.eps0) {
            return Err(AlmError::Config("need 0 < eps_min <= eps0"));
        }
        if !(self.lambda_cap > 0.0 && self.mu_cap > 0.0) {
            return Err(AlmError::Config("caps must be positive"));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(AlmError::Config("iteration limits must be positive"));
        }
        Ok(())
    }

    pub fn inner_tol(&self, k: usize) -> f64 {
        let e = self.eps0 * crate::math::powi(0.5, k.min(1000) as u32);
        e.max(self.eps_min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlmStatus {
    Converged,
    IterationLimit,
    Stalled,
    Unbounded,
}

impl AlmStatus {
    pub fn name(&self) -> &'static str {
        match self {
            AlmStatus::Converged => "converged",
            AlmStatus::IterationLimit => "iteration-limit",
            AlmStatus::Stalled => "stalled",
            AlmStatus::Unbounded => "unbounded",
        }
    }
}

/// Progress of one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterLog {
    pub k: usize,
    pub rho: f64,
    pub f: f64,
    /// `‖∇L_ρ‖` at the accepted inner iterate, equal to the stationarity
    /// residual of the updated multipliers.
    pub residual: f64,
    pub infeasibility: f64,
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlmResult {
    pub status: AlmStatus,
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: Vec<ConeValue>,
    pub trace: AkktTrace,
    pub log: Vec<OuterLog>,
}

/// Safeguarded multipliers and penalty of one outer iteration.
#[derive(Debug, Clone)]
pub struct AlmState {
    pub rho: f64,
    pub lambda: Vec<f64>,
    pub mu: Vec<ConeValue>,
}

fn shifted(mu: &ConeValue, rho: f64, g: &ConeValue) -> Result<ConeValue, ConeError> {
    let mut v = mu.to_flat();
    axpy(-rho, &g.to_flat(), &mut v);
    ConeValue::from_flat(mu.kind(), &v)
}

/// `L_ρ(x) = f + λ̂ᵀh + ρ/2‖h‖² + 1/(2ρ) Σ (‖Π(μ̂_j − ρ g_j)‖² − ‖μ̂_j‖²)`.
/// Evaluation failures (domain errors) are reported as `+∞`.
pub fn lagrangian_value(prog: &ConicProgram, st: &AlmState, x: &[f64]) -> Result<f64, AlmError> {
    let pv = match evaluate_values(prog, x) {
        Ok(pv) => pv,
        Err(ProblemError::Eval { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e.into()),
    };
    let rho = st.rho;
    let mut l = pv.f + dot(&st.lambda, &pv.h) + 0.5 * rho * dot(&pv.h, &pv.h);
    for (m, g) in st.mu.iter().zip(&pv.blocks) {
        let p = shifted(m, rho, g)?.project()?;
        let (pn, mn) = (p.norm(), m.norm());
        l += (pn * pn - mn * mn) / (2.0 * rho);
    }
    Ok(if l.is_nan() { f64::INFINITY } else { l })
}

/// Gradient of `L_ρ` together with the multipliers it implies,
/// `λ̂ + ρh` and `Π(μ̂_j − ρg_j)`:
/// `∇L_ρ = ∇f + J_hᵀ(λ̂ + ρh) − Σ J_gᵀ Π(μ̂_j − ρ g_j)`.
pub fn lagrangian_gradient(prog: &ConicProgram, st: &AlmState, x: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>, Vec<ConeValue>), AlmError> {
    let pt = evaluate(prog, x)?;
    let lambda: Vec<f64> = st.lambda.iter().zip(&pt.h).map(|(l, h)| l + st.rho * h).collect();
    let mut mu = Vec::with_capacity(pt.blocks.len());
    let mut grad = pt.grad_f.clone();
    axpy(1.0, &pt.jac_h.tr_mul_vec(&lambda), &mut grad);
    let mut value = pt.f + dot(&st.lambda, &pt.h) + 0.5 * st.rho * dot(&pt.h, &pt.h);
    for (m, b) in st.mu.iter().zip(&pt.blocks) {
        let p = shifted(m, st.rho, &b.value())?.project()?;
        axpy(-1.0, &b.adjoint(&p), &mut grad);
        let (pn, mn) = (p.norm(), m.norm());
        value += (pn * pn - mn * mn) / (2.0 * st.rho);
        mu.push(p);
    }
    Ok((value, grad, lambda, mu))
}

fn cap_cone(v: &ConeValue, cap: f64) -> ConeValue {
    let flat = v.to_flat();
    let big = norm_inf(&flat);
    if big <= cap {
        return v.clone();
    }
    // scaling keeps the element in its cone
    let s = cap / big;
    ConeValue::from_flat(v.kind(), &flat.iter().map(|c| c * s).collect::<Vec<_>>()).expect("same kind")
}

enum Inner {
    Done { x: Vec<f64>, iterations: usize },
    Stalled { x: Vec<f64>, iterations: usize },
    Unbounded { x: Vec<f64>, iterations: usize },
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;
const ROUNDING: f64 = 64.0 * f64::EPSILON;

fn inner_solve(prog: &ConicProgram, st: &AlmState, x0: &[f64], eps: f64, cfg: &AlmConfig) -> Result<Inner, AlmError> {
    let mut x = x0.to_vec();
    let (mut val, mut g, ..) = lagrangian_gradient(prog, st, &x)?;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut t_prev = 1.0 / norm(&g).max(1.0);
    for it in 0..cfg.max_inner {
        let gn = norm(&g);
        if gn <= eps {
            return Ok(Inner::Done { x, iterations: it });
        }
        if val <= cfg.unbounded_below {
            return Ok(Inner::Unbounded { x, iterations: it });
        }
        let mut t = match &prev {
            Some((s, y)) => {
                let sy = dot(s, y);
                if sy > 0.0 {
                    dot(s, s) / sy
                } else {
                    2.0 * t_prev
                }
            }
            None => t_prev,
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect();
            let decrease = ARMIJO * t * gn * gn;
            if decrease <= ROUNDING * (1.0 + val.abs()) {
                // the decrease is invisible in L; ask for a smaller gradient instead
                let (vc, gc, ..) = lagrangian_gradient(prog, st, &cand)?;
                if norm(&gc) < gn && vc <= val + ROUNDING * (1.0 + val.abs()) {
                    accepted = Some((cand, vc, gc));
                    break;
                }
            } else if lagrangian_value(prog, st, &cand)? <= val - decrease {
                let (vc, gc, ..) = lagrangian_gradient(prog, st, &cand)?;
                accepted = Some((cand, vc, gc));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, vn, gnew)) = accepted else {
            return Ok(if gn <= eps.max(1e-6) { Inner::Done { x, iterations: it } } else { Inner::Stalled { x, iterations: it } });
        };
        prev = Some((sub(&xn, &x), sub(&gnew, &g)));
        t_prev = t;
        x = xn;
        val = vn;
        g = gnew;
    }
    Ok(Inner::Done { x, iterations: cfg.max_inner })
}

/// Runs the method from `x0`. `progress` sees each outer iteration.
pub fn solve(prog: &ConicProgram, x0: &[f64], cfg: &AlmConfig, progress: &mut dyn FnMut(&OuterLog)) -> Result<AlmResult, AlmError> {
    cfg.validate()?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(AlmError::NonFinite);
    }
    if x0.len() != prog.n() {
        return Err(ProblemError::PointDimension { got: x0.len(), n: prog.n() }.into());
    }
    let p = prog.equalities().len();
    let mut st = AlmState { rho: cfg.rho0, lambda: vec![0.0; p], mu: prog.blocks().iter().map(|b| ConeValue::zero(b.kind)).collect() };
    let mut x = x0.to_vec();
    let mut records = Vec::new();
    let mut log = Vec::new();
    let mut v_prev = f64::INFINITY;
    let mut status = AlmStatus::IterationLimit;
    let mut last = (vec![0.0; p], st.mu.clone());
    let mut settled = 0;

    for k in 0..cfg.max_outer {
        let eps = cfg.inner_tol(k);
        let (xn, iterations, inner_status) = match inner_solve(prog, &st, &x, eps, cfg)? {
            Inner::Done { x, iterations } => (x, iterations, None),
            Inner::Stalled { x, iterations } => (x, iterations, Some(AlmStatus::Stalled)),
            Inner::Unbounded { x, iterations } => (x, iterations, Some(AlmStatus::Unbounded)),
        };
        x = xn;
        let (_, grad, lambda, mu) = lagrangian_gradient(prog, &st, &x)?;
        let pt = evaluate(prog, &x)?;
        let mut infeas = norm(&pt.h);
        for (m_new, m_old) in mu.iter().zip(&st.mu) {
            infeas = infeas.max(norm(&sub(&m_new.to_flat(), &m_old.to_flat())) / st.rho);
        }
        let entry = OuterLog { k, rho: st.rho, f: pt.f, residual: norm(&grad), infeasibility: infeas, inner_iterations: iterations };
        progress(&entry);
        log.push(entry);
        records.push(AkktRecord { k, x: x.clone(), lambda: lambda.clone(), multipliers: mu.iter().cloned().map(BlockMultiplier::Cone).collect() });
        last = (lambda.clone(), mu.clone());

        if let Some(s) = inner_status {
            status = s;
            break;
        }
        if pt.f <= cfg.unbounded_below {
            status = AlmStatus::Unbounded;
            break;
        }
        settled = if entry.residual <= cfg.stop_tol && infeas <= cfg.stop_tol { settled + 1 } else { 0 };
        if k + 1 >= cfg.min_outer && settled >= tail_window(k + 1) {
            status = AlmStatus::Converged;
            break;
        }
        if infeas > cfg.stop_tol && infeas > 0.5 * v_prev {
            st.rho *= cfg.gamma;
        }
        v_prev = infeas;
        st.lambda = lambda.iter().map(|l| l.clamp(-cfg.lambda_cap, cfg.lambda_cap)).collect();
        st.mu = mu.iter().map(|m| cap_cone(m, cfg.mu_cap)).collect();
    }

    split_reduced(prog, &x, &mut records);
    Ok(AlmResult { status, x, lambda: last.0, mu: last.1, trace: AkktTrace { records }, log })
}

/// Rewrites multipliers of blocks reducible at the final point as ray
/// coefficients. Left untouched when the final point cannot be classified.
fn split_reduced(prog: &ConicProgram, x: &[f64], records: &mut [AkktRecord]) {
    let Ok(pt) = evaluate(prog, x) else { return };
    let Ok(cls) = classify(&pt, DEFAULT_TOL_ACT, DEFAULT_TOL_GAP) else { return };
    let reduced = cls.reduced();
    if reduced.is_empty() {
        return;
    }
    for r in records.iter_mut() {
        let Ok(pk) = evaluate(prog, &r.x) else { continue };
        for &j in &reduced {
            if let BlockMultiplier::Cone(m) = &r.multipliers[j] {
                r.multipliers[j] = BlockMultiplier::Ray(ray_coefficient(&pk, j, m));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::akkt::{certify_akkt, AkktConfig, Certification};
    use crate::cone::ConeKind;
    use crate::expr::parse;
    use crate::problem::ConicBlock;
    use alloc::string::ToString;

    fn example_51(objective: &str) -> ConicProgram {
        let g = ConicBlock { name: "g".to_string(), kind: ConeKind::Soc(2), entries: vec![parse("x1", 1).unwrap(), parse("x1", 1).unwrap()] };
        ConicProgram::new(1, parse(objective, 1).unwrap(), vec![], vec![g]).unwrap()
    }

    #[test]
    fn boundary_minimizer_is_reached_and_certified() {
        let prog = example_51("(x1-1)^2");
        let res = solve(&prog, &[3.0], &AlmConfig::default(), &mut |_| {}).unwrap();
        assert_eq!(res.status, AlmStatus::Converged);
        assert!((res.x[0] - 1.0).abs() <= 1e-6);
        let c = certify_akkt(&prog, &[1.0], &res.trace, &AkktConfig::default()).unwrap();
        assert!(matches!(c, Certification::Certified { .. }), "{c:?}");
    }

    #[test]
    fn unconstrained_quadratic_first_record_is_optimal() {
        let prog = ConicProgram::new(2, parse("(x1-2)^2 + (x2+1)^2", 2).unwrap(), vec![], vec![]).unwrap();
        let res = solve(&prog, &[0.0, 0.0], &AlmConfig::default(), &mut |_| {}).unwrap();
        assert_eq!(res.status, AlmStatus::Converged);
        let first = &res.trace.records[0].x;
        assert!((first[0] - 2.0).abs() < 1e-9 && (first[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn linear_objective_without_constraints_is_unbounded() {
        let prog = ConicProgram::new(1, parse("x1", 1).unwrap(), vec![], vec![]).unwrap();
        let res = solve(&prog, &[0.0], &AlmConfig::default(), &mut |_| {}).unwrap();
        assert_eq!(res.status, AlmStatus::Unbounded);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = AlmConfig { gamma: 1.0, ..AlmConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn two_psd_blocks_pipeline() {
        use crate::akkt::{recover_kkt, RecoveryVerdict};
        let b = |name: &str, e: [&str; 3]| ConicBlock { name: name.to_string(), kind: ConeKind::Psd(2), entries: e.iter().map(|s| parse(s, 1).unwrap()).collect() };
        let g1 = b("g1", ["0.5*(x1+1)", "0.5*(x1-1)", "0.5*(x1+1)"]);
        let g2 = b("g2", ["0.5*(1-x1)", "0.5*(-x1-1)", "0.5*(1-x1)"]);
        let prog = ConicProgram::new(1, parse("x1", 1).unwrap(), vec![], vec![g1, g2]).unwrap();
        let res = solve(&prog, &[0.5], &AlmConfig::default(), &mut |_| {}).unwrap();
        assert_eq!(res.status, AlmStatus::Converged, "{:?}", res.log);
        assert!(res.x[0].abs() <= 1e-6);
        let c = certify_akkt(&prog, &[0.0], &res.trace, &AkktConfig::default()).unwrap();
        assert!(matches!(c, Certification::Certified { .. }), "{c:?}");
        let out = recover_kkt(&prog, &[0.0], &res.trace, &AkktConfig::default()).unwrap();
        assert!(matches!(out.verdict, RecoveryVerdict::Kkt { .. }), "{out:?}");
    }
}
