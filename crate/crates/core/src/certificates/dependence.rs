use alloc::vec;
use alloc::vec::Vec;

use crate::cone::{eig_sym, ConeError, ConeKind, SymMatrix};
use crate::linalg::{complement_projector, lstsq, svd, Mat};
use crate::math::{axpy, dist, dot, norm, sqrt};

pub const DEFAULT_TOL_CERT: f64 = 1e-7;
pub const DEFAULT_BUDGET: usize = 20000;

/// Share of the budget spent on the first independence attempt.
const EARLY_ASCENT_SHARE: usize = 10;
const STAGNATION_WINDOW: usize = 100;

/// One conic block of a dependence query. `rows` is `coord_len × n`; the
/// block contributes `rowsᵀ y` for coordinates `y` of a cone element
/// (svec coordinates for PSD).
#[derive(Debug, Clone, PartialEq)]
pub struct ConeTerm {
    pub kind: ConeKind,
    pub rows: Mat,
}

impl ConeTerm {
    pub fn soc(jacobian: Mat) -> Self {
        ConeTerm { kind: ConeKind::Soc(jacobian.rows()), rows: jacobian }
    }

    /// PSD block of order `m` with partial derivatives `∂_i g`.
    pub fn psd(m: usize, partials: &[SymMatrix]) -> Self {
        let len = m * (m + 1) / 2;
        let mut rows = Mat::zeros(len, partials.len());
        for (i, p) in partials.iter().enumerate() {
            for (k, v) in p.svec().into_iter().enumerate() {
                rows[(k, i)] = v;
            }
        }
        ConeTerm { kind: ConeKind::Psd(m), rows }
    }

    pub fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        self.rows.tr_mul_vec(y)
    }

    pub fn image(&self, d: &[f64]) -> Vec<f64> {
        self.rows.mul_vec(d)
    }
}

/// `Σ eq_basis·λ + Σ rowsᵀ μ + Σ rays·α = 0` with `λ` free, `μ` in the
/// block cones and `α ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicSystem {
    pub n: usize,
    pub eq_basis: Vec<Vec<f64>>,
    pub blocks: Vec<ConeTerm>,
    pub rays: Vec<Vec<f64>>,
}

impl ConicSystem {
    pub fn new(n: usize) -> Self {
        ConicSystem { n, eq_basis: Vec::new(), blocks: Vec::new(), rays: Vec::new() }
    }

    fn dim(&self) -> usize {
        self.eq_basis.len() + self.blocks.iter().map(|b| b.kind.coord_len()).sum::<usize>() + self.rays.len()
    }

    fn matrix(&self) -> Mat {
        let mut cols: Vec<Vec<f64>> = self.eq_basis.clone();
        for b in &self.blocks {
            for k in 0..b.rows.rows() {
                cols.push(b.rows.row(k).to_vec());
            }
        }
        cols.extend(self.rays.iter().cloned());
        Mat::from_cols(&cols, self.n)
    }

    fn weights(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.eq_basis.len()];
        for b in &self.blocks {
            c.extend(b.kind.normalization_weights());
        }
        c.extend(core::iter::repeat_n(1.0, self.rays.len()));
        c
    }

    fn split(&self, z: &[f64]) -> Witness {
        let p = self.eq_basis.len();
        let mut off = p;
        let mut mu = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let len = b.kind.coord_len();
            mu.push(z[off..off + len].to_vec());
            off += len;
        }
        Witness { lambda: z[..p].to_vec(), mu, alpha: z[off..].to_vec() }
    }

    fn project_cone(&self, z: &mut [f64]) -> Result<(), ConeError> {
        let mut off = self.eq_basis.len();
        for b in &self.blocks {
            let len = b.kind.coord_len();
            b.kind.project_coords(&mut z[off..off + len])?;
            off += len;
        }
        for v in &mut z[off..] {
            *v = v.max(0.0);
        }
        Ok(())
    }
}

/// Coefficients of a conic combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub lambda: Vec<f64>,
    /// Cone coordinates per block (svec for PSD).
    pub mu: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
}

impl Witness {
    pub fn scaled(&self, s: f64) -> Witness {
        let sc = |v: &Vec<f64>| v.iter().map(|x| x * s).collect::<Vec<f64>>();
        Witness { lambda: sc(&self.lambda), mu: self.mu.iter().map(sc).collect(), alpha: sc(&self.alpha) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Dependent,
    /// A direction `d` with `eq_basisᵀd = 0`, `‖d‖ ≤ 1` puts every block
    /// image at least `margin` inside its cone and every ray at least
    /// `margin` positive; hence only the trivial combination vanishes.
    Independent { margin: f64 },
    Undecided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub direction: Option<Vec<f64>>,
    /// Combination residual of the witness, or of the best iterate found.
    pub residual: f64,
    pub normalization: f64,
    /// Smallest distance between the affine set and the cone product seen.
    pub gap: f64,
    /// Best independence margin seen.
    pub margin: f64,
    pub iterations: usize,
}

/// Direct substitution: residual of the combination, worst cone violation
/// (projection distance), most negative ray coefficient, normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessCheck {
    pub residual: f64,
    pub cone_distance: f64,
    pub min_alpha: f64,
    pub normalization: f64,
}

impl WitnessCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.residual <= tol && self.cone_distance <= tol && self.min_alpha >= -tol && self.normalization >= 0.5
    }
}

fn soc_projection_distance(v: &[f64]) -> f64 {
    let t = v[0];
    let r = norm(&v[1..]);
    if t >= r {
        0.0
    } else if t <= -r {
        norm(v)
    } else {
        (r - t) / core::f64::consts::SQRT_2
    }
}

fn psd_projection_distance(m: usize, v: &[f64]) -> Result<f64, ConeError> {
    let sd = eig_sym(&SymMatrix::from_svec(m, v))?;
    Ok(sqrt(sd.values.iter().filter(|&&l| l < 0.0).map(|l| l * l).sum()))
}

pub fn check_witness(sys: &ConicSystem, w: &Witness) -> Result<WitnessCheck, ConeError> {
    let mut comb = vec![0.0; sys.n];
    for (v, l) in sys.eq_basis.iter().zip(&w.lambda) {
        axpy(*l, v, &mut comb);
    }
    let mut cone_distance: f64 = 0.0;
    let mut normalization = 0.0;
    for (b, y) in sys.blocks.iter().zip(&w.mu) {
        axpy(1.0, &b.adjoint(y), &mut comb);
        let d = match b.kind {
            ConeKind::Soc(_) => {
                normalization += y[0];
                soc_projection_distance(y)
            }
            ConeKind::Psd(m) => {
                normalization += SymMatrix::from_svec(m, y).trace();
                psd_projection_distance(m, y)?
            }
        };
        cone_distance = cone_distance.max(d);
    }
    let mut min_alpha = f64::INFINITY;
    for (r, a) in sys.rays.iter().zip(&w.alpha) {
        axpy(*a, r, &mut comb);
        normalization += a;
        min_alpha = min_alpha.min(*a);
    }
    Ok(WitnessCheck { residual: norm(&comb), cone_distance, min_alpha, normalization })
}

/// Smallest margin of `d`: block images measured by
/// [`ConeKind::margin`], rays by `⟨r, d⟩`. Also returns a supergradient.
pub fn direction_margin(sys: &ConicSystem, d: &[f64]) -> Result<(f64, Vec<f64>), ConeError> {
    let mut t = f64::INFINITY;
    let mut g = vec![0.0; sys.n];
    for b in &sys.blocks {
        let u = b.image(d);
        let m = b.kind.margin(&u)?;
        if m < t {
            t = m;
            g = b.adjoint(&b.kind.margin_supergradient(&u)?);
        }
    }
    for r in &sys.rays {
        let m = dot(r, d);
        if m < t {
            t = m;
            g = r.clone();
        }
    }
    Ok((t, g))
}

/// Independent check of an independence direction: returns its margin, or
/// `None` if it is not admissible.
pub fn check_direction(sys: &ConicSystem, d: &[f64]) -> Result<Option<f64>, ConeError> {
    if norm(d) > 1.0 + 1e-12 {
        return Ok(None);
    }
    for v in &sys.eq_basis {
        if dot(v, d).abs() > 1e-12 * norm(v).max(1.0) {
            return Ok(None);
        }
    }
    Ok(Some(direction_margin(sys, d)?.0))
}

struct Ascent<'a> {
    sys: &'a ConicSystem,
    proj: Mat,
    best_t: f64,
    best_d: Option<Vec<f64>>,
}

impl<'a> Ascent<'a> {
    fn admissible(&self, d: &[f64]) -> Option<Vec<f64>> {
        let pd = self.proj.mul_vec(d);
        let nd = norm(&pd);
        (nd > 0.0 && nd.is_finite()).then(|| pd.iter().map(|v| v / nd).collect())
    }

    fn consider(&mut self, d: &[f64]) -> Result<(), ConeError> {
        if let Some(u) = self.admissible(d) {
            let (t, _) = direction_margin(self.sys, &u)?;
            if t > self.best_t {
                self.best_t = t;
                self.best_d = Some(u);
            }
        }
        Ok(())
    }

    /// Projected supergradient ascent on the unit sphere; returns iterations.
    fn run(&mut self, iters: usize, goal: f64) -> Result<usize, ConeError> {
        let Some(mut d) = self.best_d.clone() else { return Ok(0) };
        for k in 0..iters {
            if self.best_t > goal {
                return Ok(k);
            }
            let (t, g) = direction_margin(self.sys, &d)?;
            if t > self.best_t {
                self.best_t = t;
                self.best_d = Some(d.clone());
            }
            let pg = self.proj.mul_vec(&g);
            let ng = norm(&pg);
            if ng == 0.0 {
                return Ok(k + 1);
            }
            let step = 0.5 / sqrt((k + 1) as f64);
            axpy(step / ng, &pg, &mut d);
            match self.admissible(&d) {
                Some(u) => d = u,
                None => return Ok(k + 1),
            }
        }
        Ok(iters)
    }
}

/// Decides whether the homogeneous system admits a nonzero solution.
///
/// Dependence is searched by alternating projections between the cone
/// product and the affine set `{Mz = 0, cᵀz = 1}` (`c` the normalization
/// weights); independence by maximizing the margin of a direction. Both
/// outcomes are re-verified independently of the search.
pub fn conic_dependence(sys: &ConicSystem, budget: usize, tol_cert: f64) -> Result<Certificate, ConeError> {
    let n = sys.n;
    if sys.blocks.is_empty() && sys.rays.is_empty() {
        return Ok(Certificate {
            verdict: Verdict::Independent { margin: 1.0 },
            witness: None,
            direction: None,
            residual: 0.0,
            normalization: 0.0,
            gap: f64::INFINITY,
            margin: 1.0,
            iterations: 0,
        });
    }
    let goal = 10.0 * tol_cert;
    let m = sys.matrix();
    let c = sys.weights();
    let dim = sys.dim();

    let mut asc = Ascent { sys, proj: complement_projector(&sys.eq_basis, n, 1e-12), best_t: f64::NEG_INFINITY, best_d: None };
    let independent = |asc: &Ascent, used: usize, gap: f64, residual: f64| -> Result<Option<Certificate>, ConeError> {
        if asc.best_t > goal {
            let d = asc.best_d.clone().expect("margin found with a direction");
            if let Some(t) = check_direction(sys, &d)? {
                if t > goal {
                    return Ok(Some(Certificate {
                        verdict: Verdict::Independent { margin: t },
                        witness: None,
                        direction: Some(d),
                        residual,
                        normalization: 0.0,
                        gap,
                        margin: t,
                        iterations: used,
                    }));
                }
            }
        }
        Ok(None)
    };

    // dual candidates: Mᵀw = c, then a spread of the block identities
    let mt = m.transpose();
    asc.consider(&lstsq(&mt, &c, 1e-13))?;
    let mut spread = vec![0.0; n];
    for b in &sys.blocks {
        let e = b.kind.normalization_weights();
        axpy(1.0, &b.adjoint(&e), &mut spread);
    }
    for r in &sys.rays {
        axpy(1.0, r, &mut spread);
    }
    asc.consider(&spread)?;
    let mut used = asc.run(budget / EARLY_ASCENT_SHARE, goal)?;
    if let Some(cert) = independent(&asc, used, f64::INFINITY, f64::INFINITY)? {
        return Ok(cert);
    }

    // alternating projections
    let mut a = Mat::zeros(n + 1, dim);
    for i in 0..n {
        for j in 0..dim {
            a[(i, j)] = m[(i, j)];
        }
    }
    for j in 0..dim {
        a[(n, j)] = c[j];
    }
    let dec = svd(&a);
    let anorm = dec.s.first().copied().unwrap_or(0.0).max(1.0);
    let mut b = vec![0.0; n + 1];
    b[n] = 1.0;
    let project_affine = |z: &[f64]| -> Vec<f64> {
        let r: Vec<f64> = a.mul_vec(z).iter().zip(&b).map(|(x, y)| x - y).collect();
        let corr = dec.solve(&r, 1e-13);
        z.iter().zip(&corr).map(|(x, y)| x - y).collect()
    };

    let mut z = vec![0.0; dim];
    {
        let parts = sys.blocks.len() + sys.rays.len();
        let share = 1.0 / parts as f64;
        let mut off = sys.eq_basis.len();
        for bl in &sys.blocks {
            let w = bl.kind.normalization_weights();
            let total: f64 = w.iter().sum();
            for (k, wk) in w.iter().enumerate() {
                z[off + k] = share * wk / total;
            }
            off += w.len();
        }
        for v in &mut z[off..] {
            *v = share;
        }
    }

    let mut best_gap = f64::INFINITY;
    let mut best_residual = f64::INFINITY;
    let mut window_gap = f64::INFINITY;
    let mut last = (z.clone(), z.clone());
    let ap_budget = budget.saturating_sub(used);
    let mut ap_used = 0;
    let affine_consistent = {
        let zl = project_affine(&z);
        dist(&a.mul_vec(&zl), &b) <= 1e-9 * anorm
    };
    if affine_consistent {
        while ap_used < ap_budget {
            ap_used += 1;
            let zl = project_affine(&z);
            let mut zc = zl.clone();
            sys.project_cone(&mut zc)?;
            let gap = dist(&zl, &zc);
            best_gap = best_gap.min(gap);
            if gap <= tol_cert {
                for cand in [&zc, &zl] {
                    let w = sys.split(cand);
                    let chk = check_witness(sys, &w)?;
                    best_residual = best_residual.min(chk.residual);
                    if chk.passes(tol_cert) {
                        return Ok(Certificate {
                            verdict: Verdict::Dependent,
                            witness: Some(w),
                            direction: None,
                            residual: chk.residual,
                            normalization: chk.normalization,
                            gap,
                            margin: asc.best_t,
                            iterations: used + ap_used,
                        });
                    }
                }
                if gap <= 0.1 * tol_cert / anorm {
                    last = (zl, zc);
                    break;
                }
            }
            if ap_used % STAGNATION_WINDOW == 0 {
                if gap > (1.0 - 1e-3) * window_gap {
                    last = (zl, zc);
                    break;
                }
                window_gap = gap;
            }
            last = (zl, zc.clone());
            z = zc;
        }
    }
    used += ap_used;

    // separation candidate from the final gap: zc − zl = Mᵀw + s·c
    let (zl, zc) = last;
    let diff: Vec<f64> = zc.iter().zip(&zl).map(|(x, y)| x - y).collect();
    let ws = lstsq(&a.transpose(), &diff, 1e-13);
    asc.consider(&ws[..n])?;
    asc.consider(&ws[..n].iter().map(|v| -v).collect::<Vec<f64>>())?;
    used += asc.run(budget.saturating_sub(used), goal)?;
    if let Some(cert) = independent(&asc, used, best_gap, best_residual)? {
        return Ok(cert);
    }
    Ok(Certificate {
        verdict: Verdict::Undecided,
        witness: None,
        direction: asc.best_d.clone(),
        residual: best_residual,
        normalization: 0.0,
        gap: best_gap,
        margin: asc.best_t,
        iterations: used,
    })
}
