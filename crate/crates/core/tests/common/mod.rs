//! Seeded generators and brute-force oracles shared by the integration
//! suites. Nothing here calls into the numerical routines under test.
#![allow(dead_code, clippy::needless_range_loop)]

use coneguard_core::certificates::{ConeTerm, ConicSystem};
use coneguard_core::cone::{ConeKind, SymMatrix};
use coneguard_core::expr::{Expr, Func};
use coneguard_core::linalg::Mat;
use coneguard_core::problem::{ConicBlock, ConicProgram, Equality};
use coneguard_core::sampling::BallSampler;

pub struct Rng(BallSampler);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(BallSampler::new(seed))
    }

    pub fn unit(&mut self) -> f64 {
        self.0.uniform()
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.0.normal()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        lo + ((self.0.uniform() * (hi - lo + 1) as f64) as usize).min(hi - lo)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.0.uniform() < p
    }

    pub fn vector(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Central differences with step `h`.
pub fn fd_gradient(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g.push((fp - fm) / (2.0 * h));
    }
    g
}

/// `max_i |a_i − b_i| ≤ max(1e-6·scale, 1e-8)` with `scale = max(1, ‖b‖∞)`.
pub fn gradients_agree(a: &[f64], b: &[f64]) -> bool {
    let scale = b.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let tol = (1e-6 * scale).max(1e-8);
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Random tree over `x1..xn` whose every node is defined on `[-2, 2]ⁿ`:
/// `sqrt`/`log` only see `1 + u²`, divisors are `2 + u²`.
pub fn random_expr(rng: &mut Rng, n: usize, depth: usize) -> Expr {
    let b = Box::new;
    if depth == 0 || rng.chance(0.25) {
        return if rng.chance(0.6) { Expr::Var(rng.int(0, n - 1)) } else { Expr::lit((rng.range(-2.0, 2.0) * 8.0).round() / 8.0) };
    }
    let sub = |rng: &mut Rng| random_expr(rng, n, depth - 1);
    let one_plus_sq = |u: Expr| Expr::Add(b(Expr::Lit(1.0)), b(Expr::Pow(b(u), 2)));
    match rng.int(0, 9) {
        0 => Expr::Add(b(sub(rng)), b(sub(rng))),
        1 => Expr::Sub(b(sub(rng)), b(sub(rng))),
        2 | 3 => Expr::Mul(b(sub(rng)), b(sub(rng))),
        4 => Expr::Div(b(sub(rng)), b(Expr::Add(b(Expr::Lit(2.0)), b(Expr::Pow(b(sub(rng)), 2))))),
        5 => Expr::Pow(b(sub(rng)), rng.int(2, 3) as u32),
        6 => Expr::Neg(b(sub(rng))),
        7 => Expr::Func(if rng.chance(0.5) { Func::Sin } else { Func::Cos }, b(sub(rng))),
        8 => Expr::Func(if rng.chance(0.5) { Func::Sqrt } else { Func::Log }, b(one_plus_sq(sub(rng)))),
        _ => Expr::Func(Func::Exp, b(Expr::Func(Func::Sin, b(sub(rng))))),
    }
}

/// `c + Σ a_i x_i + Σ q_i x_i²` written with parenthesized coefficients.
pub fn poly_source(c: f64, lin: &[f64], quad: &[f64]) -> String {
    let mut s = format!("({c})");
    for (i, a) in lin.iter().enumerate() {
        if *a != 0.0 {
            s.push_str(&format!(" + ({a})*x{}", i + 1));
        }
    }
    for (i, q) in quad.iter().enumerate() {
        if *q != 0.0 {
            s.push_str(&format!(" + ({q})*x{}^2", i + 1));
        }
    }
    s
}

pub fn poly(c: f64, lin: &[f64], quad: &[f64]) -> Expr {
    coneguard_core::expr::parse(&poly_source(c, lin, quad), lin.len()).expect("generated polynomial parses")
}

/// Coefficients rounded to a grid of `1/4` so that exact ties are common.
pub fn coarse(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    (rng.range(lo, hi) * 4.0).round() / 4.0
}

/// Eigenvalues of a symmetric matrix by bisection on Sylvester inertia
/// (count of negative pivots of `A − tI`), ascending.
pub fn eigenvalues_bisect(a: &[Vec<f64>]) -> Vec<f64> {
    let m = a.len();
    let bound = a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max) + 1.0;
    let below = |t: f64| -> usize {
        let mut w: Vec<Vec<f64>> = a.to_vec();
        for (i, row) in w.iter_mut().enumerate() {
            row[i] -= t;
        }
        let mut count = 0;
        for k in 0..m {
            let mut p = w[k][k];
            if p == 0.0 {
                p = -1e-300;
            }
            if p < 0.0 {
                count += 1;
            }
            for i in k + 1..m {
                let f = w[i][k] / p;
                for j in k..m {
                    w[i][j] -= f * w[k][j];
                }
            }
        }
        count
    };
    (0..m)
        .map(|k| {
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Rank by modified Gram–Schmidt with a relative threshold.
pub fn gram_schmidt_rank(vectors: &[Vec<f64>], tol: f64) -> usize {
    let scale = vectors.iter().map(|v| norm(v)).fold(1.0, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let nw = norm(&w);
        if nw > tol * scale {
            basis.push(w.iter().map(|x| x / nw).collect());
        }
    }
    basis.len()
}

/// Solves the square system by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-13 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

/// Least squares through the normal equations; `None` if the columns are
/// numerically dependent.
pub fn normal_lstsq(cols: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let q = cols.len();
    let g: Vec<Vec<f64>> = (0..q).map(|i| (0..q).map(|j| dot(&cols[i], &cols[j])).collect()).collect();
    let r: Vec<f64> = cols.iter().map(|c| dot(c, b)).collect();
    gauss_solve(g, r)
}

/// Membership of `target` in `span(free) + cone(coned)` by enumerating
/// subsets of `coned`: some linearly independent subfamily must represent
/// the target with nonnegative weights.
pub fn membership_by_enumeration(target: &[f64], free: &[Vec<f64>], coned: &[Vec<f64>], tol: f64) -> bool {
    let q = coned.len();
    let bound = tol * norm(target).max(1.0);
    for mask in 0u32..(1 << q) {
        let mut cols: Vec<Vec<f64>> = free.to_vec();
        let idx: Vec<usize> = (0..q).filter(|k| mask >> k & 1 == 1).collect();
        cols.extend(idx.iter().map(|&k| coned[k].clone()));
        if gram_schmidt_rank(&cols, 1e-10) < cols.len() {
            continue;
        }
        let coef = if cols.is_empty() { Vec::new() } else {
            match normal_lstsq(&cols, target) {
                Some(c) => c,
                None => continue,
            }
        };
        if coef[free.len()..].iter().any(|&c| c < -1e-12) {
            continue;
        }
        let mut fit = vec![0.0; target.len()];
        for (c, v) in coef.iter().zip(&cols) {
            for (f, x) in fit.iter_mut().zip(v) {
                *f += c * x;
            }
        }
        let res: f64 = norm(&fit.iter().zip(target).map(|(a, b)| a - b).collect::<Vec<_>>());
        if res <= bound {
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleVerdict {
    /// A grid point of the normalized cone base is an exact solution.
    Dependent,
    /// A grid direction has margin at least the threshold.
    Independent,
    Undecided,
}

/// Base points `{z ∈ K : ⟨c, z⟩ = 1}` on a grid of step `1/4`.
pub fn base_grid(kind: ConeKind) -> Vec<Vec<f64>> {
    let ticks: Vec<f64> = (-4..=4).map(|i| i as f64 / 4.0).collect();
    match kind {
        ConeKind::Soc(m) => {
            let mut out = vec![vec![1.0]];
            for _ in 1..m {
                let mut next = Vec::new();
                for p in &out {
                    for t in &ticks {
                        let mut q = p.clone();
                        q.push(*t);
                        next.push(q);
                    }
                }
                out = next;
            }
            out.into_iter().filter(|z| norm(&z[1..]) <= 1.0 + 1e-12).collect()
        }
        ConeKind::Psd(1) => vec![vec![1.0]],
        ConeKind::Psd(2) => {
            let mut out = Vec::new();
            for ai in 0..=4 {
                let a = ai as f64 / 4.0;
                for bi in -4..=4 {
                    let b = bi as f64 / 8.0;
                    if b * b <= a * (1.0 - a) + 1e-12 {
                        out.push(vec![a, std::f64::consts::SQRT_2 * b, 1.0 - a]);
                    }
                }
            }
            out
        }
        ConeKind::Psd(_) => panic!("grid oracle handles PSD orders 1 and 2"),
    }
}

/// Points on the unit sphere of `ℝⁿ` (`n ≤ 3`), roughly uniform.
pub fn sphere_grid(n: usize, resolution: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..4 * resolution)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / (4 * resolution) as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let mut out = Vec::new();
            for i in 0..=resolution {
                let th = std::f64::consts::PI * i as f64 / resolution as f64;
                let ring = ((2 * resolution) as f64 * th.sin()).round().max(1.0) as usize;
                for k in 0..ring {
                    let ph = std::f64::consts::TAU * k as f64 / ring as f64;
                    out.push(vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
                }
            }
            out
        }
        _ => panic!("sphere grid for n <= 3 only"),
    }
}

fn combine(sys: &ConicSystem, parts: &[(usize, f64, &Vec<f64>)]) -> Vec<f64> {
    // parts: (component, weight, base point); component < blocks.len() is a block
    let mut v = vec![0.0; sys.n];
    for &(c, w, z) in parts {
        if c < sys.blocks.len() {
            let img = sys.blocks[c].rows.tr_mul_vec(z);
            for (vi, x) in v.iter_mut().zip(img) {
                *vi += w * x;
            }
        } else {
            for (vi, x) in v.iter_mut().zip(&sys.rays[c - sys.blocks.len()]) {
                *vi += w * x;
            }
        }
    }
    v
}

/// Projection onto the orthogonal complement of the equality span, by
/// Gram–Schmidt.
fn complement(eq: &[Vec<f64>], n: usize) -> impl Fn(&[f64]) -> Vec<f64> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in eq {
        let mut w = v.clone();
        for q in &basis {
            let c = dot(&w, q);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= c * qi;
            }
        }
        let nw = norm(&w);
        if nw > 1e-12 {
            basis.push(w.iter().map(|x| x / nw).collect());
        }
    }
    let _ = n;
    move |x: &[f64]| {
        let mut w = x.to_vec();
        for q in &basis {
            let c = dot(&w, q);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= c * qi;
            }
        }
        w
    }
}

/// Three-valued brute force. Dependence needs a combination supported on at
/// most two components, with weights in `{1/4, 1/2, 3/4, 1}` and grid base
/// points, whose projected image vanishes; independence needs a grid
/// direction orthogonal to the equalities with margin above `threshold`.
pub fn grid_oracle(sys: &ConicSystem, threshold: f64) -> OracleVerdict {
    let proj = complement(&sys.eq_basis, sys.n);
    let comps = sys.blocks.len() + sys.rays.len();
    if comps == 0 {
        return OracleVerdict::Independent;
    }
    let grids: Vec<Vec<Vec<f64>>> = (0..comps)
        .map(|c| if c < sys.blocks.len() { base_grid(sys.blocks[c].kind) } else { vec![vec![1.0]] })
        .collect();
    let scale = 1.0
        + sys.blocks.iter().map(|b| b.rows.frobenius()).sum::<f64>()
        + sys.rays.iter().map(|r| norm(r)).sum::<f64>();
    let hit = 1e-9 * scale;
    for c in 0..comps {
        for z in &grids[c] {
            if norm(&proj(&combine(sys, &[(c, 1.0, z)]))) <= hit {
                return OracleVerdict::Dependent;
            }
        }
    }
    for c1 in 0..comps {
        for c2 in c1 + 1..comps {
            for w in [0.25, 0.5, 0.75] {
                for z1 in &grids[c1] {
                    for z2 in &grids[c2] {
                        if norm(&proj(&combine(sys, &[(c1, w, z1), (c2, 1.0 - w, z2)]))) <= hit {
                            return OracleVerdict::Dependent;
                        }
                    }
                }
            }
        }
    }
    for d in sphere_grid(sys.n, 60) {
        let pd = proj(&d);
        let nd = norm(&pd);
        if nd < 1e-9 {
            continue;
        }
        let u: Vec<f64> = pd.iter().map(|x| x / nd).collect();
        if margin_of(sys, &u) > threshold {
            return OracleVerdict::Independent;
        }
    }
    OracleVerdict::Undecided
}

/// `min` over blocks and rays of the depth of the image of `d`.
pub fn margin_of(sys: &ConicSystem, d: &[f64]) -> f64 {
    let mut t = f64::INFINITY;
    for b in &sys.blocks {
        let u = b.rows.mul_vec(d);
        let m = match b.kind {
            ConeKind::Soc(_) => u[0] - norm(&u[1..]),
            ConeKind::Psd(1) => u[0],
            ConeKind::Psd(2) => {
                let (a, c, e) = (u[0], u[1] / std::f64::consts::SQRT_2, u[2]);
                eigenvalues_bisect(&[vec![a, c], vec![c, e]])[0]
            }
            ConeKind::Psd(_) => unreachable!(),
        };
        t = t.min(m);
    }
    for r in &sys.rays {
        t = t.min(dot(r, d));
    }
    t
}

fn random_term(rng: &mut Rng, n: usize) -> ConeTerm {
    match rng.int(0, 3) {
        0 => ConeTerm::psd(1, &(0..n).map(|_| SymMatrix::diag(&[coarse(rng, -2.0, 2.0)])).collect::<Vec<_>>()),
        1 => {
            let partials: Vec<SymMatrix> = (0..n)
                .map(|_| {
                    let (a, b, c) = (coarse(rng, -2.0, 2.0), coarse(rng, -2.0, 2.0), coarse(rng, -2.0, 2.0));
                    SymMatrix::from_upper(2, &[a, b, c]).expect("2x2")
                })
                .collect();
            ConeTerm::psd(2, &partials)
        }
        _ => {
            let m = rng.int(2, 4);
            let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| coarse(rng, -2.0, 2.0)).collect()).collect();
            ConeTerm::soc(Mat::from_rows(&rows, n))
        }
    }
}

/// A tiny random system. With probability one half a grid point of two
/// components is planted as an exact solution by adjusting the last ray.
pub fn random_system(rng: &mut Rng) -> ConicSystem {
    let n = rng.int(1, 3);
    let mut sys = ConicSystem::new(n);
    if n > 1 && rng.chance(0.3) {
        sys.eq_basis.push((0..n).map(|_| coarse(rng, -2.0, 2.0)).collect());
    }
    for _ in 0..rng.int(0, 2) {
        sys.blocks.push(random_term(rng, n));
    }
    for _ in 0..rng.int(if sys.blocks.is_empty() { 1 } else { 0 }, 3) {
        sys.rays.push((0..n).map(|_| coarse(rng, -2.0, 2.0)).collect());
    }
    if rng.chance(0.5) {
        if sys.rays.is_empty() {
            sys.rays.push(vec![0.0; n]);
        }
        let last = sys.blocks.len() + sys.rays.len() - 1;
        let comps = last + 1;
        let other = if comps > 1 { Some(rng.int(0, last - 1)) } else { None };
        let w = if other.is_some() { [0.25, 0.5, 0.75][rng.int(0, 2)] } else { 1.0 };
        let mut v = vec![0.0; n];
        if let Some(o) = other {
            let grid = if o < sys.blocks.len() { base_grid(sys.blocks[o].kind) } else { vec![vec![1.0]] };
            let z = grid[rng.int(0, grid.len() - 1)].clone();
            v = combine(&sys, &[(o, 1.0 - w, &z)]);
        }
        let mut lam = vec![0.0; n];
        for e in &sys.eq_basis {
            let c = coarse(rng, -1.0, 1.0);
            for (l, x) in lam.iter_mut().zip(e) {
                *l += c * x;
            }
        }
        let k = sys.rays.len() - 1;
        sys.rays[k] = v.iter().zip(&lam).map(|(a, l)| -(a + l) / w).collect();
    }
    sys
}

/// Block of a random small program, arranged around `x = 0`.
pub fn random_block(rng: &mut Rng, n: usize, name: String) -> ConicBlock {
    let lin = |rng: &mut Rng| -> Vec<f64> {
        if rng.chance(0.2) {
            vec![0.0; n]
        } else {
            (0..n).map(|_| if rng.chance(0.3) { 0.0 } else { coarse(rng, -2.0, 2.0) }).collect()
        }
    };
    let quad = |rng: &mut Rng| -> Vec<f64> { (0..n).map(|_| if rng.chance(0.6) { 0.0 } else { coarse(rng, -1.0, 1.0) }).collect() };
    if rng.chance(0.5) {
        let m = rng.int(1, 3);
        // value at 0: vertex, boundary or interior
        let c: Vec<f64> = match (m, rng.int(0, 2)) {
            (_, 0) => vec![0.0; m],
            (1, 1) => vec![0.0],
            (1, _) => vec![1.0],
            (_, 1) => {
                let mut c = vec![1.0];
                c.push(1.0);
                c.extend(vec![0.0; m - 2]);
                c
            }
            _ => {
                let mut c = vec![2.0];
                c.extend(vec![0.5; m - 1]);
                c
            }
        };
        let mut entries: Vec<Expr> = Vec::new();
        // entries share their first-order part with the leading entry
        // often enough to keep boundary points on the boundary
        for k in 0..m {
            entries.push(poly(c[k], &lin(rng), &quad(rng)));
        }
        ConicBlock { name, kind: ConeKind::Soc(m), entries }
    } else {
        let m = rng.int(1, 2);
        let diag0: Vec<f64> = match rng.int(0, 2) {
            0 => vec![0.0; m],
            1 => {
                let mut d = vec![1.0; m];
                d[0] = 0.0;
                d
            }
            _ => vec![1.0; m],
        };
        let mut entries = Vec::new();
        for i in 0..m {
            for j in i..m {
                let c = if i == j { diag0[i] } else { 0.0 };
                entries.push(poly(c, &lin(rng), &quad(rng)));
            }
        }
        ConicBlock { name, kind: ConeKind::Psd(m), entries }
    }
}

/// A program with `x = 0` feasible; objective is irrelevant for CQ checks.
pub fn random_program(rng: &mut Rng) -> ConicProgram {
    let n = rng.int(1, 3);
    let mut eqs = Vec::new();
    for i in 0..rng.int(0, 1) {
        let lin: Vec<f64> = (0..n).map(|_| coarse(rng, -2.0, 2.0)).collect();
        let quad: Vec<f64> = (0..n).map(|_| if rng.chance(0.5) { 0.0 } else { coarse(rng, -1.0, 1.0) }).collect();
        eqs.push(Equality { name: format!("h{}", i + 1), expr: poly(0.0, &lin, &quad) });
    }
    let blocks = (0..rng.int(1, 3)).map(|j| random_block(rng, n, format!("g{}", j + 1))).collect();
    let objective = poly(0.0, &vec![1.0; n], &vec![0.0; n]);
    ConicProgram::new(n, objective, eqs, blocks).expect("generated program is well formed")
}
