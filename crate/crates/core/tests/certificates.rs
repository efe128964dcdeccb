mod common;

use std::time::Instant;

use common::{coarse, gram_schmidt_rank, grid_oracle, membership_by_enumeration, norm, random_system, OracleVerdict, Rng};
use coneguard_core::certificates::{
    caratheodory_reduce, check_direction, check_witness, cone_membership, conic_dependence, numerical_rank, rank, Verdict,
    DEFAULT_BUDGET, DEFAULT_TOL_CERT,
};
use proptest::prelude::*;

struct CaratheodoryCase {
    fixed: Vec<Vec<f64>>,
    coned: Vec<(Vec<f64>, f64)>,
    target: Vec<f64>,
    scale: f64,
}

fn caratheodory_case(rng: &mut Rng) -> CaratheodoryCase {
    let n = rng.int(1, 6);
    let q = rng.int(1, 8);
    let nf = rng.int(0, n.min(2));
    let fixed: Vec<Vec<f64>> = loop {
        let f: Vec<Vec<f64>> = (0..nf).map(|_| rng.vector(n)).collect();
        if gram_schmidt_rank(&f, 1e-6) == nf {
            break f;
        }
    };
    let mut coned: Vec<(Vec<f64>, f64)> = Vec::with_capacity(q);
    for _ in 0..q {
        let v = match rng.int(0, 5) {
            // repeated or collinear generators
            0 if !coned.is_empty() => {
                let k = rng.int(0, coned.len() - 1);
                coned[k].0.iter().map(|x| x * coarse(rng, 0.25, 2.0)).collect()
            }
            1 => vec![0.0; n],
            _ => rng.vector(n),
        };
        let b = if rng.chance(0.15) { 0.0 } else { rng.range(0.0, 3.0) };
        coned.push((v, b));
    }
    let fc: Vec<f64> = rng.vector(nf);
    let mut target = vec![0.0; n];
    let mut scale = 0.0;
    for (f, c) in fixed.iter().zip(&fc) {
        for (t, x) in target.iter_mut().zip(f) {
            *t += c * x;
        }
        scale += c.abs() * norm(f);
    }
    for (v, b) in &coned {
        for (t, x) in target.iter_mut().zip(v) {
            *t += b * x;
        }
        scale += b * norm(v);
    }
    CaratheodoryCase { fixed, coned, target, scale: scale.max(1.0) }
}

#[test]
fn caratheodory_reconstruction_independence_and_signs() {
    let start = Instant::now();
    let mut rng = Rng::new(4242);
    for case in 0..500 {
        let c = caratheodory_case(&mut rng);
        let r = caratheodory_reduce(&c.fixed, &c.coned, &c.target, 1e-10).unwrap_or_else(|e| panic!("case {case}: {e}"));
        let n = c.target.len();
        let mut fit = vec![0.0; n];
        for (f, a) in c.fixed.iter().zip(&r.fixed_coeffs) {
            for (t, x) in fit.iter_mut().zip(f) {
                *t += a * x;
            }
        }
        for (&k, b) in r.kept.iter().zip(&r.coeffs) {
            for (t, x) in fit.iter_mut().zip(&c.coned[k].0) {
                *t += b * x;
            }
        }
        let err = norm(&fit.iter().zip(&c.target).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(err <= 1e-10 * c.scale, "case {case}: reconstruction error {err:e}");
        let mut family = c.fixed.clone();
        family.extend(r.kept.iter().map(|&k| c.coned[k].0.clone()));
        assert_eq!(gram_schmidt_rank(&family, 1e-8), family.len(), "case {case}: output not independent");
        for (&k, &b) in r.kept.iter().zip(&r.coeffs) {
            assert!(b > 0.0, "case {case}: coefficient {b}");
            assert!(c.coned[k].1 > 0.0, "case {case}: kept a generator with zero weight");
        }
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn membership_agrees_with_subset_enumeration() {
    let mut rng = Rng::new(99);
    let mut members = 0;
    for case in 0..300 {
        let n = rng.int(1, 4);
        let free: Vec<Vec<f64>> = (0..rng.int(0, 1)).map(|_| rng.vector(n)).collect();
        let coned: Vec<Vec<f64>> = (0..rng.int(0, 5)).map(|_| rng.vector(n)).collect();
        let target = if rng.chance(0.5) {
            let mut t = vec![0.0; n];
            for v in free.iter() {
                let c = rng.normal();
                t.iter_mut().zip(v).for_each(|(a, x)| *a += c * x);
            }
            for v in coned.iter() {
                let c = if rng.chance(0.4) { 0.0 } else { rng.range(0.0, 2.0) };
                t.iter_mut().zip(v).for_each(|(a, x)| *a += c * x);
            }
            t
        } else {
            rng.vector(n)
        };
        let got = cone_membership(&target, &free, &coned, 1e-9).unwrap();
        let expected = membership_by_enumeration(&target, &free, &coned, 1e-9);
        // a random target lying within round-off of the cone boundary is not
        // a meaningful disagreement
        if got.is_member() != expected {
            let loose = membership_by_enumeration(&target, &free, &coned, 1e-6);
            let tight = membership_by_enumeration(&target, &free, &coned, 1e-12);
            assert!(loose != tight, "case {case}: membership {got:?}, enumeration {expected}");
        }
        members += expected as usize;
    }
    assert!(members > 100, "corpus should exercise both answers, got {members} members");
}

#[test]
fn dependence_agrees_with_grid_oracle() {
    let mut rng = Rng::new(2024);
    let (mut both, mut undecided, mut disagreements) = (0, 0, Vec::new());
    let total = 100;
    for case in 0..total {
        let sys = random_system(&mut rng);
        let cert = conic_dependence(&sys, DEFAULT_BUDGET, DEFAULT_TOL_CERT).unwrap();
        let oracle = grid_oracle(&sys, 10.0 * DEFAULT_TOL_CERT);
        match &cert.verdict {
            Verdict::Dependent => {
                let w = cert.witness.as_ref().expect("dependent verdicts carry a witness");
                assert!(check_witness(&sys, w).unwrap().passes(DEFAULT_TOL_CERT), "case {case}");
            }
            Verdict::Independent { margin } => {
                let d = cert.direction.as_ref();
                if let Some(d) = d {
                    let m = check_direction(&sys, d).unwrap().expect("admissible direction");
                    assert!(m >= *margin - 1e-12, "case {case}");
                }
            }
            Verdict::Undecided => undecided += 1,
        }
        let decided = match cert.verdict {
            Verdict::Dependent => Some(OracleVerdict::Dependent),
            Verdict::Independent { .. } => Some(OracleVerdict::Independent),
            Verdict::Undecided => None,
        };
        if let (Some(v), true) = (decided, oracle != OracleVerdict::Undecided) {
            both += 1;
            if v != oracle {
                disagreements.push((case, v, oracle));
            }
        }
    }
    eprintln!("oracle comparison: {both} decided by both, {undecided} undecided of {total}");
    assert!(disagreements.is_empty(), "{disagreements:?}");
    assert!(undecided * 10 <= total, "undecided rate {undecided}/{total}");
    assert!(both >= 50, "only {both} cases decided by both");
}

fn low_rank_family(seed: u64, n: usize, count: usize, r: usize) -> Vec<Vec<f64>> {
    let mut rng = Rng::new(seed);
    let basis: Vec<Vec<f64>> = (0..r).map(|_| rng.vector(n)).collect();
    (0..count)
        .map(|_| {
            let c = rng.vector(r);
            let mut v = vec![0.0; n];
            for (b, ci) in basis.iter().zip(&c) {
                v.iter_mut().zip(b).for_each(|(a, x)| *a += ci * x);
            }
            v
        })
        .collect()
}

proptest! {
    #[test]
    fn rank_matches_gram_schmidt(seed in 0u64..10_000, n in 1usize..6, count in 0usize..7, r in 0usize..6) {
        let r = r.min(n).min(count);
        let fam = low_rank_family(seed, n, count, r);
        let oracle = gram_schmidt_rank(&fam, 1e-8);
        prop_assume!(oracle == r);
        prop_assert_eq!(rank(&fam, 1e-8), r);
        let info = numerical_rank(&fam, 1e-8);
        prop_assert_eq!(info.rank, r);
        let chosen: Vec<Vec<f64>> = info.basis.iter().map(|&i| fam[i].clone()).collect();
        prop_assert_eq!(gram_schmidt_rank(&chosen, 1e-8), r);
    }
}
