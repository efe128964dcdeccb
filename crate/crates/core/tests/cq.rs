mod common;

use common::{random_block, random_program, Rng};
use coneguard_core::classify::{classify, BlockStatus, DEFAULT_TOL_GAP};
use coneguard_core::cone::{ConeKind, DEFAULT_TOL_ACT};
use coneguard_core::cq::{check, CqConfig, CqKind, CqVerdict, CqWitness};
use coneguard_core::expr::parse;
use coneguard_core::problem::{evaluate, ConicBlock, ConicProgram, Equality};

fn verdicts(prog: &ConicProgram, x: &[f64]) -> Vec<(CqKind, CqVerdict, bool)> {
    let pt = evaluate(prog, x).unwrap();
    let cls = classify(&pt, DEFAULT_TOL_ACT, DEFAULT_TOL_GAP).unwrap();
    let cfg = CqConfig::default();
    CqKind::ALL
        .iter()
        .map(|&k| {
            let r = check(k, prog, &pt, &cls, &cfg).unwrap();
            (k, r.verdict, r.witness.is_some())
        })
        .collect()
}

fn verdict_of(v: &[(CqKind, CqVerdict, bool)], k: CqKind) -> CqVerdict {
    v.iter().find(|e| e.0 == k).unwrap().1
}

#[test]
fn robinson_never_holds_without_rcpld_and_crsc() {
    let mut rng = Rng::new(2024);
    let mut robinson_holds = 0;
    for case in 0..50 {
        let prog = random_program(&mut rng);
        let x = vec![0.0; prog.n()];
        let v = verdicts(&prog, &x);
        for (k, verdict, has_witness) in &v {
            if *verdict == CqVerdict::Fails {
                assert!(has_witness, "case {case}: {k:?} fails without witness");
            }
        }
        if verdict_of(&v, CqKind::Robinson) == CqVerdict::Holds {
            robinson_holds += 1;
            assert_ne!(verdict_of(&v, CqKind::Rcpld), CqVerdict::Fails, "case {case}");
            assert_ne!(verdict_of(&v, CqKind::Crsc), CqVerdict::Fails, "case {case}");
        }
        if verdict_of(&v, CqKind::Nondegeneracy) == CqVerdict::Holds {
            assert_ne!(verdict_of(&v, CqKind::Robinson), CqVerdict::Fails, "case {case}");
        }
    }
    eprintln!("robinson holds on {robinson_holds}/50");
    assert!(robinson_holds > 0);
}

fn only_conic_active(prog: &ConicProgram) -> bool {
    let pt = evaluate(prog, &vec![0.0; prog.n()]).unwrap();
    let cls = classify(&pt, DEFAULT_TOL_ACT, DEFAULT_TOL_GAP).unwrap();
    cls.status.iter().all(|s| {
        matches!(s, BlockStatus::SocInterior | BlockStatus::PsdInactive | BlockStatus::SocVertex | BlockStatus::PsdIrreducible { .. })
    }) && cls.status.iter().any(|s| s.is_active())
}

#[test]
fn rcpld_matches_robinson_without_rays_or_equalities() {
    let mut rng = Rng::new(7);
    let mut seen = 0;
    let mut tries = 0;
    while seen < 30 {
        tries += 1;
        assert!(tries < 20000, "generator rarely yields ray-free programs");
        let n = rng.int(1, 3);
        let blocks: Vec<ConicBlock> = (0..rng.int(1, 2)).map(|j| random_block(&mut rng, n, format!("g{}", j + 1))).collect();
        let prog = ConicProgram::new(n, parse("x1", n).unwrap(), vec![], blocks).unwrap();
        if !only_conic_active(&prog) {
            continue;
        }
        seen += 1;
        let v = verdicts(&prog, &vec![0.0; n]);
        let (r, p) = (verdict_of(&v, CqKind::Robinson), verdict_of(&v, CqKind::Rcpld));
        if r != CqVerdict::Undecided && p != CqVerdict::Undecided {
            assert_eq!(r, p, "{prog:?}");
        }
    }
}

fn program(n: usize, eqs: &[&str], blocks: &[(ConeKind, &[&str])]) -> ConicProgram {
    let eqs = eqs.iter().enumerate().map(|(i, e)| Equality { name: format!("h{}", i + 1), expr: parse(e, n).unwrap() }).collect();
    let blocks = blocks
        .iter()
        .enumerate()
        .map(|(j, (kind, entries))| ConicBlock {
            name: format!("g{}", j + 1),
            kind: *kind,
            entries: entries.iter().map(|e| parse(e, n).unwrap()).collect(),
        })
        .collect();
    ConicProgram::new(n, parse("x1", n).unwrap(), eqs, blocks).unwrap()
}

#[test]
fn boundary_example_verdicts() {
    let prog = program(1, &[], &[(ConeKind::Soc(2), &["x1", "x1"])]);
    let v = verdicts(&prog, &[1.0]);
    assert_eq!(verdict_of(&v, CqKind::Nondegeneracy), CqVerdict::Fails);
    assert_eq!(verdict_of(&v, CqKind::Robinson), CqVerdict::Fails);
    assert_eq!(verdict_of(&v, CqKind::Rcpld), CqVerdict::Holds);
    assert_eq!(verdict_of(&v, CqKind::Crsc), CqVerdict::Holds);
}

#[test]
fn injective_block_gives_robinson() {
    let prog = program(1, &[], &[(ConeKind::Soc(2), &["x1", "0"])]);
    let pt = evaluate(&prog, &[0.0]).unwrap();
    let cls = classify(&pt, DEFAULT_TOL_ACT, DEFAULT_TOL_GAP).unwrap();
    assert_eq!(cls.status[0], BlockStatus::SocVertex);
    for x in [0.0, 1.0] {
        let v = verdicts(&prog, &[x]);
        assert_eq!(verdict_of(&v, CqKind::Robinson), CqVerdict::Holds, "x = {x}");
    }
}

#[test]
fn vanishing_equality_gradient_breaks_rcpld() {
    let prog = program(1, &["x1^2"], &[]);
    let pt = evaluate(&prog, &[0.0]).unwrap();
    let cls = classify(&pt, DEFAULT_TOL_ACT, DEFAULT_TOL_GAP).unwrap();
    let r = check(CqKind::Rcpld, &prog, &pt, &cls, &CqConfig::default()).unwrap();
    assert_eq!(r.verdict, CqVerdict::Fails);
    assert!(r.witness.is_some());
    let rob = check(CqKind::Robinson, &prog, &pt, &cls, &CqConfig::default()).unwrap();
    assert_eq!(rob.verdict, CqVerdict::Fails);
    assert!(matches!(rob.witness, Some(CqWitness::EqualityDependence { .. })));
}

#[test]
fn single_injective_ray_satisfies_crsc() {
    // phi = (x1 + 1)^2/2 - 1/2 has gradient 1 at 0
    let prog = program(2, &[], &[(ConeKind::Soc(2), &["x1 + 1", "1"])]);
    let pt = evaluate(&prog, &[0.0, 0.0]).unwrap();
    let cls = classify(&pt, DEFAULT_TOL_ACT, DEFAULT_TOL_GAP).unwrap();
    assert_eq!(cls.status[0], BlockStatus::SocBoundary);
    let r = check(CqKind::Crsc, &prog, &pt, &cls, &CqConfig::default()).unwrap();
    assert_eq!(r.verdict, CqVerdict::Holds);
    assert!(r.j_minus.is_empty());
    assert_eq!(r.j_plus, vec![0]);
}

#[test]
fn reports_are_deterministic() {
    let mut rng = Rng::new(99);
    for _ in 0..10 {
        let prog = random_program(&mut rng);
        let pt = evaluate(&prog, &vec![0.0; prog.n()]).unwrap();
        let cls = classify(&pt, DEFAULT_TOL_ACT, DEFAULT_TOL_GAP).unwrap();
        for k in CqKind::ALL {
            let a = check(k, &prog, &pt, &cls, &CqConfig::default()).unwrap();
            let b = check(k, &prog, &pt, &cls, &CqConfig::default()).unwrap();
            assert_eq!(a, b);
        }
    }
}
