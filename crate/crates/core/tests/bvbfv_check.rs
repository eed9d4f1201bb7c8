use bvbfv::bf_theory::{build_bf_theory, theory_family, toy_symplectic, LieAlgebraData};
use bvbfv::bvbfv_check::{
    bfv_from_solution, bfv_nilpotency, bfv_pair_interval, check_mqme, check_mqme_interval, check_qme_halfline,
    check_qme_interval, HalfLineTheory,
};
use bvbfv::graded_core::{rat, Series, Side, TruncationCaps};
use bvbfv::Error;

fn caps() -> TruncationCaps {
    TruncationCaps::default()
}

fn bf(name: &str) -> bvbfv::bvbfv_check::IntervalTheory {
    build_bf_theory(&LieAlgebraData::builtin(name).unwrap(), caps()).unwrap()
}

#[test]
fn zero_exponent_gives_minus_i() {
    for name in ["sl2", "so3", "heisenberg", "nonabelian2"] {
        let th = bf(name).endpoint_theory(0).unwrap();
        assert_eq!(bfv_from_solution(&th).unwrap(), th.i.neg(), "{name}");
        let (h0, h1) = bfv_pair_interval(&bf(name)).unwrap();
        assert_eq!(h0, th.i.neg());
        assert_eq!(h1, th.i);
    }
}

#[test]
fn conjugation_by_j_and_minus_j_cancel() {
    for m in theory_family(3, caps()).unwrap() {
        let th = &m.theory;
        let ctx = th.context().unwrap();
        let depth = caps().max_bracket_depth;
        let there = ctx.conjugate(&th.j, &th.i, depth).unwrap();
        let back = ctx.conjugate(&th.j.neg(), &there.value, depth).unwrap();
        if !there.truncated && !back.truncated {
            assert_eq!(back.value, th.i, "{}", m.label);
        }
    }
}

#[test]
fn wrong_bfv_operator_is_rejected() {
    let th = bf("sl2").endpoint_theory(0).unwrap();
    assert!(check_mqme(&th).unwrap().pass);
    let good = th.with_h(Some(th.i.neg())).unwrap();
    assert!(check_mqme(&good).unwrap().pass);
    let bad = th.with_h(Some(th.i.clone())).unwrap();
    let r = check_mqme(&bad).unwrap();
    assert!(!r.pass);
    assert!(!r.flags.iter().any(|f| f == "route_disagreement"));
}

#[test]
fn strict_qme_detects_the_anomaly() {
    assert!(check_qme_interval(&bf("sl2")).unwrap().pass);
    assert!(check_mqme_interval(&bf("nonabelian2")).unwrap().pass);
    assert!(!check_qme_interval(&bf("nonabelian2")).unwrap().pass);
    for name in ["sl2", "heisenberg"] {
        assert!(check_qme_halfline(&bf(name).endpoint_theory(0).unwrap()).unwrap().pass, "{name}");
    }
}

#[test]
fn nilpotency_on_both_sides() {
    let th = bf("so3").endpoint_theory(0).unwrap();
    let ctx = th.context().unwrap();
    let h = th.i.neg();
    assert!(bfv_nilpotency(&ctx, &h, Side::LPrime).unwrap().pass);
    assert!(bfv_nilpotency(&ctx, &h, Side::L).unwrap().pass);
    // adding ħ A_c breaks nilpotency; both characterizations must agree
    let swapped = ctx.swapped().unwrap();
    let sp = ctx.symplectic().space().clone();
    let a3 = sp.index_of("A_3").unwrap();
    let bent = h.add(&Series::monomial(&sp, caps(), rat(1, 1), 1, &[a3]).unwrap()).unwrap();
    for c in [&ctx, &swapped] {
        let r = bfv_nilpotency(c, &bent, Side::LPrime).unwrap();
        assert!(!r.pass);
        assert!(r.flags.is_empty(), "{:?}", r.flags);
    }
}

#[test]
fn inadmissible_data_is_rejected() {
    let sym = toy_symplectic().unwrap();
    let sp = sym.space().clone();
    let pol = sp.default_polarization();
    let q = sp.index_of("Q").unwrap();
    let bb = sp.index_of("Bb").unwrap();
    let i = Series::monomial(&sp, caps(), rat(1, 1), 0, &[bb, q, q]).unwrap();
    let zero = Series::zero(&sp, caps());
    assert!(HalfLineTheory::new(sym.clone(), pol.clone(), i.clone(), zero.clone(), None).is_ok());
    // linear classical exponent
    let lin = Series::monomial(&sp, caps(), rat(1, 1), 0, &[q]).unwrap();
    assert!(matches!(
        HalfLineTheory::new(sym.clone(), pol.clone(), i.clone(), lin, None),
        Err(Error::Inadmissible(_))
    ));
    // exponent depending on L'
    let p = sp.index_of("P").unwrap();
    let on_lp = Series::monomial(&sp, caps(), rat(1, 1), 0, &[p, p]).unwrap();
    assert!(HalfLineTheory::new(sym.clone(), pol.clone(), i.clone(), on_lp, None).is_err());
    // interaction of the wrong degree
    let even = Series::monomial(&sp, caps(), rat(1, 1), 0, &[q, q]).unwrap();
    assert!(matches!(
        HalfLineTheory::new(sym.clone(), pol.clone(), even, zero.clone(), None),
        Err(Error::Degree { .. })
    ));
    // linear classical interaction
    let lin_i = Series::monomial(&sp, caps(), rat(1, 1), 0, &[bb]).unwrap();
    assert!(HalfLineTheory::new(sym, pol, lin_i, zero, None).is_err());
}

#[test]
fn non_flat_interaction_has_no_bfv_operator() {
    let g = (0..40)
        .map(|s| LieAlgebraData::random(3, s))
        .find(|g| !bvbfv::bf_theory::check_jacobi(g).unwrap().pass)
        .unwrap();
    let th = bvbfv::bf_theory::build_bf_theory_unchecked(&g, caps()).unwrap();
    let half = th.endpoint_theory(0).unwrap();
    assert!(matches!(bfv_from_solution(&half), Err(Error::Inadmissible(_))));
    assert!(!check_mqme(&half).unwrap().pass);
}
