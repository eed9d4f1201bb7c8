use std::sync::Arc;

use bvbfv::bf_theory::{build_bf_theory, LieAlgebraData};
use bvbfv::graded_core::{rat, GradedSpace, Series, Side, TruncationCaps};
use bvbfv::weyl_moyal::BoundaryAlgebraContext;
use num_traits::Zero;
use proptest::prelude::*;

/// Six odd generators: words never exceed six letters, and ħ powers stay
/// below the cap for the inputs used here, so no identity is spoiled by
/// truncation.
fn caps() -> TruncationCaps {
    TruncationCaps::new(12, 6, 12).unwrap()
}

fn ctx() -> BoundaryAlgebraContext {
    let g = LieAlgebraData::builtin("sl2").unwrap();
    build_bf_theory(&g, caps()).unwrap().context0().unwrap()
}

fn space(c: &BoundaryAlgebraContext) -> Arc<GradedSpace> {
    c.symplectic().space().clone()
}

fn series(c: &BoundaryAlgebraContext, terms: &[(i64, u32, Vec<usize>)], only: Option<Side>) -> Series {
    let sp = space(c);
    let mut s = c.zero();
    for (k, h, w) in terms {
        if let Some(side) = only {
            if w.iter().any(|&i| c.polarization().side(i) != side) {
                continue;
            }
        }
        s = s.add(&Series::monomial(&sp, caps(), rat(*k, 1), *h, w).unwrap()).unwrap();
    }
    s
}

fn terms(max_hbar: u32) -> impl Strategy<Value = Vec<(i64, u32, Vec<usize>)>> {
    proptest::collection::vec(
        (-3i64..=3, 0u32..=max_hbar, proptest::collection::vec(0usize..6, 0..=3)),
        1..4,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moyal_is_associative(a in terms(1), b in terms(1), c in terms(1)) {
        let x = ctx();
        let (a, b, c) = (series(&x, &a, None), series(&x, &b, None), series(&x, &c, None));
        let l = x.moyal(&x.moyal(&a, &b).unwrap(), &c).unwrap();
        let r = x.moyal(&a, &x.moyal(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn classical_limit_is_the_graded_product(a in terms(0), b in terms(0)) {
        let x = ctx();
        let (a, b) = (series(&x, &a, None), series(&x, &b, None));
        prop_assert_eq!(x.moyal(&a, &b).unwrap().hbar_part(0), a.multiply(&b).unwrap());
    }

    #[test]
    fn weyl_transform_is_invertible(a in terms(2)) {
        let x = ctx();
        let a = series(&x, &a, None);
        let back = x.weyl_transform_inverse(&x.weyl_transform(&a).unwrap()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn left_action_is_a_module(j1 in terms(0), j2 in terms(0), g in terms(0)) {
        let x = ctx();
        let (j1, j2) = (series(&x, &j1, None), series(&x, &j2, None));
        let g = series(&x, &g, Some(Side::LPrime));
        let lhs = x.weyl_left(&x.moyal(&j1, &j2).unwrap(), &g).unwrap();
        let rhs = x.weyl_left(&j1, &x.weyl_left(&j2, &g).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn right_action_is_a_module(j1 in terms(0), j2 in terms(0), f in terms(0)) {
        let x = ctx();
        let (j1, j2) = (series(&x, &j1, None), series(&x, &j2, None));
        let f = series(&x, &f, Some(Side::L));
        let lhs = x.weyl_right(&f, &x.moyal(&j1, &j2).unwrap()).unwrap();
        let rhs = x.weyl_right(&x.weyl_right(&f, &j1).unwrap(), &j2).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn pairing_is_balanced(j in terms(0), f in terms(0), g in terms(0)) {
        let x = ctx();
        let j = series(&x, &j, None);
        let f = series(&x, &f, Some(Side::L));
        let g = series(&x, &g, Some(Side::LPrime));
        let lhs = x.pairing(&x.weyl_right(&f, &j).unwrap(), &g).unwrap();
        let rhs = x.pairing(&f, &x.weyl_left(&j, &g).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }
}

#[test]
fn commutator_of_linear_functions_is_hbar_times_k() {
    let x = ctx();
    let sp = space(&x);
    let k = x.symplectic().k();
    for a in 0..sp.dim() {
        for b in 0..sp.dim() {
            let xa = Series::monomial(&sp, caps(), rat(1, 1), 0, &[a]).unwrap();
            let xb = Series::monomial(&sp, caps(), rat(1, 1), 0, &[b]).unwrap();
            let sign = if sp.odd(a) && sp.odd(b) { -1 } else { 1 };
            let ab = x.moyal(&xa, &xb).unwrap();
            let ba = x.moyal(&xb, &xa).unwrap();
            let comm = ab.sub(&ba.scale(&rat(sign, 1))).unwrap();
            // quadratic parts cancel by graded commutativity
            let expected = -(k.pair_value(a, b) - rat(sign, 1) * k.pair_value(b, a)) * rat(1, 2);
            assert_eq!(comm, Series::constant(&sp, caps(), expected.clone(), 1), "({a}, {b})");
            // only conjugate pairs fail to commute
            assert_eq!(expected.is_zero(), x.symplectic().omega_entry(a, b).is_zero(), "({a}, {b})");
        }
    }
}

#[test]
fn commutator_div_hbar_keeps_the_top_order() {
    // Truncated at ħ³, a product ħ² x ⋆ ħ² y would lose its ħ⁴ part; the
    // bracket divided by ħ must still return the ħ³ term.
    let c3 = TruncationCaps::new(3, 6, 12).unwrap();
    let g = LieAlgebraData::builtin("sl2").unwrap();
    let x = build_bf_theory(&g, c3).unwrap().context0().unwrap();
    let sp = space(&x);
    let (a, b) = (0..sp.dim())
        .flat_map(|a| (0..sp.dim()).map(move |b| (a, b)))
        .find(|&(a, b)| !x.symplectic().omega_entry(a, b).is_zero())
        .unwrap();
    let xa = Series::monomial(&sp, c3, rat(1, 1), 1, &[a]).unwrap();
    let xb = Series::monomial(&sp, c3, rat(1, 1), 2, &[b]).unwrap();
    let c = x.commutator_div_hbar(&xa, &xb).unwrap();
    assert!(!c.hbar_part(3).is_zero());
}

#[test]
fn actions_reject_functions_on_the_wrong_side() {
    let x = ctx();
    let sp = space(&x);
    let l = (0..sp.dim()).find(|&i| x.polarization().side(i) == Side::L).unwrap();
    let lp = (0..sp.dim()).find(|&i| x.polarization().side(i) == Side::LPrime).unwrap();
    let on_l = Series::monomial(&sp, caps(), rat(1, 1), 0, &[l]).unwrap();
    let on_lp = Series::monomial(&sp, caps(), rat(1, 1), 0, &[lp]).unwrap();
    assert!(x.weyl_left(&x.one(), &on_l).is_err());
    assert!(x.weyl_right(&on_lp, &x.one()).is_err());
    assert!(x.pairing(&on_lp, &on_l).is_err());
    assert_eq!(x.weyl_left(&x.one(), &on_lp).unwrap(), on_lp);
    assert_eq!(x.weyl_right(&on_l, &x.one()).unwrap(), on_l);
}
