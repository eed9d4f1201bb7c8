use std::collections::BTreeMap;

use bvbfv::bf_theory::{build_bf_theory, LieAlgebraData};
use bvbfv::halfline_kernels::{CutoffFunction, Kernels, QuadratureSpec};
use bvbfv::rg_flow::{
    enumerate_graphs, integrate_ordered_sectors, leg_value, FieldPreset, FlowModel, GraphCaps, GraphSpec, Profile,
    TestField, Valences, VertexKind, Window,
};
use bvbfv::graded_core::TruncationCaps;
use proptest::prelude::*;

/// All permutations of `0..n` by Heap's algorithm.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, a, out);
            let j = if k % 2 == 0 { i } else { 0 };
            a.swap(j, k - 1);
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}

/// Vertex relabelings fixing kinds, legs and the edge multiset, times the
/// factorials of edge multiplicities.
fn symmetry_oracle(g: &GraphSpec) -> u64 {
    let n = g.kinds.len();
    let mut edges = g.edges.clone();
    edges.sort();
    let mut count = 0u64;
    for p in permutations(n) {
        if (0..n).any(|v| g.kinds[p[v]] != g.kinds[v] || g.legs[p[v]] != g.legs[v]) {
            continue;
        }
        let mut img: Vec<_> = g.edges.iter().map(|&(u, v)| (p[u].min(p[v]), p[u].max(p[v]))).collect();
        img.sort();
        if img == edges {
            count += 1;
        }
    }
    let mut mult = BTreeMap::new();
    for e in &g.edges {
        *mult.entry(*e).or_insert(0u64) += 1;
    }
    count * mult.values().map(|&m| (1..=m).product::<u64>()).product::<u64>()
}

fn bulk(n: usize) -> Vec<VertexKind> {
    vec![VertexKind::Bulk; n]
}

#[test]
fn symmetry_factors_of_known_graphs() {
    let cases = [
        (bulk(1), vec![2], vec![(0, 0)], 1),
        (bulk(2), vec![1, 1], vec![(0, 1)], 2),
        (bulk(2), vec![1, 2], vec![(0, 1)], 1),
        (bulk(2), vec![1, 1], vec![(0, 1), (0, 1)], 4),
        (bulk(3), vec![1, 1, 1], vec![(0, 1), (1, 2), (0, 2)], 6),
        (bulk(3), vec![1, 1, 1], vec![(0, 1), (1, 2)], 2),
        (vec![VertexKind::Bulk, VertexKind::Boundary0], vec![1, 0], vec![(0, 1), (0, 1)], 2),
    ];
    for (kinds, legs, edges, want) in cases {
        let g = GraphSpec::new(kinds, legs, edges).unwrap();
        assert_eq!(g.automorphisms, want, "{}", g.id());
        assert_eq!(symmetry_oracle(&g), want, "{}", g.id());
    }
}

#[test]
fn enumerated_graphs_carry_brute_force_symmetry_factors() {
    let valences = Valences {
        bulk: vec![2, 3, 4],
        boundary: vec![1, 2],
    };
    let mut total = 0;
    for caps in [GraphCaps::new(3, 0, 1).unwrap(), GraphCaps::new(2, 2, 1).unwrap()] {
        let graphs = enumerate_graphs(caps, &valences, &[VertexKind::Boundary0]).unwrap();
        let mut ids: Vec<String> = graphs.iter().map(GraphSpec::id).collect();
        let n = ids.len();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), n, "duplicate graphs");
        for g in &graphs {
            g.validate().unwrap();
            assert_eq!(g.automorphisms, symmetry_oracle(g), "{}", g.id());
        }
        total += n;
    }
    assert!(total > 20);
}

#[test]
fn invalid_graphs_are_rejected() {
    assert!(GraphSpec::new(vec![VertexKind::Boundary0], vec![1], vec![]).is_err());
    assert!(GraphSpec::new(bulk(2), vec![1], vec![(0, 1)]).is_err());
    assert!(GraphSpec::new(bulk(2), vec![1, 1], vec![(0, 2)]).is_err());
    let b2 = vec![VertexKind::Bulk, VertexKind::Boundary0, VertexKind::Boundary0];
    assert!(GraphSpec::new(b2, vec![1, 1, 1], vec![(1, 2)]).is_err());
    let disconnected = GraphSpec::new(bulk(2), vec![1, 1], vec![]).unwrap();
    assert!(disconnected.validate().is_err());
    let legless = GraphSpec::new(bulk(2), vec![0, 1], vec![(0, 1)]).unwrap();
    assert!(legless.validate().is_err());
    assert!(GraphCaps::new(4, 0, 0).is_err());
    assert!(GraphCaps::new(0, 0, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ordered_sectors_sum_to_the_cube(c in proptest::collection::vec(-2.0f64..2.0, 6), n in 1usize..=3) {
        // p(x) = c0 + c1 x0 + c2 x0 x1² + c3 x_last³ + c4 x0 x_last + c5 (x0 - x_last)²
        let p = |x: &[f64]| {
            let (a, z) = (x[0], x[x.len() - 1]);
            let b = if x.len() > 1 { x[1] } else { 1.0 };
            c[0] + c[1] * a + c[2] * a * b * b + c[3] * z * z * z + c[4] * a * z + c[5] * (a - z) * (a - z)
        };
        let (lo, hi) = (0.1, 0.7);
        let spec = QuadratureSpec::default().with_tol(1e-11);
        let r = integrate_ordered_sectors(n, lo, hi, &[0.35], &[0.05], &spec, 1, &mut |x, _, out| out[0] = p(x));
        // tensor Gauss-Legendre with 4 points per axis integrates these cubics exactly
        let nodes = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
        let weights = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut exact = 0.0;
        let mut idx = vec![0usize; n];
        loop {
            let x: Vec<f64> = idx.iter().map(|&i| mid + half * nodes[i]).collect();
            let w: f64 = idx.iter().map(|&i| weights[i] * half).product();
            exact += w * p(&x);
            let mut k = 0;
            while k < n {
                idx[k] += 1;
                if idx[k] < 4 {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }
        prop_assert!((r.values[0] - exact).abs() < 1e-9, "{} vs {}", r.values[0], exact);
    }

    #[test]
    fn bulk_leg_value_is_a_derivation(a in 0.0f64..1.0, x in 0.3f64..0.6, legs in proptest::collection::vec(0usize..3, 1..4)) {
        let mut f = TestField::zero(3);
        for k in 0..3 {
            f.zero_form[k] = Profile::Interior { a: 0.2, b: 0.7, amp: 1.0 + k as f64 };
            f.one_form[k] = Profile::Interior { a: 0.25, b: 0.65, amp: a - k as f64 };
        }
        // d/ds Π (f⁰ + s f¹) at s = 0
        let h = 1e-6;
        let prod = |s: f64| legs.iter().map(|&i| f.zero_form[i].value(x) + s * f.one_form[i].value(x)).product::<f64>();
        let fd = (prod(h) - prod(-h)) / (2.0 * h);
        prop_assert!((leg_value(&f, &legs, x, true) - fd).abs() < 1e-7);
        let direct: f64 = legs.iter().map(|&i| f.zero_form[i].value(x)).product();
        prop_assert_eq!(leg_value(&f, &legs, x, false), direct);
    }
}

/// Trees vanish for BF theories; the non-unimodular algebra has a nonzero
/// tadpole with a boundary field, which the window tests need.
fn model() -> FlowModel {
    let g = LieAlgebraData::builtin("nonabelian2").unwrap();
    let th = build_bf_theory(&g, TruncationCaps::default()).unwrap();
    FlowModel::half_line(&th.endpoint_theory(0).unwrap(), Kernels::with_cutoff(CutoffFunction::default()).unwrap())
        .unwrap()
}

fn small_graphs(m: &FlowModel) -> Vec<GraphSpec> {
    let gs = enumerate_graphs(GraphCaps::new(2, 0, 1).unwrap(), &m.valences(), &m.endpoints()).unwrap();
    gs.into_iter().filter(|g| g.edge_count() <= 1).collect()
}

#[test]
fn amplitudes_scale_with_the_number_of_legs() {
    let m = model();
    let w = Window::new(0.01, 0.1).unwrap();
    let field = FieldPreset::Boundary.build(m.basis().polarization(0));
    let graphs = small_graphs(&m);
    assert!(!graphs.is_empty());
    let mut nonzero = 0;
    for g in &graphs {
        let legs: usize = g.legs.iter().sum();
        let base = m.amplitude_uniform(g, w, &field).unwrap();
        let twice = m.amplitude_uniform(g, w, &field.scaled(2.0)).unwrap();
        let s = 2f64.powi(legs as i32);
        for k in 0..base.hbar_coeffs.len() {
            let (a, b) = (base.coeff(k), twice.coeff(k));
            assert!((b - s * a).abs() <= 1e-9 * (1.0 + b.abs()), "{} ħ^{k}: {b} vs {s}·{a}", g.id());
            if a.abs() > 1e-12 {
                nonzero += 1;
            }
        }
    }
    assert!(nonzero > 0);
}

#[test]
fn single_edge_amplitudes_add_over_adjacent_windows() {
    let m = model();
    let field = FieldPreset::Boundary.build(m.basis().polarization(0));
    let single: Vec<_> = small_graphs(&m).into_iter().filter(|g| g.edge_count() == 1).collect();
    assert!(!single.is_empty());
    for g in single {
        let whole = m.amplitude_uniform(&g, Window::new(0.01, 0.2).unwrap(), &field).unwrap();
        let low = m.amplitude_uniform(&g, Window::new(0.01, 0.05).unwrap(), &field).unwrap();
        let high = m.amplitude_uniform(&g, Window::new(0.05, 0.2).unwrap(), &field).unwrap();
        for k in 0..whole.hbar_coeffs.len() {
            let d = whole.coeff(k) - low.coeff(k) - high.coeff(k);
            assert!(d.abs() < 1e-8, "{} ħ^{k}: {d}", g.id());
        }
    }
}

#[test]
fn amplitude_input_validation() {
    let m = model();
    let field = FieldPreset::Separated.build(m.basis().polarization(0));
    let g = small_graphs(&m).into_iter().find(|g| g.edge_count() == 1).unwrap();
    assert!(m.amplitude(&g, &[], &field).is_err());
    assert!(Window::new(0.1, 0.1).is_err());
    assert!(Window::new(-1.0, 0.1).is_err());
    assert!(m.amplitude_uniform(&g, Window::new(0.01, 0.1).unwrap(), &TestField::zero(2)).is_err());
    let right = GraphSpec::new(vec![VertexKind::Bulk, VertexKind::Boundary1], vec![1, 0], vec![(0, 1)]).unwrap();
    assert!(m.amplitude_uniform(&right, Window::new(0.01, 0.1).unwrap(), &field).is_err());
    assert!(FieldPreset::parse("diagonal").is_err());
}
