use bvbfv::halfline_kernels::{
    gaussian, heat_a, heat_b, Branch, Channel, CutoffFunction, Form, KernelSettings, Kernels, PathMode,
};
use proptest::prelude::*;

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `∫_a^b f(t) dt` through `t = e^s`, which resolves the small-`t` peak.
fn simpson_log(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    simpson(|s| f(s.exp()) * s.exp(), a.ln(), b.ln(), 20_000)
}

fn kernels() -> Kernels {
    Kernels::with_cutoff(CutoffFunction::default()).unwrap()
}

/// `∂_u(φ g_t)(u)` written out from the cutoff and the Gaussian.
fn psi_integrand(c: &CutoffFunction, t: f64, u: f64) -> f64 {
    let (phi, dphi, _) = c.eval(u);
    let g = gaussian(t, u);
    dphi * g + phi * (-u / (2.0 * t)) * g
}

#[test]
fn heat_integrals_match_simpson() {
    for &u in &[0.01, 0.07, 0.3, -0.2, 1.1] {
        for &t in &[0.01, 0.5, 2.0] {
            let b = simpson_log(|s| gaussian(s, u), 1e-12, t);
            let a = simpson_log(|s| -u / (2.0 * s) * gaussian(s, u), 1e-12, t);
            assert!((heat_b(t, u) - b).abs() < 1e-9, "B({t}, {u}): {} vs {b}", heat_b(t, u));
            assert!((heat_a(t, u, 0) - a).abs() < 1e-9, "A({t}, {u}): {} vs {a}", heat_a(t, u, 0));
        }
    }
}

#[test]
fn psi_matches_simpson_on_both_paths() {
    let k = kernels();
    let c = *k.cutoff();
    // plateau, glue band and outside the support
    for &u in &[0.02, 0.06, 0.075, 0.09, -0.08, 0.15] {
        for &(eps, lam) in &[(1e-3, 0.1), (0.01, 1.0), (1e-4, 1e-2)] {
            let got = k.psi(eps, lam, u, 0).unwrap();
            let want = simpson_log(|t| psi_integrand(&c, t, u), eps, lam);
            assert!(
                (got.value - want).abs() < 1e-8,
                "Ψ({eps}, {lam}, {u}) = {} ({:?}) vs {want}",
                got.value,
                got.path
            );
        }
    }
}

#[test]
fn quadrature_and_closed_form_paths_agree() {
    let closed = Kernels::new(KernelSettings {
        mode: PathMode::ClosedForm,
        ..KernelSettings::default()
    })
    .unwrap();
    let quad = Kernels::new(KernelSettings {
        mode: PathMode::Quadrature,
        ..KernelSettings::default()
    })
    .unwrap();
    for &u in &[0.01, 0.04, 0.06, 0.08, 0.3] {
        let a = closed.psi(1e-3, 0.5, u, 0).unwrap().value;
        let b = quad.psi(1e-3, 0.5, u, 0).unwrap().value;
        assert!((a - b).abs() < 1e-9, "u = {u}: {a} vs {b}");
        let a = closed.correction(0.2, u).unwrap().value;
        let b = quad.correction(0.2, u).unwrap().value;
        assert!((a - b).abs() < 1e-8, "u = {u}: {a} vs {b}");
    }
}

#[test]
fn cutoff_derivatives_match_finite_differences() {
    let c = CutoffFunction::default();
    let h = 1e-6;
    let mut u = -0.12;
    while u < 0.12 {
        let (v, d1, d2) = c.eval(u);
        assert_eq!(v, c.eval(-u).0);
        assert!((0.0..=1.0).contains(&v));
        let fd1 = (c.value(u + h) - c.value(u - h)) / (2.0 * h);
        let fd2 = (c.value(u + h) - 2.0 * v + c.value(u - h)) / (h * h);
        assert!((d1 - fd1).abs() < 1e-4 * (1.0 + d1.abs()), "φ'({u})");
        assert!((d2 - fd2).abs() < 1e-2 * (1.0 + d2.abs()), "φ''({u})");
        u += 0.0013;
    }
    assert_eq!(c.value(0.05), 1.0);
    assert_eq!(c.value(0.1), 0.0);
    assert!(CutoffFunction::new(0.1, 0.05).is_err());
    assert!(CutoffFunction::new(0.0, 0.05).is_err());
}

#[test]
fn domain_errors() {
    let k = kernels();
    assert!(k.propagator(0.0, 1.0, 0.1, 0.2).is_err());
    assert!(k.propagator(0.1, 0.05, 0.1, 0.2).is_err());
    assert!(k.propagator(0.01, 1.0, -0.1, 0.2).is_err());
    assert!(k.extended_propagator(1.0, Branch::C2, 0.1, 0.2).is_err());
    assert!(k.bv_kernel(0.0, 0.1, 0.2).is_err());
    assert!(k.heat_form(-1.0, 0.1, 0.2, false).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn propagator_exchange_symmetry(x in 0.0f64..0.3, y in 0.0f64..0.3, eps in 1e-4f64..1e-2) {
        let k = kernels();
        let p = k.propagator(eps, 1.0, x, y).unwrap();
        let q = k.propagator(eps, 1.0, y, x).unwrap();
        let a = p.coeff(Channel::Plus0, Form::One);
        let b = -q.coeff(Channel::Minus0, Form::One);
        prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn propagator_windows_compose(x in 0.0f64..0.2, y in 0.0f64..0.2, mu in 0.02f64..0.5) {
        let k = kernels();
        let eps = 0.01;
        let whole = k.propagator(eps, 1.0, x, y).unwrap();
        let low = k.propagator(eps, mu, x, y).unwrap();
        let high = k.propagator(mu, 1.0, x, y).unwrap();
        let sum = low.add(&high);
        prop_assert!(whole.sub(&sum).max_abs() < 1e-9);
    }

    #[test]
    fn scale_derivative_is_the_integrand(x in 0.0f64..0.15, y in 0.0f64..0.15, lam in 0.005f64..0.5) {
        let k = kernels();
        let h = lam * 1e-4;
        let up = k.propagator(1e-3, lam + h, x, y).unwrap().coeff(Channel::Plus0, Form::One);
        let down = k.propagator(1e-3, lam - h, x, y).unwrap().coeff(Channel::Plus0, Form::One);
        let fd = (up - down) / (2.0 * h);
        let exact = k.propagator_integrand(lam, x, y);
        prop_assert!((fd - exact).abs() < 1e-5 * (1.0 + exact.abs()), "{} vs {}", fd, exact);
    }

    #[test]
    fn mollified_heat_form_agrees_near_the_diagonal(x in 0.0f64..0.02, y in 0.0f64..0.02, t in 1e-3f64..1.0) {
        let k = kernels();
        prop_assert_eq!(k.heat_form(t, x, y, true).unwrap(), k.heat_form(t, x, y, false).unwrap());
    }
}
