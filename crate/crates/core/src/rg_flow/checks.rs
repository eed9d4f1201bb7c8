//! Numerical checks built on the amplitude engine.

use serde::{Deserialize, Serialize};

use crate::bvbfv_check::HalfLineTheory;
use crate::error::{invalid, Error, Result};
use crate::graded_core::{KernelTensor2, Rational, Series};
use crate::halfline_kernels::battery::NumericReport;
use crate::halfline_kernels::{
    derivative, integrate_vec, splitting_theta, Branch, Channel, EvalPath, Form, Kernels, QuadratureSpec,
};

use super::amplitude::{integrate_ordered_sectors, FlowModel, Window};
use super::fields::{Profile, TestField};
use super::graphs::{enumerate_graphs, GraphCaps, GraphSpec};

/// Values of a series on a numeric point, one entry per power of `ħ`.
///
/// Coordinates are read as commuting numbers in canonical monomial order.
pub fn evaluate_series(s: &Series, point: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; s.caps().max_hbar as usize + 1];
    for (h, m, c) in s.terms() {
        let v: f64 = m.indices().map(|i| point[i]).product();
        out[h as usize] += to_f64(c) * v;
    }
    out
}

/// Derivative of [`evaluate_series`] along `dir`.
fn directional(s: &Series, point: &[f64], dir: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; s.caps().max_hbar as usize + 1];
    for (h, m, c) in s.terms() {
        let idx: Vec<usize> = m.indices().collect();
        let mut d = 0.0;
        for j in 0..idx.len() {
            let p: f64 = idx
                .iter()
                .enumerate()
                .map(|(i, &a)| if i == j { dir[a] } else { point[a] })
                .product();
            d += p;
        }
        out[h as usize] += to_f64(c) * d;
    }
    out
}

fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UvTolerance {
    /// Bound on successive differences along the ε-sequence.
    pub cauchy: f64,
    /// Bound on the distance of the last term to the extended evaluation.
    pub limit: f64,
}

impl Default for UvTolerance {
    fn default() -> Self {
        UvTolerance {
            cauchy: 1e-6,
            limit: 1e-5,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UvFiniteness {
    pub graph: String,
    pub t: f64,
    pub eps_sequence: Vec<f64>,
    pub amplitudes: Vec<Vec<f64>>,
    pub limit: Vec<f64>,
    /// Successive differences and their ratios: the divergence profile.
    pub differences: Vec<f64>,
    pub rates: Vec<f64>,
    pub report: NumericReport,
}

impl UvFiniteness {
    pub fn pass(&self) -> bool {
        self.report.pass()
    }
}

/// Amplitudes with `P(ε, t)` edges along a decreasing ε-sequence, compared
/// with each other and with the `P̄(0, t)` evaluation.
pub fn uv_finiteness_check(
    model: &FlowModel,
    g: &GraphSpec,
    field: &TestField,
    t: f64,
    eps_sequence: &[f64],
    tol: UvTolerance,
) -> Result<UvFiniteness> {
    g.validate()?;
    if eps_sequence.is_empty() || eps_sequence.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("ε-sequence must be nonempty and strictly decreasing");
    }
    if !(eps_sequence[eps_sequence.len() - 1] > 0.0 && eps_sequence[0] < t) {
        return invalid(format!("ε-sequence must lie in (0, {t})"));
    }
    let id = g.id();
    let mut amplitudes = Vec::new();
    let mut report = NumericReport::default();
    let mut noise = 0.0_f64;
    for &eps in eps_sequence {
        let a = model.amplitude_uniform(g, Window::new(eps, t)?, field)?;
        if !a.converged {
            report.record_err(format!("{id} at ε = {eps:e}"), quad_error(&a.error, &model.quad));
        }
        noise = noise.max(a.error);
        amplitudes.push(a.hbar_coeffs);
    }
    let lim = model.amplitude_uniform(g, Window::new(0.0, t)?, field)?;
    if !lim.converged {
        report.record_err(format!("{id} extended"), quad_error(&lim.error, &model.quad));
    }
    noise = noise.max(lim.error);
    let mut differences = Vec::new();
    for (i, w) in amplitudes.windows(2).enumerate() {
        let d = sup_diff(&w[0], &w[1]);
        differences.push(d);
        report.record(
            format!("{id} cauchy ε = {:e} → {:e}", eps_sequence[i], eps_sequence[i + 1]),
            d,
            tol.cauchy,
            2.0 * noise,
            EvalPath::Quadrature,
        );
    }
    let last = amplitudes.last().expect("nonempty");
    report.record(
        format!("{id} limit at ε = {:e}", eps_sequence[eps_sequence.len() - 1]),
        sup_diff(last, &lim.hbar_coeffs),
        tol.limit,
        2.0 * noise,
        EvalPath::Quadrature,
    );
    let rates = differences
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    Ok(UvFiniteness {
        graph: id,
        t,
        eps_sequence: eps_sequence.to_vec(),
        amplitudes,
        limit: lim.hbar_coeffs,
        differences,
        rates,
        report,
    })
}

fn quad_error(achieved: &f64, spec: &QuadratureSpec) -> Error {
    Error::Quadrature {
        achieved: *achieved,
        requested: spec.abs_tol,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RgRow {
    pub graph: String,
    pub edges: usize,
    pub labelings: usize,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RgConsistency {
    pub eps: f64,
    pub lam: f64,
    pub rows: Vec<RgRow>,
    pub report: NumericReport,
}

impl RgConsistency {
    pub fn pass(&self) -> bool {
        self.report.pass()
    }
}

/// Both sides of the flow from scale ε to Λ, graph by graph.
///
/// The left side has every edge carrying `P̄(0, Λ)`. The right side sums
/// every labeling of the edges by `P̄(0, ε)` (edges inside an `I_ε` vertex)
/// or `P(ε, Λ)` (edges of the flow), each labeling evaluated separately.
pub fn rg_consistency_check(
    model: &FlowModel,
    eps: f64,
    lam: f64,
    caps: GraphCaps,
    max_edges: usize,
    field: &TestField,
    tol: f64,
) -> Result<RgConsistency> {
    if !(eps > 0.0 && lam > eps && lam.is_finite()) {
        return Err(Error::Domain(format!("RG check needs 0 < ε < Λ, got ({eps}, {lam})")));
    }
    let graphs = enumerate_graphs(caps, &model.valences(), &model.endpoints())?;
    let inner = Window::new(0.0, eps)?;
    let flow = Window::new(eps, lam)?;
    let full = Window::new(0.0, lam)?;
    let mut rows = Vec::new();
    let mut report = NumericReport::default();
    for g in graphs.iter().filter(|g| g.edge_count() <= max_edges) {
        let id = g.id();
        let e = g.edge_count();
        let lhs = model.amplitude_uniform(g, full, field)?;
        let mut noise = lhs.error;
        let mut rhs = vec![0.0; lhs.hbar_coeffs.len()];
        for mask in 0..(1usize << e) {
            let windows: Vec<Window> = (0..e).map(|k| if mask >> k & 1 == 1 { flow } else { inner }).collect();
            let a = model.amplitude(g, &windows, field)?;
            noise += a.error;
            if a.hbar_coeffs.len() > rhs.len() {
                rhs.resize(a.hbar_coeffs.len(), 0.0);
            }
            for (r, v) in rhs.iter_mut().zip(&a.hbar_coeffs) {
                *r += v;
            }
        }
        report.record(
            format!("{id} edges {e}"),
            sup_diff(&lhs.hbar_coeffs, &rhs),
            tol,
            noise,
            EvalPath::Quadrature,
        );
        rows.push(RgRow {
            graph: id,
            edges: e,
            labelings: 1 << e,
            lhs: lhs.hbar_coeffs,
            rhs,
        });
    }
    Ok(RgConsistency { eps, lam, rows, report })
}

/// A functional of rank at most two, built from test coforms `c` paired
/// with the 0-form part of a field, `⟨c, ψ⟩ = ∫ Σ_a c_a(x) ψ_a(x) dx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Functional {
    Constant { value: f64 },
    Linear { coform: Vec<Profile> },
    Quadratic { first: Vec<Profile>, second: Vec<Profile> },
}

impl Functional {
    fn label(&self) -> &'static str {
        match self {
            Functional::Constant { .. } => "constant",
            Functional::Linear { .. } => "linear",
            Functional::Quadratic { .. } => "quadratic",
        }
    }
}

/// Boundary datum `l' ∈ L'` and bulk field at which both composites are evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingSample {
    pub lprime: Vec<f64>,
    pub field: TestField,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplittingTolerance {
    pub linear: f64,
    pub quadratic: f64,
}

impl Default for SplittingTolerance {
    fn default() -> Self {
        SplittingTolerance {
            linear: 1e-10,
            quadratic: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SplittingRow {
    pub input: String,
    pub sample: usize,
    pub term: String,
    pub path_a: f64,
    pub path_b: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SplittingDiagram {
    pub eps: f64,
    pub lam: f64,
    pub rows: Vec<SplittingRow>,
    pub report: NumericReport,
}

impl SplittingDiagram {
    pub fn pass(&self) -> bool {
        self.report.pass()
    }
}

struct Pairing<'a> {
    k: &'a Kernels,
    spec: QuadratureSpec,
}

impl Pairing<'_> {
    fn breaks(&self, c: &[Profile]) -> Vec<f64> {
        let cut = self.k.cutoff();
        let mut b = vec![0.0, cut.r1, cut.r2];
        for p in c {
            if let Some((lo, hi)) = p.support() {
                b.extend([lo, hi]);
            }
        }
        b
    }

    /// `∫ Σ_a c_a(x) ψ_a(x) dx` for a vector function `ψ`.
    fn pair(&self, c: &[Profile], psi: &dyn Fn(f64) -> Result<Vec<f64>>) -> Result<f64> {
        let mut failure = None;
        let mut f = |x: f64, out: &mut [f64]| {
            out[0] = 0.0;
            if c.iter().all(|p| p.value(x) == 0.0) {
                return;
            }
            match psi(x) {
                Ok(v) => out[0] = c.iter().zip(&v).map(|(p, y)| p.value(x) * y).sum(),
                Err(e) => failure = Some(e),
            }
        };
        let r = integrate_vec(&mut f, 1, &self.breaks(c), &self.spec);
        if let Some(e) = failure {
            return Err(e);
        }
        if !r.converged {
            return Err(Error::Quadrature {
                achieved: r.error,
                requested: self.spec.abs_tol,
            });
        }
        Ok(r.values[0])
    }
}

/// Evaluates both composites of the splitting square on every input.
///
/// Path A applies `e^{ħ∂_{P(ε,Λ)}}` and then splits at scale Λ. Path B
/// splits at scale ε and then flows with the conjugated operator, which
/// shifts the field by `Δθ(l') = 2(α(l' ⊗ -) ⊗ 1) P(ε,Λ)(0, -)`, contracts
/// with `P̄(0,Λ) − P̄(0,ε)` sector by sector, and adds an `α–α` term
/// proportional to `P(ε,Λ)(0,0)`.
pub fn splitting_diagram_check(
    model: &FlowModel,
    eps: f64,
    lam: f64,
    inputs: &[Functional],
    samples: &[SplittingSample],
    tol: SplittingTolerance,
) -> Result<SplittingDiagram> {
    if model.is_interval() {
        return invalid("the splitting square is checked on the half-line");
    }
    if !(eps > 0.0 && lam > eps && lam.is_finite()) {
        return Err(Error::Domain(format!("splitting check needs 0 < ε < Λ, got ({eps}, {lam})")));
    }
    let k = model.kernels();
    let basis = model.basis();
    let n = basis.dim();
    let pairing = Pairing {
        k,
        spec: QuadratureSpec::default().with_tol(1e-14),
    };
    let mut rows = Vec::new();
    let mut report = NumericReport::default();
    let push = |rows: &mut Vec<SplittingRow>, report: &mut NumericReport, input: &str, s: usize, term: &str, a: f64, b: f64, tol: f64| {
        report.record(format!("{input} sample {s} {term}"), (a - b).abs(), tol, 0.0, EvalPath::Quadrature);
        rows.push(SplittingRow {
            input: input.to_string(),
            sample: s,
            term: term.to_string(),
            path_a: a,
            path_b: b,
        });
    };
    for (si, sample) in samples.iter().enumerate() {
        sample.field.validate(n)?;
        if !sample.field.satisfies_boundary(basis.polarization(0)) {
            return invalid(format!("sample {si}: field value at 0 is not in L"));
        }
        let lp = &sample.lprime;
        let theta = |t: f64| move |x: f64| splitting_theta(k, basis, t, lp, x);
        let delta = |x: f64| -> Result<Vec<f64>> {
            let m = basis.matrix(&k.propagator(eps, lam, 0.0, x)?, Form::One);
            Ok(basis.contract_first(lp, &m).into_iter().map(|v| 2.0 * v).collect())
        };
        let phi = |x: f64| -> Result<Vec<f64>> { Ok(sample.field.zero_form.iter().map(|p| p.value(x)).collect()) };
        // every linear piece, for a coform c: (f(θ_Λ), f(θ_ε), f(Δθ), f(φ))
        let pieces = |c: &[Profile]| -> Result<[f64; 4]> {
            if c.len() != n {
                return invalid(format!("coform has {} components, expected {n}", c.len()));
            }
            Ok([
                pairing.pair(c, &theta(lam))?,
                pairing.pair(c, &theta(eps))?,
                pairing.pair(c, &delta)?,
                pairing.pair(c, &phi)?,
            ])
        };
        // α–α contraction against P(ε,Λ)(0,0)
        let m00 = basis.matrix(&k.propagator(eps, lam, 0.0, 0.0)?, Form::One);
        let v = basis.contract_first(lp, &m00);
        let aa: f64 = (0..n)
            .map(|b| (0..n).map(|c| lp[c] * basis.omega(c, b)).sum::<f64>() * v[b])
            .sum();
        for input in inputs {
            let label = input.label();
            match input {
                Functional::Constant { value } => {
                    push(&mut rows, &mut report, label, si, "ħ^0", *value, *value, tol.linear);
                }
                Functional::Linear { coform } => {
                    let [tl, te, d, f] = pieces(coform)?;
                    push(&mut rows, &mut report, label, si, "ħ^0", tl + f, te + d + f, tol.linear);
                }
                Functional::Quadratic { first, second } => {
                    let [tl1, te1, d1, f1] = pieces(first)?;
                    let [tl2, te2, d2, f2] = pieces(second)?;
                    let a0 = (tl1 + f1) * (tl2 + f2);
                    let b0 = (te1 + d1 + f1) * (te2 + d2 + f2);
                    push(&mut rows, &mut report, label, si, "ħ^0", a0, b0, tol.quadratic);
                    let (a1, b1) = contraction_both_ways(model, eps, lam, first, second)?;
                    push(&mut rows, &mut report, label, si, "ħ^1", a1, b1, tol.quadratic);
                    push(&mut rows, &mut report, label, si, "ħ^-1 α–α", 0.0, aa, tol.quadratic);
                }
            }
        }
    }
    Ok(SplittingDiagram { eps, lam, rows, report })
}

/// `∂_P(f₁ f₂) = Σ_ab P_ab (c₁ₐ ⊗ c₂ᵦ + (−1)^{|a||b|} c₂ₐ ⊗ c₁ᵦ)`, once with
/// `P(ε,Λ)` directly and once as `P̄(0,Λ) − P̄(0,ε)` with branches taken
/// from the sector order.
fn contraction_both_ways(model: &FlowModel, eps: f64, lam: f64, c1: &[Profile], c2: &[Profile]) -> Result<(f64, f64)> {
    let k = model.kernels();
    let basis = model.basis();
    let n = basis.dim();
    let space = model.symplectic().space().clone();
    let hi = c1
        .iter()
        .chain(c2)
        .filter_map(|p| p.support())
        .map(|s| s.1)
        .fold(0.0, f64::max);
    if hi == 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut breaks: Vec<f64> = c1.iter().chain(c2).filter_map(|p| p.support()).flat_map(|(a, b)| [a, b]).collect();
    let cut = k.cutoff();
    breaks.extend([cut.r1 / 2.0, cut.r2 / 2.0]);
    let spec = QuadratureSpec::default().with_tol(1e-10);
    let mut failure = None;
    let bilinear = |m: &[Vec<f64>], x: f64, y: f64| -> f64 {
        let mut s = 0.0;
        for a in 0..n {
            let (u1, u2) = (c1[a].value(x), c2[a].value(x));
            if u1 == 0.0 && u2 == 0.0 {
                continue;
            }
            for b in 0..n {
                let sign = if space.odd(a) && space.odd(b) { -1.0 } else { 1.0 };
                s += m[a][b] * (u1 * c2[b].value(y) + sign * u2 * c1[b].value(y));
            }
        }
        s
    };
    let mut f = |p: &[f64], order: &[usize], out: &mut [f64]| {
        out[0] = 0.0;
        out[1] = 0.0;
        if failure.is_some() {
            return;
        }
        let (x, y) = (p[0], p[1]);
        let br = if order[0] == 0 { Branch::C1 } else { Branch::C2 };
        let r = (|| -> Result<()> {
            let direct = basis.matrix(&k.propagator(eps, lam, x, y)?, Form::One);
            let full = k.extended_propagator(lam, br, x, y)?;
            let inner = k.extended_propagator(eps, br, x, y)?;
            let split = basis.matrix(&full.sub(&inner), Form::One);
            out[0] = bilinear(&direct, x, y);
            out[1] = bilinear(&split, x, y);
            Ok(())
        })();
        if let Err(e) = r {
            failure = Some(e);
        }
    };
    let r = integrate_ordered_sectors(2, 0.0, hi, &breaks, &[cut.r1, cut.r2], &spec, 2, &mut f);
    if let Some(e) = failure {
        return Err(e);
    }
    if !r.converged {
        return Err(Error::Quadrature {
            achieved: r.error,
            requested: spec.abs_tol,
        });
    }
    Ok((r.values[0], r.values[1]))
}

#[derive(Clone, Debug, Serialize)]
pub struct AnomalyProbe {
    pub t: f64,
    /// Integrated left side per power of `ħ`.
    pub lhs: Vec<f64>,
    /// Weyl transform of the interaction at the boundary value, per power of `ħ`.
    pub rhs: Vec<f64>,
    pub boundary_value: Vec<f64>,
    pub report: NumericReport,
}

impl AnomalyProbe {
    pub fn pass(&self) -> bool {
        self.report.pass()
    }
}

/// Which face of the configuration space the probe integrates towards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeEndpoint {
    /// The left end `x = 0`.
    Left,
    /// The right end of an interval. The field is given in the coordinate
    /// `u = 1 − x`; reversing the orientation turns `K` into `−K`.
    Right,
}

/// Boundary anomaly at one-bulk-vertex order.
///
/// With `J∂ = 0` the one-vertex part of `I_t` is `∫ p_x(φ(x))`, where
/// `p_x = e^{ħ q(x) ∂_{K₊−K₋}} I∂` and `q(x) (K₊ − K₋)` is the averaged
/// diagonal of `P̄(0,t)`. Applying `ħd + ħ²∂_{K_t}` leaves the integral of
/// `∇p_x · φ⁰' + ħ k(x) ∂_{K₊−K₋} p_x`, with `k(x)` read off the diagonal of
/// the BV kernel. Its only boundary face is `x → 0`, where `q = ¼` and the
/// algebraic side is the Weyl transform of `I∂` at `φ⁰(0)`. At the right
/// end the transform is the inverse one.
pub fn anomaly_probe(
    th: &HalfLineTheory,
    kernels: &Kernels,
    endpoint: ProbeEndpoint,
    caps: GraphCaps,
    field: &TestField,
    t: f64,
    tol: f64,
) -> Result<AnomalyProbe> {
    caps.validate()?;
    if caps.max_bulk != 1 {
        return Err(Error::Domain("the anomaly probe is implemented at one-bulk-vertex order only".into()));
    }
    if !th.j.is_zero() {
        return Err(Error::Domain("the anomaly probe needs J∂ = 0".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("anomaly probe needs t > 0, got {t}")));
    }
    let n = th.symplectic().space().dim();
    field.validate(n)?;
    if !field.satisfies_boundary(th.polarization()) {
        return invalid("test field value at 0 is not in L");
    }
    let ctx = th.context()?;
    let split = ctx.split();
    let minus_one = Rational::from_integer((-1).into());
    let mut d: KernelTensor2 = split.k_plus.add(&split.k_minus.scaled(&minus_one));
    if endpoint == ProbeEndpoint::Right {
        d = d.scaled(&minus_one);
    }
    let mut powers = vec![th.i.clone()];
    while !powers.last().expect("nonempty").is_zero() {
        let next = powers.last().expect("nonempty").contract(&d)?;
        powers.push(next);
    }
    let dim = th.caps().max_hbar as usize + powers.len() + 1;
    let mut report = NumericReport::default();

    let diag = |x: f64| -> Result<(f64, f64)> {
        let a = kernels.extended_propagator(t, Branch::C1, x, x)?;
        let b = kernels.extended_propagator(t, Branch::C2, x, x)?;
        let avg = a.add(&b).scaled(0.5);
        Ok((avg.coeff(Channel::Plus0, Form::One), avg.coeff(Channel::Minus0, Form::One)))
    };
    let kdiag = |x: f64| -> Result<(f64, f64)> {
        let v = kernels.bv_kernel(t, x, x)?;
        let s = |c| v.coeff(c, Form::Dx) + v.coeff(c, Form::Dy);
        Ok((s(Channel::Plus0), s(Channel::Minus0)))
    };
    let cut = kernels.cutoff();
    for &x in &[0.25 * cut.r1, 0.75 * cut.r1, 0.5 * (cut.r1 + cut.r2) / 2.0, 0.45 * cut.r2, 0.3] {
        let (qp, qm) = diag(x)?;
        let (kp, km) = kdiag(x)?;
        report.record(format!("diagonal channels opposite at x = {x}"), (qp + qm).abs(), 1e-12, 0.0, EvalPath::ClosedForm);
        report.record(format!("kernel channels opposite at x = {x}"), (kp + km).abs(), 1e-10, 0.0, EvalPath::ClosedForm);
        let h = 1e-5;
        let dq = derivative(&|s: f64| diag(s).map(|v| v.0).unwrap_or(f64::NAN), x, h);
        report.record(format!("diagonal kernel is ∂_x q at x = {x}"), (kp - dq).abs(), 1e-6, 0.0, EvalPath::Quadrature);
    }

    let phi0 = |x: f64| -> Vec<f64> { field.zero_form.iter().map(|p| p.value(x)).collect() };
    let dphi0 = |x: f64| -> Vec<f64> { field.zero_form.iter().map(|p| p.eval(x).1).collect() };
    let mut factorial = vec![1.0; powers.len() + 1];
    for i in 1..factorial.len() {
        factorial[i] = factorial[i - 1] * i as f64;
    }
    let p_at = |q: f64, point: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (m, s) in powers.iter().enumerate() {
            let w = q.powi(m as i32) / factorial[m];
            for (h, v) in evaluate_series(s, point).into_iter().enumerate() {
                out[h + m] += w * v;
            }
        }
        out
    };
    let hi = field.support().map(|s| s.1).unwrap_or(0.0).max(cut.r2);
    let mut failure = None;
    let mut integrand = |x: f64, out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        let (q, kd) = match diag(x).and_then(|(q, _)| Ok((q, kdiag(x)?.0))) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                return;
            }
        };
        let (p, dp) = (phi0(x), dphi0(x));
        for (m, s) in powers.iter().enumerate() {
            let w = q.powi(m as i32) / factorial[m];
            for (h, v) in directional(s, &p, &dp).into_iter().enumerate() {
                out[h + m] += w * v;
            }
            if let Some(next) = powers.get(m + 1) {
                for (h, v) in evaluate_series(next, &p).into_iter().enumerate() {
                    out[h + m + 1] += kd * w * v;
                }
            }
        }
    };
    let mut breaks = field.breakpoints();
    breaks.extend([0.0, cut.r1 / 2.0, cut.r2 / 2.0, hi]);
    let r = integrate_vec(&mut integrand, dim, &breaks, &QuadratureSpec::default().with_tol(1e-11));
    if let Some(e) = failure {
        return Err(e);
    }
    if !r.converged {
        report.record_err(
            "face integral".into(),
            Error::Quadrature {
                achieved: r.error,
                requested: 1e-11,
            },
        );
    }
    let (q_end, _) = diag(hi)?;
    let tail = p_at(q_end, &phi0(hi));
    let lhs: Vec<f64> = r.values.iter().zip(&tail).map(|(v, e)| e - v).collect();
    let boundary_value = phi0(0.0);
    let w = match endpoint {
        ProbeEndpoint::Left => ctx.weyl_transform(&th.i)?,
        ProbeEndpoint::Right => ctx.weyl_transform_inverse(&th.i)?,
    };
    let mut rhs = evaluate_series(&w, &boundary_value);
    rhs.resize(dim.max(rhs.len()), 0.0);
    for k in 0..rhs.len() {
        let l = lhs.get(k).copied().unwrap_or(0.0);
        report.record(format!("ħ^{k} boundary face {endpoint:?}"), (l - rhs[k]).abs(), tol, r.error, EvalPath::Quadrature);
    }
    Ok(AnomalyProbe {
        t,
        lhs,
        rhs,
        boundary_value,
        report,
    })
}
