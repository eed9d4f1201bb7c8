//! Heat-kernel forms, BV kernels, propagators and the renormalized splitting
//! on the half-line and on the unit interval.
//!
//! Every two-point kernel here has the shape `Σ_c f_c(x, y) ⊗ M_c` where
//! `M_c` is one of the four boundary tensors `K_{0,±}`, `K_{1,±}` and `f_c`
//! is a form on the two-point space. [`FieldKernelValue`] stores the scalar
//! coefficients; [`TensorBasis`] turns them into numeric `V ⊗ V` matrices.

pub mod battery;
mod heat;
mod quadrature;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use heat::{gaussian, heat_a, heat_b, CutoffFunction};
pub use quadrature::{
    derivative, integrate, integrate_vec, integrate_with_breaks, Integral, QuadratureRule, QuadratureSpec, VecIntegral,
};

use crate::error::{invalid, Error, Result};
use crate::graded_core::{Polarization, Side, SymplecticSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// `x ≤ y`
    C1,
    /// `y ≤ x`
    C2,
}

impl Branch {
    pub fn contains(self, x: f64, y: f64) -> bool {
        match self {
            Branch::C1 => x <= y,
            Branch::C2 => y <= x,
        }
    }

    /// Branch containing an off-diagonal point, `C1` on the diagonal.
    pub fn of(x: f64, y: f64) -> Branch {
        if x <= y {
            Branch::C1
        } else {
            Branch::C2
        }
    }
}

/// How the scale integral was evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalPath {
    ClosedForm,
    BranchLimit,
    Quadrature,
}

/// Path selection policy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathMode {
    /// Closed form where the cutoff is flat, quadrature in the glue band.
    #[default]
    Auto,
    ClosedForm,
    Quadrature,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KernelSettings {
    pub cutoff: CutoffFunction,
    pub quad: QuadratureSpec,
    pub mode: PathMode,
}

/// Boundary tensor channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Plus0 = 0,
    Minus0 = 1,
    Plus1 = 2,
    Minus1 = 3,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Plus0, Channel::Minus0, Channel::Plus1, Channel::Minus1];
}

/// Component in the form basis `{1, dx, dy, dx∧dy}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Form {
    One = 0,
    Dx = 1,
    Dy = 2,
    DxDy = 3,
}

impl Form {
    pub const ALL: [Form; 4] = [Form::One, Form::Dx, Form::Dy, Form::DxDy];
}

/// Scalar differential form on the two-point space.
pub type ScalarForm = [f64; 4];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldKernelValue {
    pub x: f64,
    pub y: f64,
    /// `coeffs[channel][form]`
    pub coeffs: [[f64; 4]; 4],
    pub path: EvalPath,
    /// Accumulated absolute error estimate of the coefficients.
    pub error: f64,
}

impl FieldKernelValue {
    fn new(x: f64, y: f64) -> Self {
        FieldKernelValue {
            x,
            y,
            coeffs: [[0.0; 4]; 4],
            path: EvalPath::ClosedForm,
            error: 0.0,
        }
    }

    pub fn coeff(&self, c: Channel, f: Form) -> f64 {
        self.coeffs[c as usize][f as usize]
    }

    fn note(&mut self, e: &Eval) {
        self.path = self.path.max(e.path);
        self.error += e.error;
    }

    /// Forms carrying a nonzero coefficient.
    pub fn forms_present(&self) -> Vec<Form> {
        Form::ALL
            .into_iter()
            .filter(|f| self.coeffs.iter().any(|row| row[*f as usize] != 0.0))
            .collect()
    }

    pub fn sub(&self, other: &FieldKernelValue) -> FieldKernelValue {
        let mut out = self.clone();
        for c in 0..4 {
            for f in 0..4 {
                out.coeffs[c][f] -= other.coeffs[c][f];
            }
        }
        out.path = self.path.max(other.path);
        out.error = self.error + other.error;
        out
    }

    pub fn add(&self, other: &FieldKernelValue) -> FieldKernelValue {
        self.sub(&other.scaled(-1.0))
    }

    pub fn scaled(&self, s: f64) -> FieldKernelValue {
        let mut out = self.clone();
        for row in out.coeffs.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out.error *= s.abs();
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// A scalar with its error estimate and evaluation path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eval {
    pub value: f64,
    pub error: f64,
    pub path: EvalPath,
}

impl Eval {
    fn closed(value: f64) -> Eval {
        Eval {
            value,
            error: 0.0,
            path: EvalPath::ClosedForm,
        }
    }
}

/// Which image charge the kernel uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    /// Half-line `[0, ∞)`, image at `x + y`.
    L0,
    /// Reflected half-line `(-∞, 1]`, image at `x + y - 2`.
    L1,
}

impl Chart {
    fn image(self, x: f64, y: f64) -> (f64, i8) {
        match self {
            Chart::L0 => (x + y, 1),
            Chart::L1 => (x + y - 2.0, -1),
        }
    }

    fn channels(self) -> (Channel, Channel) {
        match self {
            Chart::L0 => (Channel::Plus0, Channel::Minus0),
            Chart::L1 => (Channel::Plus1, Channel::Minus1),
        }
    }
}

/// Pure evaluator of the free-theory kernels for fixed numerics.
#[derive(Clone, Debug, Default)]
pub struct Kernels {
    pub settings: KernelSettings,
}

impl Kernels {
    pub fn new(settings: KernelSettings) -> Result<Self> {
        settings.quad.validate()?;
        CutoffFunction::new(settings.cutoff.r1, settings.cutoff.r2)?;
        Ok(Kernels { settings })
    }

    pub fn with_cutoff(cutoff: CutoffFunction) -> Result<Self> {
        Kernels::new(KernelSettings {
            cutoff,
            ..KernelSettings::default()
        })
    }

    pub fn cutoff(&self) -> &CutoffFunction {
        &self.settings.cutoff
    }

    fn use_quadrature(&self, u: f64) -> bool {
        match self.settings.mode {
            PathMode::ClosedForm => false,
            PathMode::Quadrature => true,
            PathMode::Auto => !self.cutoff().is_flat(u),
        }
    }

    /// Heat-kernel form `H_t` (or `H̃_t` when mollified) at `(x, y)`.
    pub fn heat_form(&self, t: f64, x: f64, y: f64, mollified: bool) -> Result<ScalarForm> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("heat form needs t > 0, got {t}")));
        }
        let (m1, m2) = if mollified {
            (self.cutoff().value(x - y), self.cutoff().value(x + y))
        } else {
            (1.0, 1.0)
        };
        let g1 = m1 * gaussian(t, x - y);
        let g2 = m2 * gaussian(t, x + y);
        Ok([0.0, -g1 - g2, g1 - g2, 0.0])
    }

    /// `Ψ(u) = ∫_ε^Λ ∂_u(φ g_t)(u) dt`, with `ε = 0` read as the
    /// off-diagonal extension; `side` selects the one-sided limit at `u = 0`.
    pub fn psi(&self, eps: f64, lam: f64, u: f64, side: i8) -> Result<Eval> {
        if !(eps >= 0.0 && lam > eps && lam.is_finite()) {
            return Err(Error::Domain(format!("scale window needs 0 ≤ ε < Λ, got ({eps}, {lam})")));
        }
        if u == 0.0 {
            // odd and continuous for ε > 0; one-sided jump of ∓½ otherwise
            let v = if eps > 0.0 { 0.0 } else { -0.5 * f64::from(side) };
            let path = if eps > 0.0 { EvalPath::ClosedForm } else { EvalPath::BranchLimit };
            return Ok(Eval { value: v, error: 0.0, path });
        }
        let (phi, dphi, _) = self.cutoff().eval(u);
        if phi == 0.0 && dphi == 0.0 {
            return Ok(Eval::closed(0.0));
        }
        if !self.use_quadrature(u) {
            let db = heat_b(lam, u) - heat_b(eps, u);
            let da = heat_a(lam, u, side) - heat_a(eps, u, side);
            return Ok(Eval::closed(dphi * db + phi * da));
        }
        let mut f = |t: f64| {
            if t <= 0.0 {
                return 0.0;
            }
            let g = gaussian(t, u);
            dphi * g - phi * u / (2.0 * t) * g
        };
        let peak = u * u / 6.0;
        let integral = integrate_with_breaks(&mut f, &[eps, peak.clamp(eps, lam), lam], &self.settings.quad)?;
        Ok(Eval {
            value: integral.value,
            error: integral.error,
            path: EvalPath::Quadrature,
        })
    }

    /// `E'(u) = ∂_u² ∫₀ᵗ (φ - 1) g_s(u) ds`, the gauge-fixing correction of the BV kernel.
    pub fn correction(&self, t: f64, u: f64) -> Result<Eval> {
        let (phi, dphi, ddphi) = self.cutoff().eval(u);
        if phi == 1.0 && dphi == 0.0 && ddphi == 0.0 {
            return Ok(Eval::closed(0.0));
        }
        if !self.use_quadrature(u) {
            let v = ddphi * heat_b(t, u) + 2.0 * dphi * heat_a(t, u, 0) + (phi - 1.0) * gaussian(t, u);
            return Ok(Eval::closed(v));
        }
        let mut f = |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let g = gaussian(s, u);
            let g1 = -u / (2.0 * s) * g;
            let g2 = (u * u / (4.0 * s * s) - 1.0 / (2.0 * s)) * g;
            ddphi * g + 2.0 * dphi * g1 + (phi - 1.0) * g2
        };
        let peak = u * u / 6.0;
        let integral = integrate_with_breaks(&mut f, &[0.0, peak.clamp(0.0, t), t], &self.settings.quad)?;
        Ok(Eval {
            value: integral.value,
            error: integral.error,
            path: EvalPath::Quadrature,
        })
    }

    /// Propagator in a chart, `-p(x,y) M₊ + p(y,x) M₋` with
    /// `p(x,y) = ½[Ψ(x - y) + Ψ(image)]`. `branch` fixes one-sided limits when `ε = 0`.
    fn chart_propagator(&self, eps: f64, lam: f64, x: f64, y: f64, chart: Chart, branch: Branch) -> Result<FieldKernelValue> {
        let s1: i8 = match branch {
            Branch::C1 => -1,
            Branch::C2 => 1,
        };
        let (u2, s2) = chart.image(x, y);
        let a = self.psi(eps, lam, x - y, s1)?;
        let b = self.psi(eps, lam, u2, s2)?;
        let pxy = 0.5 * (a.value + b.value);
        let pyx = 0.5 * (-a.value + b.value);
        let (plus, minus) = chart.channels();
        let mut out = FieldKernelValue::new(x, y);
        out.coeffs[plus as usize][Form::One as usize] = -pxy;
        out.coeffs[minus as usize][Form::One as usize] = pyx;
        out.note(&a);
        out.note(&b);
        Ok(out)
    }

    /// `P(ε, Λ)(x, y)` on the half-line, channels `K_{0,±}`.
    pub fn propagator(&self, eps: f64, lam: f64, x: f64, y: f64) -> Result<FieldKernelValue> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("propagator needs ε > 0, got {eps}")));
        }
        check_point(x, y)?;
        self.chart_propagator(eps, lam, x, y, Chart::L0, Branch::of(x, y))
    }

    /// `P̄(0, Λ)` restricted to a branch of the two-point configuration space.
    pub fn extended_propagator(&self, lam: f64, branch: Branch, x: f64, y: f64) -> Result<FieldKernelValue> {
        check_point(x, y)?;
        if !branch.contains(x, y) {
            return Err(Error::Domain(format!("({x}, {y}) is not in the closure of {branch:?}")));
        }
        self.chart_propagator(0.0, lam, x, y, Chart::L0, branch)
    }

    /// Propagator window `[ε, Λ]` with `ε = 0` meaning the branch extension.
    pub fn propagator_window(&self, eps: f64, lam: f64, x: f64, y: f64, branch: Branch) -> Result<FieldKernelValue> {
        if eps == 0.0 {
            self.extended_propagator(lam, branch, x, y)
        } else {
            self.propagator(eps, lam, x, y)
        }
    }

    /// The scale-`t` 1-form `k` with `K_t = ½ k ⊗ K₊ - ½ σk ⊗ K₋`.
    fn bv_scalar(&self, t: f64, x: f64, y: f64) -> Result<(ScalarForm, Eval)> {
        let (u1, u2) = (x - y, x + y);
        let e1 = self.correction(t, u1)?;
        let e2 = self.correction(t, u2)?;
        let (g1, g2) = (gaussian(t, u1), gaussian(t, u2));
        let dx = -g1 - g2 - (e1.value + e2.value);
        let dy = g1 - g2 - (-e1.value + e2.value);
        let ev = Eval {
            value: 0.0,
            error: e1.error + e2.error,
            path: e1.path.max(e2.path),
        };
        Ok(([0.0, dx, dy, 0.0], ev))
    }

    /// BV kernel `K_t(x, y)` on the half-line.
    pub fn bv_kernel(&self, t: f64, x: f64, y: f64) -> Result<FieldKernelValue> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("BV kernel needs t > 0, got {t}")));
        }
        check_point(x, y)?;
        let (k, e) = self.bv_scalar(t, x, y)?;
        let (ks, es) = self.bv_scalar(t, y, x)?;
        let mut out = FieldKernelValue::new(x, y);
        let (p, m) = (Channel::Plus0 as usize, Channel::Minus0 as usize);
        out.coeffs[p][Form::Dx as usize] = 0.5 * k[1];
        out.coeffs[p][Form::Dy as usize] = 0.5 * k[2];
        // σ(a dx + b dy)(x, y) = a(y, x) dy + b(y, x) dx
        out.coeffs[m][Form::Dx as usize] = -0.5 * ks[2];
        out.coeffs[m][Form::Dy as usize] = -0.5 * ks[1];
        out.note(&e);
        out.note(&es);
        Ok(out)
    }

    /// The analytic value of `-¼ (d^GF ⊗ 1 + 1 ⊗ d^GF) H̃_t` at `(x, y)`.
    pub fn propagator_integrand(&self, t: f64, x: f64, y: f64) -> f64 {
        let dg = |u: f64| {
            let (phi, dphi, _) = self.cutoff().eval(u);
            let g = gaussian(t, u);
            dphi * g - phi * u / (2.0 * t) * g
        };
        -0.5 * (dg(x - y) + dg(x + y))
    }
}

fn check_point(x: f64, y: f64) -> Result<()> {
    if !(x >= 0.0 && y >= 0.0 && x.is_finite() && y.is_finite()) {
        return Err(Error::Domain(format!("point ({x}, {y}) is outside the half-line square")));
    }
    Ok(())
}

/// `d^GF(f dx) = -∂_x f`, by central differences with step `h`.
pub fn gauge_fixing_apply<F: Fn(f64) -> f64>(f: F, h: f64) -> impl Fn(f64) -> f64 {
    move |x| -derivative(&f, x, h)
}

/// Exterior derivative of a kernel-valued form by central differences.
///
/// A 0-form gains `dx`/`dy` parts; the 1-form parts produce `dx∧dy`.
pub fn exterior_derivative(
    eval: &dyn Fn(f64, f64) -> Result<FieldKernelValue>,
    x: f64,
    y: f64,
    h: f64,
) -> Result<FieldKernelValue> {
    let at = |dx: f64, dy: f64| eval(x + dx, y + dy);
    let (xp, xm, xp2, xm2) = (at(h, 0.0)?, at(-h, 0.0)?, at(2.0 * h, 0.0)?, at(-2.0 * h, 0.0)?);
    let (yp, ym, yp2, ym2) = (at(0.0, h)?, at(0.0, -h)?, at(0.0, 2.0 * h)?, at(0.0, -2.0 * h)?);
    let d = |p: f64, m: f64, p2: f64, m2: f64| (8.0 * (p - m) - (p2 - m2)) / (12.0 * h);
    let mut out = FieldKernelValue::new(x, y);
    for c in 0..4 {
        let g = |v: &FieldKernelValue, f: Form| v.coeffs[c][f as usize];
        let dx_of = |f: Form| d(g(&xp, f), g(&xm, f), g(&xp2, f), g(&xm2, f));
        let dy_of = |f: Form| d(g(&yp, f), g(&ym, f), g(&yp2, f), g(&ym2, f));
        out.coeffs[c][Form::Dx as usize] = dx_of(Form::One);
        out.coeffs[c][Form::Dy as usize] = dy_of(Form::One);
        out.coeffs[c][Form::DxDy as usize] = dx_of(Form::Dy) - dy_of(Form::Dx);
    }
    for v in [&xp, &xm, &xp2, &xm2, &yp, &ym, &yp2, &ym2] {
        out.path = out.path.max(v.path);
        out.error = out.error.max(v.error / h);
    }
    Ok(out)
}

/// Numeric boundary tensors `K_{0,±}`, `K_{1,±}` and the symplectic form.
#[derive(Clone, Debug)]
pub struct TensorBasis {
    symplectic: Arc<SymplecticSpace>,
    pol0: Polarization,
    pol1: Polarization,
    omega: Vec<Vec<f64>>,
    channels: [Vec<Vec<f64>>; 4],
}

fn to_f64(m: &[Vec<crate::graded_core::Rational>]) -> Vec<Vec<f64>> {
    use num_traits::ToPrimitive;
    m.iter().map(|r| r.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()).collect()
}

impl TensorBasis {
    /// `pol1` is the polarization at the endpoint `x = 1`; pass `pol0` for
    /// half-line work.
    pub fn new(symplectic: Arc<SymplecticSpace>, pol0: Polarization, pol1: Polarization) -> Result<Self> {
        let s0 = symplectic.split(&pol0)?;
        let s1 = symplectic.split(&pol1)?;
        let omega = to_f64(symplectic.omega());
        let channels = [
            to_f64(s0.k_plus.entries()),
            to_f64(s0.k_minus.entries()),
            to_f64(s1.k_plus.entries()),
            to_f64(s1.k_minus.entries()),
        ];
        Ok(TensorBasis {
            symplectic,
            pol0,
            pol1,
            omega,
            channels,
        })
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn symplectic(&self) -> &Arc<SymplecticSpace> {
        &self.symplectic
    }

    pub fn polarization(&self, endpoint: usize) -> &Polarization {
        if endpoint == 0 {
            &self.pol0
        } else {
            &self.pol1
        }
    }

    pub fn channel(&self, c: Channel) -> &[Vec<f64>] {
        &self.channels[c as usize]
    }

    /// Full kernel `K = K₊ + K₋`.
    pub fn k(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let (p, m) = (&self.channels[0], &self.channels[1]);
        (0..n).map(|a| (0..n).map(|b| p[a][b] + m[a][b]).collect()).collect()
    }

    pub fn omega(&self, a: usize, b: usize) -> f64 {
        self.omega[a][b]
    }

    /// The `V ⊗ V` matrix of one form component.
    pub fn matrix(&self, v: &FieldKernelValue, f: Form) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = vec![vec![0.0; n]; n];
        for c in Channel::ALL {
            let s = v.coeff(c, f);
            if s == 0.0 {
                continue;
            }
            for (a, row) in out.iter_mut().enumerate() {
                for (b, e) in row.iter_mut().enumerate() {
                    *e += s * self.channels[c as usize][a][b];
                }
            }
        }
        out
    }

    /// `(α(l' ⊗ -) ⊗ 1)` applied to a `V ⊗ V` matrix: contracts `ω(l', -)`
    /// into the first slot.
    pub fn contract_first(&self, lprime: &[f64], m: &[Vec<f64>]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for a in 0..n {
            let w: f64 = (0..n).map(|c| lprime[c] * self.omega[c][a]).sum();
            if w == 0.0 {
                continue;
            }
            for b in 0..n {
                out[b] += w * m[a][b];
            }
        }
        out
    }

    fn check_lprime(&self, v: &[f64], endpoint: usize) -> Result<()> {
        if v.len() != self.dim() {
            return invalid(format!("vector has length {}, expected {}", v.len(), self.dim()));
        }
        let pol = self.polarization(endpoint);
        for (i, c) in v.iter().enumerate() {
            if *c != 0.0 && pol.side(i) != Side::LPrime {
                return invalid(format!(
                    "component {} is not in L'_{endpoint}",
                    self.symplectic.space().generator(i).name
                ));
            }
        }
        Ok(())
    }
}

/// Max-norm distance of two matrices.
pub fn matrix_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

/// Renormalized splitting `θ_t(l')(x) = 2(α(l' ⊗ -) ⊗ 1) P̄(0, t)|_{C1}(0, x)`.
pub fn splitting_theta(k: &Kernels, basis: &TensorBasis, t: f64, lprime: &[f64], x: f64) -> Result<Vec<f64>> {
    basis.check_lprime(lprime, 0)?;
    let p = k.extended_propagator(t, Branch::C1, 0.0, x)?;
    let m = basis.matrix(&p, Form::One);
    Ok(basis.contract_first(lprime, &m).into_iter().map(|v| 2.0 * v).collect())
}

/// Interval kernels glued from the two half-line charts.
#[derive(Clone, Debug)]
pub struct IntervalKernels {
    pub kernels: Kernels,
    pub basis: TensorBasis,
    /// Tolerance for chart agreement on the overlap.
    pub gluing_tol: f64,
}

impl IntervalKernels {
    pub fn new(kernels: Kernels, basis: TensorBasis) -> Result<Self> {
        if kernels.cutoff().r2 > 0.1 {
            return invalid(format!(
                "interval gluing needs cutoff support within (-0.1, 0.1), got r2 = {}",
                kernels.cutoff().r2
            ));
        }
        Ok(IntervalKernels {
            kernels,
            basis,
            gluing_tol: 1e-10,
        })
    }

    /// Chart-`L₁` propagator, kernel with image charge centred at 2.
    pub fn reflected_propagator(&self, eps: f64, lam: f64, x: f64, y: f64, branch: Branch) -> Result<FieldKernelValue> {
        self.kernels.chart_propagator(eps, lam, x, y, Chart::L1, branch)
    }

    /// Glued `P_{L₀,L₁}(ε, Λ)`; `ε = 0` is the branch extension.
    pub fn glued_propagator(&self, eps: f64, lam: f64, x: f64, y: f64, branch: Branch) -> Result<FieldKernelValue> {
        if !((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)) {
            return Err(Error::Domain(format!("point ({x}, {y}) is outside [0,1]²")));
        }
        if eps == 0.0 && !branch.contains(x, y) {
            return Err(Error::Domain(format!("({x}, {y}) is not in the closure of {branch:?}")));
        }
        let branch = if eps == 0.0 { branch } else { Branch::of(x, y) };
        let l0_ok = !(x >= 0.9 && y >= 0.9);
        let l1_ok = !(x <= 0.1 && y <= 0.1);
        let v0 = if l0_ok {
            Some(self.kernels.chart_propagator(eps, lam, x, y, Chart::L0, branch)?)
        } else {
            None
        };
        let v1 = if l1_ok {
            Some(self.kernels.chart_propagator(eps, lam, x, y, Chart::L1, branch)?)
        } else {
            None
        };
        match (v0, v1) {
            (Some(a), Some(b)) => {
                let dev = matrix_distance(&self.basis.matrix(&a, Form::One), &self.basis.matrix(&b, Form::One));
                if dev > self.gluing_tol + 10.0 * (a.error + b.error) {
                    return Err(Error::Gluing { x, y, deviation: dev });
                }
                Ok(a)
            }
            (Some(a), None) => Ok(a),
            (None, Some(b)) => Ok(b),
            (None, None) => Err(Error::Internal("no chart covers the point".into())),
        }
    }

    /// `θ_t(l₀', l₁')(x)` on the interval.
    pub fn interval_splitting(&self, t: f64, l0: &[f64], l1: &[f64], x: f64) -> Result<Vec<f64>> {
        self.basis.check_lprime(l0, 0)?;
        self.basis.check_lprime(l1, 1)?;
        let p0 = self.glued_propagator(0.0, t, 0.0, x, Branch::C1)?;
        let p1 = self.glued_propagator(0.0, t, 1.0, x, Branch::C2)?;
        let a = self.basis.contract_first(l0, &self.basis.matrix(&p0, Form::One));
        let b = self.basis.contract_first(l1, &self.basis.matrix(&p1, Form::One));
        Ok(a.iter().zip(&b).map(|(u, v)| 2.0 * u - 2.0 * v).collect())
    }
}


