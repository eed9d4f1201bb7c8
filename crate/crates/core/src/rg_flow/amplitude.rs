//! Feynman amplitudes of connected graphs with heat-kernel propagators.
//!
//! The vertex functionals are placed in one copy of `V` per vertex. Each
//! edge `(u, v)` contributes the propagator twice, once per ordering of its
//! endpoints, and each ordering splits into boundary-tensor channels. For a
//! fixed choice of (ordering, channel) on every edge the contraction is an
//! exact rational polynomial; the scalar channel weights and the field values
//! are then integrated over the bulk positions, sector by sector.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::bvbfv_check::{HalfLineTheory, IntervalTheory};
use crate::error::{invalid, Error, Result};
use crate::graded_core::{Copies, KernelTensor2, Polarization, Series, Side, SymplecticSpace, TruncationCaps};
use crate::halfline_kernels::{
    integrate_vec, Branch, Channel, FieldKernelValue, Form, IntervalKernels, Kernels, QuadratureSpec, TensorBasis,
    VecIntegral,
};

use super::fields::TestField;
use super::graphs::{GraphSpec, Valences, VertexKind};

/// Scale window `[ε, Λ]` of one edge; `ε = 0` is the extended propagator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub eps: f64,
    pub lam: f64,
}

impl Window {
    pub fn new(eps: f64, lam: f64) -> Result<Window> {
        if !(eps >= 0.0 && lam > eps && lam.is_finite()) {
            return Err(Error::Domain(format!("scale window needs 0 ≤ ε < Λ, got ({eps}, {lam})")));
        }
        Ok(Window { eps, lam })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmplitudeResult {
    pub graph: String,
    pub windows: Vec<Window>,
    /// Coefficient of `ħ^k` at index `k`.
    pub hbar_coeffs: Vec<f64>,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl AmplitudeResult {
    pub fn coeff(&self, k: usize) -> f64 {
        self.hbar_coeffs.get(k).copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug)]
enum Geometry {
    HalfLine(Kernels),
    Interval(IntervalKernels),
}

/// Ordering and channel of one edge.
#[derive(Clone, Copy, Debug)]
struct Slot {
    /// Propagator read as `P(x_v, x_u)` in block `(v, u)`.
    reversed: bool,
    channel: Channel,
}

#[derive(Clone, Debug)]
struct Term {
    hbar: usize,
    coeff: f64,
    /// Per vertex, the position in `Compiled::legs` of its leg list.
    legs: Vec<usize>,
}

#[derive(Debug)]
struct Compiled {
    slots: Vec<Vec<Slot>>,
    tuples: Vec<(Vec<usize>, Vec<Term>)>,
    /// Distinct lists of remaining base indices per vertex, canonical order.
    legs: Vec<Vec<Vec<usize>>>,
    dim: usize,
}

/// A theory on the half-line or the interval, ready for graph amplitudes.
#[derive(Debug)]
pub struct FlowModel {
    symplectic: Arc<SymplecticSpace>,
    basis: TensorBasis,
    geometry: Geometry,
    interaction: Series,
    boundary: [Option<Series>; 2],
    tensors: [KernelTensor2; 4],
    /// Quadrature for the bulk integrals.
    pub quad: QuadratureSpec,
    cache: Mutex<HashMap<GraphSpec, Arc<Compiled>>>,
}

fn nonzero(s: &Series) -> Option<Series> {
    (!s.is_zero()).then(|| s.clone())
}

impl FlowModel {
    pub fn half_line(th: &HalfLineTheory, kernels: Kernels) -> Result<FlowModel> {
        let pol = th.polarization().clone();
        Self::build(
            th.symplectic().clone(),
            pol.clone(),
            pol,
            Geometry::HalfLine(kernels),
            th.i.clone(),
            [nonzero(&th.j), None],
        )
    }

    pub fn interval(th: &IntervalTheory, kernels: Kernels) -> Result<FlowModel> {
        let (p0, p1) = (th.polarization(0).clone(), th.polarization(1).clone());
        let basis = TensorBasis::new(th.symplectic().clone(), p0.clone(), p1.clone())?;
        let ik = IntervalKernels::new(kernels, basis)?;
        Self::build(
            th.symplectic().clone(),
            p0,
            p1,
            Geometry::Interval(ik),
            th.i.clone(),
            [nonzero(&th.j0), nonzero(&th.j1)],
        )
    }

    fn build(
        symplectic: Arc<SymplecticSpace>,
        pol0: Polarization,
        pol1: Polarization,
        geometry: Geometry,
        interaction: Series,
        boundary: [Option<Series>; 2],
    ) -> Result<FlowModel> {
        let basis = TensorBasis::new(symplectic.clone(), pol0.clone(), pol1.clone())?;
        let s0 = symplectic.split(&pol0)?;
        let s1 = symplectic.split(&pol1)?;
        let quad = QuadratureSpec::default().with_tol(1e-9);
        Ok(FlowModel {
            symplectic,
            basis,
            geometry,
            interaction,
            boundary,
            tensors: [s0.k_plus, s0.k_minus, s1.k_plus, s1.k_minus],
            quad,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn symplectic(&self) -> &Arc<SymplecticSpace> {
        &self.symplectic
    }

    pub fn basis(&self) -> &TensorBasis {
        &self.basis
    }

    pub fn kernels(&self) -> &Kernels {
        match &self.geometry {
            Geometry::HalfLine(k) => k,
            Geometry::Interval(ik) => &ik.kernels,
        }
    }

    pub fn is_interval(&self) -> bool {
        matches!(self.geometry, Geometry::Interval(_))
    }

    pub fn interaction(&self) -> &Series {
        &self.interaction
    }

    /// Word lengths present in the vertex functionals.
    pub fn valences(&self) -> Valences {
        let lens = |s: &Series| {
            let mut v: Vec<usize> = s.terms().map(|(_, m, _)| m.len()).collect();
            v.sort();
            v.dedup();
            v
        };
        let mut boundary: Vec<usize> = self.boundary.iter().flatten().flat_map(lens).collect();
        boundary.sort();
        boundary.dedup();
        Valences {
            bulk: lens(&self.interaction),
            boundary,
        }
    }

    /// Boundary vertex kinds with a nonzero functional.
    pub fn endpoints(&self) -> Vec<VertexKind> {
        let mut v = Vec::new();
        if self.boundary[0].is_some() {
            v.push(VertexKind::Boundary0);
        }
        if self.boundary[1].is_some() && self.is_interval() {
            v.push(VertexKind::Boundary1);
        }
        v
    }

    fn channels(&self) -> &'static [Channel] {
        match self.geometry {
            Geometry::HalfLine(_) => &[Channel::Plus0, Channel::Minus0],
            Geometry::Interval(_) => &Channel::ALL,
        }
    }

    fn vertex_series(&self, kind: VertexKind) -> Option<&Series> {
        match kind {
            VertexKind::Bulk => Some(&self.interaction),
            VertexKind::Boundary0 => self.boundary[0].as_ref(),
            VertexKind::Boundary1 => self.boundary[1].as_ref(),
        }
    }

    fn compiled(&self, g: &GraphSpec) -> Result<Arc<Compiled>> {
        if let Some(c) = self.cache.lock().expect("cache lock").get(g) {
            return Ok(c.clone());
        }
        let c = Arc::new(self.compile(g)?);
        self.cache.lock().expect("cache lock").insert(g.clone(), c.clone());
        Ok(c)
    }

    fn compile(&self, g: &GraphSpec) -> Result<Compiled> {
        let n = g.vertex_count();
        let base = self.symplectic.space();
        let dim = base.dim();
        let mut vertices = Vec::with_capacity(n);
        for &k in &g.kinds {
            match self.vertex_series(k) {
                Some(s) => vertices.push(s),
                None => {
                    return Ok(Compiled {
                        slots: vec![],
                        tuples: vec![],
                        legs: vec![],
                        dim: 1,
                    })
                }
            }
        }
        let max_h: u32 = vertices.iter().map(|s| s.terms().map(|(h, _, _)| h).max().unwrap_or(0)).sum();
        let max_len: usize = (0..n).map(|v| g.valence(v)).sum();
        let caps = TruncationCaps::new(max_h.max(1), max_len.max(1) as u32, TruncationCaps::default().max_bracket_depth)?;
        let copies = Copies::new(base, n, caps);
        let mut state = Series::one(copies.space(), caps);
        for (v, s) in vertices.iter().enumerate() {
            let keep = g.valence(v);
            let s = s.filter(|_, m| m.len() == keep);
            state = state.multiply(&copies.embed(&s, v))?;
        }
        let channels = self.channels();
        let mut slots = Vec::with_capacity(g.edge_count());
        let mut lifted = Vec::with_capacity(g.edge_count());
        for &(u, v) in &g.edges {
            let mut s = Vec::new();
            let mut l = Vec::new();
            let orders: &[bool] = if u == v { &[false] } else { &[false, true] };
            for &reversed in orders {
                for &channel in channels {
                    let (a, b) = if reversed { (v, u) } else { (u, v) };
                    l.push(copies.lift_block(&self.tensors[channel as usize], a, b)?);
                    s.push(Slot { reversed, channel });
                }
            }
            slots.push(s);
            lifted.push(l);
        }
        let mut tuples = Vec::new();
        let mut chosen = Vec::with_capacity(g.edge_count());
        let loops = g.loops();
        let mut top = 0usize;
        let mut leg_lists: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];
        descend(0, &state, &lifted, &mut chosen, &mut |choice, s| {
            let mut terms = Vec::new();
            for (h, m, c) in s.terms() {
                let mut legs = vec![Vec::new(); n];
                for i in m.indices() {
                    let (copy, b) = copies.locate(i);
                    legs[copy].push(b);
                }
                if legs.iter().zip(&g.legs).any(|(l, &want)| l.len() != want) {
                    continue;
                }
                let hbar = h as usize + loops;
                top = top.max(hbar);
                let legs = legs
                    .into_iter()
                    .enumerate()
                    .map(|(v, l)| match leg_lists[v].iter().position(|x| *x == l) {
                        Some(i) => i,
                        None => {
                            leg_lists[v].push(l);
                            leg_lists[v].len() - 1
                        }
                    })
                    .collect();
                terms.push(Term {
                    hbar,
                    coeff: c.to_f64().unwrap_or(f64::NAN),
                    legs,
                });
            }
            if !terms.is_empty() {
                tuples.push((choice.to_vec(), terms));
            }
        })?;
        debug_assert!(lifted.iter().flatten().all(|t| t.space().dim() == n * dim));
        Ok(Compiled {
            slots,
            tuples,
            legs: leg_lists,
            dim: top + 1,
        })
    }

    fn kernel(&self, w: Window, x: f64, y: f64, branch: Branch) -> Result<FieldKernelValue> {
        match &self.geometry {
            Geometry::HalfLine(k) => k.propagator_window(w.eps, w.lam, x, y, branch),
            Geometry::Interval(ik) => ik.glued_propagator(w.eps, w.lam, x, y, branch),
        }
    }

    /// Propagator on the diagonal; for `ε = 0` the average of both branches.
    pub fn diagonal(&self, w: Window, x: f64) -> Result<FieldKernelValue> {
        let a = self.kernel(w, x, x, Branch::C1)?;
        if w.eps > 0.0 {
            return Ok(a);
        }
        let b = self.kernel(w, x, x, Branch::C2)?;
        Ok(a.add(&b).scaled(0.5))
    }

    /// Numeric `V ⊗ V` matrix of the propagator in a window.
    pub fn propagator_matrix(&self, w: Window, x: f64, y: f64, branch: Branch) -> Result<Vec<Vec<f64>>> {
        let v = self.kernel(w, x, y, branch)?;
        Ok(self.basis.matrix(&v, Form::One))
    }

    fn check_field(&self, field: &TestField) -> Result<(f64, f64)> {
        field.validate(self.symplectic.space().dim())?;
        let Some((lo, hi)) = field.support() else {
            return Ok((0.0, 0.0));
        };
        if !field.satisfies_boundary(self.basis.polarization(0)) {
            return invalid("test field value at 0 is not in L");
        }
        if self.is_interval() {
            if hi > 1.0 {
                return invalid(format!("test field support [{lo}, {hi}] leaves the interval"));
            }
            let pol1 = self.basis.polarization(1);
            for (a, p) in field.zero_form.iter().enumerate() {
                if pol1.side(a) == Side::LPrime && p.value(1.0) != 0.0 {
                    return invalid("test field value at 1 is not in L₁");
                }
            }
        }
        Ok((lo, hi))
    }

    /// Amplitude of `g` with one window per edge, as a polynomial in `ħ`.
    pub fn amplitude(&self, g: &GraphSpec, windows: &[Window], field: &TestField) -> Result<AmplitudeResult> {
        g.validate()?;
        if windows.len() != g.edge_count() {
            return invalid(format!("{} windows for {} edges", windows.len(), g.edge_count()));
        }
        for w in windows {
            Window::new(w.eps, w.lam)?;
        }
        if g.kinds.contains(&VertexKind::Boundary1) && !self.is_interval() {
            return invalid("the half-line has no endpoint at 1");
        }
        let (lo, hi) = self.check_field(field)?;
        let comp = self.compiled(g)?;
        let mut result = AmplitudeResult {
            graph: g.id(),
            windows: windows.to_vec(),
            hbar_coeffs: vec![0.0; comp.dim],
            error: 0.0,
            evaluations: 0,
            converged: true,
        };
        if comp.tuples.is_empty() || hi <= lo {
            return Ok(result);
        }
        let n = g.vertex_count();
        let nb = g.bulk_count();
        let cut = self.kernels().cutoff();
        let mut breaks = field.breakpoints();
        breaks.extend([cut.r1 / 2.0, cut.r2 / 2.0]);
        let offsets = [cut.r1, cut.r2];

        let mut failure: Option<Error> = None;
        let mut pos = vec![0.0; n];
        for v in nb..n {
            pos[v] = if g.kinds[v] == VertexKind::Boundary1 { 1.0 } else { 0.0 };
        }
        let mut weights: Vec<Vec<f64>> = comp.slots.iter().map(|s| vec![0.0; s.len()]).collect();
        let mut legvals: Vec<Vec<f64>> = comp.legs.iter().map(|l| vec![0.0; l.len()]).collect();
        let mut integrand = |x: &[f64], order: &[usize], out: &mut [f64]| {
            out.iter_mut().for_each(|o| *o = 0.0);
            if failure.is_some() {
                return;
            }
            pos[..nb].copy_from_slice(x);
            let rank = |v: usize| match g.kinds[v] {
                VertexKind::Bulk => order.iter().position(|&o| o == v).unwrap_or(0) as i64,
                VertexKind::Boundary0 => -1,
                VertexKind::Boundary1 => n as i64,
            };
            for (e, &(u, v)) in g.edges.iter().enumerate() {
                let w = windows[e];
                let vals = if u == v {
                    self.diagonal(w, pos[u]).map(|d| (d.clone(), d))
                } else {
                    let br = if rank(u) < rank(v) { Branch::C1 } else { Branch::C2 };
                    let back = if br == Branch::C1 { Branch::C2 } else { Branch::C1 };
                    self.kernel(w, pos[u], pos[v], br)
                        .and_then(|f| Ok((f, self.kernel(w, pos[v], pos[u], back)?)))
                };
                match vals {
                    Ok((fwd, bwd)) => {
                        for (s, slot) in comp.slots[e].iter().enumerate() {
                            let src = if slot.reversed { &bwd } else { &fwd };
                            weights[e][s] = src.coeff(slot.channel, Form::One);
                        }
                    }
                    Err(err) => {
                        failure = Some(err);
                        return;
                    }
                }
            }
            for (v, lists) in comp.legs.iter().enumerate() {
                for (i, l) in lists.iter().enumerate() {
                    legvals[v][i] = leg_value(field, l, pos[v], g.kinds[v].is_bulk());
                }
            }
            for (choice, terms) in &comp.tuples {
                let w: f64 = choice.iter().enumerate().map(|(e, &s)| weights[e][s]).product();
                if w == 0.0 {
                    continue;
                }
                for t in terms {
                    let val: f64 = t.legs.iter().enumerate().map(|(v, &i)| legvals[v][i]).product();
                    out[t.hbar] += t.coeff * w * val;
                }
            }
        };
        let r = integrate_ordered_sectors(nb, lo, hi, &breaks, &offsets, &self.quad, comp.dim, &mut integrand);
        if let Some(e) = failure {
            return Err(e);
        }
        let s = 1.0 / g.automorphisms as f64;
        result.hbar_coeffs = r.values.iter().map(|v| v * s).collect();
        result.error = r.error * s;
        result.evaluations = r.evaluations;
        result.converged = r.converged;
        Ok(result)
    }

    /// All edges in the same window.
    pub fn amplitude_uniform(&self, g: &GraphSpec, w: Window, field: &TestField) -> Result<AmplitudeResult> {
        self.amplitude(g, &vec![w; g.edge_count()], field)
    }
}

fn descend(
    k: usize,
    state: &Series,
    lifted: &[Vec<KernelTensor2>],
    chosen: &mut Vec<usize>,
    leaf: &mut dyn FnMut(&[usize], &Series),
) -> Result<()> {
    if state.is_zero() {
        return Ok(());
    }
    if k == lifted.len() {
        leaf(chosen, state);
        return Ok(());
    }
    for (s, t) in lifted[k].iter().enumerate() {
        let next = state.contract(t)?;
        chosen.push(s);
        descend(k + 1, &next, lifted, chosen, leaf)?;
        chosen.pop();
    }
    Ok(())
}

/// Value of the remaining variables of one vertex on the field.
///
/// A bulk vertex integrates a 1-form, so exactly one leg takes the `dx`
/// component: `Σ_j φ¹_{a_j} Π_{i≠j} φ⁰_{a_i}`. A boundary vertex sees the
/// 0-form. Legs are taken in canonical order and treated as commuting
/// numbers.
pub fn leg_value(field: &TestField, legs: &[usize], x: f64, bulk: bool) -> f64 {
    if !bulk {
        return legs.iter().map(|&a| field.zero_form[a].value(x)).product();
    }
    let mut total = 0.0;
    for j in 0..legs.len() {
        let mut p = field.one_form[legs[j]].value(x);
        for (i, &a) in legs.iter().enumerate() {
            if p == 0.0 {
                break;
            }
            if i != j {
                p *= field.zero_form[a].value(x);
            }
        }
        total += p;
    }
    total
}

/// Integral of `f` over `[lo, hi]^n` split into the `n!` ordered sectors
/// `x_{σ(0)} ≤ … ≤ x_{σ(n-1)}`.
///
/// `f` receives the positions indexed by variable and the sector order
/// (`order[k]` is the variable of rank `k`). The nested adaptive rules split
/// at `breaks` and at `p - r` for every outer position `p` and offset `r`.
pub fn integrate_ordered_sectors(
    n: usize,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    offsets: &[f64],
    spec: &QuadratureSpec,
    dim: usize,
    f: &mut dyn FnMut(&[f64], &[usize], &mut [f64]),
) -> VecIntegral {
    let mut total = VecIntegral {
        values: vec![0.0; dim],
        error: 0.0,
        evaluations: 0,
        converged: true,
    };
    if n == 0 {
        let mut out = vec![0.0; dim];
        f(&[], &[], &mut out);
        total.values = out;
        total.evaluations = 1;
        return total;
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut sectors = Vec::new();
    permutations(&mut order, 0, &mut sectors);
    for order in sectors {
        let mut x = vec![0.0; n];
        let mut stats = (0.0, 0usize, true);
        let mut out = vec![0.0; dim];
        let ctx = SectorCtx {
            lo,
            breaks,
            offsets,
            spec,
            dim,
            order: &order,
        };
        nest(&ctx, n - 1, hi, &mut x, f, &mut out, &mut stats);
        for (t, v) in total.values.iter_mut().zip(&out) {
            *t += v;
        }
        total.error += stats.0;
        total.evaluations += stats.1;
        total.converged &= stats.2;
    }
    total
}

struct SectorCtx<'a> {
    lo: f64,
    breaks: &'a [f64],
    offsets: &'a [f64],
    spec: &'a QuadratureSpec,
    dim: usize,
    order: &'a [usize],
}

fn nest(
    ctx: &SectorCtx,
    level: usize,
    upper: f64,
    x: &mut Vec<f64>,
    f: &mut dyn FnMut(&[f64], &[usize], &mut [f64]),
    out: &mut [f64],
    stats: &mut (f64, usize, bool),
) {
    if upper <= ctx.lo {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    let var = ctx.order[level];
    let mut pts = vec![ctx.lo, upper];
    let fixed: Vec<f64> = ctx.order[level + 1..].iter().map(|&v| x[v]).collect();
    let inside = |p: f64| p > ctx.lo && p < upper;
    pts.extend(ctx.breaks.iter().copied().filter(|&p| inside(p)));
    for &p in &fixed {
        for &r in ctx.offsets {
            pts.extend([p - r, r - p].into_iter().filter(|&q| inside(q)));
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut spec = *ctx.spec;
    if level > 0 {
        spec.abs_tol *= 0.1;
    }
    let r = {
        let mut g = |t: f64, o: &mut [f64]| {
            x[var] = t;
            if level == 0 {
                f(x, ctx.order, o);
            } else {
                nest(ctx, level - 1, t, x, f, o, stats);
            }
        };
        integrate_vec(&mut g, ctx.dim, &pts, &spec)
    };
    out.copy_from_slice(&r.values);
    if level + 1 == ctx.order.len() {
        stats.0 += r.error;
    }
    stats.1 += r.evaluations;
    stats.2 &= r.converged;
}

fn permutations(p: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == p.len() {
        out.push(p.clone());
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, out);
        p.swap(k, i);
    }
}
