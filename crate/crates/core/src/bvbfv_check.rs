//! Exact checkers for the boundary master equations: flatness, the generic
//! BFV operator `H∂ = −e^{J/ħ} ⋆ I ⋆ e^{−J/ħ}`, the modified and strict
//! quantum master equations, nilpotency of Weyl actions, and the effective
//! boundary differential.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graded_core::{
    int, Monomial, Polarization, Series, SeriesTerm, Side, SymplecticSpace, TruncationCaps,
};
use crate::weyl_moyal::{check_admissible_exponent, BoundaryAlgebraContext, ExpSlot};

/// One nonzero residual: either a series or a descriptive witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub equation: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<SeriesTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Residual {
    pub fn series(equation: &str, s: &Series) -> Residual {
        Residual {
            equation: equation.to_string(),
            terms: s.to_terms(),
            witness: None,
        }
    }

    pub fn witness(equation: &str, w: String) -> Residual {
        Residual {
            equation: equation.to_string(),
            terms: Vec::new(),
            witness: Some(w),
        }
    }

    fn is_trivial(&self) -> bool {
        self.terms.is_empty() && self.witness.is_none()
    }
}

/// Verdict plus the nonzero residuals behind it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub pass: bool,
    pub residuals: Vec<Residual>,
    pub flags: Vec<String>,
}

impl CheckReport {
    pub fn new(check: &str) -> Self {
        CheckReport {
            check: check.to_string(),
            pass: true,
            residuals: Vec::new(),
            flags: Vec::new(),
        }
    }

    /// Records a residual; zero residuals are dropped.
    pub fn push(&mut self, r: Residual) {
        if !r.is_trivial() {
            self.residuals.push(r);
        }
    }

    pub fn push_series(&mut self, equation: &str, s: &Series) {
        self.push(Residual::series(equation, s));
    }

    pub fn flag(&mut self, f: &str) {
        if !self.flags.iter().any(|x| x == f) {
            self.flags.push(f.to_string());
        }
    }

    pub fn finish(mut self) -> Self {
        self.pass = self.residuals.is_empty();
        self
    }

    pub fn merge(&mut self, other: CheckReport) {
        for r in other.residuals {
            self.push(Residual {
                equation: format!("{}: {}", other.check, r.equation),
                ..r
            });
        }
        for f in other.flags {
            self.flag(&f);
        }
    }
}

fn check_interaction_class(i: &Series) -> Result<()> {
    i.require_degree(1, "boundary interaction")?;
    for (h, m, _) in i.terms() {
        if (h == 0 && m.len() < 2) || m.is_empty() {
            return Err(Error::Inadmissible(format!(
                "interaction term ħ^{h} {} outside the admissible class",
                m.render(i.space())
            )));
        }
    }
    Ok(())
}

fn check_exponent(j: &Series, pol: &Polarization, what: &str) -> Result<()> {
    j.require_degree(0, what)?;
    let on_l: Vec<bool> = pol.0.iter().map(|s| *s == Side::L).collect();
    if !j.is_supported_on(&on_l) {
        return invalid(format!("{what} must be a function on L"));
    }
    check_admissible_exponent(j)
}

/// Half-line data `(V = L ⊕ L', I∂, J∂, H∂?)`.
#[derive(Clone, Debug)]
pub struct HalfLineTheory {
    symplectic: Arc<SymplecticSpace>,
    polarization: Polarization,
    pub i: Series,
    pub j: Series,
    pub h: Option<Series>,
}

impl HalfLineTheory {
    pub fn new(
        symplectic: Arc<SymplecticSpace>,
        polarization: Polarization,
        i: Series,
        j: Series,
        h: Option<Series>,
    ) -> Result<Self> {
        i.check_compatible(&j)?;
        symplectic.split(&polarization)?;
        check_interaction_class(&i)?;
        check_exponent(&j, &polarization, "J∂")?;
        if let Some(h) = &h {
            h.check_compatible(&i)?;
            h.require_degree(1, "H∂")?;
        }
        Ok(HalfLineTheory {
            symplectic,
            polarization,
            i,
            j,
            h,
        })
    }

    pub fn symplectic(&self) -> &Arc<SymplecticSpace> {
        &self.symplectic
    }

    pub fn polarization(&self) -> &Polarization {
        &self.polarization
    }

    pub fn caps(&self) -> TruncationCaps {
        self.i.caps()
    }

    pub fn context(&self) -> Result<BoundaryAlgebraContext> {
        BoundaryAlgebraContext::new(self.symplectic.clone(), self.polarization.clone(), self.caps())
    }

    pub fn with_h(&self, h: Option<Series>) -> Result<Self> {
        HalfLineTheory::new(
            self.symplectic.clone(),
            self.polarization.clone(),
            self.i.clone(),
            self.j.clone(),
            h,
        )
    }
}

/// Interval data with polarizations `L₀ ⊕ L₀'` at 0 and `L₁ ⊕ L₁'` at 1.
#[derive(Clone, Debug)]
pub struct IntervalTheory {
    symplectic: Arc<SymplecticSpace>,
    pol0: Polarization,
    pol1: Polarization,
    pub i: Series,
    pub j0: Series,
    pub j1: Series,
    pub h0: Option<Series>,
    pub h1: Option<Series>,
}

impl IntervalTheory {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        symplectic: Arc<SymplecticSpace>,
        pol0: Polarization,
        pol1: Polarization,
        i: Series,
        j0: Series,
        j1: Series,
        h0: Option<Series>,
        h1: Option<Series>,
    ) -> Result<Self> {
        symplectic.split(&pol0)?;
        symplectic.split(&pol1)?;
        i.check_compatible(&j0)?;
        i.check_compatible(&j1)?;
        check_interaction_class(&i)?;
        check_exponent(&j0, &pol0, "J∂₀")?;
        check_exponent(&j1, &pol1, "J∂₁")?;
        for h in [&h0, &h1].into_iter().flatten() {
            h.check_compatible(&i)?;
            h.require_degree(1, "H∂")?;
        }
        Ok(IntervalTheory {
            symplectic,
            pol0,
            pol1,
            i,
            j0,
            j1,
            h0,
            h1,
        })
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

    pub fn caps(&self) -> TruncationCaps {
        self.i.caps()
    }

    /// Context at 0 (`L = L₀`).
    pub fn context0(&self) -> Result<BoundaryAlgebraContext> {
        BoundaryAlgebraContext::new(self.symplectic.clone(), self.pol0.clone(), self.caps())
    }

    /// Context at 1 with the roles exchanged (`L = L₁'`, `L' = L₁`), so that the
    /// left action lands in `O(L₁)`.
    pub fn context1(&self) -> Result<BoundaryAlgebraContext> {
        BoundaryAlgebraContext::new(self.symplectic.clone(), self.pol1.swapped(), self.caps())
    }

    /// Either endpoint read as a half-line theory with its own polarization.
    pub fn endpoint_theory(&self, endpoint: usize) -> Result<HalfLineTheory> {
        let (pol, j, h) = if endpoint == 0 {
            (&self.pol0, &self.j0, &self.h0)
        } else {
            (&self.pol1, &self.j1, &self.h1)
        };
        HalfLineTheory::new(self.symplectic.clone(), pol.clone(), self.i.clone(), j.clone(), h.clone())
    }
}

/// Residual of `I∂ ⋆ I∂ = 0`.
pub fn check_flatness(ctx: &BoundaryAlgebraContext, i: &Series) -> Result<CheckReport> {
    i.require_degree(1, "flatness input")?;
    let mut r = CheckReport::new("flatness");
    r.push_series("I*I", &ctx.moyal(i, i)?);
    Ok(r.finish())
}

/// `−conjugate(J∂, I∂)` after a flatness gate.
pub fn bfv_from_solution(th: &HalfLineTheory) -> Result<Series> {
    let ctx = th.context()?;
    let flat = check_flatness(&ctx, &th.i)?;
    if !flat.pass {
        return Err(Error::Inadmissible("I∂ ⋆ I∂ ≠ 0; no BFV operator is produced".into()));
    }
    let c = ctx.conjugate(&th.j, &th.i, th.caps().max_bracket_depth)?;
    Ok(c.value.neg())
}

/// `(H∂₀, H∂₁) = (−e^{J₀/ħ}⋆I⋆e^{−J₀/ħ}, e^{−J₁/ħ}⋆I⋆e^{J₁/ħ})`.
pub fn bfv_pair_interval(th: &IntervalTheory) -> Result<(Series, Series)> {
    let ctx = th.context0()?;
    let flat = check_flatness(&ctx, &th.i)?;
    if !flat.pass {
        return Err(Error::Inadmissible("I∂ ⋆ I∂ ≠ 0; no BFV operators are produced".into()));
    }
    let depth = th.caps().max_bracket_depth;
    let h0 = ctx.conjugate(&th.j0, &th.i, depth)?.value.neg();
    let h1 = ctx.conjugate(&th.j1.neg(), &th.i, depth)?.value;
    Ok((h0, h1))
}

/// mQME via its algebraic characterization: `I⋆I = 0` and
/// `H = −e^{J/ħ}⋆I⋆e^{−J/ħ}`.
///
/// A second residual evaluates the same condition in normal-ordered form,
/// `e^{−J/ħ} e^{ħ∂_{K+}}_cross(W I, e^{J/ħ}) + W H` with
/// `W = e^{ħ∂_{(K+−K−)/4}}`; both must agree on the verdict.
pub fn check_mqme(th: &HalfLineTheory) -> Result<CheckReport> {
    let ctx = th.context()?;
    let depth = th.caps().max_bracket_depth;
    let mut r = CheckReport::new("mqme");
    r.merge(check_flatness(&ctx, &th.i)?);
    let conj = ctx.conjugate(&th.j, &th.i, depth)?;
    if conj.truncated {
        r.flag("conjugation_truncated");
    }
    let h = match &th.h {
        Some(h) => h.clone(),
        None => conj.value.neg(),
    };
    let primary = h.add(&conj.value)?;
    r.push_series("H + e^{J/ħ}*I*e^{-J/ħ}", &primary);
    let wi = ctx.weyl_transform(&th.i)?;
    let normal = ctx
        .twisted_cross(&ctx.split().k_plus, &int(1), &th.j, &wi, ExpSlot::Second)?
        .add(&ctx.weyl_transform(&h)?)?;
    if normal.is_zero() != primary.is_zero() {
        r.flag("route_disagreement");
        r.push_series("normal-ordered form", &normal);
    }
    Ok(r.finish())
}

/// Both endpoints of an interval theory.
pub fn check_mqme_interval(th: &IntervalTheory) -> Result<CheckReport> {
    let ctx = th.context0()?;
    let depth = th.caps().max_bracket_depth;
    let mut r = CheckReport::new("mqme_interval");
    r.merge(check_flatness(&ctx, &th.i)?);
    let c0 = ctx.conjugate(&th.j0, &th.i, depth)?;
    let c1 = ctx.conjugate(&th.j1.neg(), &th.i, depth)?;
    if c0.truncated || c1.truncated {
        r.flag("conjugation_truncated");
    }
    let h0 = th.h0.clone().unwrap_or_else(|| c0.value.neg());
    let h1 = th.h1.clone().unwrap_or_else(|| c1.value.clone());
    r.push_series("H0 + e^{J0/ħ}*I*e^{-J0/ħ}", &h0.add(&c0.value)?);
    r.push_series("H1 - e^{-J1/ħ}*I*e^{J1/ħ}", &h1.sub(&c1.value)?);
    Ok(r.finish())
}

/// `e^{−J/ħ} Ω^right_L(e^{J/ħ}, I∂)`.
pub fn qme_halfline_residual(ctx: &BoundaryAlgebraContext, i: &Series, j: &Series) -> Result<Series> {
    let wi = ctx.weyl_transform(i)?;
    let t = ctx.twisted_cross(&ctx.split().k_minus, &int(-1), j, &wi, ExpSlot::First)?;
    Ok(ctx.project_l(&t))
}

/// Strict QME on the restricted field space of a half-line theory.
pub fn check_qme_halfline(th: &HalfLineTheory) -> Result<CheckReport> {
    let ctx = th.context()?;
    let mut r = CheckReport::new("qme_halfline");
    r.flag("strict QME only");
    r.merge(check_flatness(&ctx, &th.i)?);
    r.push_series("e^{-J/ħ} Ω^right_L(e^{J/ħ}, I)", &qme_halfline_residual(&ctx, &th.i, &th.j)?);
    Ok(r.finish())
}

/// Residuals of the interval QME.
#[derive(Clone, Debug)]
pub struct IntervalQmeResiduals {
    pub flatness: Series,
    /// `e^{−J₀/ħ} Ω^right_{L₀}(e^{J₀/ħ}, I∂)`.
    pub endpoint0: Series,
    /// `e^{−J₁/ħ} Ω^left_{L₁}(I∂, e^{J₁/ħ})`.
    pub endpoint1: Series,
}

pub fn qme_interval_residuals(th: &IntervalTheory) -> Result<IntervalQmeResiduals> {
    let ctx0 = th.context0()?;
    let ctx1 = th.context1()?;
    let flatness = ctx0.moyal(&th.i, &th.i)?;
    let endpoint0 = qme_halfline_residual(&ctx0, &th.i, &th.j0)?;
    let wi = ctx1.weyl_transform(&th.i)?;
    let t = ctx1.twisted_cross(&ctx1.split().k_minus, &int(-1), &th.j1, &wi, ExpSlot::Second)?;
    let endpoint1 = ctx1.project_lprime(&t);
    Ok(IntervalQmeResiduals {
        flatness,
        endpoint0,
        endpoint1,
    })
}

pub fn check_qme_interval(th: &IntervalTheory) -> Result<CheckReport> {
    let res = qme_interval_residuals(th)?;
    let mut r = CheckReport::new("qme_interval");
    r.flag("strict QME only");
    r.push_series("I*I", &res.flatness);
    r.push_series("endpoint 0: e^{-J0/ħ} Ω^right_L0(e^{J0/ħ}, I)", &res.endpoint0);
    r.push_series("endpoint 1: e^{-J1/ħ} Ω^left_L1(I, e^{J1/ħ})", &res.endpoint1);
    Ok(r.finish())
}

/// All monomials over generators of `side` with word length within caps.
pub fn basis_monomials(ctx: &BoundaryAlgebraContext, side: Side) -> Vec<Monomial> {
    let space = ctx.symplectic().space().clone();
    let gens: Vec<usize> = ctx.polarization().members(side).collect();
    let max = ctx.caps().max_degree as usize;
    let mut out = Vec::new();
    fn rec(
        k: usize,
        gens: &[usize],
        word: &mut Vec<usize>,
        max: usize,
        space: &crate::graded_core::GradedSpace,
        out: &mut Vec<Monomial>,
    ) {
        if k == gens.len() {
            if let Ok(Some((_, m))) = Monomial::normalize(word, space) {
                out.push(m);
            }
            return;
        }
        let top = if space.odd(gens[k]) { 1 } else { max - word.len() };
        for mult in 0..=top.min(max - word.len()) {
            for _ in 0..mult {
                word.push(gens[k]);
            }
            rec(k + 1, gens, word, max, space, out);
            for _ in 0..mult {
                word.pop();
            }
        }
    }
    rec(0, &gens, &mut Vec::new(), max, &space, &mut out);
    out.sort();
    out
}

fn monomial_series(ctx: &BoundaryAlgebraContext, m: &Monomial) -> Series {
    let word: Vec<usize> = m.indices().collect();
    Series::monomial(ctx.symplectic().space(), ctx.caps(), int(1), 0, &word).expect("canonical word")
}

/// Applies the Weyl action of `H` twice to every basis monomial and compares
/// the outcome with `H ⋆ H = 0`.
pub fn bfv_nilpotency(ctx: &BoundaryAlgebraContext, h: &Series, side: Side) -> Result<CheckReport> {
    h.require_degree(1, "BFV operator")?;
    let mut r = CheckReport::new("bfv_nilpotency");
    let basis = basis_monomials(ctx, side);
    // Both sides of the comparison are computed without truncation: each
    // action adds at most len(H) contractions on top of the ħ powers of H.
    let caps = ctx.caps();
    let len_h = h.terms().map(|(_, m, _)| m.len() as u32).max().unwrap_or(0);
    let hbar_h = h.terms().map(|(k, _, _)| k).max().unwrap_or(0);
    let wide_caps = TruncationCaps {
        max_hbar: 2 * (hbar_h + len_h) + caps.max_degree,
        max_degree: caps.max_degree + 2 * len_h,
        ..caps
    };
    let wide = BoundaryAlgebraContext::new(ctx.symplectic().clone(), ctx.polarization().clone(), wide_caps)?;
    let ctx = &wide;
    let h = &h.with_caps(wide_caps);
    for m in &basis {
        let g = monomial_series(ctx, m);
        let twice = match side {
            Side::LPrime => ctx.weyl_left(h, &ctx.weyl_left(h, &g)?)?,
            Side::L => ctx.weyl_right(&ctx.weyl_right(&g, h)?, h)?,
        };
        if !twice.is_zero() {
            r.push(Residual {
                equation: "Ω(H, Ω(H, g))".into(),
                terms: twice.to_terms(),
                witness: Some(m.render(ctx.symplectic().space())),
            });
        }
    }
    let square = ctx.moyal(h, h)?;
    let nilpotent = r.residuals.is_empty();
    if nilpotent != square.is_zero() {
        r.flag("equivalence_mismatch");
        r.push_series("H*H", &square);
    }
    Ok(r.finish())
}

/// The operator `(1/ħ) Ω^right_L(−, e^{J/ħ}⋆I⋆e^{−J/ħ})` on basis monomials of `O(L)`.
#[derive(Clone, Debug, Serialize)]
pub struct EffectiveDifferential {
    pub basis: Vec<Vec<String>>,
    pub images: Vec<Vec<SeriesTerm>>,
    pub report: CheckReport,
}

pub fn effective_boundary_differential(th: &HalfLineTheory) -> Result<EffectiveDifferential> {
    let qme = check_qme_halfline(th)?;
    if !qme.pass {
        return Err(Error::Inadmissible(
            "the strict QME fails; the boundary differential is not defined".into(),
        ));
    }
    let ctx = th.context()?;
    let hp = ctx.conjugate(&th.j, &th.i, th.caps().max_bracket_depth)?;
    let mut r = CheckReport::new("effective_differential");
    if hp.truncated {
        r.flag("conjugation_truncated");
    }
    let delta = |s: &Series| -> Result<Series> {
        ctx.weyl_right(s, &hp.value)?
            .div_hbar(1)
            .map_err(|e| Error::Inadmissible(format!("right action not divisible by ħ: {e}")))
    };
    let space = ctx.symplectic().space().clone();
    let mut basis = Vec::new();
    let mut images = Vec::new();
    for m in basis_monomials(&ctx, Side::L) {
        let f = monomial_series(&ctx, &m);
        let d = delta(&f)?;
        let dd = delta(&d)?;
        if !dd.is_zero() {
            r.push(Residual {
                equation: "δ²".into(),
                terms: dd.to_terms(),
                witness: Some(m.render(&space)),
            });
        }
        basis.push(m.names(&space).into_iter().map(str::to_string).collect());
        images.push(d.to_terms());
    }
    Ok(EffectiveDifferential {
        basis,
        images,
        report: r.finish(),
    })
}
