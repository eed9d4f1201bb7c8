//! Moyal product, Weyl quantization actions, the boundary pairing and
//! conjugation by `e^{J/ħ}` through divided commutators.

use std::sync::Arc;

use num_traits::One;

use crate::error::{invalid, Error, Result};
use crate::graded_core::{
    int, rat, Doubled, KernelSplit, KernelTensor2, Polarization, Rational, Series, Side,
    SymplecticSpace, TruncationCaps,
};

/// Symplectic data, a polarization and caps, with the kernels every
/// operation needs.
#[derive(Clone, Debug)]
pub struct BoundaryAlgebraContext {
    symplectic: Arc<SymplecticSpace>,
    polarization: Polarization,
    caps: TruncationCaps,
    split: KernelSplit,
    half_k: KernelTensor2,
    weyl_kernel: KernelTensor2,
    on_l: Vec<bool>,
    on_lprime: Vec<bool>,
}

/// Where the exponential sits in a cross contraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpSlot {
    First,
    Second,
}

/// Output of [`conjugate`].
#[derive(Clone, Debug)]
pub struct Conjugation {
    pub value: Series,
    /// Number of commutator levels that contributed.
    pub levels: u32,
    /// Set when the depth limit was reached with a nonzero remainder.
    pub truncated: bool,
}

impl BoundaryAlgebraContext {
    pub fn new(symplectic: Arc<SymplecticSpace>, polarization: Polarization, caps: TruncationCaps) -> Result<Self> {
        caps.validate()?;
        let split = symplectic.split(&polarization)?;
        let half_k = split.k.scaled(&rat(1, 2));
        let weyl_kernel = split
            .k_plus
            .add(&split.k_minus.scaled(&int(-1)))
            .scaled(&rat(1, 4));
        let on_l = polarization.0.iter().map(|s| *s == Side::L).collect();
        let on_lprime = polarization.0.iter().map(|s| *s == Side::LPrime).collect();
        Ok(BoundaryAlgebraContext {
            symplectic,
            polarization,
            caps,
            split,
            half_k,
            weyl_kernel,
            on_l,
            on_lprime,
        })
    }

    /// Context over the default polarization of the space.
    pub fn standard(symplectic: Arc<SymplecticSpace>, caps: TruncationCaps) -> Result<Self> {
        let pol = symplectic.space().default_polarization();
        Self::new(symplectic, pol, caps)
    }

    /// Same space and caps with `L` and `L'` exchanged.
    pub fn swapped(&self) -> Result<Self> {
        Self::new(self.symplectic.clone(), self.polarization.swapped(), self.caps)
    }

    pub fn symplectic(&self) -> &Arc<SymplecticSpace> {
        &self.symplectic
    }

    pub fn polarization(&self) -> &Polarization {
        &self.polarization
    }

    pub fn caps(&self) -> TruncationCaps {
        self.caps
    }

    pub fn split(&self) -> &KernelSplit {
        &self.split
    }

    pub fn half_k(&self) -> &KernelTensor2 {
        &self.half_k
    }

    /// `(K∂_+ − K∂_−)/4`.
    pub fn weyl_kernel(&self) -> &KernelTensor2 {
        &self.weyl_kernel
    }

    pub fn l_mask(&self) -> &[bool] {
        &self.on_l
    }

    pub fn lprime_mask(&self) -> &[bool] {
        &self.on_lprime
    }

    pub fn zero(&self) -> Series {
        Series::zero(self.symplectic.space(), self.caps)
    }

    pub fn one(&self) -> Series {
        Series::one(self.symplectic.space(), self.caps)
    }

    fn check(&self, s: &Series) -> Result<()> {
        s.check_compatible(&self.zero())
    }

    /// `p_L`: restriction of functions to `L`.
    pub fn project_l(&self, s: &Series) -> Series {
        s.supported_on(&self.on_l)
    }

    /// `p_{L'}`: restriction of functions to `L'`.
    pub fn project_lprime(&self, s: &Series) -> Series {
        s.supported_on(&self.on_lprime)
    }

    /// `e^{ħ∂_{(K∂_+ − K∂_−)/4}}`.
    pub fn weyl_transform(&self, j: &Series) -> Result<Series> {
        self.check(j)?;
        j.contract_exp(&self.weyl_kernel, &Rational::one(), 1)
    }

    /// `e^{ħ∂_{−(K∂_+ − K∂_−)/4}}`, the inverse transform.
    pub fn weyl_transform_inverse(&self, j: &Series) -> Result<Series> {
        self.check(j)?;
        j.contract_exp(&self.weyl_kernel, &int(-1), 1)
    }

    /// `e^{−ħ∂_{K∂_−}}_cross(a, b)`.
    pub fn normal_cross(&self, a: &Series, b: &Series) -> Result<Series> {
        a.cross_exp(b, &self.split.k_minus, &int(-1), 1)
    }

    /// `J ⋆ F = e^{−ħ∂_{K∂/2}}_cross(J, F)`.
    pub fn moyal(&self, j: &Series, f: &Series) -> Result<Series> {
        self.check(j)?;
        j.cross_exp(f, &self.half_k, &int(-1), 1)
    }

    /// `Ω^left_{L'}(J, g)`.
    pub fn weyl_left(&self, j: &Series, g: &Series) -> Result<Series> {
        self.check(g)?;
        if !g.is_supported_on(&self.on_lprime) {
            return invalid("weyl_left expects a function on L'");
        }
        let x = self.weyl_transform(j)?;
        let out = self.project_lprime(&self.normal_cross(&x, g)?);
        check_degree_sum(j, g, &out, "weyl_left")?;
        Ok(out)
    }

    /// `Ω^right_L(f, J)`.
    pub fn weyl_right(&self, f: &Series, j: &Series) -> Result<Series> {
        self.check(f)?;
        if !f.is_supported_on(&self.on_l) {
            return invalid("weyl_right expects a function on L");
        }
        let x = self.weyl_transform(j)?;
        let out = self.project_l(&self.normal_cross(f, &x)?);
        check_degree_sum(f, j, &out, "weyl_right")?;
        Ok(out)
    }

    /// `≪f, g≫ = p_L p_{L'} e^{−ħ∂_{K∂_−}}_cross(f, g)`; a series of scalars.
    pub fn pairing(&self, f: &Series, g: &Series) -> Result<Series> {
        self.check(f)?;
        if !f.is_supported_on(&self.on_l) || !g.is_supported_on(&self.on_lprime) {
            return invalid("pairing expects f on L and g on L'");
        }
        let c = self.normal_cross(f, g)?;
        Ok(c.filter(|_, m| m.is_empty()))
    }

    /// `(J⋆X − (−1)^{|J||X|} X⋆J)/ħ`, asserting the ħ⁰ cancellation.
    pub fn commutator_div_hbar(&self, j: &Series, x: &Series) -> Result<Series> {
        self.check(j)?;
        // One extra ħ order so the division keeps the top order intact.
        let wide = TruncationCaps {
            max_hbar: self.caps.max_hbar + 1,
            ..self.caps
        };
        let (je, jo) = parity_parts(&j.with_caps(wide));
        let (xe, xo) = parity_parts(&x.with_caps(wide));
        let mut acc = Series::zero(self.symplectic.space(), wide);
        for (a, b, anti) in [(&je, &xe, false), (&je, &xo, false), (&jo, &xe, false), (&jo, &xo, true)] {
            if a.is_zero() || b.is_zero() {
                continue;
            }
            let ab = a.cross_exp(b, &self.half_k, &int(-1), 1)?;
            let ba = b.cross_exp(a, &self.half_k, &int(-1), 1)?;
            let c = if anti { ab.add(&ba)? } else { ab.sub(&ba)? };
            acc = acc.add(&c)?;
        }
        acc.div_hbar(1)
            .map(|s| s.with_caps(self.caps))
            .map_err(|e| Error::Internal(format!("classical part of a Moyal commutator survived: {e}")))
    }

    /// `Σ_n (ad_J/ħ)ⁿ(I)/n!`, the expansion of `e^{J/ħ} ⋆ I ⋆ e^{−J/ħ}`.
    pub fn conjugate(&self, j: &Series, i: &Series, depth: u32) -> Result<Conjugation> {
        check_admissible_exponent(j)?;
        let mut acc = i.clone();
        let mut cur = i.clone();
        let mut levels = 0;
        for n in 1..=depth {
            cur = self.commutator_div_hbar(j, &cur)?.scale(&rat(1, n as i64));
            if cur.is_zero() {
                return Ok(Conjugation {
                    value: acc,
                    levels,
                    truncated: false,
                });
            }
            levels = n;
            acc = acc.add(&cur)?;
        }
        let truncated = !self.commutator_div_hbar(j, &cur)?.is_zero();
        Ok(Conjugation {
            value: acc,
            levels,
            truncated,
        })
    }

    /// `e^{−J/ħ} · e^{cħ∂_G}_cross(e^{J/ħ}, X)` (or with the exponential in the
    /// second slot), computed without negative ħ powers.
    ///
    /// In `V ⊕ V` the conjugated operator is `D + {J/ħ, −}_D` with
    /// `D = cħ∂_{G₁₂}`, and both pieces strictly lower the number of letters
    /// of `X`, so the exponential series terminates.
    pub fn twisted_cross(
        &self,
        g: &KernelTensor2,
        c: &Rational,
        j: &Series,
        x: &Series,
        slot: ExpSlot,
    ) -> Result<Series> {
        self.check(j)?;
        self.check(x)?;
        if j.is_odd()? {
            return invalid("exponent must be even");
        }
        let max_x = x.terms().map(|(_, m, _)| m.len()).max().unwrap_or(0) as u32;
        let wide = TruncationCaps {
            max_degree: self.caps.max_degree + 2 * max_x,
            ..self.caps
        };
        let base = self.symplectic.space();
        let dbl = Doubled::new(base, wide);
        let (j_copy, x_copy) = match slot {
            ExpSlot::First => (1, 2),
            ExpSlot::Second => (2, 1),
        };
        let g12 = dbl.lift(g, 1, 2)?;
        let jd = dbl.embed(&j.with_caps(wide), j_copy);
        let step = |y: &Series| -> Result<Series> {
            let d = y.contract_exp_once(&g12, c, 1)?;
            let e = jd
                .multiply(y)?
                .contract(&g12)?
                .sub(&jd.multiply(&y.contract(&g12)?)?)?
                .scale(c);
            d.add(&e)
        };
        let mut cur = dbl.embed(&x.with_caps(wide), x_copy);
        let mut acc = cur.clone();
        let mut k = 1i64;
        while !cur.is_zero() {
            cur = step(&cur)?.scale(&rat(1, k));
            acc = acc.add(&cur)?;
            k += 1;
        }
        Ok(dbl.merge(&acc, self.caps))
    }
}

impl Series {
    /// `c ħ^h ∂_G` applied once.
    pub fn contract_exp_once(&self, g: &KernelTensor2, c: &Rational, h: u32) -> Result<Series> {
        Ok(self.contract(g)?.scale(c).mul_hbar(h))
    }
}

fn parity_parts(s: &Series) -> (Series, Series) {
    let space = s.space().clone();
    (
        s.filter(|_, m| !m.is_odd(&space)),
        s.filter(|_, m| m.is_odd(&space)),
    )
}

fn check_degree_sum(a: &Series, b: &Series, out: &Series, ctx: &str) -> Result<()> {
    if let (Ok(Some(da)), Ok(Some(db))) = (a.degree(), b.degree()) {
        out.require_degree(da + db, ctx)?;
    }
    Ok(())
}

/// Rejects exponents with a scalar or linear classical part.
pub fn check_admissible_exponent(j: &Series) -> Result<()> {
    for (h, m, _) in j.terms() {
        if h == 0 && m.len() <= 1 {
            return Err(Error::Inadmissible(format!(
                "exponent has a classical term of word length {}",
                m.len()
            )));
        }
    }
    Ok(())
}

/// Free-function forms of the context methods.
pub fn moyal(ctx: &BoundaryAlgebraContext, j: &Series, f: &Series) -> Result<Series> {
    ctx.moyal(j, f)
}

pub fn weyl_left(ctx: &BoundaryAlgebraContext, j: &Series, g: &Series) -> Result<Series> {
    ctx.weyl_left(j, g)
}

pub fn weyl_right(ctx: &BoundaryAlgebraContext, f: &Series, j: &Series) -> Result<Series> {
    ctx.weyl_right(f, j)
}

pub fn pairing(ctx: &BoundaryAlgebraContext, f: &Series, g: &Series) -> Result<Series> {
    ctx.pairing(f, g)
}

pub fn moyal_commutator_div_hbar(ctx: &BoundaryAlgebraContext, j: &Series, x: &Series) -> Result<Series> {
    ctx.commutator_div_hbar(j, x)
}

pub fn conjugate(ctx: &BoundaryAlgebraContext, j: &Series, i: &Series, depth: u32) -> Result<Conjugation> {
    ctx.conjugate(j, i, depth)
}
