//! Ground-truth theories: one-dimensional BF theory built from Lie algebra
//! structure constants, its closed-form boundary anomaly, and seeded families
//! of admissible theories for property checks.

use std::sync::Arc;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bvbfv_check::{self, CheckReport, HalfLineTheory, IntervalTheory, Residual};
use crate::error::{invalid, Error, Result};
use crate::graded_core::{
    int, rat, GradedSpace, Rational, Series, Side, SymplecticSpace, TruncationCaps,
};
use crate::weyl_moyal::BoundaryAlgebraContext;

/// Structure constants `[t^a, t^b] = f^{ab}_c t^c` (indices from 0).
#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebraData {
    pub name: String,
    pub dim: usize,
    /// Flattened `f[(a * dim + b) * dim + c]`.
    f: Vec<Rational>,
}

/// Names accepted by [`LieAlgebraData::builtin`].
pub const BUILTIN_ALGEBRAS: &[&str] = &[
    "abelian1",
    "abelian2",
    "abelian3",
    "abelian4",
    "sl2",
    "so3",
    "nonabelian2",
    "heisenberg",
];

impl LieAlgebraData {
    pub fn zero(name: &str, dim: usize) -> Self {
        LieAlgebraData {
            name: name.to_string(),
            dim,
            f: vec![Rational::zero(); dim * dim * dim],
        }
    }

    /// Builds from a dense `f[a][b][c]` array and checks antisymmetry.
    pub fn from_constants(name: &str, f: Vec<Vec<Vec<Rational>>>) -> Result<Self> {
        let dim = f.len();
        let mut g = LieAlgebraData::zero(name, dim);
        for (a, fa) in f.iter().enumerate() {
            if fa.len() != dim || fa.iter().any(|r| r.len() != dim) {
                return invalid("structure constants must be dim x dim x dim");
            }
            for (b, fab) in fa.iter().enumerate() {
                for (c, v) in fab.iter().enumerate() {
                    g.f[(a * dim + b) * dim + c] = v.clone();
                }
            }
        }
        g.check_antisymmetry()?;
        Ok(g)
    }

    /// Sets `f^{ab}_c = v` and `f^{ba}_c = −v`.
    pub fn set_bracket(&mut self, a: usize, b: usize, c: usize, v: Rational) {
        let n = self.dim;
        self.f[(b * n + a) * n + c] = -v.clone();
        self.f[(a * n + b) * n + c] = v;
    }

    pub fn f(&self, a: usize, b: usize, c: usize) -> &Rational {
        &self.f[(a * self.dim + b) * self.dim + c]
    }

    pub fn constants(&self) -> Vec<Vec<Vec<Rational>>> {
        let n = self.dim;
        (0..n)
            .map(|a| (0..n).map(|b| (0..n).map(|c| self.f(a, b, c).clone()).collect()).collect())
            .collect()
    }

    pub fn check_antisymmetry(&self) -> Result<()> {
        let n = self.dim;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if *self.f(a, b, c) != -self.f(b, a, c).clone() {
                        return invalid(format!("f^{{{a}{b}}}_{c} is not antisymmetric in its upper indices"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let mut g;
        match name {
            "abelian1" | "abelian2" | "abelian3" | "abelian4" => {
                let d = name[7..].parse().unwrap();
                g = LieAlgebraData::zero(name, d);
            }
            "sl2" => {
                // t1 = h, t2 = e, t3 = f
                g = LieAlgebraData::zero(name, 3);
                g.set_bracket(0, 1, 1, int(2));
                g.set_bracket(0, 2, 2, int(-2));
                g.set_bracket(1, 2, 0, int(1));
            }
            "so3" => {
                g = LieAlgebraData::zero(name, 3);
                g.set_bracket(0, 1, 2, int(1));
                g.set_bracket(1, 2, 0, int(1));
                g.set_bracket(2, 0, 1, int(1));
            }
            "nonabelian2" => {
                g = LieAlgebraData::zero(name, 2);
                g.set_bracket(0, 1, 1, int(1));
            }
            "heisenberg" => {
                g = LieAlgebraData::zero(name, 3);
                g.set_bracket(0, 1, 2, int(1));
            }
            _ => return invalid(format!("unknown algebra `{name}`")),
        }
        Ok(g)
    }

    /// Antisymmetric constants with small random integer entries; generically
    /// not a Lie algebra.
    pub fn random(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = LieAlgebraData::zero(&format!("random{dim}-{seed}"), dim);
        for a in 0..dim {
            for b in a + 1..dim {
                for c in 0..dim {
                    g.set_bracket(a, b, c, int(rng.gen_range(-2..=2)));
                }
            }
        }
        g
    }
}

/// Cyclic Jacobiator `Σ_cyc f^{ab}_e f^{ec}_d`; zero exactly for Lie algebras.
pub fn check_jacobi(g: &LieAlgebraData) -> Result<CheckReport> {
    g.check_antisymmetry()?;
    let n = g.dim;
    let mut report = CheckReport::new("jacobi");
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in 0..n {
                    let mut s = Rational::zero();
                    for e in 0..n {
                        s += g.f(a, b, e) * g.f(e, c, d);
                        s += g.f(b, c, e) * g.f(e, a, d);
                        s += g.f(c, a, e) * g.f(e, b, d);
                    }
                    if !s.is_zero() {
                        report.push(Residual::witness(
                            "jacobi",
                            format!("[[t{a},t{b}],t{c}] + cyclic has t{d} coefficient {s}"),
                        ));
                    }
                }
            }
        }
    }
    Ok(report.finish())
}

/// `(f^{cb}_c)_b`, the trace of the adjoint action.
pub fn unimodularity_vector(g: &LieAlgebraData) -> Vec<Rational> {
    (0..g.dim)
        .map(|b| (0..g.dim).map(|c| g.f(c, b, c).clone()).sum())
        .collect()
}

pub fn is_unimodular(g: &LieAlgebraData) -> bool {
    unimodularity_vector(g).iter().all(Zero::is_zero)
}

/// BF space `g*[−1] ⊕ g[1]` with generators `εt_a` (degree 1, dual `B^a`) and
/// `ηt^a` (degree −1, dual `A_a`), `ω(εt_a, ηt^b) = δ_a^b`. The default
/// polarization puts `εt_a` in `L`.
pub fn bf_symplectic(dim: usize) -> Result<Arc<SymplecticSpace>> {
    let mut decls = Vec::new();
    for a in 1..=dim {
        decls.push((format!("eps_t{a}"), format!("B^{a}"), 1, Side::L));
    }
    for a in 1..=dim {
        decls.push((format!("eta_t^{a}"), format!("A_{a}"), -1, Side::LPrime));
    }
    let space = GradedSpace::new(decls)?;
    let n = 2 * dim;
    let mut omega = vec![vec![Rational::zero(); n]; n];
    for a in 0..dim {
        omega[a][dim + a] = int(1);
        omega[dim + a][a] = int(1);
    }
    Ok(Arc::new(SymplecticSpace::new(space, omega)?))
}

/// `I∂ = ½ f^{ab}_c B^c A_a A_b`, built without the Jacobi gate.
pub fn bf_interaction(g: &LieAlgebraData, sym: &Arc<SymplecticSpace>, caps: TruncationCaps) -> Result<Series> {
    let n = g.dim;
    let space = sym.space();
    let mut i = Series::zero(space, caps);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let f = g.f(a, b, c);
                if f.is_zero() {
                    continue;
                }
                let t = Series::monomial(space, caps, f * rat(1, 2), 0, &[c, n + a, n + b])?;
                i = i.add(&t)?;
            }
        }
    }
    Ok(i)
}

/// Interval BF theory: `B` boundary condition at 0, `A` boundary condition at 1,
/// `J∂₀ = J∂₁ = 0`.
pub fn build_bf_theory(g: &LieAlgebraData, caps: TruncationCaps) -> Result<IntervalTheory> {
    let jac = check_jacobi(g)?;
    if !jac.pass {
        return Err(Error::Inadmissible(format!(
            "structure constants of `{}` violate the Jacobi identity",
            g.name
        )));
    }
    build_bf_theory_unchecked(g, caps)
}

/// As [`build_bf_theory`] without the Jacobi gate, for negative tests.
pub fn build_bf_theory_unchecked(g: &LieAlgebraData, caps: TruncationCaps) -> Result<IntervalTheory> {
    let sym = bf_symplectic(g.dim)?;
    let pol0 = sym.space().default_polarization();
    let pol1 = pol0.swapped();
    let i = bf_interaction(g, &sym, caps)?;
    let zero = Series::zero(sym.space(), caps);
    IntervalTheory::new(sym, pol0, pol1, i, zero.clone(), zero, None, None)
}

/// `−½ ħ f^{cb}_c A_b`.
pub fn anomaly_closed_form(g: &LieAlgebraData, sym: &Arc<SymplecticSpace>, caps: TruncationCaps) -> Result<Series> {
    let u = unimodularity_vector(g);
    let mut s = Series::zero(sym.space(), caps);
    for (b, ub) in u.iter().enumerate() {
        if !ub.is_zero() {
            s = s.add(&Series::monomial(sym.space(), caps, ub * rat(-1, 2), 1, &[g.dim + b])?)?;
        }
    }
    Ok(s)
}

/// Both endpoint residuals of the interval QME through the engine, compared
/// with the closed form.
#[derive(Clone, Debug, Serialize)]
pub struct BfAnomalyReport {
    pub algebra: String,
    pub unimodular: bool,
    pub unimodularity_vector: Vec<String>,
    pub endpoint0_residual: Vec<crate::graded_core::SeriesTerm>,
    pub endpoint1_residual: Vec<crate::graded_core::SeriesTerm>,
    pub closed_form: Vec<crate::graded_core::SeriesTerm>,
    pub engine_matches_closed_form: bool,
    pub anomaly_free: bool,
    pub report: CheckReport,
}

pub fn bf_anomaly_report(g: &LieAlgebraData, caps: TruncationCaps) -> Result<BfAnomalyReport> {
    let th = build_bf_theory(g, caps)?;
    let ends = bvbfv_check::qme_interval_residuals(&th)?;
    let closed = anomaly_closed_form(g, th.symplectic(), caps)?;
    let matches = ends.endpoint1 == closed && ends.endpoint0.is_zero();
    let unimodular = is_unimodular(g);
    let anomaly_free = ends.endpoint1.is_zero();
    let mut report = CheckReport::new("bf_anomaly");
    if !matches {
        report.push(Residual::series("engine - closed form", &ends.endpoint1.sub(&closed)?));
        report.flag("internal_consistency_failure");
    }
    if anomaly_free != unimodular {
        report.push(Residual::witness(
            "unimodularity",
            "anomaly vanishing disagrees with unimodularity".to_string(),
        ));
    }
    Ok(BfAnomalyReport {
        algebra: g.name.clone(),
        unimodular,
        unimodularity_vector: unimodularity_vector(g)
            .iter()
            .map(crate::graded_core::format_rational)
            .collect(),
        endpoint0_residual: ends.endpoint0.to_terms(),
        endpoint1_residual: ends.endpoint1.to_terms(),
        closed_form: closed.to_terms(),
        engine_matches_closed_form: matches,
        anomaly_free,
        report: report.finish(),
    })
}

/// Space with an even Darboux pair `(q, p)` and an odd pair `(c, b)`:
/// `q, c ∈ L` with duals `Q` (degree 0) and `C` (degree −1); `p, b ∈ L'`
/// with duals `P` (degree 0) and `Bb` (degree 1).
pub fn toy_symplectic() -> Result<Arc<SymplecticSpace>> {
    let space = GradedSpace::new(vec![
        ("q".into(), "Q".into(), 0, Side::L),
        ("c".into(), "C".into(), 1, Side::L),
        ("p".into(), "P".into(), 0, Side::LPrime),
        ("b".into(), "Bb".into(), -1, Side::LPrime),
    ])?;
    let mut omega = vec![vec![Rational::zero(); 4]; 4];
    omega[0][2] = int(1);
    omega[2][0] = int(-1);
    omega[1][3] = int(1);
    omega[3][1] = int(1);
    Ok(Arc::new(SymplecticSpace::new(space, omega)?))
}

/// A half-line theory with its provenance, for property batteries.
#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub label: String,
    pub theory: HalfLineTheory,
}

fn small(rng: &mut ChaCha8Rng) -> Rational {
    let mut v = 0;
    while v == 0 {
        v = rng.gen_range(-3..=3);
    }
    rat(v, rng.gen_range(1..=2))
}

/// Seeded family of admissible half-line theories: BF data on both sides for
/// every built-in algebra and for random constants, ħ-deformations of those,
/// and toy-space theories with nonzero boundary exponents `J`.
pub fn theory_family(seed: u64, caps: TruncationCaps) -> Result<Vec<FamilyMember>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut algebras: Vec<LieAlgebraData> = BUILTIN_ALGEBRAS
        .iter()
        .map(|n| LieAlgebraData::builtin(n))
        .collect::<Result<_>>()?;
    for k in 0..4 {
        algebras.push(LieAlgebraData::random(2 + k % 2, seed.wrapping_add(k as u64)));
    }
    for g in &algebras {
        let sym = bf_symplectic(g.dim)?;
        let i = bf_interaction(g, &sym, caps)?;
        let space = sym.space().clone();
        for (side, pol) in [("B", space.default_polarization()), ("A", space.default_polarization().swapped())] {
            let zero = Series::zero(&space, caps);
            out.push(FamilyMember {
                label: format!("bf-{}-{side}", g.name),
                theory: HalfLineTheory::new(sym.clone(), pol.clone(), i.clone(), zero.clone(), None)?,
            });
            // ħ-deformation by a linear term on the A or B letters
            let a = rng.gen_range(0..g.dim);
            let lin = Series::monomial(&space, caps, small(&mut rng), 1, &[g.dim + a])?;
            out.push(FamilyMember {
                label: format!("bf-{}-{side}-hbarA{a}", g.name),
                theory: HalfLineTheory::new(sym.clone(), pol.clone(), i.add(&lin)?, zero.clone(), None)?,
            });
            // ħ-deformation by a cubic B A A term
            let (c, a1, a2) = (rng.gen_range(0..g.dim), rng.gen_range(0..g.dim), rng.gen_range(0..g.dim));
            let cub = Series::monomial(&space, caps, small(&mut rng), 1, &[c, g.dim + a1, g.dim + a2])?;
            out.push(FamilyMember {
                label: format!("bf-{}-{side}-hbarBAA", g.name),
                theory: HalfLineTheory::new(sym.clone(), pol, i.add(&cub)?, zero, None)?,
            });
        }
    }
    let toy = toy_symplectic()?;
    let space = toy.space().clone();
    let pol = space.default_polarization();
    let (q, p, b) = (0usize, 2usize, 3usize);
    for k in 0..12 {
        // I = Bb · F(Q, P) is flat for every F
        let mut i = Series::zero(&space, caps);
        for _ in 0..3 {
            let nq = rng.gen_range(0..=2);
            let np = rng.gen_range(0..=2);
            let mut word = vec![b];
            word.extend(std::iter::repeat(q).take(nq));
            word.extend(std::iter::repeat(p).take(np));
            let h = if word.len() < 2 { 1 } else { rng.gen_range(0..=1) };
            i = i.add(&Series::monomial(&space, caps, small(&mut rng), h, &word)?)?;
        }
        let mut j = Series::zero(&space, caps);
        let deg = rng.gen_range(2..=3);
        j = j.add(&Series::monomial(&space, caps, small(&mut rng), 0, &vec![q; deg])?)?;
        if k % 2 == 0 {
            j = j.add(&Series::monomial(&space, caps, small(&mut rng), 1, &[q])?)?;
        }
        out.push(FamilyMember {
            label: format!("toy-{k}"),
            theory: HalfLineTheory::new(toy.clone(), pol.clone(), i, j, None)?,
        });
    }
    Ok(out)
}

/// Context for a half-line theory.
pub fn context(th: &HalfLineTheory) -> Result<BoundaryAlgebraContext> {
    BoundaryAlgebraContext::new(th.symplectic().clone(), th.polarization().clone(), th.caps())
}
