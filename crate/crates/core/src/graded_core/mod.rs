//! Exact graded-commutative algebra `Sym(V*)[[ħ]]` with Koszul signs,
//! contraction operators and truncated series arithmetic.

mod doubled;
mod kernel;
mod monomial;
mod series;
mod space;
mod symplectic;

pub use doubled::{Copies, Doubled};
pub use kernel::{KernelTensor2, Parity, Rational};
pub use monomial::{koszul_sign, parities, Monomial};
pub use series::{format_rational, parse_rational, Series, SeriesTerm, TruncationCaps};
pub use space::{Generator, GeneratorDecl, GradedSpace, Polarization, Side};
pub use symplectic::{invert_symplectic, KernelSplit, SymplecticSpace};

use num_bigint::BigInt;

/// Shorthand for the rational `p/q`.
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Shorthand for an integer rational.
pub fn int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

/// `normalize_monomial` on a word of indices.
pub fn normalize_monomial(word: &[usize], space: &GradedSpace) -> crate::Result<Option<(i8, Monomial)>> {
    Monomial::normalize(word, space)
}

pub fn multiply(a: &Series, b: &Series) -> crate::Result<Series> {
    a.multiply(b)
}

pub fn contract(g: &KernelTensor2, f: &Series) -> crate::Result<Series> {
    f.contract(g)
}

pub fn cross_contract_exp(g: &KernelTensor2, a: &Series, b: &Series) -> crate::Result<Series> {
    a.cross_exp(b, g, &int(1), 0)
}

pub fn series_exp(f: &Series) -> crate::Result<Series> {
    f.exp()
}

pub fn series_log(g: &Series) -> crate::Result<Series> {
    g.log()
}

/// `{f, g}_G = ∂_G(fg) − ∂_G(f) g − (−1)^{|f|} f ∂_G(g)`.
pub fn bv_bracket(g: &KernelTensor2, a: &Series, b: &Series) -> crate::Result<Series> {
    let ab = a.multiply(b)?.contract(g)?;
    let t1 = a.contract(g)?.multiply(b)?;
    let mut t2 = a.multiply(&b.contract(g)?)?;
    if a.is_odd()? {
        t2 = t2.neg();
    }
    ab.sub(&t1)?.sub(&t2)
}
