use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

use super::kernel::{KernelTensor2, PairTable, Rational};
use super::monomial::{koszul_sign_unchecked, merge, normalize_word, Monomial};
use super::space::GradedSpace;

/// Truncation window carried by every series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncationCaps {
    pub max_hbar: u32,
    pub max_degree: u32,
    pub max_bracket_depth: u32,
}

impl TruncationCaps {
    pub fn new(max_hbar: u32, max_degree: u32, max_bracket_depth: u32) -> Result<Self> {
        let caps = TruncationCaps {
            max_hbar,
            max_degree,
            max_bracket_depth,
        };
        caps.validate()?;
        Ok(caps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_hbar == 0 || self.max_degree == 0 || self.max_bracket_depth == 0 {
            return invalid("truncation caps must all be at least 1");
        }
        Ok(())
    }

    pub fn admits(&self, hbar: u32, len: usize) -> bool {
        hbar <= self.max_hbar && len <= self.max_degree as usize
    }
}

impl Default for TruncationCaps {
    fn default() -> Self {
        TruncationCaps {
            max_hbar: 3,
            max_degree: 6,
            max_bracket_depth: 12,
        }
    }
}

/// Wire form of one term: `coeff · ħ^hbar · monomial`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub coeff: String,
    pub hbar: u32,
    pub monomial: Vec<String>,
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let parsed = match t.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
            let q: BigInt = q.trim().parse().map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
            if q.is_zero() {
                return Err(Error::Parse(format!("zero denominator in `{s}`")));
            }
            Rational::new(p, q)
        }
        None => Rational::from_integer(
            t.parse::<BigInt>()
                .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?,
        ),
    };
    Ok(parsed)
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) type Key = (u32, Monomial);

/// Truncated formal power series in ħ with values in `Sym(V*)`.
#[derive(Clone, PartialEq)]
pub struct Series {
    space: Arc<GradedSpace>,
    caps: TruncationCaps,
    terms: BTreeMap<Key, Rational>,
}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Series({self})")
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((h, m), c) in &self.terms {
            let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            write!(f, "{}", format_rational(&mag))?;
            match h {
                0 => {}
                1 => write!(f, " ħ")?,
                _ => write!(f, " ħ^{h}")?,
            }
            if !m.is_empty() {
                write!(f, " {}", m.render(&self.space))?;
            }
        }
        Ok(())
    }
}

impl Series {
    pub fn zero(space: &Arc<GradedSpace>, caps: TruncationCaps) -> Series {
        Series {
            space: space.clone(),
            caps,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(space: &Arc<GradedSpace>, caps: TruncationCaps) -> Series {
        Series::constant(space, caps, Rational::one(), 0)
    }

    pub fn constant(space: &Arc<GradedSpace>, caps: TruncationCaps, c: Rational, hbar: u32) -> Series {
        let mut s = Series::zero(space, caps);
        s.add_term(hbar, Monomial::one(), c);
        s
    }

    /// `c · ħ^hbar · x^{w_0} ⋯ x^{w_k}` with the word given in any order.
    pub fn monomial(
        space: &Arc<GradedSpace>,
        caps: TruncationCaps,
        c: Rational,
        hbar: u32,
        word: &[usize],
    ) -> Result<Series> {
        let mut s = Series::zero(space, caps);
        if let Some((sign, m)) = Monomial::normalize(word, space)? {
            s.add_term(hbar, m, c * Rational::from_integer(sign.into()));
        }
        Ok(s)
    }

    /// Like [`Series::monomial`] with dual generator names.
    pub fn from_names(
        space: &Arc<GradedSpace>,
        caps: TruncationCaps,
        c: Rational,
        hbar: u32,
        names: &[&str],
    ) -> Result<Series> {
        let word = names
            .iter()
            .map(|n| space.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        Series::monomial(space, caps, c, hbar, &word)
    }

    pub fn from_terms(space: &Arc<GradedSpace>, caps: TruncationCaps, terms: &[SeriesTerm]) -> Result<Series> {
        let mut s = Series::zero(space, caps);
        for t in terms {
            let c = parse_rational(&t.coeff)?;
            let names: Vec<&str> = t.monomial.iter().map(String::as_str).collect();
            s = s.add(&Series::from_names(space, caps, c, t.hbar, &names)?)?;
        }
        Ok(s)
    }

    pub fn to_terms(&self) -> Vec<SeriesTerm> {
        self.terms
            .iter()
            .map(|((h, m), c)| SeriesTerm {
                coeff: format_rational(c),
                hbar: *h,
                monomial: m.names(&self.space).into_iter().map(str::to_string).collect(),
            })
            .collect()
    }

    pub fn space(&self) -> &Arc<GradedSpace> {
        &self.space
    }

    pub fn caps(&self) -> TruncationCaps {
        self.caps
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &Monomial, &Rational)> {
        self.terms.iter().map(|((h, m), c)| (*h, m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, hbar: u32, m: &Monomial) -> Rational {
        self.terms
            .get(&(hbar, m.clone()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Coefficient of the word given by names (sign-normalized).
    pub fn coeff_of(&self, hbar: u32, names: &[&str]) -> Result<Rational> {
        Ok(match Monomial::normalize_names(names, &self.space)? {
            Some((s, m)) => self.coeff(hbar, &m) * Rational::from_integer(s.into()),
            None => Rational::zero(),
        })
    }

    pub(crate) fn add_term(&mut self, hbar: u32, m: Monomial, c: Rational) {
        if c.is_zero() || !self.caps.admits(hbar, m.len()) {
            return;
        }
        let key = (hbar, m);
        match self.terms.get_mut(&key) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub(crate) fn from_map(space: &Arc<GradedSpace>, caps: TruncationCaps, map: BTreeMap<Key, Rational>) -> Series {
        let mut s = Series::zero(space, caps);
        for ((h, m), c) in map {
            s.add_term(h, m, c);
        }
        s
    }

    pub fn check_compatible(&self, other: &Series) -> Result<()> {
        if !(Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space) {
            return invalid("series over different spaces");
        }
        if self.caps != other.caps {
            return invalid("series with different truncation caps");
        }
        Ok(())
    }

    /// Same terms under different caps (terms beyond the new caps are dropped).
    pub fn with_caps(&self, caps: TruncationCaps) -> Series {
        let mut s = Series::zero(&self.space, caps);
        for ((h, m), c) in &self.terms {
            s.add_term(*h, m.clone(), c.clone());
        }
        s
    }

    pub fn add(&self, other: &Series) -> Result<Series> {
        self.check_compatible(other)?;
        let mut s = self.clone();
        for ((h, m), c) in &other.terms {
            s.add_term(*h, m.clone(), c.clone());
        }
        Ok(s)
    }

    pub fn sub(&self, other: &Series) -> Result<Series> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Series {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, c: &Rational) -> Series {
        let mut s = Series::zero(&self.space, self.caps);
        if c.is_zero() {
            return s;
        }
        for ((h, m), v) in &self.terms {
            s.terms.insert((*h, m.clone()), v * c);
        }
        s
    }

    /// Multiplication by `ħ^k`.
    pub fn mul_hbar(&self, k: u32) -> Series {
        let mut s = Series::zero(&self.space, self.caps);
        for ((h, m), v) in &self.terms {
            s.add_term(h + k, m.clone(), v.clone());
        }
        s
    }

    /// Exact division by `ħ^k`; fails if any term has a lower ħ power.
    pub fn div_hbar(&self, k: u32) -> Result<Series> {
        let mut s = Series::zero(&self.space, self.caps);
        for ((h, m), v) in &self.terms {
            if *h < k {
                return Err(Error::Internal(format!(
                    "division by ħ^{k} with a nonzero ħ^{h} term {}",
                    m.render(&self.space)
                )));
            }
            s.add_term(h - k, m.clone(), v.clone());
        }
        Ok(s)
    }

    /// Part at a single ħ power, kept at that power.
    pub fn hbar_part(&self, k: u32) -> Series {
        self.filter(|h, _| h == k)
    }

    pub fn filter(&self, mut keep: impl FnMut(u32, &Monomial) -> bool) -> Series {
        Series {
            space: self.space.clone(),
            caps: self.caps,
            terms: self
                .terms
                .iter()
                .filter(|((h, m), _)| keep(*h, m))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Keeps the monomials built only from the given generators.
    pub fn supported_on(&self, allowed: &[bool]) -> Series {
        self.filter(|_, m| m.indices().all(|i| allowed[i]))
    }

    pub fn is_supported_on(&self, allowed: &[bool]) -> bool {
        self.terms.keys().all(|(_, m)| m.indices().all(|i| allowed[i]))
    }

    /// Common degree of all terms; `None` for the zero series, `Err` if mixed.
    pub fn degree(&self) -> Result<Option<i32>> {
        let mut deg = None;
        for (_, m) in self.terms.keys() {
            let d = m.degree(&self.space);
            match deg {
                None => deg = Some(d),
                Some(e) if e != d => {
                    return invalid(format!("inhomogeneous series: degrees {e} and {d}"));
                }
                _ => {}
            }
        }
        Ok(deg)
    }

    pub fn require_degree(&self, expected: i32, context: &str) -> Result<()> {
        match self.degree()? {
            Some(d) if d != expected => Err(Error::Degree {
                expected,
                found: d,
                context: context.to_string(),
            }),
            _ => Ok(()),
        }
    }

    /// Parity of a homogeneous series (false for zero).
    pub fn is_odd(&self) -> Result<bool> {
        let mut par = None;
        for (_, m) in self.terms.keys() {
            let p = m.is_odd(&self.space);
            if par.is_some_and(|q| q != p) {
                return invalid("series of mixed parity");
            }
            par = Some(p);
        }
        Ok(par.unwrap_or(false))
    }

    pub fn multiply(&self, other: &Series) -> Result<Series> {
        self.check_compatible(other)?;
        let odd = self.space.odd_mask();
        let mut out = BTreeMap::<Key, Rational>::new();
        for ((ha, ma), ca) in &self.terms {
            for ((hb, mb), cb) in &other.terms {
                let h = ha + hb;
                if !self.caps.admits(h, ma.len() + mb.len()) {
                    continue;
                }
                if let Some((sign, w)) = merge(&ma.0, &mb.0, odd) {
                    let c = ca * cb;
                    accumulate(&mut out, h, Monomial(w), if sign < 0 { -c } else { c });
                }
            }
        }
        Ok(Series::from_map(&self.space, self.caps, out))
    }

    pub fn pow(&self, n: u32) -> Result<Series> {
        let mut acc = Series::one(&self.space, self.caps);
        for _ in 0..n {
            acc = acc.multiply(self)?;
        }
        Ok(acc)
    }

    fn check_kernel(&self, g: &KernelTensor2) -> Result<()> {
        if !(Arc::ptr_eq(g.space(), &self.space) || **g.space() == *self.space) {
            return invalid("kernel over a different space");
        }
        Ok(())
    }

    /// The second-order operator `∂_G`.
    pub fn contract(&self, g: &KernelTensor2) -> Result<Series> {
        self.check_kernel(g)?;
        Ok(self.contract_with(&g.pair_table(), &Rational::one(), 0))
    }

    /// `c ħ^h ∂_G` applied once.
    pub(crate) fn contract_with(&self, table: &PairTable, c: &Rational, h: u32) -> Series {
        let odd = self.space.odd_mask();
        let mut out = BTreeMap::<Key, Rational>::new();
        for ((hw, m), coeff) in &self.terms {
            let hh = hw + h;
            if hh > self.caps.max_hbar {
                continue;
            }
            let w = &m.0;
            let n = w.len();
            let mut prefix_odd = vec![0usize; n + 1];
            for (l, &x) in w.iter().enumerate() {
                prefix_odd[l + 1] = prefix_odd[l] + odd[x as usize] as usize;
            }
            for i in 0..n {
                let oi = odd[w[i] as usize];
                for j in i + 1..n {
                    let Some(v) = table.sym(w[i] as usize, w[j] as usize) else {
                        continue;
                    };
                    let oj = odd[w[j] as usize];
                    let mut flips = 0usize;
                    if oi {
                        flips += prefix_odd[i];
                    }
                    if oj {
                        flips += prefix_odd[j] - oi as usize;
                    }
                    let mut rest = Vec::with_capacity(n - 2);
                    rest.extend(w[..i].iter());
                    rest.extend(w[i + 1..j].iter());
                    rest.extend(w[j + 1..].iter());
                    let mut val = coeff * v * c;
                    if flips % 2 == 1 {
                        val = -val;
                    }
                    accumulate(&mut out, hh, Monomial(rest), val);
                }
            }
        }
        Series::from_map(&self.space, self.caps, out)
    }

    /// `exp(c ħ^h ∂_G)` applied to the series; terminates because each step
    /// shortens words by two.
    pub fn contract_exp(&self, g: &KernelTensor2, c: &Rational, h: u32) -> Result<Series> {
        self.check_kernel(g)?;
        let table = g.pair_table();
        let mut acc = self.clone();
        let mut cur = self.clone();
        let mut k = 1u32;
        while !cur.is_zero() {
            cur = cur
                .contract_with(&table, c, h)
                .scale(&Rational::new(BigInt::one(), BigInt::from(k)));
            acc = acc.add(&cur)?;
            k += 1;
        }
        Ok(acc)
    }

    pub fn exp(&self) -> Result<Series> {
        if !self.coeff(0, &Monomial::one()).is_zero() {
            return Err(Error::Inadmissible(
                "exponential of a series with a nonzero scalar ħ⁰ term".into(),
            ));
        }
        let mut acc = Series::one(&self.space, self.caps);
        let mut cur = acc.clone();
        let mut k = 1u32;
        loop {
            cur = cur
                .multiply(self)?
                .scale(&Rational::new(BigInt::one(), BigInt::from(k)));
            if cur.is_zero() {
                break;
            }
            acc = acc.add(&cur)?;
            k += 1;
        }
        Ok(acc)
    }

    pub fn log(&self) -> Result<Series> {
        let unit = Monomial::one();
        if self.coeff(0, &unit) != Rational::one() {
            return Err(Error::NonUnit);
        }
        let h = self.sub(&Series::one(&self.space, self.caps))?;
        let mut acc = Series::zero(&self.space, self.caps);
        let mut cur = Series::one(&self.space, self.caps);
        let mut k = 1i64;
        loop {
            cur = cur.multiply(&h)?;
            if cur.is_zero() {
                break;
            }
            let c = Rational::new(BigInt::from(if k % 2 == 1 { 1 } else { -1 }), BigInt::from(k));
            acc = acc.add(&cur.scale(&c))?;
            k += 1;
        }
        Ok(acc)
    }

    /// Literal cross contraction `exp(c ħ^h ∂_G)_cross(self, other)`.
    pub fn cross_exp(&self, other: &Series, g: &KernelTensor2, c: &Rational, h: u32) -> Result<Series> {
        self.check_compatible(other)?;
        self.check_kernel(g)?;
        Ok(self.cross_exp_with(other, &g.pair_table(), c, h))
    }

    pub(crate) fn cross_exp_with(&self, other: &Series, table: &PairTable, c: &Rational, h: u32) -> Series {
        let odd = self.space.odd_mask();
        let caps = self.caps;
        let mut out = BTreeMap::<Key, Rational>::new();
        let mut powers = vec![Rational::one()];
        for ((ha, ma), ca) in &self.terms {
            for ((hb, mb), cb) in &other.terms {
                let base = ha + hb;
                if base > caps.max_hbar {
                    continue;
                }
                let cab = ca * cb;
                cross_monomials(&ma.0, &mb.0, table, odd, &mut |pairs, val, sign, word| {
                    let s = pairs as u32;
                    let hh = base + s * h;
                    if !caps.admits(hh, word.len()) {
                        return;
                    }
                    while powers.len() <= pairs {
                        let next = powers.last().unwrap() * c;
                        powers.push(next);
                    }
                    let mut v = &cab * val * &powers[pairs];
                    if sign < 0 {
                        v = -v;
                    }
                    accumulate(&mut out, hh, Monomial(word), v);
                }, caps.max_hbar.saturating_sub(base), h, caps.max_degree as usize);
            }
        }
        Series::from_map(&self.space, caps, out)
    }
}

pub(crate) fn accumulate(out: &mut BTreeMap<Key, Rational>, h: u32, m: Monomial, v: Rational) {
    if v.is_zero() {
        return;
    }
    let key = (h, m);
    match out.get_mut(&key) {
        Some(x) => {
            *x += v;
            if x.is_zero() {
                out.remove(&key);
            }
        }
        None => {
            out.insert(key, v);
        }
    }
}

/// Enumerates all partial matchings between the letters of `a` and `b` with
/// nonzero pair value, reporting `(pairs, product of values, sign, product of
/// survivors)`.
#[allow(clippy::too_many_arguments)]
fn cross_monomials(
    a: &[u16],
    b: &[u16],
    table: &PairTable,
    odd: &[bool],
    emit: &mut dyn FnMut(usize, &Rational, i8, Vec<u16>),
    hbar_budget: u32,
    h_per_pair: u32,
    max_len: usize,
) {
    let m = a.len();
    let n = b.len();
    let max_pairs = if h_per_pair == 0 {
        m.min(n)
    } else {
        m.min(n).min((hbar_budget / h_per_pair) as usize)
    };
    let total_odd: Vec<bool> = a.iter().chain(b.iter()).map(|&x| odd[x as usize]).collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut used = vec![false; n];

    #[allow(clippy::too_many_arguments)]
    fn rec(
        l: usize,
        a: &[u16],
        b: &[u16],
        table: &PairTable,
        odd: &[bool],
        total_odd: &[bool],
        pairs: &mut Vec<(usize, usize)>,
        used: &mut Vec<bool>,
        val: Rational,
        max_pairs: usize,
        max_len: usize,
        emit: &mut dyn FnMut(usize, &Rational, i8, Vec<u16>),
    ) {
        let m = a.len();
        if l == m {
            let s = pairs.len();
            if m + b.len() - 2 * s > max_len {
                return;
            }
            let mut perm = Vec::with_capacity(m + b.len());
            for &(i, j) in pairs.iter() {
                perm.push(i);
                perm.push(m + j);
            }
            let mut rest_a = Vec::new();
            for i in 0..m {
                if !pairs.iter().any(|p| p.0 == i) {
                    perm.push(i);
                    rest_a.push(a[i]);
                }
            }
            let mut rest_b = Vec::new();
            for j in 0..b.len() {
                if !used[j] {
                    perm.push(m + j);
                    rest_b.push(b[j]);
                }
            }
            let sign = koszul_sign_unchecked(&perm, total_odd);
            if let Some((s2, w)) = merge(&rest_a, &rest_b, odd) {
                emit(s, &val, sign * s2, w);
            }
            return;
        }
        rec(l + 1, a, b, table, odd, total_odd, pairs, used, val.clone(), max_pairs, max_len, emit);
        if pairs.len() >= max_pairs {
            return;
        }
        for j in 0..b.len() {
            if used[j] {
                continue;
            }
            if let Some(v) = table.cross(a[l] as usize, b[j] as usize) {
                used[j] = true;
                pairs.push((l, j));
                rec(l + 1, a, b, table, odd, total_odd, pairs, used, &val * v, max_pairs, max_len, emit);
                pairs.pop();
                used[j] = false;
            }
        }
    }

    rec(
        0,
        a,
        b,
        table,
        odd,
        &total_odd,
        &mut pairs,
        &mut used,
        Rational::one(),
        max_pairs,
        max_len,
        emit,
    );
}

/// Canonicalizes an arbitrary word, used by tests and the doubled-space maps.
pub(crate) fn canonical(word: Vec<u16>, odd: &[bool]) -> Option<(i8, Monomial)> {
    normalize_word(word, odd)
}
