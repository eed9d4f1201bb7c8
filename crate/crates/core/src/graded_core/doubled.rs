use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::Zero;

use crate::error::Result;

use super::kernel::{KernelTensor2, Parity, Rational};
use super::monomial::Monomial;
use super::series::{accumulate, canonical, Series, TruncationCaps};
use super::space::GradedSpace;

/// Two copies of a space, `V₁ ⊕ V₂`, with maps in and out.
///
/// A cross contraction `exp(∂_G)_cross(a, b)` equals the multiplication map
/// applied to `exp(∂_{G₁₂})(a⁽¹⁾ b⁽²⁾)`, where `G₁₂` places `G` in `V₁ ⊗ V₂`.
#[derive(Clone, Debug)]
pub struct Doubled {
    base: Arc<GradedSpace>,
    space: Arc<GradedSpace>,
    caps: TruncationCaps,
}

impl Doubled {
    /// `caps` are used inside the doubled space; pass widened word-length caps
    /// when intermediate words can exceed the final ones.
    pub fn new(base: &Arc<GradedSpace>, caps: TruncationCaps) -> Doubled {
        Doubled {
            base: base.clone(),
            space: base.doubled(),
            caps,
        }
    }

    pub fn space(&self) -> &Arc<GradedSpace> {
        &self.space
    }

    pub fn caps(&self) -> TruncationCaps {
        self.caps
    }

    /// Places a series in copy 1 or 2.
    pub fn embed(&self, s: &Series, copy: usize) -> Series {
        assert!(copy == 1 || copy == 2);
        let shift = if copy == 1 { 0 } else { self.base.dim() as u16 };
        let mut out = BTreeMap::new();
        for (h, m, c) in s.terms() {
            let w = m.0.iter().map(|&i| i + shift).collect();
            accumulate(&mut out, h, Monomial(w), c.clone());
        }
        Series::from_map(&self.space, self.caps, out)
    }

    /// Identifies both copies with `V` and multiplies.
    pub fn merge(&self, s: &Series, caps: TruncationCaps) -> Series {
        let n = self.base.dim() as u16;
        let odd = self.base.odd_mask();
        let mut out = BTreeMap::new();
        for (h, m, c) in s.terms() {
            let w: Vec<u16> = m.0.iter().map(|&i| if i >= n { i - n } else { i }).collect();
            if let Some((sign, mm)) = canonical(w, odd) {
                accumulate(&mut out, h, mm, if sign < 0 { -c.clone() } else { c.clone() });
            }
        }
        Series::from_map(&self.base, caps, out)
    }

    /// `G` placed with first slot in copy `first` and second in copy `second`.
    pub fn lift(&self, g: &KernelTensor2, first: usize, second: usize) -> Result<KernelTensor2> {
        let n = self.base.dim();
        let mut e = vec![vec![Rational::zero(); 2 * n]; 2 * n];
        let (oa, ob) = ((first - 1) * n, (second - 1) * n);
        for a in 0..n {
            for b in 0..n {
                e[oa + a][ob + b] = g.entry(a, b).clone();
            }
        }
        KernelTensor2::new(self.space.clone(), e, Parity::None)
    }
}

/// `n` copies of a space, one per graph vertex. Copies are numbered from 0.
#[derive(Clone, Debug)]
pub struct Copies {
    base: Arc<GradedSpace>,
    space: Arc<GradedSpace>,
    n: usize,
    caps: TruncationCaps,
}

impl Copies {
    pub fn new(base: &Arc<GradedSpace>, n: usize, caps: TruncationCaps) -> Copies {
        Copies {
            base: base.clone(),
            space: base.copies(n),
            n,
            caps,
        }
    }

    pub fn space(&self) -> &Arc<GradedSpace> {
        &self.space
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn embed(&self, s: &Series, copy: usize) -> Series {
        assert!(copy < self.n);
        let shift = (copy * self.base.dim()) as u16;
        let mut out = BTreeMap::new();
        for (h, m, c) in s.terms() {
            let w = m.0.iter().map(|&i| i + shift).collect();
            accumulate(&mut out, h, Monomial(w), c.clone());
        }
        Series::from_map(&self.space, self.caps, out)
    }

    /// `(copy, base index)` of a copy-space generator.
    pub fn locate(&self, i: usize) -> (usize, usize) {
        (i / self.base.dim(), i % self.base.dim())
    }

    /// `G` placed in the single block `(first, second)`.
    pub fn lift_block(&self, g: &KernelTensor2, first: usize, second: usize) -> Result<KernelTensor2> {
        let n = self.base.dim();
        let mut e = vec![vec![Rational::zero(); self.n * n]; self.n * n];
        let (oa, ob) = (first * n, second * n);
        for a in 0..n {
            for b in 0..n {
                e[oa + a][ob + b] = g.entry(a, b).clone();
            }
        }
        KernelTensor2::new(self.space.clone(), e, Parity::None)
    }
}
