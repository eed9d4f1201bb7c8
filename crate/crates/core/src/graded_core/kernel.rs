use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};

use super::space::{GradedSpace, Polarization, Side};

pub type Rational = BigRational;

/// Symmetry of a rank-2 tensor under the graded flip
/// `σ(e_a ⊗ e_b) = (-1)^{|a||b|} e_b ⊗ e_a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Symmetric,
    Antisymmetric,
    None,
}

/// `G = Σ G(a,b) e_a ⊗ e_b` as a dense rational matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelTensor2 {
    space: Arc<GradedSpace>,
    entries: Vec<Vec<Rational>>,
    parity: Parity,
}

impl KernelTensor2 {
    /// Builds a degree-zero tensor and verifies the declared parity.
    pub fn new(space: Arc<GradedSpace>, entries: Vec<Vec<Rational>>, parity: Parity) -> Result<Self> {
        let n = space.dim();
        if entries.len() != n || entries.iter().any(|r| r.len() != n) {
            return invalid(format!("kernel must be {n}x{n}"));
        }
        for a in 0..n {
            for b in 0..n {
                if !entries[a][b].is_zero() && space.generator(a).degree + space.generator(b).degree != 0 {
                    return Err(Error::Degree {
                        expected: 0,
                        found: space.generator(a).degree + space.generator(b).degree,
                        context: format!(
                            "kernel entry ({}, {})",
                            space.generator(a).name,
                            space.generator(b).name
                        ),
                    });
                }
            }
        }
        let k = KernelTensor2 {
            space,
            entries,
            parity: Parity::None,
        };
        let actual = k.detect_parity();
        let ok = match parity {
            Parity::None => true,
            Parity::Symmetric => k.flip() == k,
            Parity::Antisymmetric => k.flip() == k.scaled(&-Rational::one()),
        };
        if !ok {
            return invalid(format!("declared parity {parity:?} does not hold"));
        }
        Ok(KernelTensor2 {
            parity: if parity == Parity::None { actual } else { parity },
            ..k
        })
    }

    pub fn zero(space: Arc<GradedSpace>) -> Self {
        let n = space.dim();
        KernelTensor2 {
            space,
            entries: vec![vec![Rational::zero(); n]; n],
            parity: Parity::Symmetric,
        }
    }

    pub fn space(&self) -> &Arc<GradedSpace> {
        &self.space
    }

    pub fn entry(&self, a: usize, b: usize) -> &Rational {
        &self.entries[a][b]
    }

    pub fn entries(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(Zero::is_zero)
    }

    fn sign(&self, a: usize, b: usize) -> Rational {
        if self.space.odd(a) && self.space.odd(b) {
            -Rational::one()
        } else {
            Rational::one()
        }
    }

    /// The graded flip `σG`.
    pub fn flip(&self) -> KernelTensor2 {
        let n = self.space.dim();
        let mut e = vec![vec![Rational::zero(); n]; n];
        for a in 0..n {
            for b in 0..n {
                if !self.entries[a][b].is_zero() {
                    e[b][a] = &self.entries[a][b] * self.sign(a, b);
                }
            }
        }
        KernelTensor2 {
            space: self.space.clone(),
            entries: e,
            parity: self.parity,
        }
    }

    fn detect_parity(&self) -> Parity {
        let f = self.flip();
        if f.entries == self.entries {
            Parity::Symmetric
        } else if f.entries == self.scaled(&-Rational::one()).entries {
            Parity::Antisymmetric
        } else {
            Parity::None
        }
    }

    pub fn scaled(&self, c: &Rational) -> KernelTensor2 {
        KernelTensor2 {
            space: self.space.clone(),
            entries: self
                .entries
                .iter()
                .map(|r| r.iter().map(|x| x * c).collect())
                .collect(),
            parity: self.parity,
        }
    }

    pub fn add(&self, other: &KernelTensor2) -> KernelTensor2 {
        let entries: Vec<Vec<Rational>> = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
            .collect();
        let mut k = KernelTensor2 {
            space: self.space.clone(),
            entries,
            parity: Parity::None,
        };
        k.parity = k.detect_parity();
        k
    }

    /// Keeps the block with first slot on `first` and second slot on `second`.
    pub fn block(&self, pol: &Polarization, first: Side, second: Side) -> KernelTensor2 {
        let n = self.space.dim();
        let mut e = vec![vec![Rational::zero(); n]; n];
        for a in 0..n {
            for b in 0..n {
                if pol.side(a) == first && pol.side(b) == second {
                    e[a][b] = self.entries[a][b].clone();
                }
            }
        }
        let mut k = KernelTensor2 {
            space: self.space.clone(),
            entries: e,
            parity: Parity::None,
        };
        k.parity = k.detect_parity();
        k
    }

    /// Evaluation `(x^i ⊗ x^k)(G) = (-1)^{|i||k|} G(i,k)`.
    pub fn pair_value(&self, i: usize, k: usize) -> Rational {
        let g = &self.entries[i][k];
        if g.is_zero() {
            return Rational::zero();
        }
        g * self.sign(i, k)
    }

    /// Symmetrized evaluation `(x^i x^k)(G)` used by the contraction operator.
    pub fn sym_pair_value(&self, i: usize, k: usize) -> Rational {
        self.pair_value(i, k) + self.sign(i, k) * self.pair_value(k, i)
    }

    pub(crate) fn pair_table(&self) -> PairTable {
        let n = self.space.dim();
        let mut cross = vec![None; n * n];
        let mut sym = vec![None; n * n];
        for i in 0..n {
            for k in 0..n {
                let v = self.pair_value(i, k);
                if !v.is_zero() {
                    cross[i * n + k] = Some(v);
                }
                let s = self.sym_pair_value(i, k);
                if !s.is_zero() {
                    sym[i * n + k] = Some(s);
                }
            }
        }
        PairTable { n, cross, sym }
    }
}

pub(crate) struct PairTable {
    n: usize,
    cross: Vec<Option<Rational>>,
    sym: Vec<Option<Rational>>,
}

impl PairTable {
    pub(crate) fn cross(&self, i: usize, k: usize) -> Option<&Rational> {
        self.cross[i * self.n + k].as_ref()
    }

    pub(crate) fn sym(&self, i: usize, k: usize) -> Option<&Rational> {
        self.sym[i * self.n + k].as_ref()
    }
}

/// Dense rational matrix helpers.
pub(crate) mod mat {
    use super::Rational;
    use num_traits::{One, Zero};

    pub type M = Vec<Vec<Rational>>;

    pub fn identity(n: usize) -> M {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                    .collect()
            })
            .collect()
    }

    pub fn mul(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> M {
        let n = a.len();
        let m = b.first().map_or(0, Vec::len);
        let mut c = vec![vec![Rational::zero(); m]; n];
        for i in 0..n {
            for k in 0..b.len() {
                if a[i][k].is_zero() {
                    continue;
                }
                for j in 0..m {
                    if !b[k][j].is_zero() {
                        c[i][j] += &a[i][k] * &b[k][j];
                    }
                }
            }
        }
        c
    }

    pub fn transpose(a: &[Vec<Rational>]) -> M {
        let n = a.len();
        let m = a.first().map_or(0, Vec::len);
        (0..m).map(|j| (0..n).map(|i| a[i][j].clone()).collect()).collect()
    }

    /// Gauss-Jordan inverse, `None` when singular.
    pub fn inverse(a: &[Vec<Rational>]) -> Option<M> {
        let n = a.len();
        let mut w: M = a.to_vec();
        let mut inv = identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| !w[r][col].is_zero())?;
            w.swap(col, pivot);
            inv.swap(col, pivot);
            let p = w[col][col].clone();
            for j in 0..n {
                w[col][j] = &w[col][j] / &p;
                inv[col][j] = &inv[col][j] / &p;
            }
            for r in 0..n {
                if r == col || w[r][col].is_zero() {
                    continue;
                }
                let f = w[r][col].clone();
                for j in 0..n {
                    let wv = &f * &w[col][j];
                    w[r][j] -= wv;
                    let iv = &f * &inv[col][j];
                    inv[r][j] -= iv;
                }
            }
        }
        Some(inv)
    }
}
