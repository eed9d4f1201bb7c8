use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};

use super::kernel::{mat, KernelTensor2, Parity, Rational};
use super::space::{GradedSpace, Polarization, Side};

/// Graded symplectic space with its inverse bivector and polarization split.
#[derive(Clone, Debug)]
pub struct SymplecticSpace {
    space: Arc<GradedSpace>,
    omega: Vec<Vec<Rational>>,
    k: KernelTensor2,
    k_minus: KernelTensor2,
    k_plus: KernelTensor2,
}

/// `K∂ = K∂_− + K∂_+` for a given polarization.
#[derive(Clone, Debug)]
pub struct KernelSplit {
    pub k: KernelTensor2,
    pub k_minus: KernelTensor2,
    pub k_plus: KernelTensor2,
}

/// Inverts `ω∂` into `K∂` and splits it along the default polarization.
///
/// With `Ω_ab = ω(e_a, e_b)` and `W_ab = (-1)^{|a|} Ω_ab`, the coefficient
/// matrix is `K = Ω^{-T} W Ω^{-1}`.
pub fn invert_symplectic(space: &Arc<GradedSpace>, omega: &[Vec<Rational>]) -> Result<SymplecticSpace> {
    SymplecticSpace::new(space.clone(), omega.to_vec())
}

impl SymplecticSpace {
    pub fn new(space: Arc<GradedSpace>, omega: Vec<Vec<Rational>>) -> Result<Self> {
        let n = space.dim();
        if omega.len() != n || omega.iter().any(|r| r.len() != n) {
            return invalid(format!("omega must be {n}x{n}"));
        }
        let pol = space.default_polarization();
        for a in 0..n {
            for b in 0..n {
                if omega[a][b].is_zero() {
                    continue;
                }
                let (ga, gb) = (space.generator(a), space.generator(b));
                if ga.degree + gb.degree != 0 {
                    return Err(Error::Degree {
                        expected: 0,
                        found: ga.degree + gb.degree,
                        context: format!("omega({}, {})", ga.name, gb.name),
                    });
                }
                if pol.side(a) == pol.side(b) {
                    return Err(Error::Polarization(format!(
                        "omega pairs {} with {} on the same side",
                        ga.name, gb.name
                    )));
                }
                let sign = if space.odd(a) && space.odd(b) { 1 } else { -1 };
                if omega[b][a] != &omega[a][b] * Rational::from_integer(sign.into()) {
                    return invalid(format!(
                        "omega is not graded antisymmetric at ({}, {})",
                        ga.name, gb.name
                    ));
                }
            }
        }
        let inv = mat::inverse(&omega).ok_or(Error::Singular)?;
        let w: Vec<Vec<Rational>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        if space.generator(a).degree.rem_euclid(2) == 1 {
                            -omega[a][b].clone()
                        } else {
                            omega[a][b].clone()
                        }
                    })
                    .collect()
            })
            .collect();
        let kmat = mat::mul(&mat::mul(&mat::transpose(&inv), &w), &inv);
        let k = KernelTensor2::new(space.clone(), kmat, Parity::Antisymmetric)
            .map_err(|e| Error::Internal(format!("inverse bivector: {e}")))?;
        let split = split_kernel(&k, &pol)?;
        let s = SymplecticSpace {
            space,
            omega,
            k,
            k_minus: split.k_minus,
            k_plus: split.k_plus,
        };
        if s.round_trip_omega() != s.omega {
            return Err(Error::Internal("K∂ does not invert omega".into()));
        }
        Ok(s)
    }

    pub fn space(&self) -> &Arc<GradedSpace> {
        &self.space
    }

    pub fn omega(&self) -> &[Vec<Rational>] {
        &self.omega
    }

    pub fn omega_entry(&self, a: usize, b: usize) -> &Rational {
        &self.omega[a][b]
    }

    pub fn k(&self) -> &KernelTensor2 {
        &self.k
    }

    pub fn k_minus(&self) -> &KernelTensor2 {
        &self.k_minus
    }

    pub fn k_plus(&self) -> &KernelTensor2 {
        &self.k_plus
    }

    /// Split of `K∂` along another polarization of the same space.
    pub fn split(&self, pol: &Polarization) -> Result<KernelSplit> {
        if pol.0.len() != self.space.dim() {
            return invalid("polarization length differs from dimension");
        }
        for a in 0..self.space.dim() {
            for b in 0..self.space.dim() {
                if !self.omega[a][b].is_zero() && pol.side(a) == pol.side(b) {
                    return Err(Error::Polarization(format!(
                        "{} and {} are paired but share a side",
                        self.space.generator(a).name,
                        self.space.generator(b).name
                    )));
                }
            }
        }
        split_kernel(&self.k, pol)
    }

    /// `Ω^T K Ω` with row signs undone, which must reproduce `ω`.
    pub fn round_trip_omega(&self) -> Vec<Vec<Rational>> {
        let n = self.space.dim();
        let w = mat::mul(&mat::mul(&mat::transpose(&self.omega), self.k.entries()), &self.omega);
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        if self.space.generator(a).degree.rem_euclid(2) == 1 {
                            -w[a][b].clone()
                        } else {
                            w[a][b].clone()
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

fn split_kernel(k: &KernelTensor2, pol: &Polarization) -> Result<KernelSplit> {
    let k_minus = k.block(pol, Side::L, Side::LPrime);
    let k_plus = k.block(pol, Side::LPrime, Side::L);
    if k_minus.add(&k_plus) != *k {
        return Err(Error::Polarization("K∂ has components inside L⊗L or L'⊗L'".into()));
    }
    if k_minus.flip() != k_plus.scaled(&-Rational::one()) {
        return Err(Error::Internal("σK∂_− ≠ −K∂_+".into()));
    }
    Ok(KernelSplit {
        k: k.clone(),
        k_minus,
        k_plus,
    })
}
