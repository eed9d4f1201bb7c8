use std::cmp::Ordering;

use crate::error::{invalid, Result};

use super::space::GradedSpace;

/// Sign of reordering `(x_0, …, x_{n-1})` into `(x_{p[0]}, …, x_{p[n-1]})`.
///
/// `perm` is 0-based. Each inverted pair of odd elements contributes `-1`.
pub fn koszul_sign(perm: &[usize], odd: &[bool]) -> Result<i8> {
    let n = perm.len();
    if odd.len() != n {
        return invalid(format!("permutation of length {n} with {} degrees", odd.len()));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return invalid(format!("malformed permutation {perm:?}"));
        }
        seen[p] = true;
    }
    Ok(koszul_sign_unchecked(perm, odd))
}

pub(crate) fn koszul_sign_unchecked(perm: &[usize], odd: &[bool]) -> i8 {
    let mut sign = 1i8;
    for i in 0..perm.len() {
        if !odd[perm[i]] {
            continue;
        }
        for j in i + 1..perm.len() {
            if odd[perm[j]] && perm[i] > perm[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Integer degrees to parities, as accepted by [`koszul_sign`].
pub fn parities(degrees: &[i32]) -> Vec<bool> {
    degrees.iter().map(|d| d.rem_euclid(2) == 1).collect()
}

/// Sorted word of dual generator indices. Odd entries never repeat.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(pub(crate) Vec<u16>);

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&i| i as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self, space: &GradedSpace) -> i32 {
        self.indices().map(|i| space.dual_degree(i)).sum()
    }

    pub fn is_odd(&self, space: &GradedSpace) -> bool {
        self.indices().filter(|&i| space.odd(i)).count() % 2 == 1
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&(i as u16)).is_ok()
    }

    /// Canonical form of an arbitrary word, or `None` when an odd letter repeats.
    pub fn normalize(word: &[usize], space: &GradedSpace) -> Result<Option<(i8, Monomial)>> {
        for &i in word {
            if i >= space.dim() {
                return invalid(format!("generator index {i} out of range"));
            }
        }
        Ok(normalize_word(word.iter().map(|&i| i as u16).collect(), space.odd_mask()))
    }

    /// Canonical form of a word given by dual generator names.
    pub fn normalize_names(names: &[&str], space: &GradedSpace) -> Result<Option<(i8, Monomial)>> {
        let word = names
            .iter()
            .map(|n| space.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        Monomial::normalize(&word, space)
    }

    pub fn names<'a>(&self, space: &'a GradedSpace) -> Vec<&'a str> {
        self.indices()
            .map(|i| space.generator(i).dual_name.as_str())
            .collect()
    }

    pub fn render(&self, space: &GradedSpace) -> String {
        if self.is_empty() {
            "1".to_string()
        } else {
            self.names(space).join(" ")
        }
    }
}

/// Insertion sort with sign tracking.
pub(crate) fn normalize_word(mut w: Vec<u16>, odd: &[bool]) -> Option<(i8, Monomial)> {
    let mut sign = 1i8;
    for i in 1..w.len() {
        let mut j = i;
        while j > 0 && w[j - 1] >= w[j] {
            if w[j - 1] == w[j] {
                if odd[w[j] as usize] {
                    return None;
                }
                break;
            }
            if odd[w[j] as usize] && odd[w[j - 1] as usize] {
                sign = -sign;
            }
            w.swap(j - 1, j);
            j -= 1;
        }
    }
    Some((sign, Monomial(w)))
}

/// Product of two canonical words: `a · b = sign · merged`.
pub(crate) fn merge(a: &[u16], b: &[u16], odd: &[bool]) -> Option<(i8, Vec<u16>)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut odd_left_in_a = a.iter().filter(|&&x| odd[x as usize]).count();
    let (mut i, mut j) = (0, 0);
    let mut sign = 1i8;
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] <= b[j]) {
            if j < b.len() && a[i] == b[j] && odd[a[i] as usize] {
                return None;
            }
            if odd[a[i] as usize] {
                odd_left_in_a -= 1;
            }
            out.push(a[i]);
            i += 1;
        } else {
            if odd[b[j] as usize] && odd_left_in_a % 2 == 1 {
                sign = -sign;
            }
            out.push(b[j]);
            j += 1;
        }
    }
    Some((sign, out))
}
