use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Which half of a Lagrangian decomposition `V = L ⊕ L'` a generator lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    L,
    #[serde(rename = "Lprime")]
    LPrime,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::L => Side::LPrime,
            Side::LPrime => Side::L,
        }
    }
}

/// Basis vector of `V`. `dual_name` names the coordinate function with `x(e) = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub dual_name: String,
    pub degree: i32,
    pub side: Side,
    pub index: usize,
}

impl Generator {
    /// Degree of the dual coordinate, which is minus the generator degree.
    pub fn dual_degree(&self) -> i32 {
        -self.degree
    }

    pub fn is_odd(&self) -> bool {
        self.degree.rem_euclid(2) == 1
    }
}

/// A labeling of every generator by a side. The space carries a default one;
/// interval theories carry a second.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polarization(pub Vec<Side>);

impl Polarization {
    pub fn side(&self, i: usize) -> Side {
        self.0[i]
    }

    pub fn swapped(&self) -> Polarization {
        Polarization(self.0.iter().map(|s| s.opposite()).collect())
    }

    pub fn members(&self, side: Side) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(move |(_, s)| **s == side)
            .map(|(i, _)| i)
    }
}

/// Finite graded vector space with named generators in canonical order.
#[derive(Debug, PartialEq, Eq)]
pub struct GradedSpace {
    generators: Vec<Generator>,
    lookup: HashMap<String, usize>,
    odd: Vec<bool>,
}

/// Declaration of one generator: `(name, dual name, degree, side)`.
pub type GeneratorDecl = (String, String, i32, Side);

impl GradedSpace {
    pub fn new(decls: Vec<GeneratorDecl>) -> Result<Arc<GradedSpace>> {
        if decls.len() > u16::MAX as usize {
            return invalid("too many generators");
        }
        let mut lookup = HashMap::new();
        let mut generators = Vec::with_capacity(decls.len());
        for (index, (name, dual_name, degree, side)) in decls.into_iter().enumerate() {
            if name.is_empty() || dual_name.is_empty() {
                return invalid("empty generator name");
            }
            for key in [&name, &dual_name] {
                if lookup.contains_key(key.as_str()) {
                    return invalid(format!("duplicate name `{key}`"));
                }
            }
            lookup.insert(name.clone(), index);
            if dual_name != name {
                lookup.insert(dual_name.clone(), index);
            }
            generators.push(Generator {
                name,
                dual_name,
                degree,
                side,
                index,
            });
        }
        let odd = generators.iter().map(Generator::is_odd).collect();
        Ok(Arc::new(GradedSpace {
            generators,
            lookup,
            odd,
        }))
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn generator(&self, i: usize) -> &Generator {
        &self.generators[i]
    }

    /// Index of a generator looked up by its own name or its dual name.
    pub fn index_of(&self, name: &str) -> Result<usize> {
        match self.lookup.get(name) {
            Some(&i) => Ok(i),
            None => invalid(format!("unknown generator `{name}`")),
        }
    }

    /// Parity of the dual coordinate `x^i` (same as the generator's).
    pub fn odd(&self, i: usize) -> bool {
        self.odd[i]
    }

    pub fn odd_mask(&self) -> &[bool] {
        &self.odd
    }

    pub fn dual_degree(&self, i: usize) -> i32 {
        -self.generators[i].degree
    }

    pub fn default_polarization(&self) -> Polarization {
        Polarization(self.generators.iter().map(|g| g.side).collect())
    }

    /// `V ⊕ V` with generators suffixed `@1` and `@2`, used to realize
    /// cross contractions as ordinary contractions.
    pub fn doubled(&self) -> Arc<GradedSpace> {
        self.copies(2)
    }

    /// `V^{⊕n}` with generators suffixed `@1` … `@n`.
    pub fn copies(&self, n: usize) -> Arc<GradedSpace> {
        let mut decls = Vec::with_capacity(n * self.dim());
        for copy in 1..=n {
            for g in &self.generators {
                decls.push((
                    format!("{}@{copy}", g.name),
                    format!("{}@{copy}", g.dual_name),
                    g.degree,
                    g.side,
                ));
            }
        }
        GradedSpace::new(decls).expect("doubling preserves uniqueness")
    }
}
