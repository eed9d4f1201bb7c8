//! Compactly supported test fields.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graded_core::{Polarization, Side};

/// Polynomial bump profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    Zero,
    /// `amp · (4 (x-a)(b-x) / (b-a)²)³` on `[a, b]`; vanishes with two
    /// derivatives at both ends.
    Interior { a: f64, b: f64, amp: f64 },
    /// `amp · (1 - (x/b)²)³` on `[0, b]`; nonzero at the boundary point.
    Edge { b: f64, amp: f64 },
}

impl Profile {
    pub fn eval(&self, x: f64) -> (f64, f64) {
        match *self {
            Profile::Zero => (0.0, 0.0),
            Profile::Interior { a, b, amp } => {
                if x <= a || x >= b {
                    return (0.0, 0.0);
                }
                let w2 = (b - a) * (b - a);
                let s = 4.0 * (x - a) * (b - x) / w2;
                let ds = 4.0 * (a + b - 2.0 * x) / w2;
                (amp * s * s * s, amp * 3.0 * s * s * ds)
            }
            Profile::Edge { b, amp } => {
                if x >= b || x < 0.0 {
                    return (0.0, 0.0);
                }
                let s = 1.0 - (x / b) * (x / b);
                let ds = -2.0 * x / (b * b);
                (amp * s * s * s, amp * 3.0 * s * s * ds)
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    pub fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Profile::Zero => None,
            Profile::Interior { a, b, .. } => Some((a, b)),
            Profile::Edge { b, .. } => Some((0.0, b)),
        }
    }

    fn scaled(&self, s: f64) -> Profile {
        match *self {
            Profile::Zero => Profile::Zero,
            Profile::Interior { a, b, amp } => Profile::Interior { a, b, amp: amp * s },
            Profile::Edge { b, amp } => Profile::Edge { b, amp: amp * s },
        }
    }
}

/// A `V`-valued form `Σ_a e_a ⊗ (f⁰_a(x) + f¹_a(x) dx)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestField {
    pub zero_form: Vec<Profile>,
    pub one_form: Vec<Profile>,
}

impl TestField {
    pub fn zero(dim: usize) -> Self {
        TestField {
            zero_form: vec![Profile::Zero; dim],
            one_form: vec![Profile::Zero; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.zero_form.len()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.zero_form.len() != dim || self.one_form.len() != dim {
            return invalid(format!("test field has {} components, expected {dim}", self.zero_form.len()));
        }
        for p in self.zero_form.iter().chain(&self.one_form) {
            if let Some((a, b)) = p.support() {
                if !(a >= 0.0 && b > a && b.is_finite()) {
                    return invalid(format!("bad profile support [{a}, {b}]"));
                }
            }
        }
        Ok(())
    }

    /// Smallest interval containing every support.
    pub fn support(&self) -> Option<(f64, f64)> {
        self.zero_form
            .iter()
            .chain(&self.one_form)
            .filter_map(|p| p.support())
            .reduce(|(a, b), (c, d)| (a.min(c), b.max(d)))
    }

    /// Support endpoints, useful as quadrature breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .zero_form
            .iter()
            .chain(&self.one_form)
            .filter_map(|p| p.support())
            .flat_map(|(a, b)| [a, b])
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    pub fn scaled(&self, s: f64) -> TestField {
        TestField {
            zero_form: self.zero_form.iter().map(|p| p.scaled(s)).collect(),
            one_form: self.one_form.iter().map(|p| p.scaled(s)).collect(),
        }
    }

    /// Whether the boundary value at 0 lies in `L`.
    pub fn satisfies_boundary(&self, pol: &Polarization) -> bool {
        self.zero_form
            .iter()
            .enumerate()
            .all(|(a, p)| pol.side(a) == Side::L || p.value(0.0) == 0.0)
    }
}

/// Named field presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldPreset {
    /// One common bump shape on `[0.3, 0.6]`, away from the boundary.
    Separated,
    /// Distinct bumps per component, overlapping each other and reaching
    /// into the boundary layer.
    Overlapping,
    /// `L`-components nonzero at the boundary, `L'`-components vanishing there.
    Boundary,
}

impl FieldPreset {
    pub fn parse(s: &str) -> Result<FieldPreset> {
        match s {
            "separated" => Ok(FieldPreset::Separated),
            "overlapping" => Ok(FieldPreset::Overlapping),
            "boundary" => Ok(FieldPreset::Boundary),
            _ => invalid(format!("unknown field preset {s:?}")),
        }
    }

    pub fn build(self, pol: &Polarization) -> TestField {
        let n = pol.0.len();
        let amp = |a: usize, k: usize| {
            let v = 0.6 + 0.15 * ((a * 7 + k * 3) % 5) as f64;
            if (a + k) % 2 == 0 {
                v
            } else {
                -v
            }
        };
        let mut f = TestField::zero(n);
        for a in 0..n {
            match self {
                FieldPreset::Separated => {
                    f.zero_form[a] = Profile::Interior { a: 0.3, b: 0.6, amp: amp(a, 0) };
                    f.one_form[a] = Profile::Interior { a: 0.3, b: 0.6, amp: amp(a, 1) };
                }
                FieldPreset::Overlapping => {
                    let lo = 0.02 * (a % 3) as f64;
                    f.zero_form[a] = Profile::Interior { a: lo, b: 0.35 + 0.05 * (a % 2) as f64, amp: amp(a, 0) };
                    f.one_form[a] = Profile::Interior { a: 0.01 + lo, b: 0.3 + 0.04 * (a % 3) as f64, amp: amp(a, 1) };
                }
                FieldPreset::Boundary => {
                    f.zero_form[a] = match pol.side(a) {
                        Side::L => Profile::Edge { b: 0.3 + 0.05 * (a % 2) as f64, amp: amp(a, 0) },
                        Side::LPrime => Profile::Interior { a: 0.0, b: 0.32, amp: amp(a, 0) },
                    };
                    f.one_form[a] = Profile::Interior { a: 0.0, b: 0.3, amp: amp(a, 1) };
                }
            }
        }
        f
    }
}
