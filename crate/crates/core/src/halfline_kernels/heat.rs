//! Scalar heat-kernel building blocks and the plateau cutoff.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Result};

/// Even plateau bump: 1 on `[-r1, r1]`, 0 outside `(-r2, r2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffFunction {
    pub r1: f64,
    pub r2: f64,
}

impl Default for CutoffFunction {
    fn default() -> Self {
        CutoffFunction { r1: 0.05, r2: 0.1 }
    }
}

fn glue_h(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let h = (-1.0 / s).exp();
    let s2 = s * s;
    (h, h / s2, h * (1.0 - 2.0 * s) / (s2 * s2))
}

impl CutoffFunction {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        if !(r1 > 0.0 && r2 > r1 && r2.is_finite()) {
            return invalid(format!("cutoff needs 0 < r1 < r2, got ({r1}, {r2})"));
        }
        Ok(CutoffFunction { r1, r2 })
    }

    /// Value and first two derivatives at `u`.
    pub fn eval(&self, u: f64) -> (f64, f64, f64) {
        let a = u.abs();
        if a <= self.r1 {
            return (1.0, 0.0, 0.0);
        }
        if a >= self.r2 {
            return (0.0, 0.0, 0.0);
        }
        let w = self.r2 - self.r1;
        let s = (a - self.r1) / w;
        // g(s) = p / (p + q), p = h(1 - s), q = h(s)
        let (p, p1, p2) = glue_h(1.0 - s);
        let (q, q1, q2) = glue_h(s);
        let (dp, dp2) = (-p1, p2);
        let n = p + q;
        let n1 = dp + q1;
        let n2 = dp2 + q2;
        let g = p / n;
        let g1 = (dp * n - p * n1) / (n * n);
        let g2 = (dp2 * n - p * n2) / (n * n) - 2.0 * g1 * n1 / n;
        let sg = u.signum();
        (g, sg * g1 / w, g2 / (w * w))
    }

    pub fn value(&self, u: f64) -> f64 {
        self.eval(u).0
    }

    /// True when the cutoff is locally constant at `u`.
    pub fn is_flat(&self, u: f64) -> bool {
        let a = u.abs();
        a <= self.r1 || a >= self.r2
    }
}

/// `g_t(u) = e^{-u²/4t} / √(4πt)`.
pub fn gaussian(t: f64, u: f64) -> f64 {
    (-u * u / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

/// `∫₀ᵀ ∂_u g_t(u) dt = -½ sgn(u) erfc(|u| / 2√T)`; `side` picks the branch at `u = 0`.
pub fn heat_a(t: f64, u: f64, side: i8) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let sg = if u != 0.0 { u.signum() } else { f64::from(side) };
    -0.5 * sg * erfc(u.abs() / (2.0 * t.sqrt()))
}

/// `∫₀ᵀ g_t(u) dt`.
pub fn heat_b(t: f64, u: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let a = u.abs();
    (t / PI).sqrt() * (-u * u / (4.0 * t)).exp() - 0.5 * a * erfc(a / (2.0 * t.sqrt()))
}
