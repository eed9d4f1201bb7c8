use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Adaptive rule identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    /// Globally adaptive 10/21-point Gauss-Kronrod bisection.
    GaussKronrod21,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rule: QuadratureRule,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Step for central finite differences.
    pub fd_step: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rule: QuadratureRule::GaussKronrod21,
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 400,
            fd_step: 1e-4,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return invalid("quadrature tolerances must be positive");
        }
        if self.max_subdivisions == 0 || !(self.fd_step > 0.0) {
            return invalid("quadrature limits must be positive");
        }
        Ok(())
    }

    pub fn with_tol(self, abs_tol: f64) -> Self {
        QuadratureSpec {
            abs_tol,
            rel_tol: abs_tol,
            ..self
        }
    }
}

/// Value and error estimate of an integral.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077589000513920,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

fn gk21(f: &mut dyn FnMut(f64, &mut [f64]), a: f64, b: f64, dim: usize, buf: &mut [f64]) -> (Vec<f64>, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut rk = vec![0.0; dim];
    let mut rg = vec![0.0; dim];
    f(c, buf);
    for k in 0..dim {
        rk[k] = buf[k] * WGK[10];
    }
    for j in 0..10 {
        let dx = h * XGK[j];
        f(c - dx, buf);
        let lo: Vec<f64> = buf.to_vec();
        f(c + dx, buf);
        for k in 0..dim {
            let s = lo[k] + buf[k];
            rk[k] += WGK[j] * s;
            if j % 2 == 1 {
                rg[k] += WG[j / 2] * s;
            }
        }
    }
    let mut err = 0.0_f64;
    for k in 0..dim {
        err = err.max(((rk[k] - rg[k]) * h).abs());
        rk[k] *= h;
    }
    (rk, err)
}

struct Seg {
    err: f64,
    a: f64,
    b: f64,
    val: Vec<f64>,
}

impl PartialEq for Seg {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Seg {}

impl PartialOrd for Seg {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Seg {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Vector-valued integral; the error is the largest componentwise estimate.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VecIntegral {
    pub values: Vec<f64>,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Adaptive integration of an `R^dim`-valued integrand over
/// `[points[0], points[last]]`, seeded with the given breakpoints. When the
/// subdivision budget runs out the best estimate is returned with
/// `converged = false`.
pub fn integrate_vec(
    f: &mut dyn FnMut(f64, &mut [f64]),
    dim: usize,
    points: &[f64],
    spec: &QuadratureSpec,
) -> VecIntegral {
    let mut pts: Vec<f64> = points.iter().copied().filter(|p| p.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut buf = vec![0.0; dim];
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for w in pts.windows(2) {
        if w[1] - w[0] <= 0.0 {
            continue;
        }
        let (v, e) = gk21(f, w[0], w[1], dim, &mut buf);
        evals += 21;
        heap.push(Seg { err: e, a: w[0], b: w[1], val: v });
    }
    let totals = |heap: &BinaryHeap<Seg>| -> (Vec<f64>, f64) {
        let mut t = vec![0.0; dim];
        let mut e = 0.0;
        for s in heap.iter() {
            for k in 0..dim {
                t[k] += s.val[k];
            }
            e += s.err;
        }
        (t, e)
    };
    let target = |t: &[f64]| {
        let m = t.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        spec.abs_tol.max(spec.rel_tol * m)
    };
    let (mut total, mut err) = totals(&heap);
    let mut splits = 0;
    let mut converged = true;
    while err > target(&total) {
        if splits >= spec.max_subdivisions {
            converged = false;
            break;
        }
        let Some(s) = heap.pop() else { break };
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b || s.err == 0.0 {
            heap.push(Seg { err: 0.0, ..s });
            let (t, e) = totals(&heap);
            total = t;
            err = e;
            if heap.iter().all(|s| s.err == 0.0) {
                break;
            }
            continue;
        }
        let (v1, e1) = gk21(f, s.a, m, dim, &mut buf);
        let (v2, e2) = gk21(f, m, s.b, dim, &mut buf);
        evals += 42;
        for k in 0..dim {
            total[k] += v1[k] + v2[k] - s.val[k];
        }
        err += e1 + e2 - s.err;
        heap.push(Seg { err: e1, a: s.a, b: m, val: v1 });
        heap.push(Seg { err: e2, a: m, b: s.b, val: v2 });
        splits += 1;
        if splits % 64 == 0 {
            let (t, e) = totals(&heap);
            total = t;
            err = e;
        }
    }
    let (total, err) = totals(&heap);
    VecIntegral {
        values: total,
        error: err.max(0.0),
        evaluations: evals,
        converged,
    }
}

/// Integrates over `[points[0], points[last]]`, starting from the given
/// breakpoints.
pub fn integrate_with_breaks(
    f: &mut dyn FnMut(f64) -> f64,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<Integral> {
    let mut g = |x: f64, out: &mut [f64]| out[0] = f(x);
    let r = integrate_vec(&mut g, 1, points, spec);
    let value = r.values.first().copied().unwrap_or(0.0);
    if !r.converged {
        return Err(Error::Quadrature {
            achieved: r.error,
            requested: spec.abs_tol.max(spec.rel_tol * value.abs()),
        });
    }
    Ok(Integral {
        value,
        error: r.error,
        evaluations: r.evaluations,
    })
}

pub fn integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    integrate_with_breaks(f, &[a, b], spec)
}

/// Central difference with one Richardson step, `O(h⁴)`.
pub fn derivative(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    let d2 = (f(x + 2.0 * h) - f(x - 2.0 * h)) / (4.0 * h);
    (4.0 * d1 - d2) / 3.0
}
