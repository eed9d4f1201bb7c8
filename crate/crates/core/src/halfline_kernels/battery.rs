//! Invariant battery for the free kernels, shared by the command line and tests.

use serde::Serialize;

use super::*;

#[derive(Clone, Debug, Serialize)]
pub struct BatteryConfig {
    pub lambdas: Vec<f64>,
    pub xs: Vec<f64>,
    pub eps_sequence: Vec<f64>,
    /// Tolerance for pointwise identities.
    pub tol: f64,
    /// Tolerance for finite-difference identities.
    pub fd_tol: f64,
    pub fd_step: f64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            lambdas: vec![0.1, 1.0, 10.0],
            xs: vec![0.0, 0.3, 1.0, 2.5],
            eps_sequence: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            tol: 1e-8,
            fd_tol: 1e-5,
            fd_step: 2e-5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemStatus {
    Pass,
    /// Above the requested tolerance but within the numerical noise floor.
    QuadratureLimited,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportItem {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub noise: f64,
    pub path: EvalPath,
    pub status: ItemStatus,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct NumericReport {
    pub cutoff: Option<CutoffFunction>,
    pub items: Vec<ReportItem>,
}

impl NumericReport {
    pub fn pass(&self) -> bool {
        self.items.iter().all(|i| i.status != ItemStatus::Fail)
    }

    pub fn failures(&self) -> Vec<&ReportItem> {
        self.items.iter().filter(|i| i.status == ItemStatus::Fail).collect()
    }

    pub fn worst(&self, prefix: &str) -> f64 {
        self.items
            .iter()
            .filter(|i| i.name.starts_with(prefix))
            .map(|i| i.residual)
            .fold(0.0, f64::max)
    }

    pub fn record(&mut self, name: String, residual: f64, tol: f64, noise: f64, path: EvalPath) {
        let noise = noise + 1e-14;
        let status = if residual <= tol {
            ItemStatus::Pass
        } else if residual <= 10.0 * noise {
            ItemStatus::QuadratureLimited
        } else {
            ItemStatus::Fail
        };
        self.items.push(ReportItem {
            name,
            residual,
            tol,
            noise,
            path,
            status,
        });
    }

    pub fn record_err(&mut self, name: String, e: Error) {
        let status = match e {
            Error::Quadrature { .. } => ItemStatus::QuadratureLimited,
            _ => ItemStatus::Fail,
        };
        self.items.push(ReportItem {
            name: format!("{name}: {e}"),
            residual: f64::INFINITY,
            tol: 0.0,
            noise: 0.0,
            path: EvalPath::Quadrature,
            status,
        });
    }
}

fn expect(entries: &[(Channel, Form, f64)]) -> FieldKernelValue {
    let mut v = FieldKernelValue::new(0.0, 0.0);
    for (c, f, s) in entries {
        v.coeffs[*c as usize][*f as usize] = *s;
    }
    v
}

fn dist(a: &FieldKernelValue, b: &FieldKernelValue) -> f64 {
    a.sub(b).max_abs()
}

/// Half-line checks: corner values, branch jump, the `ε → 0` limits and
/// the exterior-derivative identities.
pub fn halfline_battery(k: &Kernels, cfg: &BatteryConfig) -> NumericReport {
    let mut rep = NumericReport {
        cutoff: Some(*k.cutoff()),
        items: Vec::new(),
    };
    macro_rules! attempt {
        ($name:expr, $body:expr) => {
            match (|| -> Result<(f64, f64, EvalPath)> { $body })() {
                Ok((r, n, p)) => rep.record($name, r, cfg.tol, n, p),
                Err(e) => rep.record_err($name, e),
            }
        };
    }
    macro_rules! attempt_fd {
        ($name:expr, $body:expr) => {
            match (|| -> Result<(f64, f64, EvalPath)> { $body })() {
                Ok((r, n, p)) => rep.record($name, r, cfg.fd_tol, n, p),
                Err(e) => rep.record_err($name, e),
            }
        };
    }
    for &lam in &cfg.lambdas {
        attempt!(format!("corner C1 Λ={lam}"), {
            let v = k.extended_propagator(lam, Branch::C1, 0.0, 0.0)?;
            Ok((dist(&v, &expect(&[(Channel::Minus0, Form::One, -0.5)])), v.error, v.path))
        });
        attempt!(format!("corner C2 Λ={lam}"), {
            let v = k.extended_propagator(lam, Branch::C2, 0.0, 0.0)?;
            Ok((dist(&v, &expect(&[(Channel::Plus0, Form::One, 0.5)])), v.error, v.path))
        });
        for &x in &cfg.xs {
            attempt!(format!("branch jump x={x} Λ={lam}"), {
                let a = k.extended_propagator(lam, Branch::C1, x, x)?;
                let b = k.extended_propagator(lam, Branch::C2, x, x)?;
                let want = expect(&[(Channel::Plus0, Form::One, -0.5), (Channel::Minus0, Form::One, -0.5)]);
                Ok((dist(&a.sub(&b), &want), a.error + b.error, a.path.max(b.path)))
            });
        }
        for &eps in &cfg.eps_sequence {
            if eps >= lam {
                continue;
            }
            attempt!(format!("corner vanishes ε={eps} Λ={lam}"), {
                let v = k.propagator(eps, lam, 0.0, 0.0)?;
                Ok((v.max_abs(), v.error, v.path))
            });
        }
        limit_checks(k, cfg, lam, &mut rep);
    }
    // exterior-derivative identities at interior points, including glue bands
    let pts = [(0.3, 0.37), (0.06, 0.13), (0.02, 0.05), (1.0, 1.08), (0.5, 0.5), (0.12, 0.2)];
    let h = cfg.fd_step;
    for &lam in &cfg.lambdas {
        let eps = lam / 10.0;
        for &(x, y) in &pts {
            attempt_fd!(format!("dP = K_Λ - K_ε at ({x},{y}) ε={eps} Λ={lam}"), {
                let dp = exterior_derivative(&|a, b| k.propagator(eps, lam, a, b), x, y, h)?;
                let kd = k.bv_kernel(lam, x, y)?.sub(&k.bv_kernel(eps, x, y)?);
                Ok((dist(&dp, &kd), dp.error + kd.error, dp.path.max(kd.path)))
            });
            attempt_fd!(format!("dK = 0 at ({x},{y}) t={lam}"), {
                let dk = exterior_derivative(&|a, b| k.bv_kernel(lam, a, b), x, y, h)?;
                let r = dk.coeffs.iter().map(|row| row[Form::DxDy as usize].abs()).fold(0.0, f64::max);
                Ok((r, dk.error, dk.path))
            });
            if x != y {
                let br = Branch::of(x, y);
                attempt_fd!(format!("K_Λ = dP̄ at ({x},{y}) Λ={lam}"), {
                    let dp = exterior_derivative(&|a, b| k.extended_propagator(lam, br, a, b), x, y, h)?;
                    let kd = k.bv_kernel(lam, x, y)?;
                    Ok((dist(&dp, &kd), dp.error + kd.error, dp.path.max(kd.path)))
                });
            }
        }
    }
    rep
}

fn richardson(seq: &[(f64, f64)]) -> f64 {
    let n = seq.len();
    if n < 2 {
        return seq.last().map(|p| p.1).unwrap_or(0.0);
    }
    let (e0, a0) = seq[n - 2];
    let (e1, a1) = seq[n - 1];
    let r = (e1 / e0).sqrt();
    (a1 - r * a0) / (1.0 - r)
}

fn limit_checks(k: &Kernels, cfg: &BatteryConfig, lam: f64, rep: &mut NumericReport) {
    let eps: Vec<f64> = cfg.eps_sequence.iter().copied().filter(|e| *e < lam).collect();
    if eps.is_empty() {
        return;
    }
    let off = [(0.3, 0.35), (1.0, 0.9), (0.0, 0.04), (2.5, 2.45)];
    let mut run = |name: String, x: f64, y: f64, target: &dyn Fn() -> Result<FieldKernelValue>| {
        let res = (|| -> Result<(f64, f64, EvalPath)> {
            let t = target()?;
            let mut worst = 0.0_f64;
            let mut noise = t.error;
            for c in Channel::ALL {
                let seq: Vec<(f64, f64)> = eps
                    .iter()
                    .map(|&e| Ok((e, k.propagator(e, lam, x, y)?.coeff(c, Form::One))))
                    .collect::<Result<_>>()?;
                let last = seq.last().unwrap().1;
                let extrap = richardson(&seq);
                let want = t.coeff(c, Form::One);
                worst = worst.max((last - want).abs()).max((extrap - want).abs());
                noise += 1e-12;
            }
            Ok((worst, noise, t.path))
        })();
        match res {
            Ok((r, n, p)) => rep.record(name, r, cfg.tol, n, p),
            Err(e) => rep.record_err(name, e),
        }
    };
    for (x, y) in off {
        run(format!("limit off-diagonal ({x},{y}) Λ={lam}"), x, y, &|| {
            k.extended_propagator(lam, Branch::of(x, y), x, y)
        });
    }
    for &x in cfg.xs.iter().filter(|x| **x > 0.0) {
        run(format!("limit diagonal average x={x} Λ={lam}"), x, x, &|| {
            let a = k.extended_propagator(lam, Branch::C1, x, x)?;
            let b = k.extended_propagator(lam, Branch::C2, x, x)?;
            Ok(a.add(&b).scaled(0.5))
        });
    }
    run(format!("limit corner Λ={lam}"), 0.0, 0.0, &|| Ok(FieldKernelValue::new(0.0, 0.0)));
}

/// Interval checks: overlap agreement, reduction to the free-line kernel and
/// the transported corner identities at both endpoints.
pub fn interval_battery(ik: &IntervalKernels, cfg: &BatteryConfig) -> NumericReport {
    let k = &ik.kernels;
    let b = &ik.basis;
    let mut rep = NumericReport {
        cutoff: Some(*k.cutoff()),
        items: Vec::new(),
    };
    let kfull = b.k();
    for &lam in &cfg.lambdas {
        let grid: Vec<f64> = (0..=6).map(|i| 0.2 + 0.1 * f64::from(i)).collect();
        let res = (|| -> Result<(f64, f64)> {
            let mut worst = 0.0_f64;
            let mut noise = 0.0;
            for &x in &grid {
                for &y in &grid {
                    let v = ik.glued_propagator(0.0, lam, x, y, Branch::of(x, y))?;
                    let side = if x <= y { -1 } else { 1 };
                    let psi = k.psi(0.0, lam, x - y, side)?;
                    let m = b.matrix(&v, Form::One);
                    let want: Vec<Vec<f64>> = kfull.iter().map(|r| r.iter().map(|e| -0.5 * psi.value * e).collect()).collect();
                    worst = worst.max(matrix_distance(&m, &want));
                    noise += v.error + psi.error;
                }
            }
            Ok((worst, noise))
        })();
        match res {
            Ok((r, n)) => rep.record(format!("interval overlap reduces to free kernel Λ={lam}"), r, cfg.tol, n, EvalPath::ClosedForm),
            Err(e) => rep.record_err(format!("interval overlap Λ={lam}"), e),
        }
        let corners: [(&str, f64, Branch, Channel, f64); 4] = [
            ("interval corner (0,0) C1", 0.0, Branch::C1, Channel::Minus0, -0.5),
            ("interval corner (0,0) C2", 0.0, Branch::C2, Channel::Plus0, 0.5),
            ("interval corner (1,1) C1", 1.0, Branch::C1, Channel::Plus1, -0.5),
            ("interval corner (1,1) C2", 1.0, Branch::C2, Channel::Minus1, 0.5),
        ];
        for (name, p, br, ch, s) in corners {
            match ik.glued_propagator(0.0, lam, p, p, br) {
                Ok(v) => {
                    let r = dist(&v, &expect(&[(ch, Form::One, s)]));
                    rep.record(format!("{name} Λ={lam}"), r, cfg.tol, v.error, v.path)
                }
                Err(e) => rep.record_err(format!("{name} Λ={lam}"), e),
            }
        }
    }
    rep
}
