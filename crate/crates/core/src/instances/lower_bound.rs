use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{NlcsError, Result};
use crate::numkit::{integrate, log_ball_volume, log_sphere_area, norm, q_mol, RadialShell, ShellMode, SymMatrix};
use crate::oracle::Potential;

/// Parameters of the plateau family. `d >= 1` is accepted so that the
/// quadrature checks can run in the plane.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LowerBoundParams {
    pub d: usize,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub eps: f64,
}

impl LowerBoundParams {
    pub fn new(d: usize, l: f64, m: f64, eps: f64) -> Result<Self> {
        let p = Self { d, l, m, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(NlcsError::Construction("d >= 1".into()));
        }
        if !(self.l > 0.0 && self.m > 0.0 && self.l.is_finite() && self.m.is_finite()) {
            return Err(NlcsError::Construction("L > 0 and M > 0".into()));
        }
        if !(self.eps > 0.0 && self.eps < 1.0 / 200.0) {
            return Err(NlcsError::Construction(format!("0 < eps < 1/200 (eps = {})", self.eps)));
        }
        if self.l * self.m < self.d as f64 {
            return Err(NlcsError::Construction(format!("L*M >= d ({} < {})", self.l * self.m, self.d)));
        }
        if 4.0 * self.r2() > self.r() {
            return Err(NlcsError::Construction(format!("4*r2 <= R ({} > {})", 4.0 * self.r2(), self.r())));
        }
        Ok(())
    }

    /// `R = √(M/ε)`.
    pub fn r(&self) -> f64 {
        (self.m / self.eps).sqrt()
    }

    pub fn r1(&self) -> f64 {
        let d = self.d as f64;
        ((d / self.l) * (self.l * self.m / (d * self.eps)).ln()).sqrt()
    }

    pub fn r2(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.r1()
    }

    /// Plateau level `log vol(B_{3R}) + log(1/ε)`.
    pub fn h1(&self) -> f64 {
        log_ball_volume(self.d, 3.0 * self.r()).expect("validated radius") - self.eps.ln()
    }

    /// Gaussian core `d‖x‖²/(2M) + (d/2)log(2πM/d)`.
    pub fn h0(&self, x: &[f64]) -> f64 {
        let d = self.d as f64;
        d * crate::numkit::norm2(x) / (2.0 * self.m) + 0.5 * d * (2.0 * PI * self.m / d).ln()
    }
}

/// Base distribution: Gaussian core, plateau `h₁` on `R/2 ≤ ‖x‖ ≤ R`, Gaussian again beyond `2R`.
#[derive(Clone, Debug)]
pub struct BaseInstance {
    pub params: LowerBoundParams,
    inner_shell: RadialShell,
    outer_shell: RadialShell,
    h1: f64,
}

pub fn build_base(params: LowerBoundParams) -> Result<BaseInstance> {
    params.validate()?;
    let r = params.r();
    let zero = vec![0.0; params.d];
    Ok(BaseInstance {
        params,
        inner_shell: RadialShell::new(zero.clone(), r * r / 16.0, r * r / 4.0, ShellMode::Quadratic)?,
        outer_shell: RadialShell::new(zero, r * r, 4.0 * r * r, ShellMode::Quadratic)?,
        h1: params.h1(),
    })
}

impl BaseInstance {
    pub fn h1(&self) -> f64 {
        self.h1
    }

    /// Radial profile `f₀(ρ)`.
    pub fn radial(&self, rho: f64) -> f64 {
        let r2 = self.params.r() * self.params.r();
        let s = rho * rho;
        let g1 = q_mol((s - r2 / 16.0) / (r2 / 4.0 - r2 / 16.0));
        let g2 = q_mol((s - r2) / (3.0 * r2));
        let d = self.params.d as f64;
        let h0 = d * s / (2.0 * self.params.m) + 0.5 * d * (2.0 * PI * self.params.m / d).ln();
        let gm = g1 * (1.0 - g2);
        gm * self.h1 + (1.0 - gm) * h0
    }

    fn parts(&self, x: &[f64], grads: bool) -> Result<(f64, Vec<f64>, Vec<f64>, f64, f64, f64)> {
        let d = x.len();
        let mut dg1 = vec![0.0; if grads { d } else { 0 }];
        let mut dg2 = vec![0.0; if grads { d } else { 0 }];
        let (g1, g2) = if grads {
            (self.inner_shell.value_grad(x, &mut dg1)?, self.outer_shell.value_grad(x, &mut dg2)?)
        } else {
            (self.inner_shell.value(x), self.outer_shell.value(x))
        };
        let h0 = self.params.h0(x);
        let gm = g1 * (1.0 - g2);
        Ok((h0, dg1, dg2, g1, g2, gm * self.h1 + (1.0 - gm) * h0))
    }
}

impl Potential for BaseInstance {
    fn dim(&self) -> usize {
        self.params.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.radial(norm(x))
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (h0, dg1, dg2, g1, g2, f) = self.parts(x, true).expect("quadratic shells are smooth");
        let dm = self.params.d as f64 / self.params.m;
        let gm = g1 * (1.0 - g2);
        for i in 0..x.len() {
            let dgm = dg1[i] * (1.0 - g2) - g1 * dg2[i];
            grad[i] = dm * x[i] * (1.0 - gm) + dgm * (self.h1 - h0);
        }
        f
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let d = x.len();
        let (h0, dg1, dg2, g1, g2, _) = self.parts(x, true)?;
        let hg1 = self.inner_shell.hess(x)?;
        let hg2 = self.outer_shell.hess(x)?;
        let dm = self.params.d as f64 / self.params.m;
        let gm = g1 * (1.0 - g2);
        let dgm: Vec<f64> = (0..d).map(|i| dg1[i] * (1.0 - g2) - g1 * dg2[i]).collect();
        let mut h = SymMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let hgm = hg1[(i, j)] * (1.0 - g2) - dg1[i] * dg2[j] - dg2[i] * dg1[j] - g1 * hg2[(i, j)];
                let id = if i == j { dm } else { 0.0 };
                h[(i, j)] = id * (1.0 - gm) + hgm * (self.h1 - h0) - dgm[i] * dm * x[j] - dm * x[i] * dgm[j];
            }
        }
        Ok(h)
    }

    fn has_hessian(&self) -> bool {
        true
    }
}

/// Base instance with an `ε`-mass bump carved around `v`.
#[derive(Clone, Debug)]
pub struct PerturbedInstance {
    pub base: BaseInstance,
    pub v: Vec<f64>,
    pub gamma: f64,
    h2: f64,
    shell: RadialShell,
}

pub fn build_perturbed(base: BaseInstance, v: Vec<f64>, gamma: f64) -> Result<PerturbedInstance> {
    check_center(&base, &v)?;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(NlcsError::domain(format!("gamma must be positive, got {gamma}")));
    }
    let (r1, r2) = (base.params.r1(), base.params.r2());
    let shell = RadialShell::new(v.clone(), r1 * r1, r2 * r2, ShellMode::Quadratic)?;
    Ok(PerturbedInstance { h2: base.h1() - gamma, base, v, gamma, shell })
}

fn check_center(base: &BaseInstance, v: &[f64]) -> Result<()> {
    let want = 0.75 * base.params.r();
    if v.len() != base.params.d || (norm(v) - want).abs() > 1e-9 * want {
        return Err(NlcsError::domain(format!("perturbation center must have norm 3R/4 = {want}, got {}", norm(v))));
    }
    Ok(())
}

impl PerturbedInstance {
    pub fn h2(&self) -> f64 {
        self.h2
    }
}

impl Potential for PerturbedInstance {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let g = self.shell.value(x);
        if g == 1.0 {
            return self.base.value(x);
        }
        g * self.base.value(x) + (1.0 - g) * self.h2
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let f0 = self.base.value_grad(x, grad);
        let mut dg = vec![0.0; x.len()];
        let g = self.shell.value_grad(x, &mut dg).expect("quadratic shells are smooth");
        for i in 0..x.len() {
            grad[i] = g * grad[i] + dg[i] * (f0 - self.h2);
        }
        g * f0 + (1.0 - g) * self.h2
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let d = x.len();
        let mut df = vec![0.0; d];
        let f0 = self.base.value_grad(x, &mut df);
        let hf = self.base.hessian(x)?;
        let mut dg = vec![0.0; d];
        let g = self.shell.value_grad(x, &mut dg)?;
        let hg = self.shell.hess(x)?;
        Ok(SymMatrix::from_fn(d, d, |i, j| {
            g * hf[(i, j)] + dg[i] * df[j] + df[i] * dg[j] + hg[(i, j)] * (f0 - self.h2)
        }))
    }

    fn has_hessian(&self) -> bool {
        true
    }
}

/// Natural log of `∫_{B_{r₂}(v)} (e^{−f_v} − e^{−h₁})` for a given `γ`.
///
/// Inside `B_{r₂}(v)` the base potential is the plateau `h₁`, so the integrand
/// depends on `ρ = ‖x − v‖` only.
pub fn perturbation_integral(params: &LowerBoundParams, gamma: f64) -> Result<f64> {
    let d = params.d;
    let (r1, r2) = (params.r1(), params.r2());
    let w = r2 * r2 - r1 * r1;
    let df = d as f64;
    // ∫ρ^{d−1}(e^{γ(1−g)} − 1) = e^γ ∫ρ^{d−1}(e^{−γg} − e^{−γ})
    let em = (-gamma).exp();
    let core = r1.powi(d as i32) / df * (-(-gamma).exp_m1());
    let scale = r2.powi(d as i32 - 1).max(f64::MIN_POSITIVE);
    let rim = integrate(
        |rho| (rho.powi(d as i32 - 1) / scale) * ((-gamma * q_mol((rho * rho - r1 * r1) / w)).exp() - em),
        r1,
        r2,
        0.0,
        1e-13,
    )?;
    let inner = core + rim.value * scale;
    if !(inner > 0.0) {
        return Err(NlcsError::Numeric(format!("perturbation integral is not positive at gamma={gamma}")));
    }
    Ok(-params.h1() + log_sphere_area(d, 1.0)? + gamma + inner.ln())
}

/// Finds `γ` with `∫_{B_{r₂}(v)} (e^{−f_v} − e^{−h₁}) = 9ε` to relative accuracy `tol`.
pub fn solve_gamma(base: &BaseInstance, v: &[f64], tol: f64) -> Result<f64> {
    check_center(base, v)?;
    let p = &base.params;
    let target = (9.0 * p.eps).ln();
    let df = p.d as f64;
    let f = |g: f64| perturbation_integral(p, g).map(|l| l - target);
    let mut lo = (9f64.ln() + df * (3.0 * p.r() / p.r2()).ln()).max(1e-12);
    let mut hi = 18f64.ln() + df * (3.0 * p.r() / p.r1()).ln();
    if hi <= lo {
        hi = 2.0 * lo;
    }
    let mut grow = 0;
    while f(lo)? > 0.0 {
        lo *= 0.5;
        grow += 1;
        if grow > 60 {
            return Err(NlcsError::Numeric("could not bracket gamma from below".into()));
        }
    }
    while f(hi)? < 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 120 {
            return Err(NlcsError::Numeric("could not bracket gamma from above".into()));
        }
    }
    let ltol = (1.0 + tol).ln() * 0.25;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let val = f(mid)?;
        if val.abs() <= ltol {
            return Ok(mid);
        }
        if val < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    if f(mid)?.abs() <= (1.0 + tol).ln() {
        Ok(mid)
    } else {
        Err(NlcsError::Convergence { best: mid, iterations: 400 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{fd_gradient, fd_hessian};

    fn params() -> LowerBoundParams {
        LowerBoundParams::new(2, 8.0, 1.0, 0.004).unwrap()
    }

    #[test]
    fn derived_constants() {
        let p = params();
        assert!((p.r() - 250f64.sqrt()).abs() < 1e-12);
        assert!((p.r2() / p.r1() - 2f64.sqrt()).abs() < 1e-14);
        let b = build_base(p).unwrap();
        assert!((b.value(&[0.0, 0.0]) - (PI).ln()).abs() < 1e-12);
        let x = [0.75 * p.r(), 0.0];
        assert_eq!(b.value(&x), p.h1());
        let x = [0.0, 0.6 * p.r()];
        assert_eq!(b.value(&x), p.h1());
    }

    #[test]
    fn invariant_violations_named() {
        let e = LowerBoundParams::new(2, 4.0, 2.0, 0.5).unwrap_err();
        assert!(e.to_string().contains("eps"));
        let e = LowerBoundParams::new(4, 1.0, 1.0, 0.004).unwrap_err();
        assert!(e.to_string().contains("L*M"));
    }

    #[test]
    fn base_derivatives() {
        let b = build_base(params()).unwrap();
        let r = b.params.r();
        for k in 0..60 {
            let rho = 2.2 * r * k as f64 / 60.0;
            let x = [rho * (k as f64).cos(), rho * (k as f64).sin()];
            let g = b.grad(&x);
            let gf = fd_gradient(|y| b.value(y), &x, None).unwrap();
            let h = b.hessian(&x).unwrap();
            let hf = fd_hessian(|y| b.value(y), &x, Some(1e-3)).unwrap();
            for i in 0..2 {
                assert!((g[i] - gf[i]).abs() < 1e-4 * (1.0 + g[i].abs()), "grad at {rho}");
                for j in 0..2 {
                    assert!((h[(i, j)] - hf[(i, j)]).abs() < 1e-3 * (1.0 + h[(i, j)].abs()), "hess at {rho}");
                }
            }
        }
    }

    #[test]
    fn perturbed_locality_and_center() {
        let p = params();
        let b = build_base(p).unwrap();
        let v = vec![0.75 * p.r(), 0.0];
        let gamma = solve_gamma(&b, &v, 1e-6).unwrap();
        let pv = build_perturbed(b.clone(), v.clone(), gamma).unwrap();
        assert!((pv.value(&v) - (p.h1() - gamma)).abs() < 1e-12);
        let far = [v[0], 1.01 * p.r2()];
        assert_eq!(pv.value(&far), b.value(&far));
        let x = [v[0] + 0.8 * p.r2(), 0.5 * p.r1()];
        let g = pv.grad(&x);
        let gf = fd_gradient(|y| pv.value(y), &x, None).unwrap();
        for i in 0..2 {
            assert!((g[i] - gf[i]).abs() < 1e-4 * (1.0 + g[i].abs()));
        }
        assert!(build_perturbed(b, vec![p.r(), 0.0], gamma).is_err());
    }

    #[test]
    fn gamma_bracketed() {
        for d in [2usize, 5] {
            let p = LowerBoundParams::new(d, 8.0 * d as f64, 1.0, 0.004).unwrap();
            let b = build_base(p).unwrap();
            let mut v = vec![0.0; d];
            v[0] = 0.75 * p.r();
            let g = solve_gamma(&b, &v, 1e-6).unwrap();
            let lg = perturbation_integral(&p, g).unwrap();
            assert!(((lg.exp() - 9.0 * p.eps) / (9.0 * p.eps)).abs() <= 1e-6);
            assert!(perturbation_integral(&p, g / 2.0).unwrap() < (9.0 * p.eps).ln());
            assert!(perturbation_integral(&p, 2.0 * g).unwrap() > (9.0 * p.eps).ln());
        }
    }
}
