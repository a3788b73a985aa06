use std::f64::consts::PI;

use crate::error::{NlcsError, Result};
use crate::numkit::{norm, norm2, SymMatrix};
use crate::oracle::Potential;

/// Flat potential on `B_{R/2}` with one cosine well of depth `ε` and radius
/// `r = √((2π²+π)ε/L)`, quadratic growth `m(‖x‖−R/2)²` outside.
#[derive(Clone, Debug)]
pub struct OptInstance {
    pub center: Vec<f64>,
    pub l: f64,
    pub m: f64,
    pub r_big: f64,
    pub eps: f64,
    pub r: f64,
}

pub fn bump_radius(l: f64, eps: f64) -> f64 {
    ((2.0 * PI * PI + PI) * eps / l).sqrt()
}

pub fn build_opt_instance(center: Vec<f64>, l: f64, m: f64, r_big: f64, eps: f64) -> Result<OptInstance> {
    if !(l > 0.0 && m >= 0.0 && r_big > 0.0 && eps > 0.0) {
        return Err(NlcsError::domain("opt instance needs L > 0, m >= 0, R > 0, eps > 0"));
    }
    if l < 2.0 * m {
        return Err(NlcsError::domain(format!("L >= 2m violated (L={l}, m={m})")));
    }
    let r = bump_radius(l, eps);
    if norm(&center) + r > r_big / 2.0 {
        return Err(NlcsError::domain(format!(
            "bump B_r(center) with r={r} leaves B_(R/2) (|center|={})",
            norm(&center)
        )));
    }
    Ok(OptInstance { center, l, m, r_big, eps, r })
}

impl OptInstance {
    fn offset(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let y: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let s2 = norm2(&y);
        (y, s2)
    }
}

impl Potential for OptInstance {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let n = norm(x);
        let half = self.r_big / 2.0;
        if n > half {
            return self.m * (n - half) * (n - half);
        }
        let (_, s2) = self.offset(x);
        let r2 = self.r * self.r;
        if s2 < r2 {
            0.5 * self.eps * (PI * (s2 - r2) / r2).cos() - 0.5 * self.eps
        } else {
            0.0
        }
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let n = norm(x);
        let half = self.r_big / 2.0;
        grad.iter_mut().for_each(|g| *g = 0.0);
        if n > half {
            let c = 2.0 * self.m * (n - half) / n;
            for (g, v) in grad.iter_mut().zip(x) {
                *g = c * v;
            }
            return self.m * (n - half) * (n - half);
        }
        let (y, s2) = self.offset(x);
        let r2 = self.r * self.r;
        if s2 < r2 {
            let a = PI / r2;
            let th = a * (s2 - r2);
            let c = -self.eps * th.sin() * a;
            for (g, v) in grad.iter_mut().zip(&y) {
                *g = c * v;
            }
            0.5 * self.eps * th.cos() - 0.5 * self.eps
        } else {
            0.0
        }
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let d = x.len();
        let n = norm(x);
        let half = self.r_big / 2.0;
        if n > half {
            let t = half / n;
            return Ok(SymMatrix::from_fn(d, d, |i, j| {
                2.0 * self.m * ((if i == j { 1.0 - t } else { 0.0 }) + t * x[i] * x[j] / (n * n))
            }));
        }
        let (y, s2) = self.offset(x);
        let r2 = self.r * self.r;
        if s2 >= r2 {
            return Ok(SymMatrix::zeros(d, d));
        }
        let a = PI / r2;
        let th = a * (s2 - r2);
        Ok(SymMatrix::from_fn(d, d, |i, j| {
            -self.eps * (2.0 * a * a * th.cos() * y[i] * y[j] + if i == j { a * th.sin() } else { 0.0 })
        }))
    }

    fn has_hessian(&self) -> bool {
        true
    }
}
