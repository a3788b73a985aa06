//! The surrogate potential `f_π`: `f_μ` softly capped between `h₁` and `h₂`
//! inside `B_{2R}`, blended into a wide Gaussian tail beyond `R`.

use std::f64::consts::PI;

use serde::Serialize;

use super::grid::GridEstimates;
use crate::error::{NlcsError, Result};
use crate::numkit::{log_ball_volume, norm2, q_mol, q_mol_d1};
use crate::oracle::Potential;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TruncationConstants {
    pub d: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub h1: f64,
    pub h2: f64,
    pub f_hat_star: f64,
    #[serde(rename = "log_Z_hat")]
    pub log_z_hat: f64,
    pub eps: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

impl TruncationConstants {
    /// `f_γ(x) = εd‖x‖²/(2M) + (d/2)log(2πM/(dε))`.
    pub fn f_gamma(&self, x: &[f64]) -> f64 {
        let d = self.d as f64;
        self.eps * d * norm2(x) / (2.0 * self.m) + 0.5 * d * (2.0 * PI * self.m / (d * self.eps)).ln()
    }

    /// Poincaré constant of the Gaussian `e^{−f_γ}`.
    pub fn gaussian_poincare(&self) -> f64 {
        2.0 * self.d as f64 * self.eps / self.m
    }
}

#[derive(Clone, Debug)]
pub struct TruncatedPotential<O> {
    oracle: O,
    pub consts: TruncationConstants,
}

pub fn build_truncated<O: Potential>(oracle: O, est: &GridEstimates, l: f64, m: f64, eps: f64) -> Result<TruncatedPotential<O>> {
    let d = oracle.dim();
    if !(est.f_hat_star.is_finite() && est.log_z_hat.is_finite()) {
        return Err(NlcsError::Numeric("grid estimates must be finite".into()));
    }
    let df = d as f64;
    let r = (32.0 * m / eps).sqrt();
    let h1 = est.f_hat_star + log_ball_volume(d, 2.0 * r)? + 0.5 * df * l.ln() + (4.0 / eps).ln();
    let h2 = h1 + 0.5 * df * (l * m / (df * eps)).ln();
    if !(h2 > h1) {
        return Err(NlcsError::domain("truncation band is empty: need L*M > d*eps"));
    }
    Ok(TruncatedPotential {
        oracle,
        consts: TruncationConstants { d, r, h1, h2, f_hat_star: est.f_hat_star, log_z_hat: est.log_z_hat, eps, m, l },
    })
}

impl<O: Potential> TruncatedPotential<O> {
    /// Same constants on top of a different oracle, e.g. a per-worker counter.
    pub fn rebind<O2: Potential>(&self, oracle: O2) -> TruncatedPotential<O2> {
        TruncatedPotential { oracle, consts: self.consts }
    }

    pub fn oracle(&self) -> &O {
        &self.oracle
    }

    pub fn f_gamma(&self, x: &[f64]) -> f64 {
        self.consts.f_gamma(x)
    }

    /// Soft cap `f̄ = 𝔤f + (1−𝔤)h₂` and its gradient factor `q(z) + z q'(z)`.
    #[inline]
    fn cap(&self, fm: f64) -> (f64, f64) {
        let c = &self.consts;
        let w = c.h2 - c.h1;
        let z = (c.h2 - fm) / w;
        let g = q_mol(z);
        if g == 0.0 {
            (c.h2, 0.0)
        } else if g == 1.0 {
            (fm, 1.0)
        } else {
            (g * fm + (1.0 - g) * c.h2, g + z * q_mol_d1(z))
        }
    }
}

impl<O: Potential> Potential for TruncatedPotential<O> {
    fn dim(&self) -> usize {
        self.consts.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        let c = &self.consts;
        let n2 = norm2(x);
        let r2 = c.r * c.r;
        let tail = || c.f_gamma(x) - c.eps.ln();
        if n2 >= 4.0 * r2 {
            return tail();
        }
        let inner = self.cap(self.oracle.value(x)).0 + c.log_z_hat;
        if n2 <= r2 {
            return inner;
        }
        let g2 = q_mol((n2 - r2) / (3.0 * r2));
        (1.0 - g2) * inner + g2 * tail()
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let c = &self.consts;
        let d = c.d as f64;
        let n2 = norm2(x);
        let r2 = c.r * c.r;
        let gk = c.eps * d / c.m;
        if n2 >= 4.0 * r2 {
            for (g, v) in grad.iter_mut().zip(x) {
                *g = gk * v;
            }
            return c.f_gamma(x) - c.eps.ln();
        }
        let fm = self.oracle.value_grad(x, grad);
        let (fbar, slope) = self.cap(fm);
        let inner = fbar + c.log_z_hat;
        grad.iter_mut().for_each(|g| *g *= slope);
        if n2 <= r2 {
            return inner;
        }
        let z = (n2 - r2) / (3.0 * r2);
        let g2 = q_mol(z);
        let dg2 = q_mol_d1(z) * 2.0 / (3.0 * r2);
        let tail = c.f_gamma(x) - c.eps.ln();
        for (g, v) in grad.iter_mut().zip(x) {
            *g = (1.0 - g2) * *g + g2 * gk * v + dg2 * v * (tail - inner);
        }
        (1.0 - g2) * inner + g2 * tail
    }
}
