//! Hubbard–Stratonovich mixture: a 2^d-component Gaussian mixture with a
//! closed-form potential.

use std::f64::consts::PI;

use super::mixture::MixtureSpec;
use super::Potential;
use crate::error::{NlcsError, Result};
use crate::numkit::{cholesky, LogSumExp, SymMatrix};

#[derive(Clone, Debug)]
pub struct HsMixture {
    j: SymMatrix,
    h: Vec<f64>,
    j_inv: SymMatrix,
    j_inv_h: Vec<f64>,
}

pub fn make_hs_mixture(j: SymMatrix, h: Vec<f64>) -> Result<HsMixture> {
    HsMixture::new(j, h)
}

/// `log(e^x + e^{−x})` without overflow.
#[inline]
pub(crate) fn log_2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

impl HsMixture {
    pub fn new(j: SymMatrix, h: Vec<f64>) -> Result<Self> {
        let d = h.len();
        if d == 0 || j.nrows() != d {
            return Err(NlcsError::domain("J and h dimensions disagree"));
        }
        let ch = cholesky(&j)?;
        let j_inv = ch.inverse();
        let j_inv_h = (&j_inv * nalgebra::DVector::from_column_slice(&h)).iter().cloned().collect();
        Ok(Self { j, h, j_inv, j_inv_h })
    }

    pub fn j(&self) -> &SymMatrix {
        &self.j
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Explicit mixture: components `N(h + Jσ, J)` over `σ ∈ {±1}^d`, weights
    /// proportional to `exp(hᵀσ + ½σᵀJσ)`.
    pub fn to_mixture_spec(&self) -> Result<MixtureSpec> {
        let d = self.h.len();
        if d > 16 {
            return Err(NlcsError::domain(format!("2^{d} components is too many to enumerate")));
        }
        let mut log_w = Vec::with_capacity(1 << d);
        let mut means = Vec::with_capacity(1 << d);
        for bits in 0u32..(1 << d) {
            let s: Vec<f64> = (0..d).map(|i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let js = &self.j * nalgebra::DVector::from_column_slice(&s);
            let quad: f64 = s.iter().zip(js.iter()).map(|(a, b)| a * b).sum();
            let lin: f64 = s.iter().zip(&self.h).map(|(a, b)| a * b).sum();
            log_w.push(lin + 0.5 * quad);
            means.push(self.h.iter().zip(js.iter()).map(|(a, b)| a + b).collect());
        }
        let mut acc = LogSumExp::new();
        log_w.iter().for_each(|&v| acc.push(v));
        let z = acc.value();
        Ok(MixtureSpec {
            weights: log_w.iter().map(|v| (v - z).exp()).collect(),
            means,
            covs: vec![self.j.clone(); 1 << d],
        })
    }

    /// `log ∫ e^{−f}` by enumeration of the sign patterns.
    pub fn log_normalizer(&self) -> Result<f64> {
        let d = self.h.len();
        if d > 20 {
            return Err(NlcsError::domain("normalizer enumeration limited to d <= 20"));
        }
        let ch = cholesky(&self.j)?;
        let log_det: f64 = 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let mut acc = LogSumExp::new();
        for bits in 0u32..(1 << d) {
            let b: Vec<f64> = (0..d)
                .map(|i| self.j_inv_h[i] + if bits >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            let jb = &self.j * nalgebra::DVector::from_column_slice(&b);
            acc.push(0.5 * b.iter().zip(jb.iter()).map(|(a, c)| a * c).sum::<f64>());
        }
        Ok(acc.value() + 0.5 * (d as f64 * (2.0 * PI).ln() + log_det))
    }
}

impl Potential for HsMixture {
    fn dim(&self) -> usize {
        self.h.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d = self.h.len();
        let mut v = 0.0;
        for i in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += self.j_inv[(i, k)] * x[k];
            }
            v += 0.5 * s * x[i] - self.j_inv_h[i] * x[i] - log_2cosh(x[i]);
        }
        v
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.h.len();
        for i in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += self.j_inv[(i, k)] * x[k];
            }
            grad[i] = s - self.j_inv_h[i] - x[i].tanh();
        }
        self.value(x)
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let mut m = self.j_inv.clone();
        for i in 0..x.len() {
            let t = x[i].tanh();
            m[(i, i)] -= 1.0 - t * t;
        }
        Ok(m)
    }

    fn has_hessian(&self) -> bool {
        true
    }
}
