use std::f64::consts::PI;

use super::Potential;
use crate::error::{NlcsError, Result};
use crate::numkit::{cholesky, SymMatrix};

/// Normalized Gaussian potential `½(x−u)ᵀΣ⁻¹(x−u) + ½log((2π)^d|Σ|)`.
#[derive(Clone, Debug)]
pub struct GaussianPotential {
    mean: Vec<f64>,
    cov: SymMatrix,
    precision: Vec<f64>,
    log_norm: f64,
}

pub fn make_gaussian(mean: Vec<f64>, cov: SymMatrix) -> Result<GaussianPotential> {
    GaussianPotential::new(mean, cov)
}

impl GaussianPotential {
    pub fn new(mean: Vec<f64>, cov: SymMatrix) -> Result<Self> {
        let d = mean.len();
        if d == 0 || cov.nrows() != d {
            return Err(NlcsError::domain(format!("mean has length {d}, covariance is {}x{}", cov.nrows(), cov.ncols())));
        }
        let ch = cholesky(&cov)?;
        let log_det: f64 = 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let inv = ch.inverse();
        let precision = (0..d * d).map(|k| inv[(k / d, k % d)]).collect();
        Ok(Self { mean, cov, precision, log_norm: 0.5 * (d as f64 * (2.0 * PI).ln() + log_det) })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &SymMatrix {
        &self.cov
    }

    pub fn precision(&self) -> SymMatrix {
        let d = self.mean.len();
        SymMatrix::from_row_slice(d, d, &self.precision)
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// `½(x−u)ᵀP(x−u)`, with `P(x−u)` written to `pr` when given.
    #[inline]
    pub(crate) fn quad(&self, x: &[f64], pr: Option<&mut [f64]>) -> f64 {
        let d = self.mean.len();
        let mut q = 0.0;
        match pr {
            Some(out) => {
                for i in 0..d {
                    let row = &self.precision[i * d..(i + 1) * d];
                    let mut s = 0.0;
                    for j in 0..d {
                        s += row[j] * (x[j] - self.mean[j]);
                    }
                    out[i] = s;
                    q += s * (x[i] - self.mean[i]);
                }
            }
            None => {
                for i in 0..d {
                    let row = &self.precision[i * d..(i + 1) * d];
                    let ri = x[i] - self.mean[i];
                    let mut s = 0.0;
                    for j in 0..d {
                        s += row[j] * (x[j] - self.mean[j]);
                    }
                    q += s * ri;
                }
            }
        }
        0.5 * q
    }
}

impl Potential for GaussianPotential {
    fn dim(&self) -> usize {
        self.mean.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.quad(x, None) + self.log_norm
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.quad(x, Some(grad)) + self.log_norm
    }
    fn hessian(&self, _x: &[f64]) -> Result<SymMatrix> {
        Ok(self.precision())
    }
    fn has_hessian(&self) -> bool {
        true
    }
}
