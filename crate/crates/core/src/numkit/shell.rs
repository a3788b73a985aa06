//! Radial interpolation weights `q_mol(z(x))` around a center.

use serde::{Deserialize, Serialize};

use super::linalg::SymMatrix;
use super::mollifier::{q_mol, q_mol_d1, q_mol_d2};
use crate::error::{NlcsError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellMode {
    /// `z = (‖x−c‖² − inner)/(outer − inner)`; `inner`/`outer` are squared radii.
    Quadratic,
    /// `z = (‖x−c‖ − inner)/(outer − inner)`; `inner`/`outer` are radii.
    Linear,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialShell {
    pub center: Vec<f64>,
    pub inner: f64,
    pub outer: f64,
    pub mode: ShellMode,
}

impl RadialShell {
    pub fn new(center: Vec<f64>, inner: f64, outer: f64, mode: ShellMode) -> Result<Self> {
        if !(inner >= 0.0) || !(outer > inner) || !outer.is_finite() {
            return Err(NlcsError::domain(format!("shell needs 0 <= inner < outer (got {inner}, {outer})")));
        }
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(NlcsError::domain("shell center must be a finite point"));
        }
        Ok(Self { center, inner, outer, mode })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    #[inline]
    fn offset_sq(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum()
    }

    #[inline]
    fn arg(&self, s2: f64) -> f64 {
        let w = self.outer - self.inner;
        match self.mode {
            ShellMode::Quadratic => (s2 - self.inner) / w,
            ShellMode::Linear => (s2.sqrt() - self.inner) / w,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        q_mol(self.arg(self.offset_sq(x)))
    }

    /// Value and gradient; the gradient is written to `grad`.
    pub fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let s2 = self.offset_sq(x);
        let z = self.arg(s2);
        let q1 = q_mol_d1(z);
        let w = self.outer - self.inner;
        let coef = match self.mode {
            ShellMode::Quadratic => 2.0 * q1 / w,
            ShellMode::Linear => {
                if s2 == 0.0 {
                    if self.inner == 0.0 {
                        return Err(NlcsError::Singularity("linear shell gradient at its center".into()));
                    }
                    0.0
                } else if q1 == 0.0 {
                    0.0
                } else {
                    q1 / (w * s2.sqrt())
                }
            }
        };
        for ((g, a), c) in grad.iter_mut().zip(x).zip(&self.center) {
            *g = coef * (a - c);
        }
        Ok(q_mol(z))
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; x.len()];
        self.value_grad(x, &mut g)?;
        Ok(g)
    }

    pub fn hess(&self, x: &[f64]) -> Result<SymMatrix> {
        let d = x.len();
        let y: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let s2: f64 = y.iter().map(|v| v * v).sum();
        let z = self.arg(s2);
        let (q1, q2) = (q_mol_d1(z), q_mol_d2(z));
        let w = self.outer - self.inner;
        let mut h = SymMatrix::zeros(d, d);
        match self.mode {
            ShellMode::Quadratic => {
                // ∇z = 2y/w, ∇²z = 2I/w
                let a = 4.0 * q2 / (w * w);
                let b = 2.0 * q1 / w;
                for i in 0..d {
                    for j in 0..d {
                        h[(i, j)] = a * y[i] * y[j] + if i == j { b } else { 0.0 };
                    }
                }
            }
            ShellMode::Linear => {
                if s2 == 0.0 {
                    if self.inner == 0.0 {
                        return Err(NlcsError::Singularity("linear shell Hessian at its center".into()));
                    }
                    return Ok(h);
                }
                if q1 == 0.0 && q2 == 0.0 {
                    return Ok(h);
                }
                // ∇z = ŷ/w, ∇²z = (I − ŷŷᵀ)/(w‖y‖)
                let r = s2.sqrt();
                for i in 0..d {
                    for j in 0..d {
                        let yy = y[i] * y[j] / s2;
                        let id = if i == j { 1.0 } else { 0.0 };
                        h[(i, j)] = q2 * yy / (w * w) + q1 * (id - yy) / (w * r);
                    }
                }
            }
        }
        Ok(h)
    }
}

pub fn shell_value(shell: &RadialShell, x: &[f64]) -> f64 {
    shell.value(x)
}

pub fn shell_grad(shell: &RadialShell, x: &[f64]) -> Result<Vec<f64>> {
    shell.grad(x)
}

pub fn shell_hess(shell: &RadialShell, x: &[f64]) -> Result<SymMatrix> {
    shell.hess(x)
}
