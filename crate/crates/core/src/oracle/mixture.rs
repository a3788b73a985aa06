use super::gaussian::GaussianPotential;
use super::Potential;
use crate::error::{NlcsError, Result};
use crate::numkit::{LogSumExp, SymMatrix};

/// Gaussian mixture `Σ w_i N(u_i, Σ_i)`.
#[derive(Clone, Debug)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covs: Vec<SymMatrix>,
}

impl MixtureSpec {
    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, |m| m.len())
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.weights.len();
        if m == 0 || self.means.len() != m || self.covs.len() != m {
            return Err(NlcsError::domain("mixture needs equally many weights, means and covariances"));
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(NlcsError::domain("mixture weights must be positive"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(NlcsError::domain(format!("mixture weights sum to {total}")));
        }
        let d = self.dim();
        if d == 0 || self.means.iter().any(|u| u.len() != d) {
            return Err(NlcsError::domain("mixture means must share a positive dimension"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct MixturePotential {
    spec: MixtureSpec,
    comps: Vec<GaussianPotential>,
    log_w: Vec<f64>,
}

pub fn make_mixture(spec: MixtureSpec) -> Result<MixturePotential> {
    MixturePotential::new(spec)
}

impl MixturePotential {
    pub fn new(spec: MixtureSpec) -> Result<Self> {
        spec.validate()?;
        let comps = spec
            .means
            .iter()
            .zip(&spec.covs)
            .map(|(u, c)| GaussianPotential::new(u.clone(), c.clone()))
            .collect::<Result<Vec<_>>>()?;
        let log_w = spec.weights.iter().map(|w| w.ln()).collect();
        Ok(Self { spec, comps, log_w })
    }

    pub fn spec(&self) -> &MixtureSpec {
        &self.spec
    }

    /// Responsibilities `r_i(x)` and the per-component gradients `∇f_i(x)`.
    pub fn responsibilities(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let (r, g, _) = self.resp_full(x);
        (r, g)
    }

    fn resp_full(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>, f64) {
        let d = self.dim();
        let mut grads = vec![vec![0.0; d]; self.comps.len()];
        let logs: Vec<f64> = self
            .comps
            .iter()
            .zip(&self.log_w)
            .zip(grads.iter_mut())
            .map(|((c, lw), g)| lw - c.value_grad(x, g))
            .collect();
        let mut acc = LogSumExp::new();
        logs.iter().for_each(|&v| acc.push(v));
        let z = acc.value();
        (logs.iter().map(|v| (v - z).exp()).collect(), grads, -z)
    }

    /// `−∇² log p(x)` in covariance-of-score form.
    pub fn neg_log_hessian(&self, x: &[f64]) -> SymMatrix {
        let d = self.dim();
        let (r, g) = self.responsibilities(x);
        let mut mean = vec![0.0; d];
        for (ri, gi) in r.iter().zip(&g) {
            for k in 0..d {
                mean[k] += ri * gi[k];
            }
        }
        let mut h = SymMatrix::zeros(d, d);
        for ((ri, gi), c) in r.iter().zip(&g).zip(&self.comps) {
            let p = c.precision();
            for a in 0..d {
                for b in 0..d {
                    h[(a, b)] += ri * (p[(a, b)] - (gi[a] - mean[a]) * (gi[b] - mean[b]));
                }
            }
        }
        (&h + h.transpose()) * 0.5
    }

    /// `−∇² log p(x)` assembled from the pairwise score-difference term.
    pub fn neg_log_hessian_pairwise(&self, x: &[f64]) -> SymMatrix {
        let d = self.dim();
        let (r, g) = self.responsibilities(x);
        let mut h = SymMatrix::zeros(d, d);
        for (ri, c) in r.iter().zip(&self.comps) {
            h += c.precision() * *ri;
        }
        for i in 0..r.len() {
            for j in (i + 1)..r.len() {
                let w = r[i] * r[j];
                for a in 0..d {
                    for b in 0..d {
                        h[(a, b)] -= w * (g[i][a] - g[j][a]) * (g[i][b] - g[j][b]);
                    }
                }
            }
        }
        h
    }
}

impl Potential for MixturePotential {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut acc = LogSumExp::new();
        for (c, lw) in self.comps.iter().zip(&self.log_w) {
            acc.push(lw - c.value(x));
        }
        -acc.value()
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.dim();
        let mut stack = [0.0; 16];
        let mut heap = Vec::new();
        let gi: &mut [f64] = if d <= 16 {
            &mut stack[..d]
        } else {
            heap.resize(d, 0.0);
            &mut heap
        };
        // streaming log-sum-exp with a gradient accumulator scaled by e^{−top}
        let (mut top, mut sum) = (f64::NEG_INFINITY, 0.0);
        grad.iter_mut().for_each(|v| *v = 0.0);
        for (c, lw) in self.comps.iter().zip(&self.log_w) {
            let l = lw - c.value_grad(x, gi);
            if l > top {
                let scale = (top - l).exp();
                sum *= scale;
                grad.iter_mut().for_each(|v| *v *= scale);
                top = l;
            }
            let e = (l - top).exp();
            sum += e;
            for (o, v) in grad.iter_mut().zip(gi.iter()) {
                *o += e * v;
            }
        }
        grad.iter_mut().for_each(|v| *v /= sum);
        -(top + sum.ln())
    }

    fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        Ok(self.neg_log_hessian(x))
    }

    fn has_hessian(&self) -> bool {
        true
    }
}
