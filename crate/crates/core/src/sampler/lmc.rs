//! Averaged Langevin Monte Carlo: Euler–Maruyama up to a uniformly random
//! time, with an exact Brownian partial step.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{NlcsError, Result};
use crate::numkit::norm2;
use crate::oracle::{Potential, QueryLedger};
use crate::rng::stream;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LmcConfig {
    #[serde(rename = "N")]
    pub n_steps: usize,
    pub h: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
    #[serde(rename = "L_pi")]
    pub l_pi: f64,
    pub seed: u64,
    pub n_samples: usize,
    /// States beyond this norm abort the run.
    pub guard_radius: f64,
}

impl LmcConfig {
    /// `h = √K₀/(2𝓛√(dN))`.
    pub fn auto_step(k0: f64, l_pi: f64, d: usize, n_steps: usize) -> f64 {
        k0.max(0.0).sqrt() / (2.0 * l_pi * ((d * n_steps) as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 || !(self.h > 0.0) || !self.h.is_finite() {
            return Err(NlcsError::domain(format!("LMC needs N >= 1 and h > 0 (N={}, h={})", self.n_steps, self.h)));
        }
        if !(self.l_pi > 0.0) {
            return Err(NlcsError::domain("LMC needs a positive smoothness constant"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct LmcOutput {
    pub samples: Vec<Vec<f64>>,
    pub ledger: QueryLedger,
    /// Full steps `k₀` taken per sample.
    pub steps: Vec<usize>,
}

/// Runs samples `range` sequentially; returns samples and full-step counts.
pub fn lmc_sample_range<P: Potential + ?Sized>(
    target: &P,
    cfg: &LmcConfig,
    range: std::ops::Range<usize>,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let d = target.dim();
    let guard2 = cfg.guard_radius * cfg.guard_radius;
    let init_sd = (1.0 / (2.0 * cfg.l_pi)).sqrt();
    let noise = (2.0 * cfg.h).sqrt();
    let mut grad = vec![0.0; d];
    let mut out = Vec::with_capacity(range.len());
    let mut steps = Vec::with_capacity(range.len());
    for i in range {
        let mut rng = stream(cfg.seed, "lmc", i as u64);
        let mut x: Vec<f64> = (0..d).map(|_| init_sd * rng.sample::<f64, _>(StandardNormal)).collect();
        let t0 = rng.random::<f64>() * cfg.n_steps as f64 * cfg.h;
        let k0 = ((t0 / cfg.h).floor() as usize).min(cfg.n_steps - 1);
        for step in 0..k0 {
            target.value_grad(&x, &mut grad);
            for j in 0..d {
                x[j] += -cfg.h * grad[j] + noise * rng.sample::<f64, _>(StandardNormal);
            }
            let n2 = norm2(&x);
            if !(n2 <= guard2) {
                return Err(NlcsError::Divergence { sample: i, step: step + 1 });
            }
        }
        let tau = (t0 - k0 as f64 * cfg.h).max(0.0);
        target.value_grad(&x, &mut grad);
        let s = (2.0 * tau).sqrt();
        for j in 0..d {
            x[j] += -tau * grad[j] + s * rng.sample::<f64, _>(StandardNormal);
        }
        if !(norm2(&x) <= guard2) {
            return Err(NlcsError::Divergence { sample: i, step: k0 + 1 });
        }
        out.push(x);
        steps.push(k0);
    }
    Ok((out, steps))
}

pub(crate) const LMC_BLOCK: usize = 32;

/// Independent samples in parallel; identical output for any thread count.
pub fn lmc_run<P: Potential + Sync + ?Sized>(target: &P, cfg: &LmcConfig) -> Result<LmcOutput> {
    cfg.validate()?;
    let blocks: Vec<_> = (0..cfg.n_samples.div_ceil(LMC_BLOCK))
        .map(|b| b * LMC_BLOCK..((b + 1) * LMC_BLOCK).min(cfg.n_samples))
        .collect();
    let parts: Vec<Result<(Vec<Vec<f64>>, Vec<usize>)>> =
        blocks.into_par_iter().map(|r| lmc_sample_range(target, cfg, r)).collect();
    let mut samples = Vec::with_capacity(cfg.n_samples);
    let mut steps = Vec::with_capacity(cfg.n_samples);
    for p in parts {
        let (s, k) = p?;
        samples.extend(s);
        steps.extend(k);
    }
    let grads = steps.iter().map(|&k| k as u64 + 1).sum();
    Ok(LmcOutput { samples, ledger: QueryLedger { value_queries: 0, grad_queries: grads }, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::make_gaussian;
    use nalgebra::DMatrix;

    fn cfg(n: usize, h: f64, samples: usize) -> LmcConfig {
        LmcConfig { n_steps: n, h, k0: 1.0, l_pi: 1.0, seed: 11, n_samples: samples, guard_radius: 1e6 }
    }

    #[test]
    fn ledger_counts_steps_plus_one() {
        let g = make_gaussian(vec![0.0], DMatrix::identity(1, 1)).unwrap();
        let out = lmc_run(&g, &cfg(50, 0.01, 40)).unwrap();
        let want: u64 = out.steps.iter().map(|&k| k as u64 + 1).sum();
        assert_eq!(out.ledger.grad_queries, want);
        assert_eq!(out.samples.len(), 40);
        assert!(out.steps.iter().all(|&k| k < 50));
    }

    #[test]
    fn deterministic() {
        let g = make_gaussian(vec![0.0, 1.0], DMatrix::identity(2, 2)).unwrap();
        let a = lmc_run(&g, &cfg(100, 0.05, 70)).unwrap();
        let b = lmc_run(&g, &cfg(100, 0.05, 70)).unwrap();
        assert_eq!(a.samples, b.samples);
        let (part, _) = lmc_sample_range(&g, &cfg(100, 0.05, 70), 40..50).unwrap();
        assert_eq!(part[..], a.samples[40..50]);
    }

    #[test]
    fn divergence_is_reported() {
        let g = make_gaussian(vec![0.0], DMatrix::from_element(1, 1, 1e-3)).unwrap();
        let r = lmc_run(&g, &cfg(2000, 1.0, 4));
        assert!(matches!(r, Err(NlcsError::Divergence { .. })));
    }

    #[test]
    fn auto_step_formula() {
        assert!((LmcConfig::auto_step(4.0, 2.0, 1, 100) - 2.0 / 40.0).abs() < 1e-15);
    }
}
