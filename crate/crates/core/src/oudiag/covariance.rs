use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{HessianMethod, HessianProbe, OuTime};
use crate::error::{NlcsError, Result};
use crate::numkit::SymMatrix;
use crate::oracle::Potential;
use crate::rng::stream;

const BATCH: usize = 4096;

/// Self-normalized draws from `ν_t` with proposal `N(x₀, (1−e^{−2t})I)`:
/// returns points and normalized weights.
pub(crate) fn nu_t_draws<P: Potential + Sync + ?Sized>(
    p: &P,
    t: OuTime,
    x0: &[f64],
    n: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let d = p.dim();
    if x0.len() != d {
        return Err(NlcsError::domain("x0 dimension mismatch"));
    }
    if !(t.t() > 0.0) || t.var() <= 1e-8 {
        return Err(NlcsError::domain("covariance identity needs 1 - e^(-2t) > 1e-8"));
    }
    if n < 1000 {
        return Err(NlcsError::domain(format!("covariance identity needs n >= 1000, got {n}")));
    }
    let sd = t.var().sqrt();
    let grow = t.t().exp();
    let batches: Vec<Vec<(Vec<f64>, f64)>> = (0..n.div_ceil(BATCH))
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, "oudiag", b as u64);
            (0..BATCH.min(n - b * BATCH))
                .map(|_| {
                    let y: Vec<f64> = x0.iter().map(|c| c + sd * rng.sample::<f64, _>(StandardNormal)).collect();
                    let z: Vec<f64> = y.iter().map(|v| v * grow).collect();
                    let lw = -p.value(&z);
                    (y, lw)
                })
                .collect()
        })
        .collect();
    let all: Vec<(Vec<f64>, f64)> = batches.into_iter().flatten().collect();
    let top = all.iter().map(|a| a.1).filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(NlcsError::Degeneracy { ess: 0.0 });
    }
    let mut w: Vec<f64> = all.iter().map(|a| if a.1.is_nan() { 0.0 } else { (a.1 - top).exp() }).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    let ess = 1.0 / w.iter().map(|v| v * v).sum::<f64>();
    if ess < 50.0 {
        return Err(NlcsError::Degeneracy { ess });
    }
    Ok((all.into_iter().map(|a| a.0).collect(), w))
}

/// `∇² log p_t(x₀) = Cov_{ν_t}[Y]/(1−e^{−2t})² − I/(1−e^{−2t})` by
/// self-normalized importance sampling.
pub fn score_hessian_via_cov<P: Potential + Sync + ?Sized>(
    p: &P,
    t: OuTime,
    x0: &[f64],
    n: usize,
    seed: u64,
) -> Result<HessianProbe> {
    let d = p.dim();
    let (ys, w) = nu_t_draws(p, t, x0, n, seed)?;
    let mut mean = vec![0.0; d];
    for (y, wi) in ys.iter().zip(&w) {
        for k in 0..d {
            mean[k] += wi * y[k];
        }
    }
    let mut cov = SymMatrix::zeros(d, d);
    for (y, wi) in ys.iter().zip(&w) {
        for a in 0..d {
            for b in 0..=a {
                cov[(a, b)] += wi * (y[a] - mean[a]) * (y[b] - mean[b]);
            }
        }
    }
    let mut var_sum = 0.0;
    for a in 0..d {
        for b in 0..=a {
            let c = cov[(a, b)];
            let v: f64 = ys.iter().zip(&w).map(|(y, wi)| (wi * ((y[a] - mean[a]) * (y[b] - mean[b]) - c)).powi(2)).sum();
            var_sum += if a == b { v } else { 2.0 * v };
            cov[(b, a)] = c;
        }
    }
    let v = t.var();
    let h = &cov / (v * v) - SymMatrix::identity(d, d) / v;
    HessianProbe::new(x0, t, h, HessianMethod::CovarianceIdentity, Some(var_sum.sqrt() / (v * v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::make_gaussian;
    use nalgebra::DMatrix;

    #[test]
    fn standard_gaussian_gives_minus_identity() {
        let g = make_gaussian(vec![0.0; 2], DMatrix::identity(2, 2)).unwrap();
        let p = score_hessian_via_cov(&g, OuTime::new(0.7).unwrap(), &[0.4, -0.2], 50_000, 3).unwrap();
        let err = (&p.hessian + DMatrix::identity(2, 2)).norm();
        assert!(err <= 3.0 * p.mc_stderr.unwrap(), "{err} vs {:?}", p.mc_stderr);
    }

    #[test]
    fn preconditions() {
        let g = make_gaussian(vec![0.0], DMatrix::identity(1, 1)).unwrap();
        assert!(score_hessian_via_cov(&g, OuTime::new(1e-10).unwrap(), &[0.0], 5000, 0).is_err());
        assert!(score_hessian_via_cov(&g, OuTime::new(1.0).unwrap(), &[0.0], 10, 0).is_err());
        let narrow = make_gaussian(vec![0.0], DMatrix::identity(1, 1) * 1e-12).unwrap();
        assert!(matches!(
            score_hessian_via_cov(&narrow, OuTime::new(0.01).unwrap(), &[5.0], 2000, 0),
            Err(NlcsError::Degeneracy { .. })
        ));
    }
}
