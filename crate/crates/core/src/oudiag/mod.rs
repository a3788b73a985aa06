//! Smoothness of `log p_t` along the Ornstein–Uhlenbeck process.

mod covariance;
mod probes;

use serde::Serialize;

use crate::error::{NlcsError, Result};
use crate::numkit::{fd_jacobian_sym, opnorm_sym, SymMatrix};
use crate::oracle::{MixturePotential, MixtureSpec, Potential};

pub use covariance::score_hessian_via_cov;
pub use probes::{
    hs_evolution_bounds, hs_evolved_spectrum, preservation_sweep, stitched_blowup_probe, stitched_initial_probe,
    two_gaussian_unequal_cov_probe, write_sweep_csv, StitchedProbe, SweepRow, TwoGaussianProbe,
};

/// OU time with its derived shrink `e^{−t}` and variance `1 − e^{−2t}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OuTime {
    t: f64,
}

impl OuTime {
    pub fn new(t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(NlcsError::domain(format!("OU time must be finite and >= 0, got {t}")));
        }
        Ok(Self { t })
    }

    /// Time at which `e^{−2t}` equals `a ∈ (0, 1]`.
    pub fn from_decay(a: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(NlcsError::domain(format!("e^(-2t) must lie in (0, 1], got {a}")));
        }
        Self::new(-0.5 * a.ln())
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn shrink(&self) -> f64 {
        (-self.t).exp()
    }

    pub fn var(&self) -> f64 {
        -(-2.0 * self.t).exp_m1()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HessianMethod {
    #[serde(rename = "closed-form")]
    ClosedForm,
    #[serde(rename = "finite-difference")]
    FiniteDifference,
    #[serde(rename = "covariance-identity")]
    CovarianceIdentity,
}

impl HessianMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            HessianMethod::ClosedForm => "closed-form",
            HessianMethod::FiniteDifference => "finite-difference",
            HessianMethod::CovarianceIdentity => "covariance-identity",
        }
    }
}

/// `∇² log p_t` at a point.
#[derive(Clone, Debug, Serialize)]
pub struct HessianProbe {
    pub point: Vec<f64>,
    pub t: OuTime,
    pub hessian: SymMatrix,
    pub opnorm: f64,
    pub method: HessianMethod,
    pub mc_stderr: Option<f64>,
}

impl HessianProbe {
    pub(crate) fn new(point: &[f64], t: OuTime, hessian: SymMatrix, method: HessianMethod, mc_stderr: Option<f64>) -> Result<Self> {
        let hessian = (&hessian + hessian.transpose()) * 0.5;
        let opnorm = opnorm_sym(&hessian, 1e-12).or_else(|e| match e {
            NlcsError::Convergence { best, .. } => Ok(best),
            other => Err(other),
        })?;
        Ok(Self { point: point.to_vec(), t, hessian, opnorm, method, mc_stderr })
    }
}

/// Law of `X_t` when `X₀` follows the mixture.
pub fn evolve_mixture(spec: &MixtureSpec, t: OuTime) -> Result<MixtureSpec> {
    spec.validate()?;
    let (s, v) = (t.shrink(), t.var());
    let d = spec.dim();
    Ok(MixtureSpec {
        weights: spec.weights.clone(),
        means: spec.means.iter().map(|u| u.iter().map(|x| s * x).collect()).collect(),
        covs: spec.covs.iter().map(|c| c * (s * s) + SymMatrix::identity(d, d) * v).collect(),
    })
}

/// `∇² log p(x)` for a Gaussian mixture.
pub fn mixture_log_hessian(spec: &MixtureSpec, x: &[f64]) -> Result<SymMatrix> {
    Ok(-MixturePotential::new(spec.clone())?.neg_log_hessian(x))
}

/// Same matrix through the pairwise score-difference assembly.
pub fn mixture_log_hessian_pairwise(spec: &MixtureSpec, x: &[f64]) -> Result<SymMatrix> {
    Ok(-MixturePotential::new(spec.clone())?.neg_log_hessian_pairwise(x))
}

/// Finite-difference Jacobian of the analytic score.
pub fn mixture_log_hessian_fd(spec: &MixtureSpec, x: &[f64]) -> Result<SymMatrix> {
    let p = MixturePotential::new(spec.clone())?;
    Ok(-fd_jacobian_sym(|y| p.grad(y), x, Some(1e-5))?)
}

/// Closed-form probe of the evolved mixture.
pub fn mixture_probe(spec: &MixtureSpec, t: OuTime, x: &[f64], method: HessianMethod) -> Result<HessianProbe> {
    let ev = evolve_mixture(spec, t)?;
    let h = match method {
        HessianMethod::ClosedForm => mixture_log_hessian(&ev, x)?,
        HessianMethod::FiniteDifference => mixture_log_hessian_fd(&ev, x)?,
        HessianMethod::CovarianceIdentity => {
            return Err(NlcsError::domain("use score_hessian_via_cov for the covariance route"));
        }
    };
    HessianProbe::new(x, t, h, method, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::spectral_range;
    use nalgebra::DMatrix;

    fn two(u1: Vec<f64>, u2: Vec<f64>, c: f64) -> MixtureSpec {
        let d = u1.len();
        MixtureSpec { weights: vec![0.3, 0.7], means: vec![u1, u2], covs: vec![DMatrix::identity(d, d) * c; 2] }
    }

    #[test]
    fn evolution_examples() {
        let s = MixtureSpec { weights: vec![1.0], means: vec![vec![2.0, -1.0]], covs: vec![DMatrix::identity(2, 2) * 2.0] };
        let t = OuTime::new(0.5 * 2f64.ln()).unwrap();
        let e = evolve_mixture(&s, t).unwrap();
        assert!((e.covs[0][(0, 0)] - 1.5).abs() < 1e-14 && e.covs[0][(0, 1)] == 0.0);
        assert!((e.means[0][0] - 2.0 * t.shrink()).abs() < 1e-15);
        let unit = MixtureSpec { covs: vec![DMatrix::identity(2, 2)], ..s };
        let e = evolve_mixture(&unit, OuTime::new(3.0).unwrap()).unwrap();
        assert!((e.covs[0][(1, 1)] - 1.0).abs() < 1e-15);
        assert!(OuTime::new(-1.0).is_err());
    }

    #[test]
    fn semigroup() {
        let s = MixtureSpec {
            weights: vec![0.5, 0.5],
            means: vec![vec![1.0, 2.0], vec![-3.0, 0.5]],
            covs: vec![DMatrix::from_row_slice(2, 2, &[2.0, 0.4, 0.4, 0.7]), DMatrix::identity(2, 2) * 0.3],
        };
        let (a, b) = (OuTime::new(0.3).unwrap(), OuTime::new(0.8).unwrap());
        let twice = evolve_mixture(&evolve_mixture(&s, a).unwrap(), b).unwrap();
        let once = evolve_mixture(&s, OuTime::new(1.1).unwrap()).unwrap();
        for k in 0..2 {
            assert!((&twice.covs[k] - &once.covs[k]).norm() < 1e-12);
            for j in 0..2 {
                assert!((twice.means[k][j] - once.means[k][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hessian_routes() {
        let single = MixtureSpec { weights: vec![1.0], means: vec![vec![0.0, 1.0]], covs: vec![DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])] };
        let h = mixture_log_hessian(&single, &[0.3, 0.1]).unwrap();
        let want = -single.covs[0].clone().try_inverse().unwrap();
        assert!((h - want).norm() < 1e-12);
        let s = two(vec![1.0, 0.0], vec![-1.0, 0.5], 1.0);
        for x in [[0.0, 0.0], [0.3, 0.2], [-1.0, 2.0]] {
            let a = mixture_log_hessian(&s, &x).unwrap();
            let b = mixture_log_hessian_pairwise(&s, &x).unwrap();
            let c = mixture_log_hessian_fd(&s, &x).unwrap();
            assert!((&a - &b).norm() < 1e-12);
            assert!((&a - &c).amax() < 1e-5);
        }
    }

    #[test]
    fn equal_cov_lower_bound() {
        let s = two(vec![2.0, 0.0], vec![-1.0, 1.0], 1.0);
        let delta = [3.0, -1.0];
        for x in [[0.0, 0.0], [0.5, 0.5], [1.0, -1.0], [3.0, 2.0]] {
            let neg = -mixture_log_hessian(&s, &x).unwrap();
            let bound = DMatrix::identity(2, 2) - DMatrix::from_fn(2, 2, |i, j| 0.25 * delta[i] * delta[j]);
            let (lo, _) = spectral_range(&(neg - bound));
            assert!(lo >= -1e-12);
        }
    }
}
