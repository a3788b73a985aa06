use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::tv::QuadratureGrid;
use crate::error::{NlcsError, Result};
use crate::numkit::{log_ball_volume, norm2, LogSumExp};
use crate::oracle::Potential;
use crate::rng::stream;

/// Importance proposals for Monte Carlo moments.
#[derive(Clone, Debug)]
pub enum Proposal {
    /// `N(mean, scale²·I)`.
    Gaussian { mean: Vec<f64>, scale: f64 },
    /// `w·Unif(B_radius) + (1−w)·N(0, scale²·I)`.
    BallMixture { radius: f64, ball_weight: f64, scale: f64 },
}

#[derive(Clone, Debug)]
pub enum MomentMethod {
    Quadrature(QuadratureGrid),
    Importance { proposal: Proposal, n: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentEstimate {
    pub value: f64,
    /// Monte Carlo standard error; zero for quadrature.
    pub stderr: f64,
    pub ess: Option<f64>,
}

const ISO: f64 = 0.918_938_533_204_672_7; // ½ log 2π

impl Proposal {
    fn draw(&self, d: usize, rng: &mut impl Rng) -> Vec<f64> {
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        match self {
            Proposal::Gaussian { mean, scale } => mean.iter().zip(&z).map(|(m, v)| m + scale * v).collect(),
            Proposal::BallMixture { radius, ball_weight, scale } => {
                if rng.random::<f64>() < *ball_weight {
                    let r = norm2(&z).sqrt();
                    let s = radius * rng.random::<f64>().powf(1.0 / d as f64) / r;
                    z.iter().map(|v| v * s).collect()
                } else {
                    z.iter().map(|v| v * scale).collect()
                }
            }
        }
    }

    fn log_density(&self, y: &[f64]) -> f64 {
        let d = y.len() as f64;
        let gauss = |mean: Option<&[f64]>, s: f64| {
            let r2: f64 = match mean {
                Some(m) => y.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum(),
                None => norm2(y),
            };
            -0.5 * r2 / (s * s) - d * (s.ln() + ISO)
        };
        match self {
            Proposal::Gaussian { mean, scale } => gauss(Some(mean), *scale),
            Proposal::BallMixture { radius, ball_weight, scale } => {
                let mut acc = LogSumExp::new();
                if norm2(y) <= radius * radius && *ball_weight > 0.0 {
                    acc.push(ball_weight.ln() - log_ball_volume(y.len(), *radius).unwrap_or(f64::INFINITY));
                }
                if *ball_weight < 1.0 {
                    acc.push((1.0 - ball_weight).ln() + gauss(None, *scale));
                }
                acc.value()
            }
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        let ok = match self {
            Proposal::Gaussian { mean, scale } => mean.len() == d && *scale > 0.0,
            Proposal::BallMixture { radius, ball_weight, scale } => {
                *radius > 0.0 && (0.0..=1.0).contains(ball_weight) && (*ball_weight == 1.0 || *scale > 0.0)
            }
        };
        if ok { Ok(()) } else { Err(NlcsError::domain("invalid importance proposal")) }
    }
}

const CHUNK: usize = 4096;

/// `E‖X‖²` under `e^{−f}`.
pub fn second_moment<P: Potential + Sync + ?Sized>(f: &P, method: &MomentMethod) -> Result<MomentEstimate> {
    let d = f.dim();
    match method {
        MomentMethod::Quadrature(grid) => {
            if grid.dim() != d {
                return Err(NlcsError::domain("quadrature moments need d <= 2 and a matching grid"));
            }
            let rows: Vec<(LogSumExp, LogSumExp)> = (0..grid.rows())
                .into_par_iter()
                .map(|i| {
                    let (mut z, mut m) = (LogSumExp::new(), LogSumExp::new());
                    for (x, lw) in grid.row_nodes(i) {
                        let v = lw - f.value(&x);
                        z.push(v);
                        m.push(v + norm2(&x).ln());
                    }
                    (z, m)
                })
                .collect();
            let (mut z, mut m) = (LogSumExp::new(), LogSumExp::new());
            for (a, b) in &rows {
                z.merge(a);
                m.merge(b);
            }
            let value = (m.value() - z.value()).exp();
            if !value.is_finite() {
                return Err(NlcsError::Numeric("second moment is not finite on the grid".into()));
            }
            Ok(MomentEstimate { value, stderr: 0.0, ess: None })
        }
        MomentMethod::Importance { proposal, n, seed } => {
            proposal.validate(d)?;
            if *n < 100 {
                return Err(NlcsError::domain("importance moments need n >= 100"));
            }
            let chunks = n.div_ceil(CHUNK);
            let draws: Vec<Vec<(f64, f64)>> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = stream(*seed, "moment", c as u64);
                    let len = CHUNK.min(n - c * CHUNK);
                    (0..len)
                        .map(|_| {
                            let y = proposal.draw(d, &mut rng);
                            (-f.value(&y) - proposal.log_density(&y), norm2(&y))
                        })
                        .collect()
                })
                .collect();
            let all: Vec<(f64, f64)> = draws.into_iter().flatten().collect();
            let top = all.iter().map(|p| p.0).filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
            if !top.is_finite() {
                return Err(NlcsError::Degeneracy { ess: 0.0 });
            }
            let w: Vec<f64> = all.iter().map(|p| if p.0.is_nan() { 0.0 } else { (p.0 - top).exp() }).collect();
            let sw: f64 = w.iter().sum();
            let sw2: f64 = w.iter().map(|v| v * v).sum();
            let ess = sw * sw / sw2;
            if ess < 50.0 {
                return Err(NlcsError::Degeneracy { ess });
            }
            let value = w.iter().zip(&all).map(|(wi, p)| wi * p.1).sum::<f64>() / sw;
            let var = w.iter().zip(&all).map(|(wi, p)| wi * wi * (p.1 - value).powi(2)).sum::<f64>() / (sw * sw);
            Ok(MomentEstimate { value, stderr: var.sqrt(), ess: Some(ess) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::make_gaussian;
    use nalgebra::DMatrix;

    #[test]
    fn gaussian_moments() {
        let g3 = make_gaussian(vec![0.0; 3], DMatrix::identity(3, 3)).unwrap();
        let m = MomentMethod::Importance { proposal: Proposal::Gaussian { mean: vec![0.0; 3], scale: 1.3 }, n: 40_000, seed: 2 };
        let e = second_moment(&g3, &m).unwrap();
        assert!((e.value - 3.0).abs() < 3.0 * e.stderr + 1e-3, "{e:?}");

        let g2 = make_gaussian(vec![1.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let q = second_moment(&g2, &MomentMethod::Quadrature(QuadratureGrid::cube(2, 12.0, 401).unwrap())).unwrap();
        assert!((q.value - 3.0).abs() < 1e-8);
        let mc = second_moment(
            &g2,
            &MomentMethod::Importance {
                proposal: Proposal::BallMixture { radius: 5.0, ball_weight: 0.5, scale: 2.0 },
                n: 50_000,
                seed: 9,
            },
        )
        .unwrap();
        assert!((mc.value - q.value).abs() < 3.0 * mc.stderr);
    }

    #[test]
    fn degenerate_proposal() {
        let g = make_gaussian(vec![40.0], DMatrix::identity(1, 1) * 0.01).unwrap();
        let m = MomentMethod::Importance { proposal: Proposal::Gaussian { mean: vec![0.0], scale: 1.0 }, n: 1000, seed: 0 };
        assert!(matches!(second_moment(&g, &m), Err(NlcsError::Degeneracy { .. })));
    }
}
