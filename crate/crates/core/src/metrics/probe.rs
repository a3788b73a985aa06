use rayon::prelude::*;

use crate::error::{NlcsError, Result};
use crate::numkit::{fd_jacobian_sym, norm2, opnorm_sym, SymMatrix};
use crate::oracle::Potential;
use crate::rng::{halton, stream_key};

#[derive(Clone, Debug)]
pub enum ProbeRegion {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl ProbeRegion {
    pub fn dim(&self) -> usize {
        match self {
            ProbeRegion::Ball { center, .. } => center.len(),
            ProbeRegion::Box { lo, .. } => lo.len(),
        }
    }

    fn center(&self) -> Vec<f64> {
        match self {
            ProbeRegion::Ball { center, .. } => center.clone(),
            ProbeRegion::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
        }
    }
}

/// Region center followed by `n` quasi-random points of the region.
pub fn probe_points(region: &ProbeRegion, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = region.dim();
    let offset = stream_key(seed, "probe", 0) % 1_000_003;
    let mut out = vec![region.center()];
    let mut i = 0u64;
    // rejection for balls; radial fallback keeps high d from starving
    let cap = 200 * n as u64 + 1000;
    while out.len() < n + 1 {
        let u = halton(i, d, offset);
        i += 1;
        match region {
            ProbeRegion::Box { lo, hi } => {
                out.push((0..d).map(|k| lo[k] + u[k] * (hi[k] - lo[k])).collect());
            }
            ProbeRegion::Ball { center, radius } => {
                let y: Vec<f64> = u.iter().map(|v| 2.0 * v - 1.0).collect();
                let r2 = norm2(&y);
                if r2 <= 1.0 {
                    out.push(center.iter().zip(&y).map(|(c, v)| c + radius * v).collect());
                } else if i > cap {
                    let s = r2.sqrt();
                    let t = u[0].powf(1.0 / d as f64);
                    out.push(center.iter().zip(&y).map(|(c, v)| c + radius * t * v / s).collect());
                }
            }
        }
    }
    out
}

fn hessian_at<P: Potential + ?Sized>(f: &P, x: &[f64]) -> Result<SymMatrix> {
    if f.has_hessian() {
        f.hessian(x)
    } else {
        fd_jacobian_sym(|y| f.grad(y), x, Some(1e-5 * (1.0 + norm2(x).sqrt())))
    }
}

/// Largest Hessian operator norm over the probe points and `extra`.
pub fn smoothness_probe<P: Potential + Sync + ?Sized>(
    f: &P,
    region: &ProbeRegion,
    n_points: usize,
    seed: u64,
    extra: &[Vec<f64>],
) -> Result<f64> {
    if region.dim() != f.dim() || extra.iter().any(|e| e.len() != f.dim()) {
        return Err(NlcsError::domain("probe dimension mismatch"));
    }
    let mut pts = probe_points(region, n_points, seed);
    pts.extend(extra.iter().cloned());
    let norms: Vec<Result<f64>> = pts
        .par_iter()
        .map(|x| {
            let h = hessian_at(f, x).map_err(|e| match e {
                NlcsError::Evaluation { .. } => NlcsError::Evaluation { location: x.clone() },
                other => other,
            })?;
            if h.iter().any(|v| !v.is_finite()) {
                return Err(NlcsError::Evaluation { location: x.clone() });
            }
            opnorm_sym(&h, 1e-10).or_else(|e| match e {
                NlcsError::Convergence { best, .. } => Ok(best),
                other => Err(other),
            })
        })
        .collect();
    let mut best = 0.0f64;
    for n in norms {
        best = best.max(n?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{make_gaussian, FnPotential};
    use nalgebra::DMatrix;

    #[test]
    fn gaussian_probe_is_precision_norm() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]);
        let g = make_gaussian(vec![1.0, -1.0], cov.clone()).unwrap();
        let region = ProbeRegion::Ball { center: vec![0.0; 2], radius: 3.0 };
        let v = smoothness_probe(&g, &region, 50, 1, &[]).unwrap();
        let want = opnorm_sym(&cov.try_inverse().unwrap(), 1e-12).unwrap();
        assert!((v - want).abs() < 1e-8);
    }

    #[test]
    fn ball_points_inside() {
        let region = ProbeRegion::Ball { center: vec![1.0; 8], radius: 2.0 };
        let pts = probe_points(&region, 300, 3);
        assert_eq!(pts.len(), 301);
        for p in pts {
            let r2: f64 = p.iter().map(|v| (v - 1.0) * (v - 1.0)).sum();
            assert!(r2 <= 4.0 + 1e-12);
        }
    }

    #[test]
    fn non_finite_hessian_reports_location() {
        let f = FnPotential {
            dim: 1,
            f: |x: &[f64]| x[0] * x[0],
            g: |x: &[f64], g: &mut [f64]| g[0] = if x[0].abs() < 0.1 { f64::NAN } else { 2.0 * x[0] },
        };
        let region = ProbeRegion::Box { lo: vec![-1.0], hi: vec![1.0] };
        match smoothness_probe(&f, &region, 4, 0, &[]) {
            Err(NlcsError::Evaluation { location }) => assert_eq!(location, vec![0.0]),
            other => panic!("{other:?}"),
        }
    }
}
