//! Cube-grid sweep producing `f̂*` and `Ẑ_μ`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{NlcsError, Result};
use crate::numkit::{log_ball_volume, LogSumExp};
use crate::oracle::{Potential, QueryLedger};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridSpec {
    pub ell: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub d: usize,
}

impl GridSpec {
    pub fn new(l: f64, m: f64, eps: f64, d: usize) -> Result<Self> {
        if d == 0 || !(l > 0.0 && m > 0.0 && eps > 0.0) {
            return Err(NlcsError::domain("grid needs d >= 1 and L, M, eps > 0"));
        }
        let df = d as f64;
        let ell = (df * eps / (l * l * m)).sqrt() / 64.0;
        let r = (32.0 * m / eps).sqrt();
        Ok(Self { ell, r, r0: 2.0 * r + df.sqrt() * ell, d })
    }

    /// `(2¹⁰·5LM/(dε))^d`.
    pub fn count_bound(l: f64, m: f64, eps: f64, d: usize) -> f64 {
        (1024.0 * 5.0 * l * m / (d as f64 * eps)).powi(d as i32)
    }

    /// Volume-based estimate of the number of cubes in `B_{R0}`.
    pub fn projected_cubes(&self) -> f64 {
        (log_ball_volume(self.d, self.r0).expect("positive radius") - self.d as f64 * self.ell.ln()).exp()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridEstimates {
    pub spec: GridSpec,
    pub f_hat_star: f64,
    #[serde(rename = "log_Z_hat")]
    pub log_z_hat: f64,
    pub cubes_visited: u64,
    pub queries: QueryLedger,
    /// Smallest center value over all cubes.
    pub min_center_value: f64,
    /// Grid-weighted estimate of `E_μ‖X‖`.
    pub first_moment: f64,
}

#[derive(Clone, Copy)]
struct Partial {
    z: LogSumExp,
    moment: LogSumExp,
    min_j: f64,
    min_all: f64,
    count: u64,
}

impl Partial {
    fn new() -> Self {
        Self { z: LogSumExp::new(), moment: LogSumExp::new(), min_j: f64::INFINITY, min_all: f64::INFINITY, count: 0 }
    }

    fn merge(mut self, o: &Partial) -> Self {
        self.z.merge(&o.z);
        self.moment.merge(&o.moment);
        self.min_j = self.min_j.min(o.min_j);
        self.min_all = self.min_all.min(o.min_all);
        self.count += o.count;
        self
    }
}

/// Sweeps the cubes of side `ℓ` on `ℓℤ^d` whose vertices all lie in `B_{R0}`.
pub fn estimate_grid<P: Potential + Sync + ?Sized>(oracle: &P, l: f64, m: f64, eps: f64, budget: f64) -> Result<GridEstimates> {
    let d = oracle.dim();
    let spec = GridSpec::new(l, m, eps, d)?;
    let projected = spec.projected_cubes();
    if projected > budget {
        return Err(NlcsError::Budget { projected, bound: GridSpec::count_bound(l, m, eps, d), budget });
    }
    let ell = spec.ell;
    let k = (spec.r0 / ell).floor() as i64;
    let r0sq = (spec.r0 / ell).powi(2);
    let jsq = (2.0 * spec.r / ell).powi(2);
    let log_vol = d as f64 * ell.ln() - 0.5 * d as f64;
    // farthest vertex and nearest point of the unit-index interval [k, k+1]
    let far = |i: i64| -> f64 { let a = i.max(-i - 1) as f64 + 1.0; a * a };
    let near = |i: i64| -> f64 {
        if i >= 0 { (i * i) as f64 } else if i == -1 { 0.0 } else { ((i + 1) * (i + 1)) as f64 }
    };
    let first: Vec<i64> = (-k..k).collect();
    let block = (first.len() / 4096).max(1);
    let partials: Vec<Result<Partial>> = first
        .par_chunks(block)
        .map(|chunk| {
            let mut acc = Partial::new();
            let mut idx = vec![0i64; d];
            let mut x = vec![0.0; d];
            for &k0 in chunk {
                if far(k0) > r0sq {
                    continue;
                }
                idx[0] = k0;
                for j in 1..d {
                    idx[j] = -k;
                }
                'odo: loop {
                    let fsum: f64 = idx.iter().map(|&i| far(i)).sum();
                    if fsum <= r0sq {
                        for j in 0..d {
                            x[j] = (idx[j] as f64 + 0.5) * ell;
                        }
                        let f = oracle.value(&x);
                        if f.is_nan() {
                            return Err(NlcsError::Evaluation { location: x.clone() });
                        }
                        acc.count += 1;
                        acc.z.push(log_vol - f);
                        let n = crate::numkit::norm(&x);
                        acc.moment.push(log_vol - f + n.ln());
                        acc.min_all = acc.min_all.min(f);
                        if idx.iter().map(|&i| near(i)).sum::<f64>() <= jsq {
                            acc.min_j = acc.min_j.min(f);
                        }
                    }
                    let mut a = d - 1;
                    loop {
                        if a == 0 {
                            break 'odo;
                        }
                        if idx[a] < k - 1 {
                            idx[a] += 1;
                            break;
                        }
                        idx[a] = -k;
                        a -= 1;
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = Partial::new();
    for p in partials {
        total = total.merge(&p?);
    }
    if !total.min_j.is_finite() {
        return Err(NlcsError::Numeric("no finite center value inside B_2R".into()));
    }
    let log_z_hat = total.z.value();
    Ok(GridEstimates {
        spec,
        f_hat_star: total.min_j + 0.5 * d as f64,
        log_z_hat,
        cubes_visited: total.count,
        queries: QueryLedger { value_queries: total.count, grad_queries: 0 },
        min_center_value: total.min_all,
        first_moment: (total.moment.value() - log_z_hat).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{counted, make_gaussian};
    use nalgebra::DMatrix;

    #[test]
    fn gaussian_1d_sandwich() {
        let g = make_gaussian(vec![0.0], DMatrix::identity(1, 1)).unwrap();
        let c = counted(&g);
        let est = estimate_grid(&c, 1.0, 1.0, 0.05, 1e9).unwrap();
        let fstar = 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!(est.f_hat_star >= fstar && est.f_hat_star <= fstar + 1.0);
        let ratio = est.log_z_hat.exp();
        assert!(ratio >= 0.5 * (-1f64).exp() && ratio <= 1.0);
        assert_eq!(c.ledger(), est.queries);
        assert!((est.cubes_visited as f64) <= GridSpec::count_bound(1.0, 1.0, 0.05, 1));
        assert!((est.first_moment - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn cube_count_matches_brute_force_2d() {
        let g = make_gaussian(vec![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let est = estimate_grid(&g, 1.0, 2.0, 200.0, 1e9).unwrap();
        let s = est.spec;
        let k = (s.r0 / s.ell).ceil() as i64 + 2;
        let mut n = 0u64;
        for a in -k..k {
            for b in -k..k {
                let ok = [(a, b), (a + 1, b), (a, b + 1), (a + 1, b + 1)]
                    .iter()
                    .all(|&(p, q)| ((p * p + q * q) as f64) * s.ell * s.ell <= s.r0 * s.r0);
                n += ok as u64;
            }
        }
        assert_eq!(est.cubes_visited, n);
    }

    #[test]
    fn budget_error_reports_projection() {
        let g = make_gaussian(vec![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        match estimate_grid(&g, 1.0, 2.0, 0.01, 1e6) {
            Err(NlcsError::Budget { projected, .. }) => assert!(projected > 1e6),
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
