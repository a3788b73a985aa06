use rand_distr::{Distribution, StandardNormal};

use super::LowerBoundParams;
use crate::error::{NlcsError, Result};
use crate::numkit::norm2;
use crate::rng::stream;

/// Greedy rejection packing of centers on the sphere of radius `3R/4` with
/// pairwise distances above `2r₂`.
pub fn pack_caps(params: &LowerBoundParams, want: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if want == 0 {
        return Err(NlcsError::domain("want at least one center"));
    }
    let d = params.d;
    let radius = 0.75 * params.r();
    let min_sq = (2.0 * params.r2()).powi(2);
    let mut rng = stream(seed, "pack_caps", 0);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(want);
    let mut misses = 0usize;
    let max_misses = 20_000;
    while out.len() < want && misses < max_misses {
        let mut p: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = norm2(&p).sqrt();
        if n == 0.0 {
            continue;
        }
        p.iter_mut().for_each(|v| *v *= radius / n);
        let clear = out.iter().all(|q| {
            let s: f64 = q.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
            s > min_sq
        });
        if clear {
            out.push(p);
            misses = 0;
        } else {
            misses += 1;
        }
    }
    if want >= 2 && out.len() < 2 {
        return Err(NlcsError::Packing { placed: out.len(), wanted: want });
    }
    Ok(out)
}

/// Lattice centers of pitch just above `2r` inside `B_{R/2−r}`.
pub fn pack_opt_centers(r_big: f64, r: f64, d: usize) -> Result<Vec<Vec<f64>>> {
    if d == 0 || !(r > 0.0) || !(r_big > 0.0) {
        return Err(NlcsError::domain("pack_opt_centers needs d >= 1, r > 0, R > 0"));
    }
    let limit = r_big / 2.0 - r;
    if limit < 0.0 {
        return Err(NlcsError::domain(format!("bump radius {r} exceeds R/2 = {}", r_big / 2.0)));
    }
    let pitch = 2.0 * r * (1.0 + 1e-9);
    let k = (limit / pitch).floor() as i64;
    let side = (2 * k + 1) as f64;
    if side.powi(d as i32) > 1e8 {
        return Err(NlcsError::domain(format!("lattice with {:.2e} sites is too large", side.powi(d as i32))));
    }
    let lim2 = limit * limit;
    let mut idx = vec![-k; d];
    let mut out = Vec::new();
    loop {
        let p: Vec<f64> = idx.iter().map(|&i| i as f64 * pitch).collect();
        if norm2(&p) <= lim2 {
            out.push(p);
        }
        let mut a = 0;
        loop {
            if a == d {
                return Ok(out);
            }
            if idx[a] < k {
                idx[a] += 1;
                break;
            }
            idx[a] = -k;
            a += 1;
        }
    }
}
