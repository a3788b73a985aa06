use rayon::prelude::*;
use serde::Serialize;

use crate::error::{NlcsError, Result};
use crate::numkit::{integrate, LogSumExp};
use crate::numkit::gk15_nodes;
use crate::oracle::Potential;

/// Tensor trapezoid grid on a box in one or two dimensions.
#[derive(Clone, Debug, Serialize)]
pub struct QuadratureGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Nodes per axis.
    pub n: Vec<usize>,
}

impl QuadratureGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        let d = lo.len();
        if !(1..=2).contains(&d) || hi.len() != d || n.len() != d {
            return Err(NlcsError::domain("quadrature grids are 1- or 2-dimensional"));
        }
        if n.iter().any(|&k| k < 64) {
            return Err(NlcsError::domain("quadrature resolution must be at least 64 per axis"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
            return Err(NlcsError::domain("quadrature box must have positive extent"));
        }
        Ok(Self { lo, hi, n })
    }

    /// Centered cube `[−half, half]^d` with `n` nodes per axis.
    pub fn cube(d: usize, half: f64, n: usize) -> Result<Self> {
        Self::new(vec![-half; d], vec![half; d], vec![n; d])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn step(&self, a: usize) -> f64 {
        (self.hi[a] - self.lo[a]) / (self.n[a] - 1) as f64
    }

    fn node(&self, a: usize, i: usize) -> f64 {
        self.lo[a] + i as f64 * self.step(a)
    }

    fn log_weight(&self, a: usize, i: usize) -> f64 {
        let h = self.step(a);
        if i == 0 || i == self.n[a] - 1 { (0.5 * h).ln() } else { h.ln() }
    }

    /// Log-weights per row for the first axis; second axis enumerated inside.
    pub(super) fn rows(&self) -> usize {
        self.n[0]
    }

    pub(super) fn row_nodes(&self, i: usize) -> Vec<(Vec<f64>, f64)> {
        let x0 = self.node(0, i);
        let w0 = self.log_weight(0, i);
        if self.dim() == 1 {
            vec![(vec![x0], w0)]
        } else {
            (0..self.n[1]).map(|j| (vec![x0, self.node(1, j)], w0 + self.log_weight(1, j))).collect()
        }
    }

    /// Boundary nodes with their inward neighbor and transverse log-weight.
    fn boundary(&self) -> Vec<(Vec<f64>, Vec<f64>, f64)> {
        let d = self.dim();
        let mut out = Vec::new();
        for a in 0..d {
            for side in [0usize, self.n[a] - 1] {
                let inward = if side == 0 { 1 } else { self.n[a] - 2 };
                let others: Vec<usize> = if d == 1 { vec![0] } else { (0..self.n[1 - a]).collect() };
                for &j in &others {
                    let mut b = vec![0.0; d];
                    let mut c = vec![0.0; d];
                    b[a] = self.node(a, side);
                    c[a] = self.node(a, inward);
                    let mut lw = 0.0;
                    if d == 2 {
                        b[1 - a] = self.node(1 - a, j);
                        c[1 - a] = b[1 - a];
                        lw = self.log_weight(1 - a, j);
                    }
                    out.push((b, c, lw));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TvMethod {
    Quadrature,
    Histogram,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TvResult {
    pub tv: f64,
    pub mass_defect: f64,
    pub method: TvMethod,
}

fn log_z_on_grid<P: Potential + Sync + ?Sized>(f: &P, grid: &QuadratureGrid) -> Result<f64> {
    let rows: Vec<Result<LogSumExp>> = (0..grid.rows())
        .into_par_iter()
        .map(|i| {
            let mut acc = LogSumExp::new();
            for (x, lw) in grid.row_nodes(i) {
                let v = f.value(&x);
                if v.is_nan() {
                    return Err(NlcsError::Evaluation { location: x });
                }
                acc.push(lw - v);
            }
            Ok(acc)
        })
        .collect();
    let mut acc = LogSumExp::new();
    for r in rows {
        acc.merge(&r?);
    }
    Ok(acc.value())
}

/// Tail mass beyond the box, relative to the in-box mass, from an exponential
/// envelope fitted at each boundary node.
fn tail_defect<P: Potential + ?Sized>(f: &P, grid: &QuadratureGrid, log_z: f64) -> f64 {
    let mut acc = LogSumExp::new();
    for (b, c, lw) in grid.boundary() {
        let (fb, fc) = (f.value(&b), f.value(&c));
        let h: f64 = b.iter().zip(&c).map(|(p, q)| (p - q).abs()).sum();
        let slope = (fb - fc) / h;
        let span: f64 = grid.lo.iter().zip(&grid.hi).map(|(a, z)| z - a).fold(0.0, f64::max);
        // a non-decaying edge is charged a full box width of density
        let len = if slope > 0.0 { (1.0 / slope).min(span) } else { span };
        acc.push(lw - fb + len.ln());
    }
    (acc.value() - log_z).exp()
}

/// Log of `∫ e^{−f}` over the grid (trapezoid).
pub fn log_normalizer_quadrature<P: Potential + Sync + ?Sized>(f: &P, grid: &QuadratureGrid) -> Result<f64> {
    if f.dim() != grid.dim() {
        return Err(NlcsError::domain("potential and grid dimensions differ"));
    }
    log_z_on_grid(f, grid)
}

/// `½∫|p₁ − p₂|` of the two normalized densities on the grid.
pub fn tv_quadrature<P, Q>(f1: &P, f2: &Q, grid: &QuadratureGrid) -> Result<TvResult>
where
    P: Potential + Sync + ?Sized,
    Q: Potential + Sync + ?Sized,
{
    if f1.dim() != grid.dim() || f2.dim() != grid.dim() {
        return Err(NlcsError::domain("tv_quadrature supports d <= 2 with matching grid"));
    }
    let z1 = log_z_on_grid(f1, grid)?;
    let z2 = log_z_on_grid(f2, grid)?;
    let defect = tail_defect(f1, grid, z1).max(tail_defect(f2, grid, z2));
    if defect > 1e-3 {
        return Err(NlcsError::GridTooSmall { defect });
    }
    let rows: Vec<f64> = (0..grid.rows())
        .into_par_iter()
        .map(|i| {
            grid.row_nodes(i)
                .into_iter()
                .map(|(x, lw)| {
                    let a = (lw - f1.value(&x) - z1).exp();
                    let b = (lw - f2.value(&x) - z2).exp();
                    (a - b).abs()
                })
                .sum::<f64>()
        })
        .collect();
    let tv = 0.5 * rows.iter().sum::<f64>();
    Ok(TvResult { tv: tv.min(1.0), mass_defect: defect, method: TvMethod::Quadrature })
}

/// Binning for `tv_histogram`. `support` must hold essentially all of the
/// density's mass; `range` (default: `support`) is where bins are laid out.
#[derive(Clone, Debug, Default)]
pub struct HistogramSpec {
    pub support: Vec<(f64, f64)>,
    pub range: Option<Vec<(f64, f64)>>,
    pub bins: Option<usize>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < sorted.len() { sorted[i] * (1.0 - f) + sorted[i + 1] * f } else { sorted[i] }
}

fn bin_count(samples: &[Vec<f64>], axis: usize, range: (f64, f64), d: usize) -> usize {
    let mut v: Vec<f64> = samples.iter().map(|s| s[axis]).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    let iqr = quantile(&v, 0.75) - quantile(&v, 0.25);
    let n = v.len() as f64;
    let width = 2.0 * iqr * n.powf(-1.0 / (d as f64 + 2.0));
    let cap = if d == 1 { 2000 } else { 100 };
    if width > 0.0 {
        (((range.1 - range.0) / width).ceil() as usize).clamp(8, cap)
    } else {
        64.min(cap)
    }
}

/// Mass of `e^{−(f−shift)}` on a box, by adaptive quadrature (1-d) or
/// tensor Gauss–Kronrod panels (2-d).
fn box_mass<P: Potential + ?Sized>(f: &P, lo: &[f64], hi: &[f64], shift: f64, split: usize) -> f64 {
    if lo.len() == 1 {
        let w = (hi[0] - lo[0]) / split as f64;
        (0..split)
            .map(|k| {
                let a = lo[0] + k as f64 * w;
                integrate(|x| (shift - f.value(&[x])).exp(), a, a + w, 1e-300, 1e-9)
                    .map(|r| r.value)
                    .unwrap_or_else(|e| match e {
                        NlcsError::Convergence { best, .. } => best,
                        _ => f64::NAN,
                    })
            })
            .sum()
    } else {
        let (wx, wy) = ((hi[0] - lo[0]) / split as f64, (hi[1] - lo[1]) / split as f64);
        let mut s = 0.0;
        for a in 0..split {
            for b in 0..split {
                let (x0, y0) = (lo[0] + a as f64 * wx, lo[1] + b as f64 * wy);
                for (x, u) in gk15_nodes(x0, x0 + wx) {
                    for (y, v) in gk15_nodes(y0, y0 + wy) {
                        s += u * v * (shift - f.value(&[x, y])).exp();
                    }
                }
            }
        }
        s
    }
}

/// TV between the empirical histogram and the binned density `e^{−f}`.
pub fn tv_histogram<P: Potential + Sync + ?Sized>(samples: &[Vec<f64>], f: &P, spec: &HistogramSpec) -> Result<TvResult> {
    let d = f.dim();
    if !(1..=2).contains(&d) || spec.support.len() != d {
        return Err(NlcsError::domain("tv_histogram supports d <= 2 with a support box per axis"));
    }
    if samples.len() < 1000 {
        return Err(NlcsError::domain(format!("tv_histogram needs >= 1000 samples, got {}", samples.len())));
    }
    if samples.iter().any(|s| s.len() != d) {
        return Err(NlcsError::domain("sample dimension mismatch"));
    }
    let range = spec.range.clone().unwrap_or_else(|| spec.support.clone());
    let nb: Vec<usize> = (0..d).map(|a| spec.bins.unwrap_or_else(|| bin_count(samples, a, range[a], d))).collect();
    let widths: Vec<f64> = (0..d).map(|a| (range[a].1 - range[a].0) / nb[a] as f64).collect();
    let total_bins: usize = nb.iter().product();
    let lo_s: Vec<f64> = spec.support.iter().map(|p| p.0).collect();
    let hi_s: Vec<f64> = spec.support.iter().map(|p| p.1).collect();

    // Reference level so the exponentials stay in range.
    let shift = (0..total_bins)
        .map(|b| {
            let c: Vec<f64> = (0..d).map(|a| range[a].0 + (bin_axis(b, a, &nb) as f64 + 0.5) * widths[a]).collect();
            f.value(&c)
        })
        .chain(std::iter::once(f.value(&lo_s.iter().zip(&hi_s).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<_>>())))
        .fold(f64::INFINITY, f64::min);
    let z_split = if d == 1 { 512 } else { 160 };
    let z = box_mass(f, &lo_s, &hi_s, shift, z_split);
    let truth: Vec<f64> = (0..total_bins)
        .into_par_iter()
        .map(|b| {
            let lo: Vec<f64> = (0..d).map(|a| range[a].0 + bin_axis(b, a, &nb) as f64 * widths[a]).collect();
            let hi: Vec<f64> = (0..d).map(|a| lo[a] + widths[a]).collect();
            box_mass(f, &lo, &hi, shift, if d == 1 { 1 } else { 2 }) / z
        })
        .collect();
    if !(z > 0.0) || truth.iter().any(|t| !t.is_finite()) {
        return Err(NlcsError::Numeric("density mass is not finite on the support".into()));
    }
    let t_in: f64 = truth.iter().sum();
    let t_out = (1.0 - t_in).max(0.0);
    if t_out > 0.5 {
        return Err(NlcsError::Range { outside: t_out });
    }
    let mut counts = vec![0u64; total_bins];
    let mut outside = 0u64;
    for s in samples {
        let mut b = 0usize;
        let mut ok = true;
        for a in (0..d).rev() {
            let k = ((s[a] - range[a].0) / widths[a]).floor();
            if !(k >= 0.0 && (k as usize) < nb[a]) {
                ok = false;
                break;
            }
            b = b * nb[a] + k as usize;
        }
        if ok { counts[b] += 1 } else { outside += 1 }
    }
    let n = samples.len() as f64;
    let mut tv = (outside as f64 / n - t_out).abs();
    for (c, t) in counts.iter().zip(&truth) {
        tv += (*c as f64 / n - t).abs();
    }
    Ok(TvResult { tv: (0.5 * tv).min(1.0), mass_defect: (t_in - 1.0).max(0.0), method: TvMethod::Histogram })
}

fn bin_axis(b: usize, a: usize, nb: &[usize]) -> usize {
    let mut r = b;
    for k in 0..a {
        r /= nb[k];
    }
    r % nb[a]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::make_gaussian;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_distr::StandardNormal;
    use statrs::function::erf::erf;

    fn phi(x: f64) -> f64 {
        0.5 * (1.0 + erf(x / 2f64.sqrt()))
    }

    fn g1(m: f64) -> crate::oracle::GaussianPotential {
        make_gaussian(vec![m], DMatrix::identity(1, 1)).unwrap()
    }

    #[test]
    fn tv_gaussians_1d() {
        let grid = QuadratureGrid::new(vec![-12.0], vec![23.0], vec![8001]).unwrap();
        let same = tv_quadrature(&g1(0.0), &g1(0.0), &grid).unwrap();
        assert!(same.tv.abs() < 1e-10);
        let near = tv_quadrature(&g1(0.0), &g1(1.0), &grid).unwrap();
        assert!((near.tv - (2.0 * phi(0.5) - 1.0)).abs() < 1e-4);
        let far = tv_quadrature(&g1(0.0), &g1(10.0), &grid).unwrap();
        assert!((far.tv - (1.0 - 2.0 * phi(-5.0))).abs() < 1e-6);
    }

    #[test]
    fn small_box_rejected() {
        let grid = QuadratureGrid::new(vec![-2.0], vec![2.0], vec![400]).unwrap();
        assert!(matches!(tv_quadrature(&g1(0.0), &g1(0.5), &grid), Err(NlcsError::GridTooSmall { .. })));
        assert!(QuadratureGrid::new(vec![-2.0], vec![2.0], vec![10]).is_err());
    }

    #[test]
    fn histogram_floor_and_extremes() {
        let g = g1(0.0);
        let spec = HistogramSpec { support: vec![(-10.0, 10.0)], ..Default::default() };
        let mut rng = crate::rng::stream(5, "test", 0);
        let xs: Vec<Vec<f64>> = (0..100_000).map(|_| vec![rng.sample::<f64, _>(StandardNormal)]).collect();
        let r = tv_histogram(&xs, &g, &spec).unwrap();
        assert!(r.tv <= 0.05, "noise floor {}", r.tv);
        let pt: Vec<Vec<f64>> = vec![vec![0.0]; 2000];
        assert!(tv_histogram(&pt, &g, &spec).unwrap().tv > 0.8);
        // quantile "samples" reproduce bin masses
        let n = 20_000;
        let q: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let p = (i as f64 + 0.5) / n as f64;
                let (mut a, mut b) = (-10.0, 10.0);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if phi(m) < p { a = m } else { b = m }
                }
                vec![0.5 * (a + b)]
            })
            .collect();
        assert!(tv_histogram(&q, &g, &spec).unwrap().tv < 0.01);
    }

    #[test]
    fn histogram_range_error() {
        let g = g1(0.0);
        let spec = HistogramSpec { support: vec![(-10.0, 10.0)], range: Some(vec![(3.0, 4.0)]), bins: Some(10) };
        let xs: Vec<Vec<f64>> = (0..1000).map(|i| vec![i as f64 / 1000.0]).collect();
        assert!(matches!(tv_histogram(&xs, &g, &spec), Err(NlcsError::Range { .. })));
    }
}
