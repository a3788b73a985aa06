//! Orchestration: grid → truncation → constants → averaged LMC.

use serde::Serialize;

use super::grid::{estimate_grid, GridEstimates};
use super::lmc::{lmc_run, LmcConfig};
use super::truncated::{build_truncated, TruncatedPotential};
use crate::error::{NlcsError, Result};
use crate::metrics::{poincare_comparison_bound, probe_points, smoothness_probe, ProbeRegion};
use crate::numkit::{norm, SymMatrix};
use crate::oracle::{make_gaussian, Counted, Potential, QueryLedger};

/// User-facing knobs; `None` means derive.
#[derive(Clone, Debug)]
pub struct SamplerOverrides {
    pub n_steps: Option<usize>,
    pub h: Option<f64>,
    pub l_pi: Option<f64>,
    /// Poincaré constant used in the step-count formula.
    pub alpha: Option<f64>,
    pub seed: u64,
    /// Largest admissible projected cube count.
    pub budget: f64,
    /// Cap on the derived step count.
    pub max_default_steps: usize,
    /// Probe points for the smoothness and Poincaré estimates.
    pub probes: usize,
}

impl Default for SamplerOverrides {
    fn default() -> Self {
        Self { n_steps: None, h: None, l_pi: None, alpha: None, seed: 0, budget: 1e8, max_default_steps: 100_000, probes: 4000 }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QueryBreakdown {
    pub grid: QueryLedger,
    pub probes: QueryLedger,
    pub lmc: QueryLedger,
}

#[derive(Clone, Debug, Serialize)]
pub struct SamplerReport {
    pub f_hat_star: f64,
    #[serde(rename = "log_Z_hat")]
    pub log_z_hat: f64,
    pub h1: f64,
    pub h2: f64,
    #[serde(rename = "L_pi")]
    pub l_pi: f64,
    /// `L³R⁴/(h₂−h₁)²`, the order of the analytic smoothness bound.
    #[serde(rename = "L_pi_formula")]
    pub l_pi_formula: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
    #[serde(rename = "N")]
    pub n_steps: usize,
    #[serde(rename = "N_theorem")]
    pub n_theorem: f64,
    pub alpha: f64,
    pub h: f64,
    pub queries: QueryLedger,
    pub query_breakdown: QueryBreakdown,
    pub cubes_visited: u64,
    pub grid: GridEstimates,
    pub seed: u64,
    pub n_samples: usize,
    pub samples_path: Option<String>,
    pub tv_estimate: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct SmoothnessEstimate {
    pub numeric: f64,
    pub formula: f64,
}

/// Numeric smoothness of `f_π` over `B_{2R}` plus the analytic order.
pub fn estimate_smoothness<O: Potential + Sync>(trunc: &TruncatedPotential<O>, probes: usize, seed: u64) -> Result<SmoothnessEstimate> {
    let c = &trunc.consts;
    let region = ProbeRegion::Ball { center: vec![0.0; c.d], radius: 2.0 * c.r };
    let numeric = smoothness_probe(trunc, &region, probes, seed, &[])?;
    let formula = c.l.powi(3) * c.r.powi(4) / (c.h2 - c.h1).powi(2);
    Ok(SmoothnessEstimate { numeric: numeric.max(c.eps * c.d as f64 / c.m), formula })
}

/// `2 + 𝓛 + f_π(0) − min f_π + (d/2)log(4m²𝓛)` with a certified lower
/// bound for `min f_π` and the grid's first-moment estimate for `m`.
pub fn estimate_k0<O: Potential>(trunc: &TruncatedPotential<O>, l_pi: f64, first_moment: f64) -> f64 {
    let c = &trunc.consts;
    let d = c.d as f64;
    let mut edge = vec![0.0; c.d];
    edge[0] = c.r;
    let min_lb = (c.f_hat_star - d + c.log_z_hat).min(c.f_gamma(&edge) - c.eps.ln());
    let f0 = trunc.value(&vec![0.0; c.d]);
    let k0 = 2.0 + l_pi + f0 - min_lb + 0.5 * d * (4.0 * first_moment * first_moment * l_pi).ln();
    k0.max(0.0)
}

/// `max{32²α⁻²𝓛²dK₀/δ⁴, 9K₀/d}`.
pub fn theorem_steps(l_pi: f64, d: usize, k0: f64, alpha: f64, delta: f64) -> f64 {
    let d = d as f64;
    (1024.0 * l_pi * l_pi * d * k0 / (alpha * alpha * delta.powi(4))).max(9.0 * k0 / d)
}

/// Runs the full pipeline for `n_samples` draws.
pub fn sample_nonlogconcave<P: Potential + Sync + ?Sized>(
    oracle: &P,
    l: f64,
    m: f64,
    eps: f64,
    n_samples: usize,
    ov: &SamplerOverrides,
) -> Result<(Vec<Vec<f64>>, SamplerReport)> {
    let d = oracle.dim();
    if !(l > 0.0 && m > 0.0 && eps > 0.0 && eps < 1.0) {
        return Err(NlcsError::domain("sampler needs L, M > 0 and eps in (0, 1)"));
    }
    if n_samples == 0 {
        return Err(NlcsError::domain("sampler needs n_samples >= 1"));
    }
    let g0 = norm(&oracle.grad(&vec![0.0; d]));
    if !(g0 <= 1e-8 * l.max(1.0)) {
        return Err(NlcsError::domain(format!("the potential must be stationary at the origin (|grad f(0)| = {g0:e})")));
    }
    let est = estimate_grid(oracle, l, m, eps, ov.budget)?;

    let probe_oracle = Counted::new(oracle);
    let trunc = build_truncated(&probe_oracle, &est, l, m, eps)?;
    let c = trunc.consts;
    let smooth = estimate_smoothness(&trunc, ov.probes, ov.seed)?;
    let l_pi = ov.l_pi.unwrap_or(smooth.numeric);
    if !(l_pi > 0.0 && l_pi.is_finite()) {
        return Err(NlcsError::domain("smoothness constant must be positive"));
    }
    let k0 = estimate_k0(&trunc, l_pi, est.first_moment);
    let alpha = match ov.alpha {
        Some(a) => a,
        None => {
            let gamma = make_gaussian(vec![0.0; d], SymMatrix::identity(d, d) * (m / (d as f64 * eps)))?;
            let region = ProbeRegion::Ball { center: vec![0.0; d], radius: 3.0 * c.r };
            let pts = probe_points(&region, ov.probes, ov.seed ^ 0x5eed);
            poincare_comparison_bound(&trunc, &gamma, -(2f64).ln(), m, eps, &pts)?.value
        }
    };
    if !(alpha > 0.0) {
        return Err(NlcsError::domain("Poincaré constant must be positive"));
    }
    let n_theorem = theorem_steps(l_pi, d, k0, alpha, 0.5 * eps);
    let n_steps = ov.n_steps.unwrap_or_else(|| n_theorem.ceil().clamp(1.0, ov.max_default_steps as f64) as usize);
    let h = ov.h.unwrap_or_else(|| LmcConfig::auto_step(k0, l_pi, d, n_steps));
    let probes = probe_oracle.ledger();

    let lmc_oracle = Counted::new(oracle);
    let target = trunc.rebind(&lmc_oracle);
    let cfg = LmcConfig { n_steps, h, k0, l_pi, seed: ov.seed, n_samples, guard_radius: 1e6 * c.r };
    let out = lmc_run(&target, &cfg)?;
    let lmc = lmc_oracle.ledger();

    let report = SamplerReport {
        f_hat_star: est.f_hat_star,
        log_z_hat: est.log_z_hat,
        h1: c.h1,
        h2: c.h2,
        l_pi,
        l_pi_formula: smooth.formula,
        k0,
        n_steps,
        n_theorem,
        alpha,
        h,
        queries: est.queries + probes + lmc,
        query_breakdown: QueryBreakdown { grid: est.queries, probes, lmc },
        cubes_visited: est.cubes_visited,
        grid: est,
        seed: ov.seed,
        n_samples,
        samples_path: None,
        tv_estimate: None,
    };
    Ok((out.samples, report))
}
