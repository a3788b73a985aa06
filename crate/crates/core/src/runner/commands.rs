use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::manifest::RunManifest;
use super::spec::{load_spec, Instance, InstanceSpec};
use crate::error::{NlcsError, Result};
use crate::instances::OptInstance;
use crate::metrics::{tv_histogram, HistogramSpec};
use crate::numkit::{norm, norm2, opnorm_sym, spectral_range};
use crate::oracle::{Counted, Potential, QueryLedger};
use crate::oudiag::{
    evolve_mixture, hs_evolution_bounds, mixture_log_hessian_fd, preservation_sweep, score_hessian_via_cov,
    write_sweep_csv, HessianMethod, OuTime, SweepRow,
};
use crate::metrics::{probe_points, ProbeRegion};
use crate::oracle::MixturePotential;
use crate::sampler::{sample_nonlogconcave, SamplerOverrides, SamplerReport};

/// Materializes a spec and writes `instance.json` with derived constants.
pub fn cmd_gen(spec: &InstanceSpec, out: &Path) -> Result<PathBuf> {
    let inst = spec.materialize()?;
    let mut man = RunManifest::begin(spec, "gen", json!({}));
    let path = man.write_json(out, "instance.json", json!({ "spec": spec, "derived": inst.derived() }))?;
    man.finish(out)?;
    Ok(path)
}

#[derive(Clone, Debug)]
pub struct SampleConfig {
    pub l: f64,
    pub m: f64,
    pub eps: f64,
    pub n: usize,
    pub overrides: SamplerOverrides,
}

fn samples_csv(xs: &[Vec<f64>], d: usize) -> String {
    let mut s = (0..d).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for x in xs {
        s.push_str(&x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

/// Runs the sampler and writes `samples.csv` and `report.json`.
pub fn cmd_sample(spec: &InstanceSpec, cfg: &SampleConfig, out: &Path) -> Result<SamplerReport> {
    let inst = spec.materialize()?;
    let f = inst.potential();
    let d = f.dim();
    let ov = &cfg.overrides;
    let config = json!({
        "L": cfg.l, "M": cfg.m, "eps": cfg.eps, "n": cfg.n, "seed": ov.seed,
        "N_steps": ov.n_steps, "h": ov.h, "L_pi": ov.l_pi, "alpha": ov.alpha, "budget": ov.budget,
    });
    let mut man = RunManifest::begin(spec, "sample", config);
    let (xs, mut rep) = sample_nonlogconcave(f, cfg.l, cfg.m, cfg.eps, cfg.n, ov)?;
    if d <= 2 && xs.len() >= 1000 {
        let half = 2.0 * (32.0 * cfg.m / cfg.eps).sqrt();
        let hs = HistogramSpec { support: vec![(-half, half); d], ..Default::default() };
        rep.tv_estimate = tv_histogram(&xs, f, &hs).ok().map(|r| r.tv);
    }
    man.write_raw(out, "samples.csv", samples_csv(&xs, d).as_bytes())?;
    rep.samples_path = Some("samples.csv".into());
    man.write_json(out, "report.json", serde_json::to_value(&rep)?)?;
    man.finish(out)?;
    Ok(rep)
}

#[derive(Clone, Debug)]
pub struct OudiagConfig {
    pub times: Vec<f64>,
    pub method: HessianMethod,
    /// Monte Carlo draws for the covariance route.
    pub n_mc: usize,
    pub n_points: usize,
    pub seed: u64,
}

fn mismatch(kind: &str, method: HessianMethod) -> NlcsError {
    NlcsError::domain(format!("method {} is not available for {kind} instances", method.as_str()))
}

/// Smoothness sweep over `times`, written to `sweep.csv`.
pub fn cmd_oudiag(spec: &InstanceSpec, cfg: &OudiagConfig, out: &Path) -> Result<Vec<SweepRow>> {
    let inst = spec.materialize()?;
    let times = cfg.times.iter().map(|&t| OuTime::new(t)).collect::<Result<Vec<_>>>()?;
    let rows = match &inst {
        Instance::Mixture(p) => mixture_rows(p, &times, cfg)?,
        Instance::Stitched(f) => {
            if cfg.method != HessianMethod::CovarianceIdentity {
                return Err(mismatch("stitched", cfg.method));
            }
            let s = norm2(f.u());
            times
                .iter()
                .map(|&t| {
                    let x0: Vec<f64> = f.u().iter().map(|v| 0.5 * t.shrink() * v).collect();
                    let bound = t.shrink().powi(2) * s - 1.0;
                    if t.t() == 0.0 {
                        let h = f.hessian(&x0)?;
                        Ok(SweepRow { t: 0.0, opnorm: opnorm_sym(&h, 1e-12)?, method: HessianMethod::ClosedForm, mc_stderr: None, bound })
                    } else {
                        let p = score_hessian_via_cov(f, t, &x0, cfg.n_mc, cfg.seed)?;
                        Ok(SweepRow { t: t.t(), opnorm: p.opnorm, method: p.method, mc_stderr: p.mc_stderr, bound })
                    }
                })
                .collect::<Result<Vec<_>>>()?
        }
        Instance::Hs(h) => {
            let d = h.h().len();
            let (lo, hi) = spectral_range(h.j());
            let delta = lo.min(1.0 - hi);
            let pts = probe_points(&ProbeRegion::Ball { center: vec![0.0; d], radius: 3.0 }, cfg.n_points, cfg.seed);
            times
                .iter()
                .map(|&t| {
                    let bound = hs_evolution_bounds(h.j(), delta, t).map(|b| b.1).unwrap_or(f64::NAN);
                    match cfg.method {
                        HessianMethod::CovarianceIdentity => {
                            let p = score_hessian_via_cov(h, t, &vec![0.0; d], cfg.n_mc, cfg.seed)?;
                            Ok(SweepRow { t: t.t(), opnorm: p.opnorm, method: p.method, mc_stderr: p.mc_stderr, bound })
                        }
                        m => {
                            if d > 10 {
                                return Err(mismatch("hs (d > 10)", m));
                            }
                            let ev = evolve_mixture(&h.to_mixture_spec()?, t)?;
                            let mix = MixturePotential::new(ev.clone())?;
                            let mut best = 0.0f64;
                            for x in &pts {
                                let hm = if m == HessianMethod::FiniteDifference {
                                    mixture_log_hessian_fd(&ev, x)?
                                } else {
                                    -mix.neg_log_hessian(x)
                                };
                                best = best.max(opnorm_sym(&hm, 1e-12)?);
                            }
                            Ok(SweepRow { t: t.t(), opnorm: best, method: m, mc_stderr: None, bound })
                        }
                    }
                })
                .collect::<Result<Vec<_>>>()?
        }
        other => {
            return Err(NlcsError::domain(format!("oudiag supports mixture, stitched and hs instances, not {:?}", other.kind())));
        }
    };
    let config = json!({ "times": cfg.times, "method": cfg.method, "n_mc": cfg.n_mc, "n_points": cfg.n_points, "seed": cfg.seed });
    let mut man = RunManifest::begin(spec, "oudiag", config);
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    man.write_raw(out, "sweep.csv", &buf)?;
    man.finish(out)?;
    Ok(rows)
}

fn mixture_rows(p: &MixturePotential, times: &[OuTime], cfg: &OudiagConfig) -> Result<Vec<SweepRow>> {
    let spec = p.spec();
    if cfg.method != HessianMethod::CovarianceIdentity {
        return preservation_sweep(spec, times, cfg.method, cfg.n_points, cfg.seed);
    }
    let mut spread = 0.0f64;
    for a in &spec.means {
        for b in &spec.means {
            spread = spread.max(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum());
        }
    }
    let d = spec.dim();
    times
        .iter()
        .map(|&t| {
            let ev = evolve_mixture(spec, t)?;
            let k = ev.means.len() as f64;
            let x0: Vec<f64> = (0..d).map(|j| ev.means.iter().map(|u| u[j]).sum::<f64>() / k).collect();
            let probe = score_hessian_via_cov(p, t, &x0, cfg.n_mc, cfg.seed)?;
            Ok(SweepRow {
                t: t.t(),
                opnorm: probe.opnorm,
                method: probe.method,
                mc_stderr: probe.mc_stderr,
                bound: (t.shrink().powi(2) * spread).max(1.0),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchAlgo {
    Sampler,
    GridSearch,
}

impl BenchAlgo {
    pub fn as_str(&self) -> &'static str {
        match self {
            BenchAlgo::Sampler => "sampler",
            BenchAlgo::GridSearch => "grid_search",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    /// Sampler smoothness; defaults to the instance's own when it has one.
    pub l: Option<f64>,
    /// Sampler second-moment bound; opt instances default to `5R²`.
    pub m: Option<f64>,
    pub eps: f64,
    pub n: usize,
    pub budget: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub instance: String,
    pub algo: BenchAlgo,
    pub value_q: u64,
    pub grad_q: u64,
    pub success: bool,
}

#[derive(Clone, Debug)]
pub struct GridSearchResult {
    pub ledger: QueryLedger,
    pub success: bool,
    pub hit: Option<Vec<f64>>,
}

/// Scans a lattice covering `B_{R/2}` at pitch `0.99·√2·r/√d` (odometer
/// order) until `f < −ε/2`.
pub fn grid_search(o: &OptInstance) -> GridSearchResult {
    let d = o.center.len();
    let pitch = 0.99 * 2f64.sqrt() * o.r / (d as f64).sqrt();
    let half = o.r_big / 2.0;
    let k = (half / pitch).floor() as i64;
    let f = Counted::new(o);
    let mut idx = vec![-k; d];
    loop {
        let x: Vec<f64> = idx.iter().map(|&i| i as f64 * pitch).collect();
        if norm(&x) <= half && f.value(&x) < -0.5 * o.eps {
            return GridSearchResult { ledger: f.ledger(), success: true, hit: Some(x) };
        }
        let mut a = d;
        loop {
            if a == 0 {
                return GridSearchResult { ledger: f.ledger(), success: false, hit: None };
            }
            a -= 1;
            if idx[a] < k {
                idx[a] += 1;
                break;
            }
            idx[a] = -k;
        }
    }
}

fn instance_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json") && p.file_name().is_some_and(|n| n != "manifest.json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(NlcsError::domain(format!("no instance files in {}", dir.display())));
    }
    Ok(files)
}

/// Query scoreboard over every instance file in `dir`.
pub fn cmd_bench(dir: &Path, algo: BenchAlgo, cfg: &BenchConfig, out: &Path) -> Result<Vec<BenchRow>> {
    let files = instance_files(dir)?;
    let mut rows = Vec::new();
    let mut dim = None;
    let mut specs = Vec::new();
    for path in &files {
        let spec = load_spec(path)?;
        let inst = spec.materialize()?;
        let d = inst.potential().dim();
        if *dim.get_or_insert(d) != d {
            return Err(NlcsError::domain("bench instances must share the dimension"));
        }
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let row = match (algo, &inst) {
            (BenchAlgo::GridSearch, Instance::Opt(o)) => {
                let r = grid_search(o);
                BenchRow { instance: name, algo, value_q: r.ledger.value_queries, grad_q: r.ledger.grad_queries, success: r.success }
            }
            (BenchAlgo::GridSearch, other) => {
                return Err(NlcsError::domain(format!("grid_search needs opt instances, got {:?}", other.kind())));
            }
            (BenchAlgo::Sampler, inst) => sampler_row(name, inst, cfg)?,
        };
        specs.push(spec);
        rows.push(row);
    }
    let mut csv = String::from("instance,algo,value_q,grad_q,success\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{},{}\n", r.instance, r.algo.as_str(), r.value_q, r.grad_q, r.success));
    }
    let config = json!({
        "dir": dir.display().to_string(), "algo": algo, "L": cfg.l, "M": cfg.m, "eps": cfg.eps,
        "n": cfg.n, "budget": cfg.budget, "seed": cfg.seed,
    });
    let mut man = RunManifest::begin(&specs[0], "bench", config);
    man.write_raw(out, "scoreboard.csv", csv.as_bytes())?;
    man.write_json(out, "bench.json", json!({ "instances": specs.iter().map(serde_json::to_value).collect::<std::result::Result<Vec<Value>, _>>()? }))?;
    man.finish(out)?;
    Ok(rows)
}

fn sampler_row(name: String, inst: &Instance, cfg: &BenchConfig) -> Result<BenchRow> {
    let (l0, m0) = match inst {
        Instance::Opt(o) => (Some(o.l), Some(5.0 * o.r_big * o.r_big)),
        Instance::LbBase(b) => (Some(b.params.l), Some(b.params.m)),
        Instance::LbPerturbed(p) => (Some(p.base.params.l), Some(p.base.params.m)),
        _ => (None, None),
    };
    let (l, m) = match (cfg.l.or(l0), cfg.m.or(m0)) {
        (Some(l), Some(m)) => (l, m),
        _ => return Err(NlcsError::domain("bench sampler needs --L and --M for this instance kind")),
    };
    let ov = SamplerOverrides { seed: cfg.seed, budget: cfg.budget, ..Default::default() };
    let algo = BenchAlgo::Sampler;
    match sample_nonlogconcave(inst.potential(), l, m, cfg.eps, cfg.n, &ov) {
        Ok((_, rep)) => Ok(BenchRow {
            instance: name,
            algo,
            value_q: rep.queries.value_queries,
            grad_q: rep.queries.grad_queries,
            success: true,
        }),
        // the grid alone needs `projected` value queries
        Err(NlcsError::Budget { projected, .. }) => {
            Ok(BenchRow { instance: name, algo, value_q: projected.ceil().min(u64::MAX as f64) as u64, grad_q: 0, success: false })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{build_opt_instance, bump_radius, pack_opt_centers};

    #[test]
    fn grid_search_finds_every_planted_bump() {
        let (l, r_big, eps) = (1.0, 4.0, 0.01);
        let centers = pack_opt_centers(r_big, bump_radius(l, eps), 2).unwrap();
        let mut counts = Vec::new();
        for c in centers {
            let o = build_opt_instance(c, l, 0.5, r_big, eps).unwrap();
            let r = grid_search(&o);
            assert!(r.success, "missed bump at {:?}", o.center);
            counts.push(r.ledger.value_queries);
        }
        assert!(counts.iter().max() > counts.iter().min());
    }
}
