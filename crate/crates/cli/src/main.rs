use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use nlcs_core::oudiag::HessianMethod;
use nlcs_core::runner::{
    cmd_bench, cmd_gen, cmd_oudiag, cmd_sample, load_spec, BenchAlgo, BenchConfig, InstanceKind, OudiagConfig,
    SampleConfig,
};
use nlcs_core::sampler::SamplerOverrides;
use nlcs_core::{NlcsError, Result};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Gen,
    Sample,
    Oudiag,
    Bench,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Method {
    ClosedForm,
    FiniteDifference,
    CovarianceIdentity,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Algo {
    Sampler,
    GridSearch,
}

/// Grid-truncated Langevin sampling laboratory.
#[derive(Debug, Parser)]
#[command(name = "nlcs", version)]
struct Cli {
    command: Command,
    /// Instance spec or instance file (gen, sample, oudiag).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Directory of instance files (bench).
    #[arg(long)]
    dir: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long = "M")]
    m: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Samples (sample, bench) or Monte Carlo draws (oudiag).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "N-steps")]
    n_steps: Option<usize>,
    /// LMC step size.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long = "L-pi")]
    l_pi: Option<f64>,
    /// Poincaré constant used in the step-count formula.
    #[arg(long)]
    alpha: Option<f64>,
    /// Largest admissible projected cube count.
    #[arg(long, default_value_t = 1e8)]
    budget: f64,
    /// Comma-separated OU times (oudiag).
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,1.5,2,3")]
    t: Vec<f64>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Probe points per time (oudiag).
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, value_enum, default_value = "sampler")]
    algo: Algo,
    /// Worker threads; 1 gives the reference serial schedule.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| NlcsError::Schema { path: flag.into(), msg: "required for this command".into() })
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| NlcsError::Domain(e.to_string()))?;
    }
    match cli.command {
        Command::Gen => {
            let mut spec = load_spec(&need(cli.spec, "--spec")?)?;
            if let Some(obj) = spec.params.as_object_mut() {
                let pairs = [("d", cli.d.map(|v| v as f64)), ("L", cli.l), ("M", cli.m), ("eps", cli.eps)];
                for (k, v) in pairs {
                    if let Some(v) = v {
                        let num = if k == "d" { serde_json::json!(v as usize) } else { serde_json::json!(v) };
                        obj.insert(k.into(), num);
                    }
                }
            }
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let path = cmd_gen(&spec, &cli.out)?;
            println!("{}", path.display());
        }
        Command::Sample => {
            let spec = load_spec(&need(cli.spec, "--spec")?)?;
            let overrides = SamplerOverrides {
                n_steps: cli.n_steps,
                h: cli.h,
                l_pi: cli.l_pi,
                alpha: cli.alpha,
                seed: cli.seed.unwrap_or(0),
                budget: cli.budget,
                ..Default::default()
            };
            let cfg = SampleConfig {
                l: need(cli.l, "--L")?,
                m: need(cli.m, "--M")?,
                eps: need(cli.eps, "--eps")?,
                n: cli.n.unwrap_or(1000),
                overrides,
            };
            let rep = cmd_sample(&spec, &cfg, &cli.out)?;
            println!(
                "N={} h={:.3e} K0={:.3} L_pi={:.3} queries: value={} grad={}{}",
                rep.n_steps,
                rep.h,
                rep.k0,
                rep.l_pi,
                rep.queries.value_queries,
                rep.queries.grad_queries,
                rep.tv_estimate.map(|t| format!(" tv_estimate={t:.4}")).unwrap_or_default()
            );
        }
        Command::Oudiag => {
            let spec = load_spec(&need(cli.spec, "--spec")?)?;
            let method = match cli.method {
                Some(Method::ClosedForm) => HessianMethod::ClosedForm,
                Some(Method::FiniteDifference) => HessianMethod::FiniteDifference,
                Some(Method::CovarianceIdentity) => HessianMethod::CovarianceIdentity,
                None if spec.kind == InstanceKind::Stitched => HessianMethod::CovarianceIdentity,
                None => HessianMethod::ClosedForm,
            };
            let cfg = OudiagConfig {
                times: cli.t,
                method,
                n_mc: cli.n.unwrap_or(100_000),
                n_points: cli.points,
                seed: cli.seed.unwrap_or(0),
            };
            let rows = cmd_oudiag(&spec, &cfg, &cli.out)?;
            println!("{} rows -> {}", rows.len(), cli.out.join("sweep.csv").display());
        }
        Command::Bench => {
            let algo = match cli.algo {
                Algo::Sampler => BenchAlgo::Sampler,
                Algo::GridSearch => BenchAlgo::GridSearch,
            };
            let cfg = BenchConfig {
                l: cli.l,
                m: cli.m,
                eps: cli.eps.unwrap_or(0.1),
                n: cli.n.unwrap_or(100),
                budget: cli.budget,
                seed: cli.seed.unwrap_or(0),
            };
            let rows = cmd_bench(&need(cli.dir, "--dir")?, algo, &cfg, &cli.out)?;
            for r in rows {
                println!("{} {} value_q={} grad_q={} success={}", r.instance, r.algo.as_str(), r.value_q, r.grad_q, r.success);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
