use std::path::PathBuf;
use std::process;

use adageo_bench::config::{parse_seed_range, ExperimentConfig, Format};
use adageo_bench::lowerbound::{run_lower_bound, Request};
use adageo_bench::validate::{run_suite, Suite, MASTER_SEED};
use adageo_bench::{experiments, runner, BenchError, ExitCode};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "adageo", version, about = "Adaptive-geometry optimizer experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment config and write traces plus summary.json.
    Run {
        #[arg(long, env = "ADAGEO_CONFIG")]
        config: PathBuf,
        /// Overrides the config's seeds, e.g. 0..10 or 0..=9.
        #[arg(long, env = "ADAGEO_SEEDS")]
        seeds: Option<String>,
        #[arg(long, env = "ADAGEO_OUT")]
        out: Option<PathBuf>,
        #[arg(long, env = "ADAGEO_FORMAT")]
        format: Option<String>,
        #[arg(long, env = "ADAGEO_JOBS", default_value_t = 1)]
        jobs: usize,
    },
    /// Run a randomized property suite.
    Validate {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, env = "ADAGEO_SEED", default_value_t = MASTER_SEED)]
        seed: u64,
        #[arg(long, env = "ADAGEO_OUT")]
        out: Option<PathBuf>,
    },
    /// Momentum NSD on the lower-bound construction.
    Lowerbound {
        #[arg(long, default_value_t = 256)]
        d: usize,
        #[arg(long, default_value_t = 128)]
        horizon: u64,
        #[arg(long, default_value_t = 1.0)]
        delta0: f64,
        #[arg(long, default_value_t = 1.0)]
        smoothness: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, env = "ADAGEO_SEEDS", default_value = "0..200")]
        seeds: String,
        #[arg(long, default_value_t = 100_000)]
        audit_draws: u64,
        #[arg(long, env = "ADAGEO_JOBS", default_value_t = 1)]
        jobs: usize,
        #[arg(long, env = "ADAGEO_OUT")]
        out: Option<PathBuf>,
    },
    /// Fixed rate and constant experiments.
    Rates {
        #[arg(long, value_enum, default_value_t = Experiment::All)]
        experiment: Experiment,
        #[arg(long, env = "ADAGEO_SEED", default_value_t = MASTER_SEED)]
        seed: u64,
        #[arg(long, env = "ADAGEO_OUT")]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Acceleration,
    Nsd,
    Separation,
    Sandwiches,
    All,
}

fn emit(value: &impl Serialize, out: Option<&PathBuf>) -> Result<(), BenchError> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn verdict(passed: bool) -> ExitCode {
    if passed {
        ExitCode::Success
    } else {
        ExitCode::PropertyFailure
    }
}

fn dispatch(cmd: Cmd) -> Result<ExitCode, BenchError> {
    match cmd {
        Cmd::Run { config, seeds, out, format, jobs } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seeds {
                cfg.seeds = parse_seed_range(&s)?;
            }
            if let Some(f) = format {
                cfg.output.format = f.parse::<Format>()?;
            }
            let out = out
                .or_else(|| cfg.output.path.clone())
                .ok_or_else(|| BenchError::Config("no output directory: pass --out or set output.path".into()))?;
            let outcome = runner::run_experiment(&cfg, &out, jobs.max(1))?;
            println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
            if outcome.numerical_failures.is_empty() {
                Ok(ExitCode::Success)
            } else {
                for f in &outcome.numerical_failures {
                    eprintln!("{}", serde_json::json!({ "error": "numerical", "seed": f.seed, "step": f.step, "reason": f.reason }));
                }
                Ok(ExitCode::NumericalFailure)
            }
        }
        Cmd::Validate { suite, seed, out } => {
            let report = run_suite(suite.parse::<Suite>()?, seed);
            emit(&report, out.as_ref())?;
            Ok(verdict(report.passed()))
        }
        Cmd::Lowerbound { d, horizon, delta0, smoothness, sigma, eta, alpha, seeds, audit_draws, jobs, out } => {
            let req = Request { d, horizon, delta0, smoothness, sigma, eta, alpha, seeds: parse_seed_range(&seeds)?, audit_draws };
            let report = run_lower_bound(&req, jobs.max(1))?;
            emit(&report, out.as_ref())?;
            Ok(verdict(report.passed()))
        }
        Cmd::Rates { experiment, seed, out } => {
            let mut all = serde_json::Map::new();
            let mut passed = true;
            let want = |e: Experiment| matches!(experiment, Experiment::All) || std::mem::discriminant(&e) == std::mem::discriminant(&experiment);
            if want(Experiment::Acceleration) {
                let r = experiments::acceleration()?;
                passed &= r.passed;
                all.insert("acceleration".into(), serde_json::to_value(r)?);
            }
            if want(Experiment::Nsd) {
                let r = experiments::nsd_deterministic()?;
                passed &= r.passed;
                all.insert("nsd".into(), serde_json::to_value(r)?);
            }
            if want(Experiment::Separation) {
                let r = experiments::noise_separation(experiments::SEP_SEEDS)?;
                passed &= r.passed;
                all.insert("separation".into(), serde_json::to_value(r)?);
            }
            if want(Experiment::Sandwiches) {
                let r = experiments::sandwiches(seed)?;
                passed &= r.passed;
                all.insert("sandwiches".into(), serde_json::to_value(r)?);
            }
            emit(&all, out.as_ref())?;
            Ok(verdict(passed))
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli.cmd) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    };
    process::exit(code as i32);
}
