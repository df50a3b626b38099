//! Seed-parallel experiment execution and summaries.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use adageo::analysis::rate_fit;
use adageo::optimizers::{run, Trajectory};
use adageo::problems::Problem;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::trace::{self, Row};
use crate::BenchError;

/// One finished (config, seed) cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub seed: u64,
    pub trajectory: Trajectory,
    pub wall_clock_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Option<Stats> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Some(Stats {
            n,
            mean,
            std: var.sqrt(),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub window: [u64; 2],
    /// Slope fitted to the seed-averaged series.
    pub slope: Option<f64>,
    pub per_seed: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub seed: u64,
    pub step: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub metric_summaries: BTreeMap<String, Stats>,
    pub slopes: BTreeMap<String, SlopeReport>,
    pub floors: BTreeMap<String, f64>,
    #[serde(default)]
    pub failures: Vec<FailureRecord>,
}

/// Per-trace metadata kept beside the trace so traces stay byte-stable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceMeta {
    pub config_hash: String,
    pub seed: u64,
    pub wall_clock_ms: f64,
    pub rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureRecord>,
}

/// Runs every seed, `jobs` at a time, and returns cells sorted by seed.
pub fn run_cells(cfg: &ExperimentConfig, problem: &Problem, jobs: usize) -> Result<Vec<Cell>, BenchError> {
    let x0 = problem.x0();
    let one = |seed: u64| -> Result<Cell, BenchError> {
        let start = Instant::now();
        let trajectory = run(&cfg.algorithm, &cfg.set, problem.objective(), &x0, cfg.horizon, seed)?;
        Ok(Cell { seed, trajectory, wall_clock_ms: start.elapsed().as_secs_f64() * 1e3 })
    };
    let mut cells: Vec<Cell> = if jobs <= 1 {
        cfg.seeds.iter().map(|&s| one(s)).collect::<Result<_, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
        pool.install(|| cfg.seeds.par_iter().map(|&s| one(s)).collect::<Result<_, _>>())?
    };
    cells.sort_by_key(|c| c.seed);
    Ok(cells)
}

fn running_min(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut m = f64::INFINITY;
    v.map(|x| {
        m = m.min(x);
        m
    })
    .collect()
}

fn mean_series(series: &[Vec<f64>]) -> Vec<f64> {
    let n = series.iter().map(Vec::len).min().unwrap_or(0);
    (0..n).map(|i| series.iter().map(|s| s[i]).sum::<f64>() / series.len() as f64).collect()
}

fn fit_window(series: &[f64], window: [u64; 2]) -> Option<f64> {
    let [lo, hi] = window;
    if series.len() <= hi as usize {
        return None;
    }
    let t: Vec<f64> = (lo..=hi).map(|t| t as f64).collect();
    rate_fit(&t, &series[lo as usize..=hi as usize]).ok()
}

fn slope_report(per_seed_series: &[Vec<f64>], window: [u64; 2], what: &str) -> SlopeReport {
    let per_seed: Vec<Option<f64>> = per_seed_series.iter().map(|s| fit_window(s, window)).collect();
    let slope = fit_window(&mean_series(per_seed_series), window);
    let note = slope.is_none().then(|| format!("{what} is not positive over the whole window or the run stopped early"));
    SlopeReport { window, slope, per_seed, note }
}

/// Summary as a pure function of the trace rows (sorted by seed) and f*.
pub fn summarize(
    config_hash: &str,
    traces: &[(u64, Vec<Row>)],
    optimal_value: Option<f64>,
    window: [u64; 2],
    floors: BTreeMap<String, f64>,
) -> Summary {
    let mut metrics: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut push = |k: &str, v: f64| metrics.entry(k.to_owned()).or_default().push(v);
    let accelerated = traces.iter().any(|(_, r)| r.first().is_some_and(|r| r.xbar_loss.is_some()));
    let mut gap_series = Vec::new();
    let mut min_l1_series = Vec::new();
    let mut min_dual_series = Vec::new();
    for (_, rows) in traces {
        let Some(last) = rows.last() else { continue };
        push("final_loss", last.loss);
        push("final_grad_dual", last.grad_dual);
        push("min_grad_l1", rows.iter().map(|r| r.grad_l1).fold(f64::INFINITY, f64::min));
        push("min_grad_dual", rows.iter().map(|r| r.grad_dual).fold(f64::INFINITY, f64::min));
        push("steps_completed", last.t as f64);
        if let Some(x) = last.xbar_loss {
            push("final_xbar_loss", x);
        }
        if let Some(fs) = optimal_value {
            push("final_gap", last.loss - fs);
            if let Some(x) = last.xbar_loss {
                push("final_xbar_gap", x - fs);
            }
            let tracked = |r: &Row| if accelerated { r.xbar_loss.unwrap_or(f64::NAN) } else { r.loss };
            gap_series.push(rows.iter().map(|r| tracked(r) - fs).collect::<Vec<_>>());
        }
        min_l1_series.push(running_min(rows.iter().map(|r| r.grad_l1)));
        min_dual_series.push(running_min(rows.iter().map(|r| r.grad_dual)));
    }
    let mut slopes = BTreeMap::new();
    if optimal_value.is_some() {
        let key = if accelerated { "xbar_gap" } else { "gap" };
        slopes.insert(key.to_owned(), slope_report(&gap_series, window, "the optimality gap"));
    }
    slopes.insert("min_grad_l1".to_owned(), slope_report(&min_l1_series, window, "the running minimum"));
    slopes.insert("min_grad_dual".to_owned(), slope_report(&min_dual_series, window, "the running minimum"));
    let failures = traces
        .iter()
        .filter(|(_, rows)| rows.last().is_none_or(|r| r.t < window[1]))
        .map(|(seed, rows)| FailureRecord {
            seed: *seed,
            step: rows.last().map_or(0, |r| r.t),
            reason: "trace ends before the fit window".into(),
        })
        .collect();
    Summary {
        config_hash: config_hash.to_owned(),
        seeds: traces.iter().map(|(s, _)| *s).collect(),
        metric_summaries: metrics.into_iter().filter_map(|(k, v)| Stats::of(&v).map(|s| (k, s))).collect(),
        slopes,
        floors,
        failures,
    }
}

/// Theoretical reference levels attached to a summary.
pub fn floors_for(problem: &Problem) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    if let Problem::Hard(h) = problem {
        out.insert("min_grad_l1_floor".to_owned(), h.floor());
        out.insert("min_grad_l1_threshold".to_owned(), crate::lowerbound::THRESHOLD_FACTOR * h.floor());
    }
    out
}

/// What a run produced on disk.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    /// Seeds whose runs stopped on a numerical failure.
    pub numerical_failures: Vec<FailureRecord>,
}

/// Runs a config and writes traces, their metadata, and `summary.json` under `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<RunOutcome, BenchError> {
    cfg.check()?;
    let problem = cfg.build_problem()?;
    let hash = cfg.content_hash();
    let cells = run_cells(cfg, &problem, jobs)?;
    std::fs::create_dir_all(out)?;
    let format = cfg.output.format;
    let mut traces = Vec::with_capacity(cells.len());
    let mut numerical_failures = Vec::new();
    for c in &cells {
        let rows = trace::rows_of(&c.trajectory.rows);
        std::fs::write(out.join(trace::file_name(c.seed, format)), trace::render(&rows, format)?)?;
        let failure = c.trajectory.failure.as_ref().map(|f| FailureRecord {
            seed: c.seed,
            step: f.step,
            reason: f.error.to_string(),
        });
        if let Some(f) = &failure {
            numerical_failures.push(f.clone());
        }
        let meta = TraceMeta { config_hash: hash.clone(), seed: c.seed, wall_clock_ms: c.wall_clock_ms, rows: rows.len(), failure };
        std::fs::write(out.join(format!("trace_seed{}.meta.json", c.seed)), serde_json::to_string_pretty(&meta)?)?;
        traces.push((c.seed, rows));
    }
    let mut summary = summarize(&hash, &traces, problem.objective().optimal_value(), cfg.fit_window(), floors_for(&problem));
    for f in &numerical_failures {
        if !summary.failures.iter().any(|g| g.seed == f.seed) {
            summary.failures.push(f.clone());
        }
    }
    summary.failures.sort_by_key(|f| f.seed);
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(RunOutcome { summary, numerical_failures })
}
