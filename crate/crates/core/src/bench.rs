//! Benchmark harness: recovery metrics, level sweeps averaged over seeded
//! runs, and CSV emission.
//!
//! Each run draws one instance (seed = base seed + run index), quantizes it
//! at every level in the sweep, solves with every requested method, and logs
//! the metrics. Cells where a solver fails or reports infeasibility stay
//! empty rather than aborting the sweep. Summary rows carry means and sample
//! standard deviations over the populated cells.

use crate::feasible::build_polytope;
use crate::model::{generate, quantize, MagnitudePrior, QuantSpec};
use crate::solvers::{solve_cqp, solve_l1, support_indices, BnbConfig, SolveStatus};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Recovery quality of one solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Relative squared error ‖x̂ − x̃‖₂² / ‖x̃‖₂².
    #[serde(rename = "relErr")]
    pub rel_err: f64,
    /// False positives over n − k.
    #[serde(rename = "fpRate")]
    pub fp_rate: f64,
    /// False negatives over k.
    #[serde(rename = "fnRate")]
    pub fn_rate: f64,
    /// Seconds inside the solver call.
    #[serde(rename = "runTime")]
    pub run_time: f64,
}

/// Recovery method under test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// l1-norm minimization over the polytope.
    #[serde(rename = "l1")]
    L1,
    /// Global concave quadratic minimization.
    #[serde(rename = "cqp")]
    Cqp,
}

impl Method {
    /// Label used in CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            Method::L1 => "l1",
            Method::Cqp => "cqp",
        }
    }
}

/// How the quantizer's error bound is set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundMode {
    /// Tight nearest-point bound step/2.
    #[serde(rename = "half-step")]
    #[default]
    HalfStep,
    /// Conservative bound of one full step.
    #[serde(rename = "full-step")]
    FullStep,
}

/// Codebook for the given level count and range, with the bound set by the
/// mode.
pub fn quant_spec(levels: usize, range: f64, mode: BoundMode) -> Result<QuantSpec> {
    let spec = QuantSpec::new(levels, range)?;
    match mode {
        BoundMode::HalfStep => Ok(spec),
        BoundMode::FullStep => spec.with_bound(spec.step()),
    }
}

/// Full specification of a level sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Ambient dimension.
    pub n: usize,
    /// Number of measurements.
    pub m: usize,
    /// Sparsity of the generated truth.
    pub k: usize,
    /// Magnitude prior for generation and recovery.
    pub prior: MagnitudePrior,
    /// Quantization level counts to sweep.
    pub levels: Vec<usize>,
    /// Number of random repetitions.
    pub runs: usize,
    /// Base seed; run r uses seed + r.
    pub seed: u64,
    /// Methods to compare.
    pub methods: Vec<Method>,
    /// Quantizer bound mode.
    #[serde(rename = "boundMode", default)]
    pub bound_mode: BoundMode,
}

impl ExperimentConfig {
    /// Checks the sweep is non-degenerate.
    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        if self.levels.is_empty() {
            return Err(Error::InvalidConfig("levels must be non-empty".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("methods must be non-empty".into()));
        }
        Ok(())
    }
}

/// One (run, level, method) cell of the per-run log. `metrics` is None when
/// the solver failed or reported infeasibility.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    /// Run index within the sweep.
    pub run: usize,
    /// Seed the run's instance was drawn with.
    pub seed: u64,
    /// Method that produced the cell.
    pub method: Method,
    /// Quantization levels of the cell.
    pub levels: usize,
    /// Metrics, when the solve succeeded.
    pub metrics: Option<Metrics>,
}

/// Aggregate over the populated cells of one (method, levels) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    /// Method of the aggregate.
    pub method: Method,
    /// Quantization levels of the aggregate.
    pub levels: usize,
    /// Populated cells behind the means.
    pub count: usize,
    /// Mean relative squared error.
    pub rel_err_mean: Option<f64>,
    /// Sample standard deviation of the relative squared error.
    pub rel_err_std: Option<f64>,
    /// Mean false positive rate.
    pub fp_mean: Option<f64>,
    /// Sample standard deviation of the false positive rate.
    pub fp_std: Option<f64>,
    /// Mean false negative rate.
    pub fn_mean: Option<f64>,
    /// Sample standard deviation of the false negative rate.
    pub fn_std: Option<f64>,
    /// Mean solver seconds.
    pub time_mean_s: Option<f64>,
}

/// Result of a sweep: the per-run log and its per-cell aggregation.
#[derive(Clone, Debug)]
pub struct ExperimentTable {
    /// Per-run rows ordered by (run, level, method).
    pub runs: Vec<RunRow>,
    /// One row per (method, levels), methods outermost, in config order.
    pub summary: Vec<SummaryRow>,
}

/// Metrics of an estimate against the truth. Supports on both sides use the
/// solver threshold scaled by d; rate denominators are n − k and k, each
/// treated as 0 when empty.
pub fn compute_metrics(x_hat: &[f64], x_true: &[f64], k: usize, run_time: f64, d: f64) -> Metrics {
    assert_eq!(x_hat.len(), x_true.len(), "estimate and truth must share a length");
    let n = x_hat.len();
    let num: f64 = x_hat.iter().zip(x_true).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = x_true.iter().map(|v| v * v).sum();
    let rel_err = if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let est: std::collections::HashSet<usize> = support_indices(x_hat, d).into_iter().collect();
    let tru: std::collections::HashSet<usize> = support_indices(x_true, d).into_iter().collect();
    let fp = est.difference(&tru).count() as f64;
    let fnn = tru.difference(&est).count() as f64;
    let fp_rate = if n > k { fp / (n - k) as f64 } else { 0.0 };
    let fn_rate = if k > 0 { fnn / k as f64 } else { 0.0 };
    Metrics { rel_err, fp_rate, fn_rate, run_time }
}

fn run_one(cfg: &ExperimentConfig, run: usize) -> Result<Vec<RunRow>> {
    let seed = cfg.seed.wrapping_add(run as u64);
    let inst = generate(cfg.n, cfg.m, cfg.k, cfg.prior, seed)?;
    let range_a = {
        let r = inst.a.max_abs();
        if r > 0.0 {
            r
        } else {
            1.0
        }
    };
    let range_y = inst.y.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let range_y = if range_y > 0.0 { range_y } else { 1.0 };
    let d = cfg.prior.d();
    let mut rows = Vec::with_capacity(cfg.levels.len() * cfg.methods.len());
    for &levels in &cfg.levels {
        let spec_a = quant_spec(levels, range_a, cfg.bound_mode)?;
        let spec_y = quant_spec(levels, range_y, cfg.bound_mode)?;
        let obs = quantize(&inst, &spec_a, &spec_y, cfg.prior)?;
        for &method in &cfg.methods {
            let solved = match method {
                Method::L1 => {
                    let poly = build_polytope(&obs, &vec![f64::INFINITY; cfg.n]);
                    solve_l1(&poly)
                }
                Method::Cqp => {
                    let poly = build_polytope(&obs, &vec![d; cfg.n]);
                    solve_cqp(&poly, d, &BnbConfig::default())
                }
            };
            let metrics = match solved {
                Ok(sol) if sol.status != SolveStatus::Infeasible => {
                    Some(compute_metrics(&sol.x, &inst.x_true, cfg.k, sol.wall_time, d))
                }
                _ => None,
            };
            rows.push(RunRow { run, seed, method, levels, metrics });
        }
    }
    Ok(rows)
}

/// Runs the sweep serially.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentTable> {
    run_experiment_jobs(cfg, 1)
}

/// Runs the sweep on up to `jobs` worker threads. Runs are independent; the
/// log order is (run, level, method) regardless of completion order.
pub fn run_experiment_jobs(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentTable> {
    cfg.validate()?;
    let jobs = jobs.max(1).min(cfg.runs);
    let mut per_run: Vec<Result<Vec<RunRow>>> = Vec::with_capacity(cfg.runs);
    if jobs == 1 {
        for run in 0..cfg.runs {
            per_run.push(run_one(cfg, run));
        }
    } else {
        let slots: Vec<Mutex<Option<Result<Vec<RunRow>>>>> =
            (0..cfg.runs).map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let run = next.fetch_add(1, Ordering::Relaxed);
                    if run >= cfg.runs {
                        break;
                    }
                    let rows = run_one(cfg, run);
                    *slots[run].lock().unwrap() = Some(rows);
                });
            }
        });
        for slot in slots {
            per_run.push(slot.into_inner().unwrap().expect("every run index was claimed"));
        }
    }
    let mut rows = Vec::new();
    for res in per_run {
        rows.extend(res?);
    }
    let summary = summarize(cfg, &rows);
    Ok(ExperimentTable { runs: rows, summary })
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    match values.len() {
        0 => (None, None),
        1 => (Some(values[0]), None),
        cnt => {
            let mean = values.iter().sum::<f64>() / cnt as f64;
            let var =
                values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (cnt - 1) as f64;
            (Some(mean), Some(var.sqrt()))
        }
    }
}

fn summarize(cfg: &ExperimentConfig, rows: &[RunRow]) -> Vec<SummaryRow> {
    let mut out = Vec::with_capacity(cfg.methods.len() * cfg.levels.len());
    for &method in &cfg.methods {
        for &levels in &cfg.levels {
            let cells: Vec<Metrics> = rows
                .iter()
                .filter(|r| r.method == method && r.levels == levels)
                .filter_map(|r| r.metrics)
                .collect();
            let pick = |f: fn(&Metrics) -> f64| cells.iter().map(f).collect::<Vec<f64>>();
            let (rel_err_mean, rel_err_std) = mean_std(&pick(|m| m.rel_err));
            let (fp_mean, fp_std) = mean_std(&pick(|m| m.fp_rate));
            let (fn_mean, fn_std) = mean_std(&pick(|m| m.fn_rate));
            let (time_mean_s, _) = mean_std(&pick(|m| m.run_time));
            out.push(SummaryRow {
                method,
                levels,
                count: cells.len(),
                rel_err_mean,
                rel_err_std,
                fp_mean,
                fp_std,
                fn_mean,
                fn_std,
                time_mean_s,
            });
        }
    }
    out
}

fn field(v: Option<f64>) -> String {
    v.map(crate::jsonio::format_f64).unwrap_or_default()
}

/// Summary CSV; empty fields mark cells without any populated run.
pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out =
        String::from("method,levels,rel_err_mean,rel_err_std,fp_mean,fp_std,fn_mean,fn_std,time_mean_s\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.method.label(),
            r.levels,
            field(r.rel_err_mean),
            field(r.rel_err_std),
            field(r.fp_mean),
            field(r.fp_std),
            field(r.fn_mean),
            field(r.fn_std),
            field(r.time_mean_s),
        ));
    }
    out
}

/// Per-run CSV; failed cells leave the metric fields empty.
pub fn runs_csv(rows: &[RunRow]) -> String {
    let mut out = String::from("run,seed,method,levels,rel_err,fp,fn,time_s\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.run,
            r.seed,
            r.method.label(),
            r.levels,
            field(r.metrics.map(|m| m.rel_err)),
            field(r.metrics.map(|m| m.fp_rate)),
            field(r.metrics.map(|m| m.fn_rate)),
            field(r.metrics.map(|m| m.run_time)),
        ));
    }
    out
}
