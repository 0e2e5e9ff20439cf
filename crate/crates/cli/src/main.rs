//! qsparse command line: generate ground-truth instances, quantize them,
//! solve the recovery problems, certify recovery conditions, and run
//! benchmark sweeps.
//!
//! Exit codes: 0 success (or condition holds), 1 condition fails, 2 usage or
//! malformed input, 3 infeasible, 4 node budget exhausted.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use qsparse_core::bench::{
    quant_spec, run_experiment_jobs, runs_csv, summary_csv, BoundMode, ExperimentConfig,
};
use qsparse_core::conditions::{
    check_prop1, check_prop2_mode, check_prop3_mode, ConditionReport, QuantifierMode,
};
use qsparse_core::feasible::build_polytope;
use qsparse_core::jsonio::{from_json_str, to_json_string};
use qsparse_core::linalg::Matrix;
use qsparse_core::model::{generate, quantize, Document, MagnitudePrior, Observation};
use qsparse_core::solvers::{
    oracle_vertex_min, solve_cqp, solve_l1, support_indices, BnbConfig, Solution, SolveStatus,
};

const EXIT_FAILS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(
    name = "qsparse",
    version,
    about = "Sparse non-negative recovery from quantized compressed measurements"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw a random ground-truth instance and write it as JSON.
    Generate(GenerateArgs),
    /// Quantize an instance's matrix and outputs onto uniform codebooks.
    Quantize(QuantizeArgs),
    /// Recover a vector from a quantized observation.
    Solve(SolveArgs),
    /// Certify a recovery condition on a stored matrix.
    Check(CheckArgs),
    /// Run a benchmark sweep from a JSON config.
    Experiment(ExperimentArgs),
    /// Exhaustive vertex-enumeration reference solve (small n only).
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Parameter dimension.
    #[arg(long)]
    n: usize,
    /// Number of measurements.
    #[arg(long)]
    m: usize,
    /// Sparsity of the true vector.
    #[arg(long)]
    k: usize,
    /// Magnitude prior lower bound.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Magnitude prior upper bound.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QuantizeArgs {
    /// Instance JSON produced by `generate`.
    #[arg(long, value_name = "FILE")]
    r#in: PathBuf,
    /// Codebook size per component.
    #[arg(long)]
    levels: usize,
    /// Perturbation bound attached to the codebooks.
    #[arg(long, value_enum, default_value_t = BoundModeArg::HalfStep)]
    bound_mode: BoundModeArg,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Recovery method.
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Observation JSON (a quantized document).
    #[arg(long, value_name = "FILE")]
    r#in: PathBuf,
    /// Optional path for the solution JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Absolute optimality gap for the branch-and-bound solver.
    #[arg(long, default_value_t = 1e-8)]
    gap: f64,
    /// Node budget for the branch-and-bound solver.
    #[arg(long, default_value_t = 1_000_000)]
    max_nodes: usize,
}

#[derive(Args)]
struct CheckArgs {
    /// Which condition to certify: 1, 2 or 3.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    prop: u8,
    /// Document JSON carrying the matrix and prior.
    #[arg(long, value_name = "FILE")]
    r#in: PathBuf,
    /// Output perturbation bound; defaults to the document's deltaY.
    #[arg(long)]
    delta_y: Option<f64>,
    /// Matrix perturbation bound (prop 3); defaults to the document's deltaA.
    #[arg(long)]
    delta_a: Option<f64>,
    /// Quantify over all sign patterns instead of skipping same-support ones.
    #[arg(long)]
    literal: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Sweep configuration JSON.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Directory for summary.csv, runs.csv and manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Worker threads for the runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct OracleArgs {
    /// Observation JSON (a quantized document).
    #[arg(long, value_name = "FILE")]
    r#in: PathBuf,
    /// Optional path for the solution JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    L1,
    Cqp,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundModeArg {
    HalfStep,
    FullStep,
}

impl From<BoundModeArg> for BoundMode {
    fn from(v: BoundModeArg) -> BoundMode {
        match v {
            BoundModeArg::HalfStep => BoundMode::HalfStep,
            BoundModeArg::FullStep => BoundMode::FullStep,
        }
    }
}

#[derive(Serialize)]
struct RunManifest<'c> {
    tool: &'static str,
    version: &'static str,
    #[serde(rename = "startedAt")]
    started_at: String,
    #[serde(rename = "finishedAt")]
    finished_at: String,
    jobs: usize,
    config: &'c ExperimentConfig,
    seeds: Vec<u64>,
    outputs: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Generate(a) => cmd_generate(a),
        Cmd::Quantize(a) => cmd_quantize(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Check(a) => cmd_check(a),
        Cmd::Experiment(a) => cmd_experiment(a),
        Cmd::Oracle(a) => cmd_oracle(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_string(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_document(path: &Path) -> Result<Document, String> {
    from_json_str::<Document>(&read_to_string(path)?).map_err(|e| e.to_string())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let mut text = to_json_string(value).map_err(|e| e.to_string())?;
    text.push('\n');
    write_string(path, &text)
}

fn cmd_generate(a: GenerateArgs) -> Result<u8, String> {
    let prior = MagnitudePrior::new(a.alpha, a.beta).map_err(|e| e.to_string())?;
    let inst = generate(a.n, a.m, a.k, prior, a.seed).map_err(|e| e.to_string())?;
    let doc = Document::from_instance(&inst, &prior, Some(a.seed));
    write_json(&a.out, &doc)?;
    println!(
        "generated n={} m={} k={} alpha={} beta={} seed={} -> {}",
        a.n,
        a.m,
        a.k,
        a.alpha,
        a.beta,
        a.seed,
        a.out.display()
    );
    Ok(0)
}

fn max_abs_or_one(values: impl Iterator<Item = f64>) -> f64 {
    let r = values.fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if r > 0.0 {
        r
    } else {
        1.0
    }
}

fn cmd_quantize(a: QuantizeArgs) -> Result<u8, String> {
    let mut doc = read_document(&a.r#in)?;
    let inst = doc.instance().map_err(|e| e.to_string())?;
    let prior = doc.prior().map_err(|e| e.to_string())?;
    let mode: BoundMode = a.bound_mode.into();
    let range_a = max_abs_or_one(inst.a.data().iter().copied());
    let range_y = max_abs_or_one(inst.y.iter().copied());
    let spec_a = quant_spec(a.levels, range_a, mode).map_err(|e| e.to_string())?;
    let spec_y = quant_spec(a.levels, range_y, mode).map_err(|e| e.to_string())?;
    let obs = quantize(&inst, &spec_a, &spec_y, prior).map_err(|e| e.to_string())?;
    doc.set_observation(&obs);
    write_json(&a.out, &doc)?;
    println!(
        "quantized at {} levels: deltaA={:.3e} deltaY={:.3e} -> {}",
        a.levels,
        obs.delta_a,
        obs.delta_y,
        a.out.display()
    );
    Ok(0)
}

fn print_solution(label: &str, sol: &Solution, d: f64) {
    let xs: Vec<String> = sol.x.iter().map(|v| format!("{:.6}", v + 0.0)).collect();
    println!("{label}: status {:?}", sol.status);
    println!("x = [{}]", xs.join(", "));
    println!(
        "objective = {:.9e}, support = {:?}, nodes = {}, time = {:.3e}s",
        sol.objective,
        support_indices(&sol.x, d),
        sol.nodes,
        sol.wall_time
    );
}

fn finish_solve(
    label: &str,
    sol: &Solution,
    d: f64,
    out: Option<&Path>,
) -> Result<u8, String> {
    print_solution(label, sol, d);
    if let Some(path) = out {
        write_json(path, sol)?;
        println!("wrote {}", path.display());
    }
    Ok(match sol.status {
        SolveStatus::GlobalOptimal => 0,
        SolveStatus::Feasible => EXIT_BUDGET,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
    })
}

fn cmd_solve(a: SolveArgs) -> Result<u8, String> {
    let doc = read_document(&a.r#in)?;
    let obs = doc.observation().map_err(|e| e.to_string())?;
    let d = obs.prior.d();
    match a.method {
        MethodArg::L1 => {
            let poly = build_polytope(&obs, &vec![f64::INFINITY; obs.n()]);
            let sol = solve_l1(&poly).map_err(|e| e.to_string())?;
            finish_solve("l1", &sol, d, a.out.as_deref())
        }
        MethodArg::Cqp => {
            let poly = build_polytope(&obs, &vec![d; obs.n()]);
            let cfg = BnbConfig { abs_gap: a.gap, max_nodes: a.max_nodes, ..BnbConfig::default() };
            let sol = solve_cqp(&poly, d, &cfg).map_err(|e| e.to_string())?;
            finish_solve("cqp", &sol, d, a.out.as_deref())
        }
    }
}

// Prop 1 and 2 certify the true matrix; prop 3 certifies the quantized one.
// Fall back to whichever matrix the document actually carries.
fn matrix_for_check(doc: &Document, prefer_quantized: bool) -> Result<Matrix, String> {
    let pick = |data: &Option<Vec<f64>>| -> Option<Matrix> {
        data.as_ref().map(|d| Matrix::from_vec(doc.m, doc.n, d.clone()))
    };
    let (first, second) =
        if prefer_quantized { (&doc.qa, &doc.a) } else { (&doc.a, &doc.qa) };
    pick(first)
        .or_else(|| pick(second))
        .ok_or_else(|| "document carries no matrix".to_string())
}

fn cmd_check(a: CheckArgs) -> Result<u8, String> {
    let doc = read_document(&a.r#in)?;
    let prior = doc.prior().map_err(|e| e.to_string())?;
    let delta_y = a
        .delta_y
        .or(doc.delta_y)
        .ok_or_else(|| "no --delta-y given and the document has none".to_string())?;
    let mode =
        if a.literal { QuantifierMode::Literal } else { QuantifierMode::SupportMismatch };
    let report: ConditionReport = match a.prop {
        1 => {
            let m = matrix_for_check(&doc, false)?;
            check_prop1(&m, prior.d(), delta_y).map_err(|e| e.to_string())?
        }
        2 => {
            let m = matrix_for_check(&doc, false)?;
            check_prop2_mode(&m, prior, delta_y, mode).map_err(|e| e.to_string())?
        }
        3 => {
            let m = matrix_for_check(&doc, true)?;
            let delta_a = a
                .delta_a
                .or(doc.delta_a)
                .ok_or_else(|| "no --delta-a given and the document has none".to_string())?;
            check_prop3_mode(&m, prior, delta_y, delta_a, mode).map_err(|e| e.to_string())?
        }
        _ => unreachable!("clap range"),
    };
    println!("{}", to_json_string(&report).map_err(|e| e.to_string())?);
    Ok(if report.holds { 0 } else { EXIT_FAILS })
}

fn cmd_experiment(a: ExperimentArgs) -> Result<u8, String> {
    let cfg: ExperimentConfig =
        from_json_str(&read_to_string(&a.config)?).map_err(|e| e.to_string())?;
    cfg.validate().map_err(|e| e.to_string())?;
    if a.jobs == 0 {
        return Err("--jobs must be at least 1".to_string());
    }
    std::fs::create_dir_all(&a.out_dir).map_err(|e| format!("{}: {e}", a.out_dir.display()))?;
    let started_at = chrono::Utc::now().to_rfc3339();
    let table = run_experiment_jobs(&cfg, a.jobs).map_err(|e| e.to_string())?;
    let finished_at = chrono::Utc::now().to_rfc3339();

    let summary_path = a.out_dir.join("summary.csv");
    let runs_path = a.out_dir.join("runs.csv");
    let manifest_path = a.out_dir.join("manifest.json");
    write_string(&summary_path, &summary_csv(&table.summary))?;
    write_string(&runs_path, &runs_csv(&table.runs))?;
    let manifest = RunManifest {
        tool: "qsparse",
        version: env!("CARGO_PKG_VERSION"),
        started_at,
        finished_at,
        jobs: a.jobs,
        config: &cfg,
        seeds: (0..cfg.runs as u64).map(|r| cfg.seed.wrapping_add(r)).collect(),
        outputs: vec![
            summary_path.display().to_string(),
            runs_path.display().to_string(),
            manifest_path.display().to_string(),
        ],
    };
    write_json(&manifest_path, &manifest)?;
    for p in [&summary_path, &runs_path, &manifest_path] {
        println!("wrote {}", p.display());
    }
    Ok(0)
}

fn cmd_oracle(a: OracleArgs) -> Result<u8, String> {
    let doc = read_document(&a.r#in)?;
    let obs: Observation = doc.observation().map_err(|e| e.to_string())?;
    let d = obs.prior.d();
    let poly = build_polytope(&obs, &vec![d; obs.n()]);
    let sol = oracle_vertex_min(&poly, d).map_err(|e| e.to_string())?;
    finish_solve("oracle", &sol, d, a.out.as_deref())
}
