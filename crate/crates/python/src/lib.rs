//! Python bindings. Matrices cross the boundary as lists of row lists;
//! statuses and propositions as strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qsparse_core::bench::{quant_spec, run_experiment_jobs, runs_csv, summary_csv, BoundMode};
use qsparse_core::conditions::{
    check_prop1 as core_check_prop1, check_prop2_mode, check_prop3_mode, ConditionReport,
    QuantifierMode,
};
use qsparse_core::feasible::{build_polytope, is_member as core_is_member};
use qsparse_core::jsonio::from_json_str;
use qsparse_core::linalg::Matrix;
use qsparse_core::model::{
    generate as core_generate, quantize as core_quantize, MagnitudePrior,
    Observation as CoreObservation,
};
use qsparse_core::solvers::{
    objective_cqp as core_objective_cqp, oracle_vertex_min, refine_on_support as core_refine,
    solve_cqp as core_solve_cqp, solve_l1 as core_solve_l1,
    support_indices as core_support_indices, BnbConfig, Solution as CoreSolution,
};

fn err(e: qsparse_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(PyValueError::new_err("matrix must be non-empty"));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("matrix rows must have equal length"));
    }
    Ok(Matrix::from_rows(rows))
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn parse_mode(bound_mode: &str) -> PyResult<BoundMode> {
    match bound_mode {
        "half-step" => Ok(BoundMode::HalfStep),
        "full-step" => Ok(BoundMode::FullStep),
        other => Err(PyValueError::new_err(format!(
            "bound_mode must be 'half-step' or 'full-step', got '{other}'"
        ))),
    }
}

/// Ground-truth instance drawn by `generate`.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Instance {
    #[pyo3(get)]
    n: usize,
    #[pyo3(get)]
    m: usize,
    #[pyo3(get)]
    k: usize,
    #[pyo3(get)]
    a: Vec<Vec<f64>>,
    #[pyo3(get)]
    x_true: Vec<f64>,
    #[pyo3(get)]
    y: Vec<f64>,
    #[pyo3(get)]
    alpha: f64,
    #[pyo3(get)]
    beta: f64,
    #[pyo3(get)]
    seed: u64,
}

#[pymethods]
impl Instance {
    fn __repr__(&self) -> String {
        format!("Instance(n={}, m={}, k={}, seed={})", self.n, self.m, self.k, self.seed)
    }
}

/// Quantized data with perturbation bounds and the magnitude prior.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Observation {
    #[pyo3(get)]
    qa: Vec<Vec<f64>>,
    #[pyo3(get)]
    qy: Vec<f64>,
    #[pyo3(get)]
    delta_a: f64,
    #[pyo3(get)]
    delta_y: f64,
    #[pyo3(get)]
    alpha: f64,
    #[pyo3(get)]
    beta: f64,
}

impl Observation {
    fn to_core(&self) -> PyResult<CoreObservation> {
        let qa = rows_to_matrix(&self.qa)?;
        if self.qy.len() != qa.rows() {
            return Err(PyValueError::new_err("Qy length must equal the matrix row count"));
        }
        Ok(CoreObservation {
            qa,
            qy: self.qy.clone(),
            delta_a: self.delta_a,
            delta_y: self.delta_y,
            prior: MagnitudePrior::new(self.alpha, self.beta).map_err(err)?,
        })
    }

    fn from_core(obs: &CoreObservation) -> Self {
        Observation {
            qa: matrix_to_rows(&obs.qa),
            qy: obs.qy.clone(),
            delta_a: obs.delta_a,
            delta_y: obs.delta_y,
            alpha: obs.prior.alpha(),
            beta: obs.prior.beta(),
        }
    }
}

#[pymethods]
impl Observation {
    #[new]
    #[pyo3(signature = (qa, qy, delta_a, delta_y, alpha=1.0, beta=1.0))]
    fn new(
        qa: Vec<Vec<f64>>,
        qy: Vec<f64>,
        delta_a: f64,
        delta_y: f64,
        alpha: f64,
        beta: f64,
    ) -> PyResult<Self> {
        let obs = Observation { qa, qy, delta_a, delta_y, alpha, beta };
        obs.to_core()?;
        Ok(obs)
    }

    /// Midpoint of the magnitude prior.
    fn d(&self) -> f64 {
        0.5 * (self.alpha + self.beta)
    }

    fn __repr__(&self) -> String {
        format!(
            "Observation(m={}, n={}, delta_a={}, delta_y={})",
            self.qy.len(),
            self.qa.first().map_or(0, Vec::len),
            self.delta_a,
            self.delta_y
        )
    }
}

/// Solver verdict: estimate, objective value, status string, node count and
/// wall time.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Solution {
    #[pyo3(get)]
    x: Vec<f64>,
    #[pyo3(get)]
    objective: f64,
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    nodes: usize,
    #[pyo3(get)]
    wall_time: f64,
}

impl Solution {
    fn from_core(sol: &CoreSolution) -> Self {
        Solution {
            x: sol.x.clone(),
            objective: sol.objective,
            status: format!("{:?}", sol.status),
            nodes: sol.nodes,
            wall_time: sol.wall_time,
        }
    }
}

#[pymethods]
impl Solution {
    fn __repr__(&self) -> String {
        format!("Solution(status={}, objective={:.6e})", self.status, self.objective)
    }
}

/// Outcome of a recovery-condition check.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Report {
    #[pyo3(get)]
    proposition: String,
    #[pyo3(get)]
    holds: bool,
    #[pyo3(get)]
    margin: f64,
    #[pyo3(get)]
    threshold: f64,
    #[pyo3(get)]
    worst_gamma: Vec<f64>,
}

impl Report {
    fn from_core(rep: &ConditionReport) -> Self {
        Report {
            proposition: format!("{:?}", rep.proposition),
            holds: rep.holds,
            margin: rep.margin,
            threshold: rep.threshold,
            worst_gamma: rep.worst_gamma.clone(),
        }
    }
}

#[pymethods]
impl Report {
    fn __repr__(&self) -> String {
        format!(
            "Report({}, holds={}, margin={:.6e})",
            self.proposition, self.holds, self.margin
        )
    }
}

/// Draw a random instance: Gaussian matrix, uniform k-subset support,
/// magnitudes uniform on [alpha, beta].
#[pyfunction]
#[pyo3(signature = (n, m, k, alpha=1.0, beta=1.0, seed=0))]
fn generate(n: usize, m: usize, k: usize, alpha: f64, beta: f64, seed: u64) -> PyResult<Instance> {
    let prior = MagnitudePrior::new(alpha, beta).map_err(err)?;
    let inst = core_generate(n, m, k, prior, seed).map_err(err)?;
    Ok(Instance {
        n: inst.n,
        m: inst.m,
        k: inst.k,
        a: matrix_to_rows(&inst.a),
        x_true: inst.x_true.clone(),
        y: inst.y.clone(),
        alpha,
        beta,
        seed,
    })
}

/// Quantize an instance onto uniform codebooks whose ranges cover the data.
#[pyfunction]
#[pyo3(signature = (instance, levels, bound_mode="half-step"))]
fn quantize(instance: &Instance, levels: usize, bound_mode: &str) -> PyResult<Observation> {
    let mode = parse_mode(bound_mode)?;
    let prior = MagnitudePrior::new(instance.alpha, instance.beta).map_err(err)?;
    let a = rows_to_matrix(&instance.a)?;
    let core_inst = qsparse_core::model::Instance {
        n: instance.n,
        m: instance.m,
        k: instance.k,
        a: a.clone(),
        x_true: instance.x_true.clone(),
        y: instance.y.clone(),
    };
    let max_or_one = |r: f64| if r > 0.0 { r } else { 1.0 };
    let range_a = max_or_one(a.max_abs());
    let range_y = max_or_one(instance.y.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())));
    let spec_a = quant_spec(levels, range_a, mode).map_err(err)?;
    let spec_y = quant_spec(levels, range_y, mode).map_err(err)?;
    let obs = core_quantize(&core_inst, &spec_a, &spec_y, prior).map_err(err)?;
    Ok(Observation::from_core(&obs))
}

/// Minimize the ℓ1 norm over the observation's polytope.
#[pyfunction]
fn solve_l1(obs: &Observation) -> PyResult<Solution> {
    let core_obs = obs.to_core()?;
    let poly = build_polytope(&core_obs, &vec![f64::INFINITY; core_obs.n()]);
    Ok(Solution::from_core(&core_solve_l1(&poly).map_err(err)?))
}

/// Globally minimize the concave separable objective over the polytope
/// intersected with [0, d]^n.
#[pyfunction]
#[pyo3(signature = (obs, gap=1e-8, max_nodes=1_000_000))]
fn solve_cqp(obs: &Observation, gap: f64, max_nodes: usize) -> PyResult<Solution> {
    let core_obs = obs.to_core()?;
    let d = core_obs.prior.d();
    let poly = build_polytope(&core_obs, &vec![d; core_obs.n()]);
    let cfg = BnbConfig { abs_gap: gap, max_nodes, ..BnbConfig::default() };
    Ok(Solution::from_core(&core_solve_cqp(&poly, d, &cfg).map_err(err)?))
}

/// Reference solve by exhaustive vertex enumeration (small n only).
#[pyfunction]
fn solve_oracle(obs: &Observation) -> PyResult<Solution> {
    let core_obs = obs.to_core()?;
    let d = core_obs.prior.d();
    let poly = build_polytope(&core_obs, &vec![d; core_obs.n()]);
    Ok(Solution::from_core(&oracle_vertex_min(&poly, d).map_err(err)?))
}

/// Membership in the observation's polytope; `box_at_d` additionally caps
/// every coordinate at d.
#[pyfunction]
#[pyo3(signature = (x, obs, box_at_d=false, tol=1e-9))]
fn is_member(x: Vec<f64>, obs: &Observation, box_at_d: bool, tol: f64) -> PyResult<bool> {
    let core_obs = obs.to_core()?;
    let upper = if box_at_d {
        vec![core_obs.prior.d(); core_obs.n()]
    } else {
        vec![f64::INFINITY; core_obs.n()]
    };
    Ok(core_is_member(&x, &build_polytope(&core_obs, &upper), tol))
}

/// Σᵢ xᵢ (d − xᵢ): zero exactly on the corners {0, d}ⁿ.
#[pyfunction]
fn objective_cqp(x: Vec<f64>, d: f64) -> f64 {
    core_objective_cqp(&x, d)
}

/// Indices whose entries exceed the support threshold.
#[pyfunction]
fn support_indices(x: Vec<f64>, d: f64) -> Vec<usize> {
    core_support_indices(&x, d)
}

/// Least-squares refit of the estimate on a fixed support.
#[pyfunction]
fn refine_on_support(obs: &Observation, support: Vec<usize>) -> PyResult<Vec<f64>> {
    core_refine(&obs.to_core()?, &support).map_err(err)
}

/// Exact-magnitude recovery condition on the true matrix.
#[pyfunction]
fn check_prop1(a: Vec<Vec<f64>>, d: f64, delta_y: f64) -> PyResult<Report> {
    let m = rows_to_matrix(&a)?;
    Ok(Report::from_core(&core_check_prop1(&m, d, delta_y).map_err(err)?))
}

/// Interval-magnitude recovery condition on the true matrix.
#[pyfunction]
#[pyo3(signature = (a, alpha, beta, delta_y, literal=false))]
fn check_prop2(a: Vec<Vec<f64>>, alpha: f64, beta: f64, delta_y: f64, literal: bool) -> PyResult<Report> {
    let m = rows_to_matrix(&a)?;
    let prior = MagnitudePrior::new(alpha, beta).map_err(err)?;
    let mode = if literal { QuantifierMode::Literal } else { QuantifierMode::SupportMismatch };
    Ok(Report::from_core(&check_prop2_mode(&m, prior, delta_y, mode).map_err(err)?))
}

/// Interval-magnitude condition stated on the quantized matrix.
#[pyfunction]
#[pyo3(signature = (qa, alpha, beta, delta_y, delta_a, literal=false))]
fn check_prop3(
    qa: Vec<Vec<f64>>,
    alpha: f64,
    beta: f64,
    delta_y: f64,
    delta_a: f64,
    literal: bool,
) -> PyResult<Report> {
    let m = rows_to_matrix(&qa)?;
    let prior = MagnitudePrior::new(alpha, beta).map_err(err)?;
    let mode = if literal { QuantifierMode::Literal } else { QuantifierMode::SupportMismatch };
    Ok(Report::from_core(&check_prop3_mode(&m, prior, delta_y, delta_a, mode).map_err(err)?))
}

/// Run a benchmark sweep from an ExperimentConfig JSON string; returns the
/// (summary, runs) CSV texts.
#[pyfunction]
#[pyo3(signature = (config_json, jobs=1))]
fn run_experiment(config_json: &str, jobs: usize) -> PyResult<(String, String)> {
    let cfg: qsparse_core::bench::ExperimentConfig = from_json_str(config_json).map_err(err)?;
    cfg.validate().map_err(err)?;
    let table = run_experiment_jobs(&cfg, jobs).map_err(err)?;
    Ok((summary_csv(&table.summary), runs_csv(&table.runs)))
}

#[pymodule]
fn qsparse(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Instance>()?;
    m.add_class::<Observation>()?;
    m.add_class::<Solution>()?;
    m.add_class::<Report>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(solve_l1, m)?)?;
    m.add_function(wrap_pyfunction!(solve_cqp, m)?)?;
    m.add_function(wrap_pyfunction!(solve_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(is_member, m)?)?;
    m.add_function(wrap_pyfunction!(objective_cqp, m)?)?;
    m.add_function(wrap_pyfunction!(support_indices, m)?)?;
    m.add_function(wrap_pyfunction!(refine_on_support, m)?)?;
    m.add_function(wrap_pyfunction!(check_prop1, m)?)?;
    m.add_function(wrap_pyfunction!(check_prop2, m)?)?;
    m.add_function(wrap_pyfunction!(check_prop3, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
