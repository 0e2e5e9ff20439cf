//! Recovery methods: the l1 baseline, an exact global solver for the concave
//! quadratic objective, and brute-force oracles for cross-checking.
//!
//! The concave program minimizes sum_i (d*x_i - x_i^2) over the data polytope
//! intersected with [0, d]^n. Each term is concave, so on a sub-box [l, u]
//! the chord through the endpoints underestimates it; minimizing the chord
//! sum is an LP whose value lower-bounds the node. Branch-and-bound on the
//! sub-boxes closes the gap between those bounds and the best evaluated
//! point, certifying global optimality.

use crate::feasible::{is_member, Polytope};
use crate::linalg::{lu_solve, Matrix};
use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::model::Observation;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BinaryHeap;
use std::time::Instant;

/// Largest dimension accepted by the exhaustive vertex oracle.
pub const ORACLE_DIM_LIMIT: usize = 12;

/// Solver verdict for a recovery run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// The returned point is a certified global minimizer.
    GlobalOptimal,
    /// A feasible incumbent without a completed optimality certificate
    /// (node budget exhausted).
    Feasible,
    /// The constraints admit no point.
    Infeasible,
}

/// Recovery output.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Solution {
    /// Estimate, length n.
    pub x: Vec<f64>,
    /// Objective value of the producing method at x.
    pub objective: f64,
    /// Verdict.
    pub status: SolveStatus,
    /// Branch-and-bound nodes processed (0 for single-LP methods).
    pub nodes: usize,
    /// Seconds spent inside the solver call.
    #[serde(rename = "wallTime")]
    pub wall_time: f64,
}

/// Branching rule for the global solver. The widest-gap rule picks the
/// coordinate with the largest chord gap (u_i - l_i)^2 / 4.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BranchRule {
    /// Branch on the coordinate with the widest box edge.
    #[default]
    WidestGap,
}

/// Branch-and-bound controls.
#[derive(Clone, Copy, Debug)]
pub struct BnbConfig {
    /// Absolute optimality gap certified on termination.
    pub abs_gap: f64,
    /// Node budget; exceeding it returns the incumbent with status Feasible.
    pub max_nodes: usize,
    /// Branching rule (a single rule is provided).
    pub branch_rule: BranchRule,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig { abs_gap: 1e-8, max_nodes: 1_000_000, branch_rule: BranchRule::WidestGap }
    }
}

/// One explored node of the search tree, for diagnostics and tests.
#[derive(Clone, Debug)]
pub struct NodeRecord {
    /// Identifier (creation order; the root is 0).
    pub id: usize,
    /// Parent identifier, None for the root.
    pub parent: Option<usize>,
    /// Lower bound proved for the node's region.
    pub lower_bound: f64,
}

/// The concave separable objective sum_i (d*x_i - x_i^2); it is non-negative
/// on [0, d]^n and vanishes exactly on the corners {0, d}^n.
pub fn objective_cqp(x: &[f64], d: f64) -> f64 {
    x.iter().map(|&t| t * (d - t)).sum()
}

/// Indices counted as nonzero: entries exceeding 1e-6 * max(d, 1).
pub fn support_indices(x: &[f64], d: f64) -> Vec<usize> {
    let thr = 1e-6 * d.max(1.0);
    x.iter().enumerate().filter(|&(_, &v)| v > thr).map(|(i, _)| i).collect()
}

/// Minimizes the l1 norm over the polytope (a single LP; the polytope should
/// carry lower = 0 and unbounded upper).
pub fn solve_l1(poly: &Polytope) -> Result<Solution> {
    let start = Instant::now();
    let n = poly.lower.len();
    let prob = LpProblem {
        c: vec![1.0; n],
        c_ineq: poly.c.clone(),
        b: poly.g.clone(),
        lower: poly.lower.clone(),
        upper: poly.upper.clone(),
    };
    let res = solve_lp(&prob)?;
    let wall_time = start.elapsed().as_secs_f64();
    match res.status {
        LpStatus::Optimal => Ok(Solution {
            x: res.x,
            objective: res.value,
            status: SolveStatus::GlobalOptimal,
            nodes: 0,
            wall_time,
        }),
        LpStatus::Infeasible => Ok(infeasible_solution(n, 0, wall_time)),
        LpStatus::Unbounded => {
            Err(Error::NumericalFailure("l1 objective unbounded below; check the box bounds".into()))
        }
    }
}

fn infeasible_solution(n: usize, nodes: usize, wall_time: f64) -> Solution {
    Solution {
        x: vec![0.0; n],
        objective: f64::INFINITY,
        status: SolveStatus::Infeasible,
        nodes,
        wall_time,
    }
}

struct HeapNode {
    bound: f64,
    id: usize,
    parent: Option<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for HeapNode {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for HeapNode {}
impl PartialOrd for HeapNode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapNode {
    // BinaryHeap is a max-heap; invert so the smallest bound (then the oldest
    // node) pops first.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .expect("node bounds are finite")
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Minimizes the concave objective over the polytope to certified global
/// optimality. The polytope must carry lower = 0 and upper = d.
pub fn solve_cqp(poly: &Polytope, d: f64, cfg: &BnbConfig) -> Result<Solution> {
    solve_cqp_inner(poly, d, cfg, None)
}

/// Same as [`solve_cqp`] but also returns the per-node bound trace.
pub fn solve_cqp_traced(poly: &Polytope, d: f64, cfg: &BnbConfig) -> Result<(Solution, Vec<NodeRecord>)> {
    let mut trace = Vec::new();
    let sol = solve_cqp_inner(poly, d, cfg, Some(&mut trace))?;
    Ok((sol, trace))
}

fn solve_cqp_inner(
    poly: &Polytope,
    d: f64,
    cfg: &BnbConfig,
    mut trace: Option<&mut Vec<NodeRecord>>,
) -> Result<Solution> {
    let start = Instant::now();
    let n = poly.lower.len();
    if !(d > 0.0) {
        return Err(Error::InvalidConfig(format!("d must be positive, got {d}")));
    }
    if !(cfg.abs_gap > 0.0) {
        return Err(Error::InvalidConfig("absolute gap must be positive".into()));
    }
    let BranchRule::WidestGap = cfg.branch_rule;

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut heap = BinaryHeap::new();
    heap.push(HeapNode {
        bound: 0.0,
        id: 0,
        parent: None,
        lower: poly.lower.clone(),
        upper: poly.upper.clone(),
    });
    let mut next_id = 1usize;
    let mut nodes = 0usize;
    let mut budget_hit = false;

    while let Some(node) = heap.pop() {
        let inc_val = incumbent.as_ref().map_or(f64::INFINITY, |(v, _)| *v);
        // The objective is non-negative, so bounds below zero tighten to zero.
        if node.bound.max(0.0) >= inc_val - cfg.abs_gap {
            continue;
        }
        if nodes >= cfg.max_nodes {
            budget_hit = true;
            break;
        }
        nodes += 1;

        // Chord of t*(d - t) on [l, u]: (d - l - u) * t + l*u, exact at both
        // endpoints, below the function inside.
        let c: Vec<f64> = (0..n).map(|j| d - node.lower[j] - node.upper[j]).collect();
        let constant: f64 = (0..n).map(|j| node.lower[j] * node.upper[j]).sum();
        let prob = LpProblem {
            c,
            c_ineq: poly.c.clone(),
            b: poly.g.clone(),
            lower: node.lower.clone(),
            upper: node.upper.clone(),
        };
        let res = solve_lp(&prob)?;
        if res.status == LpStatus::Infeasible {
            if let Some(t) = trace.as_deref_mut() {
                t.push(NodeRecord { id: node.id, parent: node.parent, lower_bound: f64::INFINITY });
            }
            continue;
        }
        if res.status == LpStatus::Unbounded {
            return Err(Error::NumericalFailure("node relaxation unbounded on a bounded box".into()));
        }
        // A parent's bound stays valid on the child's sub-box, so keep the
        // better of the two.
        let bound = (res.value + constant).max(node.bound);
        if let Some(t) = trace.as_deref_mut() {
            t.push(NodeRecord { id: node.id, parent: node.parent, lower_bound: bound });
        }

        let xr = res.x;
        let f_xr = objective_cqp(&xr, d);
        let inc_val = update_incumbent(&mut incumbent, f_xr, &xr);
        // Rounding the relaxation point to the nearest corner often lands on
        // an objective-zero feasible point and finishes the search.
        let corner: Vec<f64> = xr.iter().map(|&v| if v >= 0.5 * d { d } else { 0.0 }).collect();
        let inc_val = if is_member(&corner, poly, 1e-9) {
            update_incumbent(&mut incumbent, objective_cqp(&corner, d), &corner)
        } else {
            inc_val
        };

        if bound.max(0.0) >= inc_val - cfg.abs_gap {
            continue;
        }

        // Branch on the widest coordinate, splitting at the relaxation point
        // clamped away from the edges.
        let mut bj = 0usize;
        let mut bw = -1.0;
        for j in 0..n {
            let w = node.upper[j] - node.lower[j];
            if w > bw {
                bw = w;
                bj = j;
            }
        }
        if bw <= 1e-12 {
            // Degenerate box; the chord equals the objective here, so the
            // bound should already have pruned. Guard against looping.
            continue;
        }
        let lo = node.lower[bj];
        let hi = node.upper[bj];
        let split = xr[bj].clamp(lo + 0.2 * bw, hi - 0.2 * bw);
        for (a, b) in [(lo, split), (split, hi)] {
            let mut l = node.lower.clone();
            let mut u = node.upper.clone();
            l[bj] = a;
            u[bj] = b;
            heap.push(HeapNode { bound, id: next_id, parent: Some(node.id), lower: l, upper: u });
            next_id += 1;
        }
    }

    let wall_time = start.elapsed().as_secs_f64();
    match incumbent {
        None => Ok(infeasible_solution(n, nodes, wall_time)),
        Some((value, x)) => Ok(Solution {
            x,
            objective: value,
            status: if budget_hit { SolveStatus::Feasible } else { SolveStatus::GlobalOptimal },
            nodes,
            wall_time,
        }),
    }
}

fn update_incumbent(incumbent: &mut Option<(f64, Vec<f64>)>, value: f64, x: &[f64]) -> f64 {
    match incumbent {
        Some((best, _)) if *best <= value => *best,
        _ => {
            *incumbent = Some((value, x.to_vec()));
            value
        }
    }
}

/// Exhaustive oracle: enumerates every vertex of the polytope (all square
/// subsystems of active constraints) and returns the one minimizing the
/// concave objective. Exponential in n; limited to n <= 12.
pub fn oracle_vertex_min(poly: &Polytope, d: f64) -> Result<Solution> {
    let start = Instant::now();
    let n = poly.lower.len();
    if n > ORACLE_DIM_LIMIT {
        return Err(Error::DimensionTooLarge { n, limit: ORACLE_DIM_LIMIT });
    }
    let rows = poly.g.len();
    let mut cons: Vec<(Vec<f64>, f64)> = Vec::with_capacity(rows + 2 * n);
    for i in 0..rows {
        cons.push((poly.c.row(i).to_vec(), poly.g[i]));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if poly.lower[j].is_finite() {
            cons.push((e.clone(), poly.lower[j]));
        }
        if poly.upper[j].is_finite() {
            cons.push((e, poly.upper[j]));
        }
    }
    let q = cons.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut feasible_vertices = 0usize;
    if q >= n {
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            let mut a = Matrix::zeros(n, n);
            let mut rhs = vec![0.0; n];
            for (r, &ci) in idx.iter().enumerate() {
                for j in 0..n {
                    a.set(r, j, cons[ci].0[j]);
                }
                rhs[r] = cons[ci].1;
            }
            if let Some(x) = lu_solve(&a, &rhs) {
                if is_member(&x, poly, 1e-7) {
                    feasible_vertices += 1;
                    let v = objective_cqp(&x, d);
                    if best.as_ref().map_or(true, |(bv, _)| v < *bv - 1e-12) {
                        best = Some((v, x));
                    }
                }
            }
            let mut i = n;
            let mut done = true;
            while i > 0 {
                i -= 1;
                if idx[i] != i + q - n {
                    idx[i] += 1;
                    for j in i + 1..n {
                        idx[j] = idx[j - 1] + 1;
                    }
                    done = false;
                    break;
                }
            }
            if done {
                break;
            }
        }
    }
    let wall_time = start.elapsed().as_secs_f64();
    match best {
        None => Ok(infeasible_solution(n, feasible_vertices, wall_time)),
        Some((value, x)) => Ok(Solution {
            x,
            objective: value,
            status: SolveStatus::GlobalOptimal,
            nodes: feasible_vertices,
            wall_time,
        }),
    }
}

/// Least-squares re-estimate of the nonzero values on a fixed support from
/// the quantized data, zero-padded to length n. Optional post-processing for
/// wide priors.
pub fn refine_on_support(obs: &Observation, support: &[usize]) -> Result<Vec<f64>> {
    let n = obs.n();
    let m = obs.m();
    if support.len() > m {
        return Err(Error::InvalidDimension(format!(
            "support size {} exceeds the number of measurements {m}",
            support.len()
        )));
    }
    let mut seen = vec![false; n];
    for &j in support {
        if j >= n {
            return Err(Error::InvalidDimension(format!("support index {j} out of range")));
        }
        if seen[j] {
            return Err(Error::InvalidDimension(format!("duplicate support index {j}")));
        }
        seen[j] = true;
    }
    let mut x = vec![0.0; n];
    if support.is_empty() {
        return Ok(x);
    }
    let sub = obs.qa.select_columns(support);
    let sol = crate::linalg::qr_least_squares(&sub, &obs.qy).ok_or(Error::RankDeficient)?;
    for (idx, &j) in support.iter().enumerate() {
        x[j] = sol[idx];
    }
    Ok(x)
}
