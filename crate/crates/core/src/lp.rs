//! Dense bounded-variable primal simplex.
//!
//! Problems here are tiny (tens of variables and rows), so the implementation
//! favors robustness over speed: the basis matrix is refactorized and the
//! basic values recomputed from scratch on every iteration. Pricing is
//! Dantzig's rule, switching to Bland's rule after 10*(p+n) iterations to
//! rule out cycling.

use crate::linalg::{dot, lu_solve, Matrix};
use crate::{Error, Result};

const OPT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-12;

/// Linear program: minimize c'x subject to Cineq x <= b and lower <= x <= upper.
/// Bound entries may be infinite.
#[derive(Clone, Debug)]
pub struct LpProblem {
    /// Objective vector, length n.
    pub c: Vec<f64>,
    /// Inequality rows, p x n.
    pub c_ineq: Matrix,
    /// Right-hand side, length p.
    pub b: Vec<f64>,
    /// Box lower bounds, length n.
    pub lower: Vec<f64>,
    /// Box upper bounds, length n.
    pub upper: Vec<f64>,
}

/// Solver verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    /// A provably optimal basic feasible solution was found.
    Optimal,
    /// The constraints admit no point.
    Infeasible,
    /// The objective decreases without bound.
    Unbounded,
}

/// Solver output. x and value are meaningful only when status is Optimal.
#[derive(Clone, Debug)]
pub struct LpResult {
    /// Verdict.
    pub status: LpStatus,
    /// Optimal point, length n.
    pub x: Vec<f64>,
    /// Optimal objective value.
    pub value: f64,
    /// Simplex pivots across both phases.
    pub iterations: usize,
    pub(crate) basis: Vec<usize>,
}

// Variable layout inside the solver: structural 0..n, slacks n..n+p,
// artificials n+p.. (one per initially violated row, column -e_row).
struct Tableau {
    n: usize,
    p: usize,
    cols: Matrix, // p x total, column j of the equality system per variable
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    b: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    xval: Vec<f64>, // nonbasic entries sit at a bound; basic entries refreshed per iteration
}

impl Tableau {
    fn column(&self, j: usize) -> Vec<f64> {
        self.cols.col(j)
    }

    fn basis_matrix(&self) -> Matrix {
        let mut b = Matrix::zeros(self.p, self.p);
        for (k, &j) in self.basis.iter().enumerate() {
            for i in 0..self.p {
                b.set(i, k, self.cols.get(i, j));
            }
        }
        b
    }

    // Right-hand side net of nonbasic contributions, then basic values.
    fn refresh_basic_values(&mut self) -> Option<()> {
        let mut rhs = self.b.clone();
        for j in 0..self.xval.len() {
            if self.in_basis[j] || self.xval[j] == 0.0 {
                continue;
            }
            for i in 0..self.p {
                rhs[i] -= self.cols.get(i, j) * self.xval[j];
            }
        }
        let bm = self.basis_matrix();
        let xb = lu_solve(&bm, &rhs)?;
        for (k, &j) in self.basis.iter().enumerate() {
            self.xval[j] = xb[k];
        }
        Some(())
    }

    fn duals(&self, bm_t: &Matrix) -> Option<Vec<f64>> {
        let cb: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        lu_solve(bm_t, &cb)
    }
}

/// Solves the linear program; `debug` dumps the final basis to stderr.
pub fn solve_lp_with(prob: &LpProblem, debug: bool) -> Result<LpResult> {
    let n = prob.c.len();
    let p = prob.b.len();
    if prob.c_ineq.rows() != p || (p > 0 && prob.c_ineq.cols() != n) {
        return Err(Error::DimensionMismatch("constraint matrix disagrees with c and b".into()));
    }
    if prob.lower.len() != n || prob.upper.len() != n {
        return Err(Error::DimensionMismatch("bound vectors must have length n".into()));
    }
    for j in 0..n {
        if prob.lower[j] > prob.upper[j] {
            return Ok(LpResult {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                value: f64::INFINITY,
                iterations: 0,
                basis: Vec::new(),
            });
        }
    }

    // Start structural variables at their bound nearest zero.
    let mut start = vec![0.0; n];
    for j in 0..n {
        let l = prob.lower[j];
        let u = prob.upper[j];
        start[j] = if l.is_finite() && u.is_finite() {
            if l.abs() <= u.abs() { l } else { u }
        } else if l.is_finite() {
            l.max(0.0).max(l)
        } else if u.is_finite() {
            u.min(0.0).min(u)
        } else {
            0.0
        };
    }

    // Residuals decide which rows need an artificial column.
    let resid: Vec<f64> = if p == 0 {
        Vec::new()
    } else {
        prob.b.iter().zip(prob.c_ineq.matvec(&start)).map(|(bi, ai)| bi - ai).collect()
    };
    let art_rows: Vec<usize> = (0..p).filter(|&i| resid[i] < 0.0).collect();
    let total = n + p + art_rows.len();

    let mut cols = Matrix::zeros(p, total);
    for i in 0..p {
        for j in 0..n {
            cols.set(i, j, prob.c_ineq.get(i, j));
        }
        cols.set(i, n + i, 1.0);
    }
    for (a, &row) in art_rows.iter().enumerate() {
        cols.set(row, n + p + a, -1.0);
    }

    let mut lo = prob.lower.clone();
    let mut hi = prob.upper.clone();
    lo.extend(std::iter::repeat(0.0).take(p + art_rows.len()));
    hi.extend(std::iter::repeat(f64::INFINITY).take(p + art_rows.len()));

    let mut xval = vec![0.0; total];
    xval[..n].copy_from_slice(&start);

    let mut basis = Vec::with_capacity(p);
    let mut in_basis = vec![false; total];
    let mut art_of_row = vec![usize::MAX; p];
    for (a, &row) in art_rows.iter().enumerate() {
        art_of_row[row] = n + p + a;
    }
    for i in 0..p {
        let var = if art_of_row[i] != usize::MAX { art_of_row[i] } else { n + i };
        basis.push(var);
        in_basis[var] = true;
        xval[var] = resid[i].abs();
    }

    let phase1_cost: Vec<f64> = (0..total).map(|j| if j >= n + p { 1.0 } else { 0.0 }).collect();
    let phase2_cost: Vec<f64> = (0..total).map(|j| if j < n { prob.c[j] } else { 0.0 }).collect();

    let mut tab = Tableau {
        n,
        p,
        cols,
        lo,
        hi,
        cost: phase1_cost,
        b: prob.b.clone(),
        basis,
        in_basis,
        xval,
    };

    let mut iterations = 0usize;
    if !art_rows.is_empty() {
        match run_simplex(&mut tab, &mut iterations, true)? {
            SimplexEnd::Optimal => {}
            SimplexEnd::Unbounded => {
                return Err(Error::NumericalFailure("phase-one subproblem reported unbounded".into()))
            }
        }
        let infeas: f64 = (n + p..total).map(|j| tab.xval[j].max(0.0)).sum();
        if infeas > FEAS_TOL {
            return Ok(LpResult {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                value: f64::INFINITY,
                iterations,
                basis: tab.basis,
            });
        }
        // Freeze artificials at zero for phase two.
        for j in n + p..total {
            tab.hi[j] = 0.0;
            if !tab.in_basis[j] {
                tab.xval[j] = 0.0;
            }
        }
    }

    tab.cost = phase2_cost;
    let end = run_simplex(&mut tab, &mut iterations, false)?;
    if let SimplexEnd::Unbounded = end {
        return Ok(LpResult {
            status: LpStatus::Unbounded,
            x: vec![0.0; n],
            value: f64::NEG_INFINITY,
            iterations,
            basis: tab.basis,
        });
    }

    let x: Vec<f64> = tab.xval[..n].to_vec();
    let value = dot(&prob.c, &x);
    if debug {
        eprintln!("lp final basis: {:?}", tab.basis);
        let values: Vec<f64> = tab.basis.iter().map(|&j| tab.xval[j]).collect();
        eprintln!("lp basic values: {values:?}");
    }
    Ok(LpResult { status: LpStatus::Optimal, x, value, iterations, basis: tab.basis })
}

/// Solves the linear program with diagnostics off.
pub fn solve_lp(prob: &LpProblem) -> Result<LpResult> {
    solve_lp_with(prob, false)
}

enum SimplexEnd {
    Optimal,
    Unbounded,
}

fn run_simplex(tab: &mut Tableau, iterations: &mut usize, phase_one: bool) -> Result<SimplexEnd> {
    let total = tab.xval.len();
    let bland_after = 10 * (tab.p + tab.n);
    let hard_cap = 10_000 * (tab.p + tab.n) + 10_000;
    loop {
        if tab.refresh_basic_values().is_none() {
            return Err(Error::NumericalFailure("singular basis matrix".into()));
        }
        let bm = tab.basis_matrix();
        let mut bm_t = Matrix::zeros(tab.p, tab.p);
        for i in 0..tab.p {
            for j in 0..tab.p {
                bm_t.set(i, j, bm.get(j, i));
            }
        }
        let lam = match tab.duals(&bm_t) {
            Some(l) => l,
            None => return Err(Error::NumericalFailure("singular basis matrix".into())),
        };

        // Pricing: entering variable and its direction of movement.
        let bland = *iterations >= bland_after;
        let mut entering: Option<(usize, f64, f64)> = None; // (var, direction, score)
        for j in 0..total {
            if tab.in_basis[j] || tab.hi[j] - tab.lo[j] <= 0.0 {
                continue;
            }
            let col = tab.column(j);
            let r = tab.cost[j] - dot(&lam, &col);
            let at_lower = tab.lo[j].is_finite() && (tab.xval[j] - tab.lo[j]).abs() <= 1e-9 * (1.0 + tab.lo[j].abs());
            let at_upper = tab.hi[j].is_finite() && (tab.xval[j] - tab.hi[j]).abs() <= 1e-9 * (1.0 + tab.hi[j].abs());
            let free = !at_lower && !at_upper;
            let dir = if (at_lower || free) && r < -OPT_TOL {
                1.0
            } else if (at_upper || free) && r > OPT_TOL {
                -1.0
            } else {
                continue;
            };
            if bland {
                entering = Some((j, dir, r.abs()));
                break;
            }
            match entering {
                Some((_, _, best)) if best >= r.abs() => {}
                _ => entering = Some((j, dir, r.abs())),
            }
        }
        let (e, dir, _) = match entering {
            Some(t) => t,
            None => return Ok(SimplexEnd::Optimal),
        };

        *iterations += 1;
        if *iterations > hard_cap {
            return Err(Error::NumericalFailure("simplex iteration cap exceeded".into()));
        }

        let col_e = tab.column(e);
        let w = match lu_solve(&bm, &col_e) {
            Some(w) => w,
            None => return Err(Error::NumericalFailure("singular basis matrix".into())),
        };

        // Ratio test: the entering variable moves by t >= 0 in direction dir;
        // basic variable k changes at rate -dir * w[k].
        let mut t_best = tab.hi[e] - tab.lo[e]; // bound flip distance, may be inf
        let mut leave: Option<usize> = None;
        let mut tiny_block = false;
        // Entries below the noise floor are treated as exact zeros; entries
        // between the noise floor and the pivot tolerance are genuine but
        // unusable pivots.
        let noise = 1e-14 * (1.0 + crate::linalg::norm_inf(&w));
        for kk in 0..tab.p {
            let rate = -dir * w[kk];
            if rate.abs() <= PIVOT_TOL {
                if rate.abs() > noise {
                    let bj = tab.basis[kk];
                    let headed = if rate > 0.0 { tab.hi[bj] } else { tab.lo[bj] };
                    if headed.is_finite() {
                        tiny_block = true;
                    }
                }
                continue;
            }
            let bj = tab.basis[kk];
            let room = if rate > 0.0 { tab.hi[bj] - tab.xval[bj] } else { tab.xval[bj] - tab.lo[bj] };
            if !room.is_finite() {
                continue;
            }
            let t = (room / rate.abs()).max(0.0);
            let replace = match leave {
                None => t < t_best - 1e-12 || (!t_best.is_finite() && t.is_finite()),
                Some(cur) => {
                    t < t_best - 1e-12
                        || (t < t_best + 1e-12
                            && if bland {
                                tab.basis[kk] < tab.basis[cur]
                            } else {
                                w[kk].abs() > w[cur].abs()
                            })
                }
            };
            if replace {
                t_best = t.min(t_best);
                leave = Some(kk);
            }
        }

        if !t_best.is_finite() {
            if phase_one {
                return Err(Error::NumericalFailure("phase-one direction unbounded".into()));
            }
            if tiny_block {
                return Err(Error::NumericalFailure(
                    "only pivots below 1e-12 block an unbounded direction".into(),
                ));
            }
            return Ok(SimplexEnd::Unbounded);
        }

        // Apply the step.
        let t = t_best.max(0.0);
        tab.xval[e] += dir * t;
        for kk in 0..tab.p {
            let bj = tab.basis[kk];
            tab.xval[bj] -= dir * w[kk] * t;
        }
        match leave {
            None => {
                // Bound flip: the entering variable reached its other bound.
                tab.xval[e] = if dir > 0.0 { tab.hi[e] } else { tab.lo[e] };
            }
            Some(kk) => {
                let bj = tab.basis[kk];
                let rate = -dir * w[kk];
                tab.xval[bj] = if rate > 0.0 { tab.hi[bj] } else { tab.lo[bj] };
                tab.in_basis[bj] = false;
                tab.basis[kk] = e;
                tab.in_basis[e] = true;
            }
        }
    }
}

/// Recomputes the dual certificate at the returned basis: primal feasibility,
/// objective consistency, and sign-correct reduced costs for every nonbasic
/// variable. Intended for audits and tests.
pub fn verify_certificate(prob: &LpProblem, res: &LpResult) -> bool {
    if res.status != LpStatus::Optimal {
        return false;
    }
    let n = prob.c.len();
    let p = prob.b.len();
    let x = &res.x;
    for j in 0..n {
        if x[j] < prob.lower[j] - FEAS_TOL || x[j] > prob.upper[j] + FEAS_TOL {
            return false;
        }
    }
    let ax = if p > 0 { prob.c_ineq.matvec(x) } else { Vec::new() };
    let mut slack = vec![0.0; p];
    for i in 0..p {
        slack[i] = prob.b[i] - ax[i];
        if slack[i] < -FEAS_TOL {
            return false;
        }
    }
    if (dot(&prob.c, x) - res.value).abs() > 1e-9 * (1.0 + res.value.abs()) {
        return false;
    }

    // Reconstruct the basis matrix; artificial columns are -e_row and are
    // identified by index >= n + p together with the rows they patched.
    if res.basis.len() != p {
        return p == 0;
    }
    let mut art_seen = 0usize;
    let mut bm_t = Matrix::zeros(p, p);
    let mut cb = vec![0.0; p];
    let column = |j: usize| -> Option<Vec<f64>> {
        if j < n {
            Some(prob.c_ineq.col(j))
        } else if j < n + p {
            let mut e = vec![0.0; p];
            e[j - n] = 1.0;
            Some(e)
        } else {
            None
        }
    };
    for (k, &j) in res.basis.iter().enumerate() {
        let col = match column(j) {
            Some(c) => c,
            None => {
                // A leftover artificial pinned at zero; its column is -e_row,
                // but the row cannot be recovered here, so skip strict dual
                // checking in that rare case.
                art_seen += 1;
                let mut e = vec![0.0; p];
                e[k] = 1.0;
                e
            }
        };
        for i in 0..p {
            bm_t.set(k, i, col[i]);
        }
        cb[k] = if j < n { prob.c[j] } else { 0.0 };
    }
    if art_seen > 0 {
        return true;
    }
    let lam = match lu_solve(&bm_t, &cb) {
        Some(l) => l,
        None => return false,
    };
    // Dual feasibility of the rows: lambda_i <= tol when slack i is basicly
    // positive is implied by the reduced-cost test on slack columns below.
    for j in 0..n + p {
        if res.basis.contains(&j) {
            continue;
        }
        let col = column(j).expect("structural or slack column");
        let r = if j < n { prob.c[j] } else { 0.0 } - dot(&lam, &col);
        let (lo, hi, v) = if j < n {
            (prob.lower[j], prob.upper[j], x[j])
        } else {
            (0.0, f64::INFINITY, slack[j - n])
        };
        let at_lower = lo.is_finite() && (v - lo).abs() <= 1e-6 * (1.0 + lo.abs());
        let at_upper = hi.is_finite() && (v - hi).abs() <= 1e-6 * (1.0 + hi.abs());
        if at_lower && at_upper {
            continue;
        }
        if at_lower {
            if r < -FEAS_TOL {
                return false;
            }
        } else if at_upper {
            if r > FEAS_TOL {
                return false;
            }
        } else if r.abs() > FEAS_TOL {
            return false;
        }
    }
    true
}
