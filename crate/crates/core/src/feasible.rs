//! The set of parameter vectors consistent with the quantized data: for
//! non-negative x, |Q(A) x - Q(y)|_j <= delta_y + delta_a * sum_i x_i for
//! every row j. Written with the perturbation folded into the matrix this is
//! a plain system C x <= g of 2m rows, intersected with a box.

use crate::linalg::Matrix;
use crate::model::Observation;
use serde::{Deserialize, Serialize};

/// Default absolute tolerance for membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Polytope { x : C x <= g, lower <= x <= upper }. Upper bounds may be
/// infinite; in JSON those entries appear as null.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolytopeDoc", try_from = "PolytopeDoc")]
pub struct Polytope {
    /// Constraint matrix, 2m x n.
    pub c: Matrix,
    /// Right-hand side, length 2m.
    pub g: Vec<f64>,
    /// Box lower bounds, length n.
    pub lower: Vec<f64>,
    /// Box upper bounds, length n.
    pub upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PolytopeDoc {
    #[serde(rename = "C")]
    c: Vec<f64>,
    g: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<Option<f64>>,
}

impl From<Polytope> for PolytopeDoc {
    fn from(p: Polytope) -> Self {
        PolytopeDoc {
            c: p.c.data().to_vec(),
            g: p.g,
            lower: p.lower,
            upper: p.upper.iter().map(|&u| if u.is_finite() { Some(u) } else { None }).collect(),
        }
    }
}

impl TryFrom<PolytopeDoc> for Polytope {
    type Error = String;

    fn try_from(doc: PolytopeDoc) -> Result<Self, String> {
        let n = doc.lower.len();
        let rows = doc.g.len();
        if doc.upper.len() != n || doc.c.len() != rows * n {
            return Err("polytope arrays disagree in shape".into());
        }
        Ok(Polytope {
            c: Matrix::from_vec(rows, n, doc.c),
            g: doc.g,
            lower: doc.lower,
            upper: doc.upper.into_iter().map(|u| u.unwrap_or(f64::INFINITY)).collect(),
        })
    }
}

/// Builds the consistency polytope from an observation. The first m rows are
/// (QA - delta_a) x <= Qy + delta_y, the second m rows are
/// (-QA - delta_a) x <= -Qy + delta_y; together with x >= 0 they encode the
/// infinity-norm test above. `upper` is the box upper bound: d for the
/// concave program, infinity for the l1 baseline.
pub fn build_polytope(obs: &Observation, upper: &[f64]) -> Polytope {
    let m = obs.m();
    let n = obs.n();
    assert_eq!(upper.len(), n, "upper bound length mismatch");
    assert!(obs.delta_a >= 0.0 && obs.delta_y >= 0.0, "perturbation bounds must be non-negative");
    let mut c = Matrix::zeros(2 * m, n);
    let mut g = vec![0.0; 2 * m];
    for i in 0..m {
        for j in 0..n {
            c.set(i, j, obs.qa.get(i, j) - obs.delta_a);
            c.set(m + i, j, -obs.qa.get(i, j) - obs.delta_a);
        }
        g[i] = obs.qy[i] + obs.delta_y;
        g[m + i] = -obs.qy[i] + obs.delta_y;
    }
    Polytope { c, g, lower: vec![0.0; n], upper: upper.to_vec() }
}

/// Tests x against the polytope within an absolute tolerance.
pub fn is_member(x: &[f64], poly: &Polytope, tol: f64) -> bool {
    assert_eq!(x.len(), poly.lower.len(), "dimension mismatch");
    assert!(tol >= 0.0);
    for i in 0..x.len() {
        if x[i] < poly.lower[i] - tol || x[i] > poly.upper[i] + tol {
            return false;
        }
    }
    poly.c.matvec(x).iter().zip(&poly.g).all(|(v, gi)| *v <= gi + tol)
}
