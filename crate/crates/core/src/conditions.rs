//! Certifiers for the sufficient support-recovery conditions.
//!
//! Each condition asks that every admissible disturbance direction γ keep
//! ‖Σᵢ γᵢ Aᵢ‖_∞ above a data-dependent threshold. The checkers minimize that
//! norm exhaustively — over sign patterns for the exact-magnitude condition,
//! and over 3ⁿ piece assignments with an inner LP when magnitudes live in an
//! interval — and report the achieved minimum as a certificate.

use crate::linalg::{norm_inf, Matrix};
use crate::lp::{solve_lp, LpProblem, LpStatus};
use crate::model::MagnitudePrior;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Largest n accepted by the exhaustive enumerations (3ⁿ candidates).
pub const CONDITION_DIM_LIMIT: usize = 12;

/// Which sufficient condition a report certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Proposition {
    /// Exact magnitudes (α = β = d), sign-pattern enumeration.
    P1,
    /// Interval magnitudes on the true matrix.
    P2,
    /// Interval magnitudes on the quantized matrix, threshold widened by the
    /// matrix perturbation.
    P3,
}

/// Quantifier used for the interval conditions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum QuantifierMode {
    /// γ ranges over differences of feasible vectors with distinct supports:
    /// at least one coordinate lies in the {−d} or [α, β] piece.
    #[default]
    SupportMismatch,
    /// γ ranges over all non-null admissible vectors. With α < β the middle
    /// piece contains arbitrarily small vectors, so the infimum degenerates
    /// to 0 and the reported worstGamma may be the (inadmissible) null
    /// vector marking that limit.
    Literal,
}

/// Outcome of a condition check: the minimized norm is `margin + threshold`
/// and the condition holds iff the margin is strictly positive.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Condition that was checked.
    pub proposition: Proposition,
    /// Whether the sufficient condition is satisfied.
    pub holds: bool,
    /// Worst-case ‖Σᵢ γᵢ Aᵢ‖_∞ minus the threshold.
    pub margin: f64,
    /// Threshold the norm must exceed.
    pub threshold: f64,
    /// Minimizing γ.
    #[serde(rename = "worstGamma")]
    pub worst_gamma: Vec<f64>,
}

fn check_dims(a: &Matrix) -> Result<()> {
    if a.cols() == 0 || a.rows() == 0 {
        return Err(Error::InvalidDimension("the matrix must have at least one row and column".into()));
    }
    if a.cols() > CONDITION_DIM_LIMIT {
        return Err(Error::DimensionTooLarge { n: a.cols(), limit: CONDITION_DIM_LIMIT });
    }
    Ok(())
}

fn check_bounds(label: &str, value: f64) -> Result<()> {
    if !(value >= 0.0) {
        return Err(Error::InvalidConfig(format!("{label} must be non-negative, got {value}")));
    }
    Ok(())
}

/// Exact-magnitude condition: min over non-null γ ∈ {0, ±1}ⁿ of ‖Aγ‖_∞ must
/// exceed 2Δ_y / d.
pub fn check_prop1(a: &Matrix, d: f64, delta_y: f64) -> Result<ConditionReport> {
    check_dims(a)?;
    check_bounds("deltaY", delta_y)?;
    if !(d > 0.0) {
        return Err(Error::InvalidConfig(format!("d must be positive, got {d}")));
    }
    let n = a.cols();
    let total = 3usize.pow(n as u32);
    let null_idx = (total - 1) / 2;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut gamma = vec![0.0; n];
    for idx in 0..total {
        if idx == null_idx {
            continue;
        }
        let mut rem = idx;
        for g in gamma.iter_mut() {
            *g = [-1.0, 0.0, 1.0][rem % 3];
            rem /= 3;
        }
        let v = norm_inf(&a.matvec(&gamma));
        if best.as_ref().map_or(true, |(bv, _)| v < *bv) {
            best = Some((v, gamma.clone()));
        }
    }
    let (min, worst_gamma) = best.expect("n >= 1 leaves at least two candidates");
    let threshold = 2.0 * delta_y / d;
    Ok(ConditionReport {
        proposition: Proposition::P1,
        holds: min - threshold > 0.0,
        margin: min - threshold,
        threshold,
        worst_gamma,
    })
}

/// Interval-magnitude condition on the true matrix: the piecewise minimum of
/// ‖Aγ‖_∞ must exceed 2Δ_y. Uses the support-mismatch quantifier.
pub fn check_prop2(a: &Matrix, prior: MagnitudePrior, delta_y: f64) -> Result<ConditionReport> {
    check_prop2_mode(a, prior, delta_y, QuantifierMode::default())
}

/// [`check_prop2`] with an explicit quantifier.
pub fn check_prop2_mode(
    a: &Matrix,
    prior: MagnitudePrior,
    delta_y: f64,
    mode: QuantifierMode,
) -> Result<ConditionReport> {
    check_dims(a)?;
    check_bounds("deltaY", delta_y)?;
    let threshold = 2.0 * delta_y;
    let (min, worst_gamma) = piecewise_min(a, prior, mode)?;
    Ok(ConditionReport {
        proposition: Proposition::P2,
        holds: min - threshold > 0.0,
        margin: min - threshold,
        threshold,
        worst_gamma,
    })
}

/// Interval-magnitude condition on the quantized matrix: the same piecewise
/// minimum must exceed 2Δ_y + Δ_A·β·n.
pub fn check_prop3(
    qa: &Matrix,
    prior: MagnitudePrior,
    delta_y: f64,
    delta_a: f64,
) -> Result<ConditionReport> {
    check_prop3_mode(qa, prior, delta_y, delta_a, QuantifierMode::default())
}

/// [`check_prop3`] with an explicit quantifier.
pub fn check_prop3_mode(
    qa: &Matrix,
    prior: MagnitudePrior,
    delta_y: f64,
    delta_a: f64,
    mode: QuantifierMode,
) -> Result<ConditionReport> {
    check_dims(qa)?;
    check_bounds("deltaY", delta_y)?;
    check_bounds("deltaA", delta_a)?;
    let threshold = 2.0 * delta_y + delta_a * prior.beta() * qa.cols() as f64;
    let (min, worst_gamma) = piecewise_min(qa, prior, mode)?;
    Ok(ConditionReport {
        proposition: Proposition::P3,
        holds: min - threshold > 0.0,
        margin: min - threshold,
        threshold,
        worst_gamma,
    })
}

/// Minimizes ‖Aγ‖_∞ over the admissible set: each coordinate lies in one of
/// the pieces {−d}, [(α−β)/2, (β−α)/2], [α, β]. Assignments are visited in
/// mixed-radix order (coordinate 0 least significant, pieces in the order
/// above); for each one the minimum is the LP min t subject to −t ⪯ Aγ ⪯ t
/// with γ confined to the assignment's box. Earliest minimizer kept on ties.
fn piecewise_min(a: &Matrix, prior: MagnitudePrior, mode: QuantifierMode) -> Result<(f64, Vec<f64>)> {
    let (n, m) = (a.cols(), a.rows());
    let (alpha, beta, d) = (prior.alpha(), prior.beta(), prior.d());
    let pieces = [(-d, -d), (0.5 * (alpha - beta), 0.5 * (beta - alpha)), (alpha, beta)];
    let skip_all_middle = match mode {
        QuantifierMode::SupportMismatch => true,
        // The all-middle box is {0} exactly when the prior is a point; the
        // null vector is never admissible.
        QuantifierMode::Literal => alpha == beta,
    };

    let mut c_ineq = Matrix::zeros(2 * m, n + 1);
    for j in 0..m {
        for i in 0..n {
            c_ineq.set(j, i, a.get(j, i));
            c_ineq.set(m + j, i, -a.get(j, i));
        }
        c_ineq.set(j, n, -1.0);
        c_ineq.set(m + j, n, -1.0);
    }
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;

    let total = 3usize.pow(n as u32);
    let all_middle_idx = (total - 1) / 2;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for idx in 0..total {
        if skip_all_middle && idx == all_middle_idx {
            continue;
        }
        let mut lower = vec![0.0; n + 1];
        let mut upper = vec![f64::INFINITY; n + 1];
        let mut rem = idx;
        for i in 0..n {
            let (lo, hi) = pieces[rem % 3];
            lower[i] = lo;
            upper[i] = hi;
            rem /= 3;
        }
        let prob = LpProblem {
            c: c.clone(),
            c_ineq: c_ineq.clone(),
            b: vec![0.0; 2 * m],
            lower,
            upper,
        };
        let res = solve_lp(&prob)?;
        if res.status != LpStatus::Optimal {
            return Err(Error::NumericalFailure(format!(
                "piece-assignment subproblem ended {:?} although it is feasible and bounded",
                res.status
            )));
        }
        if best.as_ref().map_or(true, |(bv, _)| res.value < *bv) {
            best = Some((res.value, res.x[..n].to_vec()));
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("the quantifier excluded every candidate".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate;

    fn section_matrix() -> Matrix {
        Matrix::from_rows(&[vec![0.2131, 1.2414]])
    }

    fn norm_at(a: &Matrix, gamma: &[f64]) -> f64 {
        norm_inf(&a.matvec(gamma))
    }

    struct Xorshift(u64);
    impl Xorshift {
        fn next(&mut self) -> f64 {
            self.0 ^= self.0 << 13;
            self.0 ^= self.0 >> 7;
            self.0 ^= self.0 << 17;
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
        fn sym(&mut self) -> f64 {
            2.0 * self.next() - 1.0
        }
    }

    #[test]
    fn prop1_certifies_the_two_entry_example() {
        let rep = check_prop1(&section_matrix(), 1.0, 0.1).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.proposition, Proposition::P1);
        assert!((rep.threshold - 0.2).abs() < 1e-15);
        assert!((rep.margin - 0.0131).abs() < 1e-12, "margin {}", rep.margin);
        assert!((norm_at(&section_matrix(), &rep.worst_gamma) - 0.2131).abs() < 1e-12);
        assert!(rep.worst_gamma.iter().all(|g| [-1.0, 0.0, 1.0].contains(g)));
        assert!(rep.worst_gamma.iter().any(|g| *g != 0.0));
    }

    #[test]
    fn prop1_never_holds_with_duplicate_columns() {
        let a = Matrix::from_rows(&[vec![0.7, 0.7], vec![-0.4, -0.4]]);
        let rep = check_prop1(&a, 1.0, 0.1).unwrap();
        assert!(!rep.holds);
        assert!((rep.margin + 0.2).abs() < 1e-15, "min should be exactly zero");
        let nz: Vec<f64> = rep.worst_gamma.iter().copied().filter(|g| *g != 0.0).collect();
        assert_eq!(nz.len(), 2);
        assert_eq!(nz[0] * nz[1], -1.0);
    }

    #[test]
    fn prop1_holds_for_a_generic_gaussian_matrix() {
        let prior = MagnitudePrior::new(1.0, 1.0).unwrap();
        let inst = generate(10, 4, 2, prior, 71).unwrap();
        let rep = check_prop1(&inst.a, 1.0, 1e-6).unwrap();
        assert!(rep.holds);
        assert!(rep.margin > 0.0);
        assert!(rep.worst_gamma.iter().any(|g| *g != 0.0));
    }

    #[test]
    fn prop1_rejects_oversized_matrices() {
        let a = Matrix::zeros(2, 13);
        assert!(matches!(
            check_prop1(&a, 1.0, 0.1),
            Err(Error::DimensionTooLarge { n: 13, limit: CONDITION_DIM_LIMIT })
        ));
    }

    #[test]
    fn prop2_certifies_the_two_entry_example() {
        let prior = MagnitudePrior::new(0.9, 1.1).unwrap();
        let rep = check_prop2(&section_matrix(), prior, 0.03).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.proposition, Proposition::P2);
        assert!((rep.threshold - 0.06).abs() < 1e-15);
        assert!((rep.margin - 0.00765).abs() < 1e-9, "margin {}", rep.margin);
        assert!((rep.worst_gamma[0] - 0.9).abs() < 1e-7, "{:?}", rep.worst_gamma);
        assert!((rep.worst_gamma[1] + 0.1).abs() < 1e-7);
    }

    #[test]
    fn prop2_with_a_point_prior_rescales_prop1() {
        let mut rng = Xorshift(0x1dea_u64);
        for trial in 0..25 {
            let n = 2 + trial % 2;
            let m = 1 + trial % 2;
            let rows: Vec<Vec<f64>> =
                (0..m).map(|_| (0..n).map(|_| rng.sym() * 1.4).collect()).collect();
            let a = Matrix::from_rows(&rows);
            let d = [0.5, 1.0, 1.7][trial % 3];
            let delta_y = 0.05 * rng.next();
            let p1 = check_prop1(&a, d, delta_y).unwrap();
            let p2 = check_prop2(&a, MagnitudePrior::new(d, d).unwrap(), delta_y).unwrap();
            assert_eq!(p1.holds, p2.holds, "trial {trial}");
            assert!(
                (p2.margin - d * p1.margin).abs() < 1e-9,
                "trial {trial}: {} vs {}",
                p2.margin,
                d * p1.margin
            );
            for i in 0..n {
                assert!((p2.worst_gamma[i] - d * p1.worst_gamma[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn prop2_fails_on_a_zero_column() {
        let a = Matrix::from_rows(&[vec![0.9, 0.0]]);
        let prior = MagnitudePrior::new(0.9, 1.1).unwrap();
        let rep = check_prop2(&a, prior, 0.01).unwrap();
        assert!(!rep.holds);
        assert!((rep.margin + rep.threshold).abs() < 1e-9, "min should vanish");
        assert!(norm_at(&a, &rep.worst_gamma) < 1e-9);
        // The certificate still mismatches supports: the zero column carries
        // a full-magnitude entry.
        assert!((rep.worst_gamma[1] + 1.0).abs() < 1e-9, "{:?}", rep.worst_gamma);
    }

    #[test]
    fn prop2_literal_mode_degenerates_for_wide_priors() {
        let prior = MagnitudePrior::new(0.9, 1.1).unwrap();
        let rep =
            check_prop2_mode(&section_matrix(), prior, 0.03, QuantifierMode::Literal).unwrap();
        assert!(!rep.holds);
        assert!((rep.margin + rep.threshold).abs() < 1e-9);
        assert!(norm_at(&section_matrix(), &rep.worst_gamma) < 1e-9);
    }

    #[test]
    fn prop2_literal_mode_equals_support_mismatch_for_point_priors() {
        let prior = MagnitudePrior::new(1.0, 1.0).unwrap();
        let a = Matrix::from_rows(&[vec![0.6, -1.1], vec![0.3, 0.8]]);
        let lit = check_prop2_mode(&a, prior, 0.02, QuantifierMode::Literal).unwrap();
        let dfl = check_prop2(&a, prior, 0.02).unwrap();
        assert_eq!(lit.holds, dfl.holds);
        assert!((lit.margin - dfl.margin).abs() < 1e-12);
        assert_eq!(lit.worst_gamma, dfl.worst_gamma);
    }

    #[test]
    fn prop3_on_the_quantized_example() {
        let qa = Matrix::from_rows(&[vec![0.2, 1.2]]);
        let prior = MagnitudePrior::new(0.9, 1.1).unwrap();
        let rep = check_prop3(&qa, prior, 0.03, 0.01).unwrap();
        assert_eq!(rep.proposition, Proposition::P3);
        assert!((rep.threshold - 0.082).abs() < 1e-15);
        assert!(!rep.holds);
        assert!((rep.margin + 0.022).abs() < 1e-9, "margin {}", rep.margin);
        assert!((rep.worst_gamma[0] - 0.9).abs() < 1e-7);
        assert!((rep.worst_gamma[1] + 0.1).abs() < 1e-7);
    }

    #[test]
    fn prop3_with_zero_perturbation_is_prop2() {
        let mut rng = Xorshift(0xabcd_u64);
        for trial in 0..20 {
            let n = 2 + trial % 3;
            let rows: Vec<Vec<f64>> =
                (0..2).map(|_| (0..n).map(|_| rng.sym()).collect()).collect();
            let a = Matrix::from_rows(&rows);
            let prior = MagnitudePrior::new(0.8, 1.2).unwrap();
            let delta_y = 0.04 * rng.next();
            let p3 = check_prop3(&a, prior, delta_y, 0.0).unwrap();
            let p2 = check_prop2(&a, prior, delta_y).unwrap();
            assert_eq!(p3.holds, p2.holds);
            assert!((p3.margin - p2.margin).abs() < 1e-12);
            assert!((p3.threshold - p2.threshold).abs() < 1e-15);
            assert_eq!(p3.worst_gamma, p2.worst_gamma);
        }
    }

    #[test]
    fn prop3_fails_when_the_threshold_exceeds_reach() {
        // The norm never exceeds β · max_j Σ_i |A_ji| = 0.5, yet the
        // threshold is 0.6.
        let qa = Matrix::from_rows(&[vec![0.3, 0.2]]);
        let prior = MagnitudePrior::new(1.0, 1.0).unwrap();
        let rep = check_prop3(&qa, prior, 0.3, 0.0).unwrap();
        assert!(!rep.holds);
        assert!(rep.margin <= 0.5 - 0.6 + 1e-12);
    }

    #[test]
    fn prop1_margin_is_monotone_in_delta_y() {
        let mut rng = Xorshift(0x5eed_u64);
        for trial in 0..300 {
            let n = 1 + trial % 4;
            let rows: Vec<Vec<f64>> =
                (0..2).map(|_| (0..n).map(|_| rng.sym()).collect()).collect();
            let a = Matrix::from_rows(&rows);
            let d = 0.4 + rng.next();
            let hi = 0.2 * rng.next() + 1e-6;
            let lo = hi * rng.next();
            let rep_hi = check_prop1(&a, d, hi).unwrap();
            let rep_lo = check_prop1(&a, d, lo).unwrap();
            assert!(rep_lo.margin >= rep_hi.margin - 1e-15);
            if rep_hi.holds {
                assert!(rep_lo.holds);
            }
        }
    }

    #[test]
    fn prop3_implies_prop2_under_any_admissible_matrix() {
        let qa = Matrix::from_rows(&[vec![1.0, 0.35], vec![0.15, 0.95]]);
        let delta_y = 0.005;
        let delta_a = 0.005;
        for prior in [MagnitudePrior::new(1.0, 1.0).unwrap(), MagnitudePrior::new(0.9, 1.1).unwrap()] {
            let p3 = check_prop3(&qa, prior, delta_y, delta_a).unwrap();
            assert!(p3.holds, "example chosen to satisfy the widened threshold");
            let mut rng = Xorshift(0xfeed_u64);
            for _ in 0..150 {
                let rows: Vec<Vec<f64>> = (0..2)
                    .map(|j| (0..2).map(|i| qa.get(j, i) + delta_a * rng.sym()).collect())
                    .collect();
                let a = Matrix::from_rows(&rows);
                let p2 = check_prop2(&a, prior, delta_y).unwrap();
                assert!(p2.holds, "perturbed matrix must inherit the certificate");
            }
        }
    }

    #[test]
    fn proof_chain_inequality_on_random_draws() {
        let mut rng = Xorshift(0xc0ffee_u64);
        let mut exercised = 0usize;
        while exercised < 10_000 {
            let n = 1 + (rng.next() * 4.0) as usize;
            let m = 1 + (rng.next() * 3.0) as usize;
            let rows: Vec<Vec<f64>> =
                (0..m).map(|_| (0..n).map(|_| rng.sym()).collect()).collect();
            let a = Matrix::from_rows(&rows);
            let w: Vec<f64> = (0..n).map(|_| 2.0 * rng.sym()).collect();
            let delta_y = 0.3 * rng.next();
            let aw = a.matvec(&w);
            if norm_inf(&aw) <= 2.0 * delta_y {
                continue;
            }
            let delta: Vec<f64> = (0..m).map(|_| delta_y * rng.sym()).collect();
            let shifted: Vec<f64> = aw.iter().zip(&delta).map(|(v, e)| v + e).collect();
            assert!(norm_inf(&shifted) > delta_y);
            exercised += 1;
        }
    }

    #[test]
    fn certificates_expose_the_reported_minimum() {
        let mut rng = Xorshift(0xcafe_u64);
        for trial in 0..15 {
            let n = 2 + trial % 3;
            let m = 1 + trial % 2;
            let rows: Vec<Vec<f64>> =
                (0..m).map(|_| (0..n).map(|_| rng.sym() * 1.2).collect()).collect();
            let a = Matrix::from_rows(&rows);
            let prior = MagnitudePrior::new(0.85, 1.15).unwrap();
            let delta_y = 0.05 * rng.next();
            let reports = [
                check_prop1(&a, prior.d(), delta_y).unwrap(),
                check_prop2(&a, prior, delta_y).unwrap(),
                check_prop3(&a, prior, delta_y, 0.01).unwrap(),
            ];
            for rep in reports {
                let achieved = norm_at(&a, &rep.worst_gamma);
                assert!(
                    (achieved - (rep.margin + rep.threshold)).abs() < 1e-9,
                    "{:?}: {achieved} vs {}",
                    rep.proposition,
                    rep.margin + rep.threshold
                );
            }
        }
    }

    #[test]
    fn single_row_minimum_matches_interval_arithmetic() {
        let mut rng = Xorshift(0xd1ce_u64);
        for trial in 0..400 {
            let n = 1 + trial % 3;
            let row: Vec<f64> = (0..n).map(|_| rng.sym() * 1.5).collect();
            let a = Matrix::from_rows(&[row.clone()]);
            let alpha = 0.6 + 0.4 * rng.next();
            let beta = alpha + 0.4 * rng.next();
            let prior = MagnitudePrior::new(alpha, beta).unwrap();
            let d = prior.d();
            let pieces = [(-d, -d), (0.5 * (alpha - beta), 0.5 * (beta - alpha)), (alpha, beta)];
            let total = 3usize.pow(n as u32);
            let mut expect = f64::INFINITY;
            for idx in 0..total {
                if idx == (total - 1) / 2 {
                    continue;
                }
                let (mut lo, mut hi) = (0.0, 0.0);
                let mut rem = idx;
                for &coef in &row {
                    let (pl, ph) = pieces[rem % 3];
                    rem /= 3;
                    let (e1, e2) = (coef * pl, coef * ph);
                    lo += e1.min(e2);
                    hi += e1.max(e2);
                }
                let dist = if lo <= 0.0 && 0.0 <= hi { 0.0 } else { lo.abs().min(hi.abs()) };
                expect = expect.min(dist);
            }
            let rep = check_prop2(&a, prior, 0.01).unwrap();
            assert!(
                (rep.margin + rep.threshold - expect).abs() < 1e-9,
                "trial {trial}: {} vs {expect}",
                rep.margin + rep.threshold
            );
        }
    }

    #[test]
    fn reports_serialize_with_the_agreed_field_names() {
        let rep = check_prop1(&section_matrix(), 1.0, 0.1).unwrap();
        let json = crate::jsonio::to_json_string(&rep).unwrap();
        assert!(json.starts_with("{\"proposition\":\"P1\",\"holds\":true,\"margin\":"));
        assert!(json.contains("\"worstGamma\":["));
        let back: ConditionReport = crate::jsonio::from_json_str(&json).unwrap();
        assert_eq!(back.worst_gamma, rep.worst_gamma);
        assert_eq!(back.margin, rep.margin);
    }

    #[test]
    fn negative_bounds_are_rejected() {
        assert!(check_prop1(&section_matrix(), 1.0, -0.1).is_err());
        assert!(check_prop1(&section_matrix(), 0.0, 0.1).is_err());
        let prior = MagnitudePrior::new(0.9, 1.1).unwrap();
        assert!(check_prop3(&section_matrix(), prior, 0.03, -1e-9).is_err());
    }
}
