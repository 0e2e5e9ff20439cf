//! Domain types, uniform quantization, and random instance generation.

use crate::linalg::Matrix;
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Uniform};
use serde::{Deserialize, Serialize};

/// Magnitude prior: every nonzero entry of the unknown vector lies in
/// [alpha, beta], with 0 < alpha <= beta. The midpoint d = (alpha + beta) / 2
/// is the magnitude assigned to recovered supports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorDoc", into = "PriorDoc")]
pub struct MagnitudePrior {
    alpha: f64,
    beta: f64,
    d: f64,
}

#[derive(Serialize, Deserialize)]
struct PriorDoc {
    alpha: f64,
    beta: f64,
}

impl From<MagnitudePrior> for PriorDoc {
    fn from(p: MagnitudePrior) -> Self {
        PriorDoc { alpha: p.alpha, beta: p.beta }
    }
}

impl TryFrom<PriorDoc> for MagnitudePrior {
    type Error = Error;
    fn try_from(doc: PriorDoc) -> Result<Self> {
        MagnitudePrior::new(doc.alpha, doc.beta)
    }
}

impl MagnitudePrior {
    /// Validates 0 < alpha <= beta and precomputes the midpoint.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta >= alpha && beta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "magnitude prior needs 0 < alpha <= beta, got [{alpha}, {beta}]"
            )));
        }
        Ok(MagnitudePrior { alpha, beta, d: 0.5 * (alpha + beta) })
    }

    /// Lower magnitude bound.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Upper magnitude bound.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Midpoint (alpha + beta) / 2.
    pub fn d(&self) -> f64 {
        self.d
    }
}

/// Uniform symmetric codebook: `levels` equidistant points spanning
/// [-range, range], together with the perturbation bound attached to values
/// quantized with it. The bound defaults to step/2 (nearest-point error) and
/// may be widened, never narrowed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantSpec {
    levels: usize,
    range: f64,
    step: f64,
    bound: f64,
}

impl QuantSpec {
    /// Codebook with the nearest-point bound step/2.
    pub fn new(levels: usize, range: f64) -> Result<Self> {
        if levels < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 levels, got {levels}")));
        }
        if !(range > 0.0 && range.is_finite()) {
            return Err(Error::InvalidConfig(format!("quantizer range must be positive, got {range}")));
        }
        let step = 2.0 * range / (levels - 1) as f64;
        Ok(QuantSpec { levels, range, step, bound: 0.5 * step })
    }

    /// Same codebook with a wider error bound (must be >= step/2).
    pub fn with_bound(self, bound: f64) -> Result<Self> {
        if !(bound >= 0.5 * self.step) {
            return Err(Error::InvalidConfig(format!(
                "bound {bound} is below the attainable quantization error {}",
                0.5 * self.step
            )));
        }
        Ok(QuantSpec { bound, ..self })
    }

    /// Number of codebook points.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Symmetric half-width of the codebook.
    pub fn range(&self) -> f64 {
        self.range
    }

    /// Distance between adjacent codebook points.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Perturbation bound attached to quantized values.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// The j-th codebook point, j in 0..levels.
    pub fn point(&self, j: usize) -> f64 {
        debug_assert!(j < self.levels);
        -self.range + self.step * j as f64
    }
}

/// Ground-truth problem data: the true matrix, the true sparse non-negative
/// vector, and the exact outputs y = A x.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    /// Parameter dimension.
    pub n: usize,
    /// Number of measurements.
    pub m: usize,
    /// Sparsity level of the true vector.
    pub k: usize,
    /// True m x n matrix.
    pub a: Matrix,
    /// True k-sparse vector, length n.
    pub x_true: Vec<f64>,
    /// Exact outputs A x_true, length m.
    pub y: Vec<f64>,
}

/// Quantized data with perturbation bounds and the magnitude prior.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    /// Quantized matrix, m x n.
    pub qa: Matrix,
    /// Quantized outputs, length m.
    pub qy: Vec<f64>,
    /// Elementwise bound on |QA - A|.
    pub delta_a: f64,
    /// Elementwise bound on |Qy - y|.
    pub delta_y: f64,
    /// Magnitude prior carried along for the solvers.
    pub prior: MagnitudePrior,
}

impl Observation {
    /// Parameter dimension.
    pub fn n(&self) -> usize {
        self.qa.cols()
    }

    /// Number of measurements.
    pub fn m(&self) -> usize {
        self.qa.rows()
    }
}

/// Nearest codebook point to v. Exact midpoints round toward the candidate
/// closer to zero; the symmetric midpoint of an even codebook takes the
/// nonnegative candidate. Values outside [-range, range] are an error.
pub fn quantize_value(v: f64, spec: &QuantSpec) -> Result<f64> {
    if !(v.abs() <= spec.range) {
        return Err(Error::Saturation { value: v, range: spec.range });
    }
    let u = (v + spec.range) / spec.step;
    let lo = (u.floor().max(0.0) as usize).min(spec.levels - 1);
    let hi = (lo + 1).min(spec.levels - 1);
    let a = spec.point(lo);
    let b = spec.point(hi);
    let da = (v - a).abs();
    let db = (b - v).abs();
    Ok(if da < db {
        a
    } else if db < da {
        b
    } else if a.abs() < b.abs() {
        a
    } else if b.abs() < a.abs() {
        b
    } else {
        a.max(b)
    })
}

/// Quantizes an instance entrywise; the observation inherits the specs'
/// perturbation bounds and the supplied prior.
pub fn quantize(
    inst: &Instance,
    spec_a: &QuantSpec,
    spec_y: &QuantSpec,
    prior: MagnitudePrior,
) -> Result<Observation> {
    let mut qa = Matrix::zeros(inst.m, inst.n);
    for i in 0..inst.m {
        for j in 0..inst.n {
            qa.set(i, j, quantize_value(inst.a.get(i, j), spec_a)?);
        }
    }
    let qy = inst.y.iter().map(|&v| quantize_value(v, spec_y)).collect::<Result<Vec<f64>>>()?;
    Ok(Observation { qa, qy, delta_a: spec_a.bound(), delta_y: spec_y.bound(), prior })
}

/// Draws a random instance: A has i.i.d. Gaussian entries with variance 1/m,
/// the support is a uniform k-subset, and the nonzero magnitudes are uniform
/// on [alpha, beta]. Deterministic for a fixed seed.
pub fn generate(n: usize, m: usize, k: usize, prior: MagnitudePrior, seed: u64) -> Result<Instance> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidDimension("n and m must be positive".into()));
    }
    if k > n {
        return Err(Error::InvalidDimension(format!("k = {k} exceeds n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, (1.0 / m as f64).sqrt()).expect("valid std dev");
    let mut a = Matrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            a.set(i, j, rng.sample(normal));
        }
    }
    let mut support = rand::seq::index::sample(&mut rng, n, k).into_vec();
    support.sort_unstable();
    let mut x_true = vec![0.0; n];
    if k > 0 {
        let mag = Uniform::new_inclusive(prior.alpha(), prior.beta()).expect("valid range");
        for &j in &support {
            x_true[j] = rng.sample(mag);
        }
    }
    let y = a.matvec(&x_true);
    Ok(Instance { n, m, k, a, x_true, y })
}

/// JSON file bundling a ground-truth instance and, once quantized, its
/// observation. Matrices are stored as flat row-major arrays; shape comes
/// from n and m.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Document {
    /// Parameter dimension.
    pub n: usize,
    /// Number of measurements.
    pub m: usize,
    /// Sparsity level.
    pub k: usize,
    /// Magnitude prior lower bound.
    pub alpha: f64,
    /// Magnitude prior upper bound.
    pub beta: f64,
    /// True matrix, row-major, length m*n.
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    /// True sparse vector.
    #[serde(rename = "xTrue", default, skip_serializing_if = "Option::is_none")]
    pub x_true: Option<Vec<f64>>,
    /// Exact outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    /// Quantized matrix, row-major, length m*n.
    #[serde(rename = "QA", default, skip_serializing_if = "Option::is_none")]
    pub qa: Option<Vec<f64>>,
    /// Quantized outputs.
    #[serde(rename = "Qy", default, skip_serializing_if = "Option::is_none")]
    pub qy: Option<Vec<f64>>,
    /// Bound on |QA - A|.
    #[serde(rename = "deltaA", default, skip_serializing_if = "Option::is_none")]
    pub delta_a: Option<f64>,
    /// Bound on |Qy - y|.
    #[serde(rename = "deltaY", default, skip_serializing_if = "Option::is_none")]
    pub delta_y: Option<f64>,
    /// Generator seed, when the instance was drawn randomly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Document {
    /// Document holding only the ground truth.
    pub fn from_instance(inst: &Instance, prior: &MagnitudePrior, seed: Option<u64>) -> Self {
        Document {
            n: inst.n,
            m: inst.m,
            k: inst.k,
            alpha: prior.alpha(),
            beta: prior.beta(),
            a: Some(inst.a.data().to_vec()),
            x_true: Some(inst.x_true.clone()),
            y: Some(inst.y.clone()),
            qa: None,
            qy: None,
            delta_a: None,
            delta_y: None,
            seed,
        }
    }

    /// Merges quantized data into the document.
    pub fn set_observation(&mut self, obs: &Observation) {
        self.qa = Some(obs.qa.data().to_vec());
        self.qy = Some(obs.qy.clone());
        self.delta_a = Some(obs.delta_a);
        self.delta_y = Some(obs.delta_y);
    }

    /// The magnitude prior stored in the document.
    pub fn prior(&self) -> Result<MagnitudePrior> {
        MagnitudePrior::new(self.alpha, self.beta)
    }

    /// Reconstructs the ground-truth instance, if present.
    pub fn instance(&self) -> Result<Instance> {
        let a = self.a.as_ref().ok_or_else(|| Error::InvalidConfig("document has no true matrix A".into()))?;
        let x_true = self.x_true.clone().ok_or_else(|| Error::InvalidConfig("document has no xTrue".into()))?;
        let y = self.y.clone().ok_or_else(|| Error::InvalidConfig("document has no y".into()))?;
        if a.len() != self.m * self.n || x_true.len() != self.n || y.len() != self.m {
            return Err(Error::DimensionMismatch("instance arrays disagree with n, m".into()));
        }
        Ok(Instance {
            n: self.n,
            m: self.m,
            k: self.k,
            a: Matrix::from_vec(self.m, self.n, a.clone()),
            x_true,
            y,
        })
    }

    /// Reconstructs the observation, if present.
    pub fn observation(&self) -> Result<Observation> {
        let qa = self.qa.as_ref().ok_or_else(|| Error::InvalidConfig("document has no quantized matrix QA".into()))?;
        let qy = self.qy.clone().ok_or_else(|| Error::InvalidConfig("document has no Qy".into()))?;
        let delta_a = self.delta_a.ok_or_else(|| Error::InvalidConfig("document has no deltaA".into()))?;
        let delta_y = self.delta_y.ok_or_else(|| Error::InvalidConfig("document has no deltaY".into()))?;
        if qa.len() != self.m * self.n || qy.len() != self.m {
            return Err(Error::DimensionMismatch("observation arrays disagree with n, m".into()));
        }
        Ok(Observation {
            qa: Matrix::from_vec(self.m, self.n, qa.clone()),
            qy,
            delta_a,
            delta_y,
            prior: self.prior()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tenths() -> QuantSpec {
        // Multiples of 0.1 on [-2, 2].
        QuantSpec::new(41, 2.0).unwrap()
    }

    #[test]
    fn quantize_value_picks_the_nearest_point() {
        let spec = tenths();
        assert!((quantize_value(0.2131, &spec).unwrap() - 0.2).abs() < 1e-12);
        assert!((quantize_value(1.2414, &spec).unwrap() - 1.2).abs() < 1e-12);
        assert_eq!(quantize_value(0.0, &spec).unwrap(), 0.0);
        assert!((quantize_value(-0.169, &spec).unwrap() + 0.2).abs() < 1e-12);
    }

    #[test]
    fn quantize_value_breaks_ties_toward_zero() {
        // Integer codebook {-2,...,2} keeps midpoint arithmetic exact.
        let spec = QuantSpec::new(5, 2.0).unwrap();
        assert_eq!(quantize_value(0.5, &spec).unwrap(), 0.0);
        assert_eq!(quantize_value(-0.5, &spec).unwrap(), 0.0);
        assert_eq!(quantize_value(1.5, &spec).unwrap(), 1.0);
        assert_eq!(quantize_value(-1.5, &spec).unwrap(), -1.0);
        // Symmetric midpoint of an even codebook: nonnegative candidate wins.
        let two = QuantSpec::new(2, 1.0).unwrap();
        assert_eq!(quantize_value(0.0, &two).unwrap(), 1.0);
    }

    #[test]
    fn quantize_value_errors_on_saturation() {
        let spec = tenths();
        assert!(matches!(quantize_value(2.4, &spec), Err(Error::Saturation { .. })));
        assert!(matches!(quantize_value(-2.0001, &spec), Err(Error::Saturation { .. })));
        assert!(quantize_value(2.0, &spec).is_ok());
    }

    #[test]
    fn quantize_value_stays_within_half_step() {
        let spec = QuantSpec::new(137, 1.7).unwrap();
        let mut v = -1.7;
        while v <= 1.7 {
            let q = quantize_value(v, &spec).unwrap();
            assert!((q - v).abs() <= 0.5 * spec.step() + 1e-12);
            v += 0.0113;
        }
    }

    #[test]
    fn quantize_matches_the_two_entry_example() {
        let prior = MagnitudePrior::new(1.0, 1.0).unwrap();
        let a = Matrix::from_rows(&[vec![0.2131, 1.2414]]);
        let inst = Instance { n: 2, m: 1, k: 1, a, x_true: vec![1.0, 0.0], y: vec![0.2131] };
        let spec = tenths().with_bound(0.1).unwrap();
        let obs = quantize(&inst, &spec, &spec, prior).unwrap();
        assert!((obs.qa.get(0, 0) - 0.2).abs() < 1e-12);
        assert!((obs.qa.get(0, 1) - 1.2).abs() < 1e-12);
        assert!((obs.qy[0] - 0.2).abs() < 1e-12);
        assert_eq!(obs.delta_a, 0.1);
        assert_eq!(obs.delta_y, 0.1);
    }

    #[test]
    fn quantize_fixes_codebook_points() {
        let spec = QuantSpec::new(5, 2.0).unwrap();
        let prior = MagnitudePrior::new(1.0, 1.0).unwrap();
        let a = Matrix::from_rows(&[vec![-2.0, 1.0], vec![0.0, 2.0]]);
        let inst = Instance { n: 2, m: 2, k: 1, a: a.clone(), x_true: vec![1.0, 0.0], y: vec![-2.0, 0.0] };
        let obs = quantize(&inst, &spec, &spec, prior).unwrap();
        assert_eq!(obs.qa, a);
        assert_eq!(obs.qy, inst.y);
    }

    #[test]
    fn generator_respects_the_sparsity_pattern() {
        let prior = MagnitudePrior::new(0.8, 1.2).unwrap();
        for seed in 0..50 {
            let inst = generate(10, 4, 2, prior, seed).unwrap();
            let nonzeros: Vec<f64> = inst.x_true.iter().copied().filter(|v| *v != 0.0).collect();
            assert_eq!(nonzeros.len(), 2);
            for v in nonzeros {
                assert!((0.8..=1.2).contains(&v));
            }
            // y = A x_true must hold to accumulation accuracy.
            let y = inst.a.matvec(&inst.x_true);
            let scale = 1e-12 * inst.n as f64 * inst.a.max_abs() * 1.2;
            for (yi, gi) in inst.y.iter().zip(y.iter()) {
                assert!((yi - gi).abs() <= scale);
            }
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let prior = MagnitudePrior::new(0.8, 1.2).unwrap();
        let a = generate(10, 4, 2, prior, 42).unwrap();
        let b = generate(10, 4, 2, prior, 42).unwrap();
        assert_eq!(a, b);
        let c = generate(10, 4, 2, prior, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generator_handles_the_empty_support() {
        let prior = MagnitudePrior::new(0.8, 1.2).unwrap();
        let inst = generate(10, 4, 0, prior, 7).unwrap();
        assert!(inst.x_true.iter().all(|v| *v == 0.0));
        assert!(inst.y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn generator_rejects_oversized_supports() {
        let prior = MagnitudePrior::new(0.8, 1.2).unwrap();
        assert!(matches!(generate(10, 4, 11, prior, 7), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn generator_matches_the_target_variance() {
        let prior = MagnitudePrior::new(1.0, 1.0).unwrap();
        // 10^4 entries of A with m = 4: sample variance within 10% of 1/4.
        let inst = generate(2500, 4, 0, prior, 11).unwrap();
        let data = inst.a.data();
        let mean: f64 = data.iter().sum::<f64>() / data.len() as f64;
        let var: f64 = data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / data.len() as f64;
        assert!((var - 0.25).abs() < 0.025, "sample variance {var}");
    }

    #[test]
    fn generator_draws_supports_uniformly() {
        let prior = MagnitudePrior::new(1.0, 1.0).unwrap();
        let n = 5;
        let k = 2;
        let draws = 10_000;
        let mut counts = vec![0usize; n];
        for seed in 0..draws {
            let inst = generate(n, 1, k, prior, 500_000 + seed).unwrap();
            for (j, v) in inst.x_true.iter().enumerate() {
                if *v != 0.0 {
                    counts[j] += 1;
                }
            }
        }
        // Each index is hit with probability k/n per draw.
        let p = k as f64 / n as f64;
        let expect = draws as f64 * p;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for (j, c) in counts.iter().enumerate() {
            assert!((*c as f64 - expect).abs() <= 3.0 * sigma, "index {j}: {c} vs {expect}");
        }
    }

    #[test]
    fn residuals_stay_within_bounds_across_random_instances() {
        let prior = MagnitudePrior::new(0.8, 1.2).unwrap();
        for seed in 0..100 {
            let inst = generate(10, 4, 2, prior, 900 + seed).unwrap();
            let levels = 100 + (seed as usize % 17) * 350;
            let ra = inst.a.max_abs().max(1e-9);
            let ry = inst.y.iter().fold(1e-9_f64, |acc, v| acc.max(v.abs()));
            let spec_a = QuantSpec::new(levels, ra).unwrap();
            let spec_y = QuantSpec::new(levels, ry).unwrap();
            let obs = quantize(&inst, &spec_a, &spec_y, prior).unwrap();
            for i in 0..inst.m {
                for j in 0..inst.n {
                    assert!((obs.qa.get(i, j) - inst.a.get(i, j)).abs() <= obs.delta_a + 1e-15);
                }
                assert!((obs.qy[i] - inst.y[i]).abs() <= obs.delta_y + 1e-15);
            }
        }
    }

    #[test]
    fn documents_roundtrip_instances_and_observations() {
        let prior = MagnitudePrior::new(0.8, 1.2).unwrap();
        let inst = generate(6, 3, 2, prior, 21).unwrap();
        let spec = QuantSpec::new(1000, inst.a.max_abs().max(1.0)).unwrap();
        let spec_y = QuantSpec::new(1000, inst.y.iter().fold(1.0_f64, |a, v| a.max(v.abs()))).unwrap();
        let obs = quantize(&inst, &spec, &spec_y, prior).unwrap();
        let mut doc = Document::from_instance(&inst, &prior, Some(21));
        doc.set_observation(&obs);
        let text = crate::jsonio::to_json_string(&doc).unwrap();
        let back: Document = crate::jsonio::from_json_str(&text).unwrap();
        assert_eq!(back.instance().unwrap(), inst);
        assert_eq!(back.observation().unwrap(), obs);
        assert_eq!(back.seed, Some(21));
    }
}
