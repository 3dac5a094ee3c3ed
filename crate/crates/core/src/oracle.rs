//! Brute-force verifiers for the inequalities behind the bounds.
//!
//! - [`exact_mgf_kl`]: `E[e^{n kl(S_n/n ‖ b)}]` for binomial `S_n`, summed
//!   exactly in log space.
//! - [`bernoulli_extreme_expectation`]: expectations over independent
//!   Bernoulli variables by enumerating `{0,1}^n`.
//! - [`comparison_check`]: Monte-Carlo check that a dependent `[0,1]`-valued
//!   process with conditional means `b` is dominated, for convex `f`, by the
//!   independent Bernoulli(`b`) process.
//! - [`hoeffding_mgf_check`], [`bernstein_mgf_check`]: Monte-Carlo checks of the
//!   moment generating function bounds behind Hoeffding-Azuma and Bernstein.
//! - [`scalar_inequality_checks`]: `e^x <= 1 + x + (e-2)x²` on `x <= 1` and
//!   `1 + x <= e^x`, on dense grids.
//!
//! Monte-Carlo work is split into fixed-size chunks with their own
//! substreams and merged in chunk order, so results do not depend on the
//! number of threads.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::individual::RangeSeq;
use crate::numeric::{log_sum_exp, CompensatedSum};
use crate::scalar::{bernoulli_kl, Prob};
use crate::simulation::{
    rng_from_seed, sample_field, sample_sequence, sample_values, substream_seed, ScenarioKind,
    ScenarioSpec, Shape, GENERATOR_ID,
};
use crate::E_MINUS_2;

/// Largest `n` accepted by [`exact_mgf_kl`].
pub const MAX_EXACT_N: u64 = 2000;

/// Largest dimension enumerated by [`bernoulli_extreme_expectation`].
pub const MAX_ENUMERATION_DIM: usize = 20;

/// Number of standard errors allowed above a one-sided Monte-Carlo bound.
pub const MC_MARGIN_SE: f64 = 4.0;

/// Rounding allowance of the exact sums. At `n = 1` the value is exactly
/// `n + 1 = 2` for every `b`, so `value/(n+1) <= 1` is tight.
pub const EXACT_TOL: f64 = 1e-12;

const MC_CHUNK: u64 = 10_000;
const ENUMERATION_CHUNK: u64 = 1 << 12;

fn ln_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(MAX_EXACT_N as usize + 1);
        let mut acc = CompensatedSum::new();
        table.push(0.0);
        for k in 1..=MAX_EXACT_N {
            acc.add((k as f64).ln());
            table.push(acc.value());
        }
        table
    })
}

/// `k ln(x)` with `0 ln 0 = 0`.
fn k_ln(k: f64, x: f64) -> f64 {
    if k == 0.0 {
        0.0
    } else {
        k * x.ln()
    }
}

/// `Σ_k C(n,k) b^k (1-b)^{n-k} e^{n kl(k/n ‖ b)}` for `1 <= n <= 2000`.
///
/// Every term is formed in log space and the sum is a log-sum-exp with
/// compensated summation. For `b ∈ {0, 1}` the binomial is degenerate and the
/// value is 1.
pub fn exact_mgf_kl(n: u64, b: Prob) -> Result<f64> {
    if n == 0 || n > MAX_EXACT_N {
        return Err(Error::param("n", n as f64, "within [1, 2000]"));
    }
    let b = b.value();
    if b == 0.0 || b == 1.0 {
        return Ok(1.0);
    }
    let lf = ln_factorials();
    let nf = n as f64;
    let (ln_b, ln_1b) = (b.ln(), (-b).ln_1p());
    let terms: Vec<f64> = (0..=n)
        .map(|k| {
            let (kf, rest) = (k as f64, (n - k) as f64);
            let ln_choose = lf[n as usize] - lf[k as usize] - lf[(n - k) as usize];
            let ln_prob = k_ln(kf, b) + k_ln(rest, 1.0 - b);
            // n kl(k/n ‖ b) = k ln(k/(nb)) + (n-k) ln((n-k)/(n(1-b)))
            let n_kl = if k == 0 { 0.0 } else { kf * ((kf / nf).ln() - ln_b) }
                + if k == n { 0.0 } else { rest * ((rest / nf).ln() - ln_1b) };
            ln_choose + ln_prob + n_kl
        })
        .collect();
    Ok(log_sum_exp(&terms).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
enum ConvexKind {
    ExpNKl { b: f64 },
    MaxCoordinate,
    SquaredDeviationOfSum { target: f64 },
    Quadratic { dimension: usize, matrix: Vec<f64>, linear: Vec<f64> },
    Linear { weights: Vec<f64>, offset: f64 },
}

/// A function on `[0,1]^n` that is convex by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConvexTestFunction(ConvexKind);

impl ConvexTestFunction {
    /// `f(x) = e^{n kl(mean(x) ‖ b)}` for `b ∈ (0,1)`.
    pub fn exp_n_kl(b: f64) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::param("b", b, "in (0, 1)"));
        }
        Ok(ConvexTestFunction(ConvexKind::ExpNKl { b }))
    }

    /// `f(x) = max_i x_i`.
    pub fn max_coordinate() -> Self {
        ConvexTestFunction(ConvexKind::MaxCoordinate)
    }

    /// `f(x) = (Σ x_i - target)²`.
    pub fn squared_deviation_of_sum(target: f64) -> Result<Self> {
        if !target.is_finite() {
            return Err(Error::param("target", target, "finite"));
        }
        Ok(ConvexTestFunction(ConvexKind::SquaredDeviationOfSum { target }))
    }

    /// `f(x) = xᵀAx + cᵀx`; rejects `A` that is not symmetric positive semidefinite.
    pub fn quadratic(matrix: Vec<f64>, linear: Vec<f64>) -> Result<Self> {
        let dimension = linear.len();
        if matrix.len() != dimension * dimension {
            return Err(Error::LengthMismatch {
                left: matrix.len(),
                right: dimension * dimension,
            });
        }
        if matrix.iter().chain(&linear).any(|v| !v.is_finite()) {
            return Err(Error::Incompatible("quadratic coefficients must be finite".into()));
        }
        let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..dimension {
            for j in 0..i {
                if (matrix[i * dimension + j] - matrix[j * dimension + i]).abs() > 1e-12 * scale {
                    return Err(Error::Incompatible("quadratic matrix is not symmetric".into()));
                }
            }
        }
        let smallest = min_eigenvalue(&matrix, dimension);
        if smallest < -1e-10 * scale {
            return Err(Error::Incompatible(format!(
                "quadratic matrix is not positive semidefinite (eigenvalue {smallest:e})"
            )));
        }
        Ok(ConvexTestFunction(ConvexKind::Quadratic {
            dimension,
            matrix,
            linear,
        }))
    }

    /// `GᵀG/n + cᵀx` with `G` and `c` uniform on `[-1,1]`, drawn from `seed`.
    pub fn random_quadratic(dimension: usize, seed: u64) -> Result<Self> {
        if dimension == 0 || dimension > MAX_ENUMERATION_DIM {
            return Err(Error::param("dimension", dimension as f64, "within [1, 20]"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = (0..dimension * dimension).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let linear: Vec<f64> = (0..dimension).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mut matrix = vec![0.0; dimension * dimension];
        for i in 0..dimension {
            for j in 0..=i {
                let v: f64 = (0..dimension)
                    .map(|k| g[k * dimension + i] * g[k * dimension + j])
                    .sum::<f64>()
                    / dimension as f64;
                matrix[i * dimension + j] = v;
                matrix[j * dimension + i] = v;
            }
        }
        ConvexTestFunction::quadratic(matrix, linear)
    }

    /// `f(x) = wᵀx + offset`.
    pub fn linear(weights: Vec<f64>, offset: f64) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) || !offset.is_finite() {
            return Err(Error::Incompatible("linear coefficients must be finite".into()));
        }
        Ok(ConvexTestFunction(ConvexKind::Linear { weights, offset }))
    }

    pub fn name(&self) -> &'static str {
        match self.0 {
            ConvexKind::ExpNKl { .. } => "exp-n-kl",
            ConvexKind::MaxCoordinate => "max-coordinate",
            ConvexKind::SquaredDeviationOfSum { .. } => "squared-deviation-of-sum",
            ConvexKind::Quadratic { .. } => "quadratic",
            ConvexKind::Linear { .. } => "linear",
        }
    }

    /// Required input dimension, if fixed.
    pub fn dimension(&self) -> Option<usize> {
        match &self.0 {
            ConvexKind::Quadratic { dimension, .. } => Some(*dimension),
            ConvexKind::Linear { weights, .. } => Some(weights.len()),
            _ => None,
        }
    }

    fn check_dimension(&self, n: usize) -> Result<()> {
        match self.dimension() {
            Some(d) if d != n => Err(Error::LengthMismatch { left: n, right: d }),
            _ => Ok(()),
        }
    }

    /// Evaluates `f`; `x` must have the function's dimension.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match &self.0 {
            ConvexKind::ExpNKl { b } => {
                let n = x.len() as f64;
                let mean = (x.iter().sum::<f64>() / n).clamp(0.0, 1.0);
                let kl = bernoulli_kl(Prob::clamped(mean).expect("finite mean"), Prob::clamped(*b).expect("validated"));
                (n * kl.value()).exp()
            }
            ConvexKind::MaxCoordinate => x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ConvexKind::SquaredDeviationOfSum { target } => (x.iter().sum::<f64>() - target).powi(2),
            ConvexKind::Quadratic {
                dimension,
                matrix,
                linear,
            } => {
                let mut total = 0.0;
                for i in 0..*dimension {
                    let row = &matrix[i * dimension..(i + 1) * dimension];
                    let ax: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
                    total += x[i] * ax + linear[i] * x[i];
                }
                total
            }
            ConvexKind::Linear { weights, offset } => {
                weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + offset
            }
        }
    }
}

/// The standard catalogue for dimension `n` and drift `b`: exp-n-kl,
/// max-coordinate, squared deviation of the sum from `nb`, a random convex
/// quadratic and a random linear function.
pub fn convex_catalog(n: usize, b: f64, seed: u64) -> Result<Vec<ConvexTestFunction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Ok(vec![
        ConvexTestFunction::exp_n_kl(b)?,
        ConvexTestFunction::max_coordinate(),
        ConvexTestFunction::squared_deviation_of_sum(n as f64 * b)?,
        ConvexTestFunction::random_quadratic(n, rng.gen())?,
        ConvexTestFunction::linear(weights, rng.gen_range(-1.0..=1.0))?,
    ])
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
fn min_eigenvalue(matrix: &[f64], n: usize) -> f64 {
    let mut a = matrix.to_vec();
    let norm: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).fold(f64::INFINITY, f64::min)
}

/// `E f(Y)` for independent `Y_i ~ Bernoulli(b_i)`, by enumerating `{0,1}^n`.
pub fn bernoulli_extreme_expectation(f: &ConvexTestFunction, biases: &[f64]) -> Result<f64> {
    let n = biases.len();
    if n == 0 || n > MAX_ENUMERATION_DIM {
        return Err(Error::param("n", n as f64, "within [1, 20]"));
    }
    for b in biases {
        Prob::new(*b)?;
    }
    f.check_dimension(n)?;
    let total = 1u64 << n;
    let chunks = total.div_ceil(ENUMERATION_CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut x = vec![0.0; n];
            let mut sum = CompensatedSum::new();
            let end = ((chunk + 1) * ENUMERATION_CHUNK).min(total);
            for mask in chunk * ENUMERATION_CHUNK..end {
                let mut weight = 1.0;
                for (i, b) in biases.iter().enumerate() {
                    let bit = (mask >> i) & 1 == 1;
                    x[i] = if bit { 1.0 } else { 0.0 };
                    weight *= if bit { *b } else { 1.0 - b };
                }
                if weight > 0.0 {
                    sum.add(weight * f.evaluate(&x));
                }
            }
            sum.value()
        })
        .collect();
    Ok(partial.into_iter().collect::<CompensatedSum>().value())
}

/// Running mean and sum of squared deviations, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0.0 {
            return other;
        }
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + d * other.count / count,
            m2: self.m2 + other.m2 + d * d * self.count * other.count / count,
        }
    }

    fn standard_error(&self) -> f64 {
        if self.count < 2.0 {
            0.0
        } else {
            (self.m2.max(0.0) / (self.count - 1.0) / self.count).sqrt()
        }
    }
}

/// Runs `samples` draws in fixed chunks; `draw` fills the accumulators of one chunk.
fn chunked_moments<F>(samples: u64, seed: u64, width: usize, draw: F) -> Vec<Moments>
where
    F: Fn(&mut ChaCha8Rng, &mut [Moments]) + Sync,
{
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<Vec<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rng_from_seed(substream_seed(seed, chunk));
            let mut acc = vec![Moments::default(); width];
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            for _ in 0..count {
                draw(&mut rng, &mut acc);
            }
            acc
        })
        .collect();
    partial.into_iter().fold(vec![Moments::default(); width], |acc, chunk| {
        acc.into_iter().zip(chunk).map(|(a, b)| a.merge(b)).collect()
    })
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < 2 {
        Err(Error::param("samples", samples as f64, "at least 2"))
    } else {
        Ok(())
    }
}

/// Outcome of a one-sided Monte-Carlo comparison `estimate <= bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McOutcome {
    pub label: String,
    pub estimate: f64,
    pub standard_error: f64,
    pub bound: f64,
    pub samples: u64,
    /// `estimate <= bound + 4 se`.
    pub pass: bool,
}

impl McOutcome {
    fn new(label: String, moments: Moments, bound: f64, samples: u64) -> Self {
        let se = moments.standard_error();
        McOutcome {
            label,
            estimate: moments.mean,
            standard_error: se,
            bound,
            samples,
            pass: moments.mean <= bound + MC_MARGIN_SE * se + 1e-12 * bound.abs().max(1.0),
        }
    }

    /// `(estimate - bound - 4 se) / max(1, |bound|)`; positive means failure.
    pub fn slack(&self) -> f64 {
        (self.estimate - self.bound - MC_MARGIN_SE * self.standard_error) / self.bound.abs().max(1.0)
    }
}

/// Compares `E f(X)` for the scenario's dependent process (Monte Carlo) with
/// `E f(Y)` for independent Bernoulli(`b`) variables (exact).
pub fn comparison_check(
    f: &ConvexTestFunction,
    spec: &ScenarioSpec,
    samples: u64,
    seed: u64,
) -> Result<McOutcome> {
    spec.validate()?;
    check_samples(samples)?;
    let b = spec.drift().ok_or_else(|| {
        Error::Incompatible("the comparison needs [0,1]-valued variables with drift b".into())
    })?;
    let rhs = bernoulli_extreme_expectation(f, &vec![b; spec.n])?;
    let moments = chunked_moments(samples, seed, 1, |rng, acc| {
        let mut x = Vec::with_capacity(spec.n);
        sample_values(spec, rng, &mut x);
        acc[0].push(f.evaluate(&x));
    });
    Ok(McOutcome::new(
        format!("{} / {} / n={}", f.name(), scenario_label(spec), spec.n),
        moments[0],
        rhs,
        samples,
    ))
}

fn scenario_label(spec: &ScenarioSpec) -> String {
    match &spec.kind {
        ScenarioKind::IidBernoulli { b } => format!("iid(b={b})"),
        ScenarioKind::DependentBounded { b, strength } => format!("dependent(b={b}, strength={strength})"),
        ScenarioKind::MdsBounded { shape, .. } => format!("mds({shape:?})"),
        ScenarioKind::IwSampling { rewards, p_min, adaptive } => {
            format!("iw(|H|={}, p_min={p_min}, adaptive={adaptive})", rewards.len())
        }
    }
}

/// `E[e^{λM_n}] <= e^{(λ²/8) Σ(β_i-α_i)²}` for mean-zero two-point increments
/// on the endpoints of `ranges` (the extremal case).
///
/// The estimate is normalised by the bound, so the reported bound is 1.
pub fn hoeffding_mgf_check(ranges: &RangeSeq, lambda: f64, samples: u64, seed: u64) -> Result<McOutcome> {
    if !lambda.is_finite() {
        return Err(Error::param("lambda", lambda, "finite"));
    }
    check_samples(samples)?;
    let spec = ScenarioSpec::mds_bounded(ranges.clone(), Shape::TwoPoint, 0)?;
    let log_bound = lambda * lambda / 8.0 * ranges.sum_squared_widths();
    let moments = chunked_moments(samples, seed, 1, |rng, acc| {
        let mut z = Vec::with_capacity(spec.n);
        sample_values(&spec, rng, &mut z);
        let m: f64 = z.iter().sum();
        acc[0].push((lambda * m - log_bound).exp());
    });
    Ok(McOutcome::new(
        format!("hoeffding n={} lambda={lambda}", ranges.len()),
        moments[0],
        1.0,
        samples,
    ))
}

/// `E[e^{λM_n - (e-2)λ²V_n}] <= 1` for `0 <= λ <= 1/K`, with the simulator's
/// exact `V_n`. For the importance-weighted field every hypothesis is checked
/// and the worst one reported.
pub fn bernstein_mgf_check(spec: &ScenarioSpec, lambda: f64, samples: u64, seed: u64) -> Result<McOutcome> {
    spec.validate()?;
    check_samples(samples)?;
    let k = match &spec.kind {
        ScenarioKind::IwSampling { p_min, .. } => 1.0 / p_min + 1.0,
        _ => spec.increment_ranges()?.abs_bound(),
    };
    if !(lambda >= 0.0 && lambda <= 1.0 / k) {
        return Err(Error::param("lambda", lambda, "in [0, 1/K]"));
    }
    let c = E_MINUS_2 * lambda * lambda;
    let moments = match &spec.kind {
        ScenarioKind::IwSampling { rewards, .. } => {
            chunked_moments(samples, seed, rewards.len(), |rng, acc| {
                let trace = sample_field(spec, rng, false);
                for (h, a) in acc.iter_mut().enumerate() {
                    a.push((lambda * trace.martingales[h] - c * trace.variances[h]).exp());
                }
            })
        }
        _ => chunked_moments(samples, seed, 1, |rng, acc| {
            let trace = sample_sequence(spec, rng);
            acc[0].push((lambda * trace.martingale() - c * trace.variance()).exp());
        }),
    };
    let worst = moments
        .into_iter()
        .map(|m| McOutcome::new(String::new(), m, 1.0, samples))
        .fold(None::<McOutcome>, |worst, o| match worst {
            Some(w) if w.slack() >= o.slack() => Some(w),
            _ => Some(o),
        })
        .expect("at least one coordinate");
    Ok(McOutcome {
        label: format!("bernstein {} n={} lambda={lambda}", scenario_label(spec), spec.n),
        ..worst
    })
}

/// Exact `E[e^{λZ - (e-2)λ² b(1-b)}]` for `Z = X - b`, `X ~ Bernoulli(b)`.
pub fn bernstein_two_point_exact(b: Prob, lambda: f64) -> Result<f64> {
    let b = b.value();
    let k = b.max(1.0 - b);
    if !(lambda >= 0.0 && lambda <= 1.0 / k) {
        return Err(Error::param("lambda", lambda, "in [0, 1/max(b, 1-b)]"));
    }
    let penalty = E_MINUS_2 * lambda * lambda * b * (1.0 - b);
    Ok(b * (lambda * (1.0 - b) - penalty).exp() + (1.0 - b) * (-lambda * b - penalty).exp())
}

/// Worst violation of a pointwise inequality `lhs(x) <= rhs(x)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub points: u64,
    /// Points where `lhs - rhs > 1e-12 · max(1, |rhs|)`.
    pub violations: u64,
    /// `max (lhs - rhs) / max(1, |rhs|)`.
    pub max_slack: f64,
}

fn grid_check(name: &str, lo_steps: i64, hi_steps: i64, step: f64, lhs: fn(f64) -> f64, rhs: fn(f64) -> f64) -> InequalityCheck {
    let (violations, max_slack) = (lo_steps..=hi_steps)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / step;
            let r = rhs(x);
            let slack = (lhs(x) - r) / r.abs().max(1.0);
            (u64::from(slack > 1e-12), slack)
        })
        .reduce(|| (0, f64::NEG_INFINITY), |a, b| (a.0 + b.0, a.1.max(b.1)));
    InequalityCheck {
        name: name.to_string(),
        points: (hi_steps - lo_steps + 1) as u64,
        violations,
        max_slack,
    }
}

/// `e^x <= 1 + x + (e-2)x²` on `[-50, 1]` and `1 + x <= e^x` on `[-50, 50]`,
/// both with step `1e-4`.
pub fn scalar_inequality_checks() -> Vec<InequalityCheck> {
    vec![
        grid_check("exp-quadratic-upper", -500_000, 10_000, 1e4, f64::exp, |x| 1.0 + x + E_MINUS_2 * x * x),
        grid_check("exp-linear-lower", -500_000, 500_000, 1e4, |x| 1.0 + x, f64::exp),
    ]
}

/// Markov's inequality on `X = e^{n kl(S_n/n ‖ b)}`, `S_n ~ Binomial(n, b)`,
/// whose mean is known exactly: `P(X > E[X]/δ) <= δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovOutcome {
    pub delta: f64,
    pub threshold: f64,
    pub rate: f64,
    /// `δ + 3√(δ(1-δ)/samples)`.
    pub band: f64,
    pub pass: bool,
}

pub fn markov_check(n: usize, b: f64, deltas: &[f64], samples: u64, seed: u64) -> Result<Vec<MarkovOutcome>> {
    check_samples(samples)?;
    let spec = ScenarioSpec::iid_bernoulli(b, n, 0)?;
    let f = ConvexTestFunction::exp_n_kl(b)?;
    let mean = exact_mgf_kl(n as u64, Prob::new(b)?)?;
    let thresholds: Vec<f64> = deltas
        .iter()
        .map(|d| {
            crate::error::check_delta(*d)?;
            Ok(mean / d)
        })
        .collect::<Result<_>>()?;
    let moments = chunked_moments(samples, seed, thresholds.len(), |rng, acc| {
        let mut x = Vec::with_capacity(n);
        sample_values(&spec, rng, &mut x);
        let value = f.evaluate(&x);
        for (a, t) in acc.iter_mut().zip(&thresholds) {
            a.push(if value > *t { 1.0 } else { 0.0 });
        }
    });
    Ok(deltas
        .iter()
        .zip(thresholds)
        .zip(moments)
        .map(|((delta, threshold), m)| {
            let band = delta + 3.0 * (delta * (1.0 - delta) / samples as f64).sqrt();
            MarkovOutcome {
                delta: *delta,
                threshold,
                rate: m.mean,
                band,
                pass: m.mean <= band,
            }
        })
        .collect())
}

/// Checks run by [`run_verification`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    ExactMgf,
    Enumeration,
    Comparison,
    HoeffdingMgf,
    BernsteinMgf,
    Scalar,
    Markov,
}

impl CheckName {
    pub const ALL: [CheckName; 7] = [
        CheckName::ExactMgf,
        CheckName::Enumeration,
        CheckName::Comparison,
        CheckName::HoeffdingMgf,
        CheckName::BernsteinMgf,
        CheckName::Scalar,
        CheckName::Markov,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckName::ExactMgf => "exact-mgf",
            CheckName::Enumeration => "enumeration",
            CheckName::Comparison => "comparison",
            CheckName::HoeffdingMgf => "hoeffding-mgf",
            CheckName::BernsteinMgf => "bernstein-mgf",
            CheckName::Scalar => "scalar",
            CheckName::Markov => "markov",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckName::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "check",
                name: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub checks: Vec<CheckName>,
    /// Largest `n` of the exact-mgf sweep.
    pub n_max: u64,
    /// Monte-Carlo samples per case.
    pub mc_samples: u64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            checks: CheckName::ALL.to_vec(),
            n_max: MAX_EXACT_N,
            mc_samples: 1_000_000,
            seed: 0,
        }
    }
}

/// Result of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: CheckName,
    pub pass: bool,
    pub cases: u64,
    /// Worst case of the check's statistic; the check passes iff it is within
    /// the threshold stated in `detail`.
    pub max_slack: f64,
    pub samples: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    pub n_max: u64,
    pub mc_samples: u64,
    pub seed: u64,
    pub generator: String,
}

/// Drift grid `0.01, 0.02, ..., 0.99`.
pub fn drift_grid() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

/// Outcome of the exact-mgf sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMgfSweep {
    pub cases: u64,
    /// `max value/(n+1)`.
    pub max_ratio: f64,
    /// `min value/√n` over `n >= 8`.
    pub min_sqrt_ratio: f64,
    /// `max value/(2√n)` over `n >= 8`.
    pub max_two_sqrt_ratio: f64,
    pub pass: bool,
}

/// `exact_mgf_kl(n, b)` for `n ∈ [1, n_max]` and `b` on [`drift_grid`].
pub fn exact_mgf_sweep(n_max: u64) -> Result<ExactMgfSweep> {
    if n_max == 0 || n_max > MAX_EXACT_N {
        return Err(Error::param("n_max", n_max as f64, "within [1, 2000]"));
    }
    let grid: Vec<Prob> = drift_grid().into_iter().map(Prob::new).collect::<Result<_>>()?;
    let per_n: Vec<(f64, f64, f64)> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let root = (n as f64).sqrt();
            grid.iter().try_fold(
                (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
                |(ratio, low, high), b| {
                    let v = exact_mgf_kl(n, *b)?;
                    let (low, high) = if n >= 8 {
                        (low.min(v / root), high.max(v / (2.0 * root)))
                    } else {
                        (low, high)
                    };
                    Ok((ratio.max(v / (n as f64 + 1.0)), low, high))
                },
            )
        })
        .collect::<Result<_>>()?;
    let (max_ratio, min_sqrt_ratio, max_two_sqrt_ratio) = per_n.into_iter().fold(
        (f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |a, b| (a.0.max(b.0), a.1.min(b.1), a.2.max(b.2)),
    );
    Ok(ExactMgfSweep {
        cases: n_max * grid.len() as u64,
        max_ratio,
        min_sqrt_ratio,
        max_two_sqrt_ratio,
        pass: max_ratio <= 1.0 + EXACT_TOL && min_sqrt_ratio >= 1.0 && max_two_sqrt_ratio <= 1.0,
    })
}

/// Dependent processes used by the comparison check.
pub fn comparison_scenarios(n: usize) -> Result<Vec<ScenarioSpec>> {
    Ok(vec![
        ScenarioSpec::dependent_bounded(0.4, 1.0, n, 0)?,
        ScenarioSpec::dependent_bounded(0.7, 0.5, n, 0)?,
        ScenarioSpec::dependent_bounded(0.2, 1.0, n, 0)?,
    ])
}

/// Every comparison case: catalogue × scenarios × `n ∈ {4, 8, 12}`.
pub fn comparison_suite(samples: u64, seed: u64) -> Result<Vec<McOutcome>> {
    let mut outcomes = Vec::new();
    for (i, n) in [4usize, 8, 12].into_iter().enumerate() {
        for (j, spec) in comparison_scenarios(n)?.into_iter().enumerate() {
            let b = spec.drift().expect("drifted scenario");
            for (k, f) in convex_catalog(n, b, substream_seed(seed, 100 + i as u64))?.iter().enumerate() {
                let case = (i * 100 + j * 10 + k) as u64;
                outcomes.push(comparison_check(f, &spec, samples, substream_seed(seed, case))?);
            }
        }
    }
    Ok(outcomes)
}

/// Five Hoeffding-Azuma parameterisations, including the trivial `λ = 0`
/// and zero-width cases.
pub fn hoeffding_suite(samples: u64, seed: u64) -> Result<Vec<McOutcome>> {
    let varying = RangeSeq::new((1..=20).map(|i| (-(i as f64) / 20.0, 1.0 - i as f64 / 40.0)))?;
    let cases = [
        (RangeSeq::constant(-0.5, 0.5, 50)?, 0.2),
        (RangeSeq::constant(-0.5, 0.5, 10)?, 0.0),
        (RangeSeq::constant(0.0, 0.0, 10)?, 1.0),
        (RangeSeq::constant(-0.2, 0.8, 30)?, 1.0),
        (varying, -0.7),
    ];
    cases
        .iter()
        .enumerate()
        .map(|(i, (ranges, lambda))| hoeffding_mgf_check(ranges, *lambda, samples, substream_seed(seed, i as u64)))
        .collect()
}

/// Five Bernstein parameterisations, including `λ = 0` and the
/// importance-weighted field at `λ = 1/K`.
pub fn bernstein_suite(samples: u64, seed: u64) -> Result<Vec<McOutcome>> {
    let iid = ScenarioSpec::iid_bernoulli(0.3, 30, 0)?;
    let dependent = ScenarioSpec::dependent_bounded(0.4, 1.0, 30, 0)?;
    let mds = ScenarioSpec::mds_bounded(RangeSeq::constant(-1.0, 1.0, 20)?, Shape::Uniform, 0)?;
    let field = ScenarioSpec::iw_sampling(vec![0.3, 0.8], 0.25, true, 20, 0)?;
    let cases = [
        (iid.clone(), 0.0),
        (iid, 1.0 / 0.7),
        (dependent, 1.0 / 0.6),
        (mds, 1.0),
        (field, 0.2),
    ];
    cases
        .iter()
        .enumerate()
        .map(|(i, (spec, lambda))| bernstein_mgf_check(spec, *lambda, samples, substream_seed(seed, i as u64)))
        .collect()
}

fn mc_result(name: CheckName, outcomes: &[McOutcome], samples: u64) -> CheckResult {
    let worst = outcomes
        .iter()
        .max_by(|a, b| a.slack().total_cmp(&b.slack()))
        .expect("nonempty suite");
    CheckResult {
        name,
        pass: outcomes.iter().all(|o| o.pass),
        cases: outcomes.len() as u64,
        max_slack: worst.slack(),
        samples: samples * outcomes.len() as u64,
        detail: format!(
            "slack = (estimate - bound - 4se)/max(1,|bound|), must be <= 0; worst case {}: estimate {:.6e} ± {:.2e} vs bound {:.6e}",
            worst.label, worst.estimate, worst.standard_error, worst.bound
        ),
    }
}

fn run_check(name: CheckName, config: &VerifyConfig) -> Result<CheckResult> {
    let samples = config.mc_samples;
    let seed = substream_seed(config.seed, name as u64);
    Ok(match name {
        CheckName::ExactMgf => {
            let sweep = exact_mgf_sweep(config.n_max)?;
            CheckResult {
                name,
                pass: sweep.pass,
                cases: sweep.cases,
                max_slack: sweep.max_ratio,
                samples: 0,
                detail: format!(
                    "max value/(n+1) = {:.15} (must be <= 1, attained at n = 1); over n >= 8: min value/sqrt(n) = {:.6} (>= 1), max value/(2 sqrt(n)) = {:.6} (<= 1)",
                    sweep.max_ratio, sweep.min_sqrt_ratio, sweep.max_two_sqrt_ratio
                ),
            }
        }
        CheckName::Enumeration => {
            let mut worst = 0.0f64;
            let mut cases = 0;
            for n in 1..=MAX_ENUMERATION_DIM {
                for b in [0.1, 0.3, 0.5, 0.7, 0.9] {
                    let f = ConvexTestFunction::exp_n_kl(b)?;
                    let enumerated = bernoulli_extreme_expectation(&f, &vec![b; n])?;
                    let exact = exact_mgf_kl(n as u64, Prob::new(b)?)?;
                    worst = worst.max((enumerated - exact).abs() / exact.abs().max(1.0));
                    cases += 1;
                }
            }
            CheckResult {
                name,
                pass: worst <= 1e-12,
                cases,
                max_slack: worst,
                samples: 0,
                detail: "max relative difference between enumeration and the binomial sum, must be <= 1e-12".into(),
            }
        }
        CheckName::Comparison => mc_result(name, &comparison_suite(samples, seed)?, samples),
        CheckName::HoeffdingMgf => mc_result(name, &hoeffding_suite(samples, seed)?, samples),
        CheckName::BernsteinMgf => {
            let mut outcome = mc_result(name, &bernstein_suite(samples, seed)?, samples);
            let exact = [0.1, 0.5, 0.9]
                .iter()
                .map(|b| bernstein_two_point_exact(Prob::new(*b)?, 1.0))
                .collect::<Result<Vec<f64>>>()?;
            let worst = exact.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            outcome.pass &= worst <= 1.0;
            outcome.cases += exact.len() as u64;
            outcome.detail.push_str(&format!("; exact n=1 two-point at lambda=1: max {worst:.6} (<= 1)"));
            outcome
        }
        CheckName::Scalar => {
            let checks = scalar_inequality_checks();
            let worst = checks.iter().map(|c| c.max_slack).fold(f64::NEG_INFINITY, f64::max);
            let violations: u64 = checks.iter().map(|c| c.violations).sum();
            CheckResult {
                name,
                pass: violations == 0,
                cases: checks.iter().map(|c| c.points).sum(),
                max_slack: worst,
                samples: 0,
                detail: format!("{violations} grid points with (lhs - rhs)/max(1,|rhs|) > 1e-12"),
            }
        }
        CheckName::Markov => {
            let outcomes = markov_check(20, 0.3, &[0.5, 0.2, 0.1, 0.05, 0.01], samples, seed)?;
            let worst = outcomes.iter().map(|o| o.rate - o.band).fold(f64::NEG_INFINITY, f64::max);
            CheckResult {
                name,
                pass: outcomes.iter().all(|o| o.pass),
                cases: outcomes.len() as u64,
                max_slack: worst,
                samples,
                detail: "max of P(X > E[X]/delta) - (delta + 3 sigma), must be <= 0".into(),
            }
        }
    })
}

/// Runs the requested checks in order.
pub fn run_verification(config: &VerifyConfig) -> Result<VerifyReport> {
    if config.checks.is_empty() {
        return Err(Error::Missing("checks to run"));
    }
    let checks = config
        .checks
        .iter()
        .map(|name| run_check(*name, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport {
        pass: checks.iter().all(|c| c.pass),
        checks,
        n_max: config.n_max,
        mc_samples: config.mc_samples,
        seed: config.seed,
        generator: GENERATOR_ID.to_string(),
    })
}
