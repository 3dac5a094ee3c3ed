//! Seeded Monte-Carlo generators and the experiments built on them.
//!
//! Sequence scenarios produce a single process `X_1..X_n` whose conditional
//! law given the past is exposed through [`ScenarioSpec::conditional_law`], so
//! the martingale property can be asserted exactly rather than estimated. The
//! importance-weighted scenario produces a field of interdependent martingales
//! `M̄_n(h)`, one per hypothesis, driven by a single sampling process.
//!
//! Randomness: every stream is a ChaCha8 generator. Trial `t` of an experiment
//! with master seed `s` uses the seed `splitmix64(s ^ splitmix64(t))`, so
//! results do not depend on thread scheduling.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_delta, Error, Result};
use crate::individual::{
    bernstein_adaptive, bernstein_fixed_lambda, hoeffding_azuma_radius, kl_drift_bound,
    lambda_grid, Branch, Interval, RangeSeq,
};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::pac_bayes::{
    gibbs_posterior, pb_bernstein_adaptive, pb_bernstein_fixed_lambda, pb_ha_adaptive,
    pb_ha_fixed_lambda, pb_kl_bound, HypothesisSummary, PacBayesResult,
};
use crate::scalar::{refined_kl_upper, DiscreteDistribution, Prob};

/// Identifier of the pseudo-random construction, echoed into every report.
pub const GENERATOR_ID: &str = "chacha8/splitmix64";

/// Default ratio `c` of the geometric λ-grids.
pub const DEFAULT_GRID_RATIO: f64 = 1.1;

/// Default inverse temperature of the data-dependent Gibbs posterior.
pub const DEFAULT_GIBBS_GAMMA: f64 = 5.0;

/// The SplitMix64 finaliser.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of substream `index` under `master`.
pub fn substream_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Conditional law of one increment given the past.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    /// `high` with probability `p_high`, otherwise `low`.
    TwoPoint { low: f64, high: f64, p_high: f64 },
    Uniform { low: f64, high: f64 },
}

impl Law {
    pub fn mean(&self) -> f64 {
        match *self {
            Law::TwoPoint { low, high, p_high } => (1.0 - p_high) * low + p_high * high,
            Law::Uniform { low, high } => 0.5 * (low + high),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Law::TwoPoint { low, high, p_high } => p_high * (1.0 - p_high) * (high - low).powi(2),
            Law::Uniform { low, high } => (high - low).powi(2) / 12.0,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            Law::TwoPoint { low, high, .. } | Law::Uniform { low, high } => (low, high),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        match *self {
            Law::TwoPoint { low, high, p_high } => {
                if u < p_high {
                    high
                } else {
                    low
                }
            }
            Law::Uniform { low, high } => low + (high - low) * u,
        }
    }
}

/// Shape of the zero-mean increments of an `mds_bounded` scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Mass on the two endpoints `α_i, β_i`, weighted to have mean zero.
    TwoPoint,
    /// Uniform on `[-m_i, m_i]` with `m_i = min(-α_i, β_i)`.
    Uniform,
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-point" | "two_point" => Ok(Shape::TwoPoint),
            "uniform" => Ok(Shape::Uniform),
            other => Err(Error::Unknown {
                kind: "shape",
                name: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    /// `X_i ~ Bernoulli(b)` independently.
    IidBernoulli { b: f64 },
    /// `X_i` uniform on `{b - a_i, b + a_i}` with
    /// `a_i = strength · min(b, 1-b) · X_{i-1}` and `X_0 = b`: the support
    /// depends on the past but the conditional mean is always `b`.
    DependentBounded { b: f64, strength: f64 },
    /// Zero-mean increments `Z_i ∈ [α_i, β_i]`.
    MdsBounded { ranges: RangeSeq, shape: Shape },
    /// Importance-weighted sampling over `|H|` arms with mean rewards
    /// `r(h)`, sampling probabilities floored at `p_min`, adaptive to past
    /// rewards when `adaptive` is set.
    IwSampling {
        rewards: Vec<f64>,
        p_min: f64,
        adaptive: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(flatten)]
    pub kind: ScenarioKind,
    pub n: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn iid_bernoulli(b: f64, n: usize, seed: u64) -> Result<Self> {
        ScenarioSpec {
            kind: ScenarioKind::IidBernoulli { b },
            n,
            seed,
        }
        .validated()
    }

    pub fn dependent_bounded(b: f64, strength: f64, n: usize, seed: u64) -> Result<Self> {
        ScenarioSpec {
            kind: ScenarioKind::DependentBounded { b, strength },
            n,
            seed,
        }
        .validated()
    }

    pub fn mds_bounded(ranges: RangeSeq, shape: Shape, seed: u64) -> Result<Self> {
        let n = ranges.len();
        ScenarioSpec {
            kind: ScenarioKind::MdsBounded { ranges, shape },
            n,
            seed,
        }
        .validated()
    }

    pub fn iw_sampling(
        rewards: Vec<f64>,
        p_min: f64,
        adaptive: bool,
        n: usize,
        seed: u64,
    ) -> Result<Self> {
        ScenarioSpec {
            kind: ScenarioKind::IwSampling {
                rewards,
                p_min,
                adaptive,
            },
            n,
            seed,
        }
        .validated()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ScenarioSpec {
            seed,
            ..self.clone()
        }
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", 0.0, "a positive integer"));
        }
        match &self.kind {
            ScenarioKind::IidBernoulli { b } => {
                Prob::new(*b)?;
            }
            ScenarioKind::DependentBounded { b, strength } => {
                Prob::new(*b)?;
                if !(0.0..=1.0).contains(strength) {
                    return Err(Error::param("dependence strength", *strength, "within [0, 1]"));
                }
            }
            ScenarioKind::MdsBounded { ranges, .. } => {
                if ranges.len() != self.n {
                    return Err(Error::LengthMismatch {
                        left: ranges.len(),
                        right: self.n,
                    });
                }
                // Deserialised ranges bypass the constructor checks.
                RangeSeq::new(ranges.iter())?;
            }
            ScenarioKind::IwSampling { rewards, p_min, .. } => {
                if rewards.is_empty() {
                    return Err(Error::Missing("rewards r(h)"));
                }
                for r in rewards {
                    Prob::new(*r)?;
                }
                if !(*p_min > 0.0 && *p_min * rewards.len() as f64 <= 1.0) {
                    return Err(Error::param("p_min", *p_min, "in (0, 1/|H|]"));
                }
            }
        }
        Ok(())
    }

    /// Conditional mean `b` of `X_i`, for scenarios with a constant drift.
    pub fn drift(&self) -> Option<f64> {
        match self.kind {
            ScenarioKind::IidBernoulli { b } | ScenarioKind::DependentBounded { b, .. } => Some(b),
            _ => None,
        }
    }

    pub fn is_field(&self) -> bool {
        matches!(self.kind, ScenarioKind::IwSampling { .. })
    }

    /// Almost-sure ranges of the centred increments `Z_i = X_i - E[X_i | past]`.
    pub fn increment_ranges(&self) -> Result<RangeSeq> {
        match &self.kind {
            ScenarioKind::IidBernoulli { b } | ScenarioKind::DependentBounded { b, .. } => {
                RangeSeq::constant(-b, 1.0 - b, self.n)
            }
            ScenarioKind::MdsBounded { ranges, .. } => Ok(ranges.clone()),
            ScenarioKind::IwSampling { p_min, .. } => RangeSeq::constant(-1.0, 1.0 / p_min, self.n),
        }
    }

    /// Law of `X_i` (0-based `round`) given the previous value `X_{i-1}`.
    pub fn conditional_law(&self, round: usize, previous: Option<f64>) -> Result<Law> {
        if round >= self.n {
            return Err(Error::param("round", round as f64, "below n"));
        }
        match &self.kind {
            ScenarioKind::IwSampling { .. } => Err(Error::Incompatible(
                "the importance-weighted scenario is a field; use simulate_field".into(),
            )),
            _ => Ok(self.law_unchecked(round, previous)),
        }
    }

    fn law_unchecked(&self, round: usize, previous: Option<f64>) -> Law {
        match &self.kind {
            ScenarioKind::IidBernoulli { b } => Law::TwoPoint {
                low: 0.0,
                high: 1.0,
                p_high: *b,
            },
            ScenarioKind::DependentBounded { b, strength } => {
                let a = strength * b.min(1.0 - b) * previous.unwrap_or(*b);
                Law::TwoPoint {
                    low: b - a,
                    high: b + a,
                    p_high: 0.5,
                }
            }
            ScenarioKind::MdsBounded { ranges, shape } => {
                let (alpha, beta) = ranges.get(round);
                match shape {
                    Shape::TwoPoint if beta > alpha => Law::TwoPoint {
                        low: alpha,
                        high: beta,
                        p_high: -alpha / (beta - alpha),
                    },
                    Shape::TwoPoint => Law::TwoPoint {
                        low: 0.0,
                        high: 0.0,
                        p_high: 0.0,
                    },
                    Shape::Uniform => {
                        let m = (-alpha).min(beta);
                        Law::Uniform { low: -m, high: m }
                    }
                }
            }
            ScenarioKind::IwSampling { .. } => unreachable!("fields have no scalar law"),
        }
    }
}

/// Realisation of a sequence scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceTrace {
    /// `X_1..X_n` (the increments `Z_i` themselves for `mds_bounded`).
    pub values: Vec<f64>,
    /// `S_i = X_1 + ... + X_i`.
    pub partial_sums: Vec<f64>,
    /// `E[X_i | X_1..X_{i-1}]`.
    pub conditional_means: Vec<f64>,
    /// `Var[X_i | X_1..X_{i-1}]`.
    pub conditional_variances: Vec<f64>,
}

impl SequenceTrace {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `S_n`.
    pub fn sum(&self) -> f64 {
        self.partial_sums.last().copied().unwrap_or(0.0)
    }

    /// `M_n = Σ (X_i - E[X_i | past])`.
    pub fn martingale(&self) -> f64 {
        compensated_sum(self.values.iter().zip(&self.conditional_means).map(|(x, m)| x - m))
    }

    /// `V_n = Σ Var[X_i | past]`.
    pub fn variance(&self) -> f64 {
        compensated_sum(self.conditional_variances.iter().copied())
    }
}

/// Draws one sequence of a non-field scenario from `rng`.
pub(crate) fn sample_sequence<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> SequenceTrace {
    let mut trace = SequenceTrace {
        values: Vec::with_capacity(spec.n),
        partial_sums: Vec::with_capacity(spec.n),
        conditional_means: Vec::with_capacity(spec.n),
        conditional_variances: Vec::with_capacity(spec.n),
    };
    let mut previous = None;
    let mut sum = CompensatedSum::new();
    for round in 0..spec.n {
        let law = spec.law_unchecked(round, previous);
        let x = law.sample(rng);
        sum.add(x);
        trace.values.push(x);
        trace.partial_sums.push(sum.value());
        trace.conditional_means.push(law.mean());
        trace.conditional_variances.push(law.variance());
        previous = Some(x);
    }
    trace
}

/// Writes `X_1..X_n` into `out` without bookkeeping (hot Monte-Carlo loops).
pub(crate) fn sample_values<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R, out: &mut Vec<f64>) {
    out.clear();
    let mut previous = None;
    for round in 0..spec.n {
        let x = spec.law_unchecked(round, previous).sample(rng);
        out.push(x);
        previous = Some(x);
    }
}

/// Simulates a sequence scenario with the spec's seed.
pub fn simulate_sequence(spec: &ScenarioSpec) -> Result<SequenceTrace> {
    spec.validate()?;
    if spec.is_field() {
        return Err(Error::Incompatible(
            "the importance-weighted scenario is a field; use simulate_field".into(),
        ));
    }
    Ok(sample_sequence(spec, &mut rng_from_seed(spec.seed)))
}

/// One round of the importance-weighted field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRound {
    /// Sampling distribution `p_i` over H.
    pub probabilities: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    /// `Z̄_i(h) = reward · 1[A_i = h] / p_i(h) - r(h)`.
    pub increments: Vec<f64>,
    /// `Var[Z̄_i(h) | past] = r(h)/p_i(h) - r(h)²`.
    pub conditional_variances: Vec<f64>,
}

/// Realisation of the importance-weighted field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldTrace {
    pub n: usize,
    pub p_min: f64,
    pub rewards: Vec<f64>,
    /// `K = 1/p_min + 1`, a bound on `|Z̄_i(h)|`.
    pub range_bound: f64,
    pub rounds: Vec<FieldRound>,
    /// `M̄_n(h)`.
    pub martingales: Vec<f64>,
    /// `V̄_n(h)`, exact cumulative conditional variances.
    pub variances: Vec<f64>,
    /// `Σ_i 1/p_i(h)`, a sample-dependent upper bound on `V̄_n(h)`.
    pub variance_bounds: Vec<f64>,
    /// `S̄_n(h) = Σ_i p_min · reward · 1[A_i = h] / p_i(h)`, terms in `[0,1]`.
    pub bounded_sums: Vec<f64>,
    /// Importance-weighted reward estimates `(1/n) Σ_i reward · 1[A_i = h] / p_i(h)`.
    pub reward_estimates: Vec<f64>,
}

impl FieldTrace {
    pub fn hypotheses(&self) -> usize {
        self.rewards.len()
    }

    /// Conditional means `p_min · r(h)` of the `[0,1]`-valued variables behind `S̄_n(h)`.
    pub fn drifts(&self) -> Vec<f64> {
        self.rewards.iter().map(|r| self.p_min * r).collect()
    }

    /// Common ranges `[-1, 1/p_min]` of `Z̄_i(h)`.
    pub fn increment_ranges(&self) -> Result<RangeSeq> {
        RangeSeq::constant(-1.0, 1.0 / self.p_min, self.n)
    }

    pub fn summary(&self) -> Result<HypothesisSummary> {
        Ok(HypothesisSummary::new(self.n as u64)
            .with_sums(self.bounded_sums.clone())
            .with_martingales(self.martingales.clone())
            .with_variances(self.variances.clone())
            .with_range_bound(self.range_bound)
            .with_ranges(self.increment_ranges()?))
    }
}

/// Greedy-with-floor: mass proportional to smoothed empirical rewards, plus a
/// floor of `p_min` on every arm. Uniform when not adaptive.
fn sampling_distribution(p_min: f64, adaptive: bool, successes: &[f64], pulls: &[f64]) -> Vec<f64> {
    let m = successes.len();
    if !adaptive {
        return vec![1.0 / m as f64; m];
    }
    let estimates: Vec<f64> = successes
        .iter()
        .zip(pulls)
        .map(|(s, p)| (s + 1.0) / (p + 2.0))
        .collect();
    let total: f64 = estimates.iter().sum();
    let free = (1.0 - m as f64 * p_min).max(0.0);
    estimates.iter().map(|e| p_min + free * e / total).collect()
}

fn sample_index<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    probabilities.len() - 1
}

/// Draws one field realisation; per-round detail is kept only if `record_rounds`.
pub(crate) fn sample_field<R: Rng + ?Sized>(
    spec: &ScenarioSpec,
    rng: &mut R,
    record_rounds: bool,
) -> FieldTrace {
    let ScenarioKind::IwSampling {
        rewards,
        p_min,
        adaptive,
    } = &spec.kind
    else {
        unreachable!("validated by the caller")
    };
    let m = rewards.len();
    let mut successes = vec![0.0; m];
    let mut pulls = vec![0.0; m];
    let mut martingales = vec![CompensatedSum::new(); m];
    let mut variances = vec![CompensatedSum::new(); m];
    let mut variance_bounds = vec![CompensatedSum::new(); m];
    let mut bounded = vec![CompensatedSum::new(); m];
    let mut weighted = vec![CompensatedSum::new(); m];
    let mut rounds = Vec::with_capacity(if record_rounds { spec.n } else { 0 });
    for _ in 0..spec.n {
        let probabilities = sampling_distribution(*p_min, *adaptive, &successes, &pulls);
        let action = sample_index(&probabilities, rng);
        let reward = if rng.gen::<f64>() < rewards[action] { 1.0 } else { 0.0 };
        let mut increments = Vec::with_capacity(m);
        let mut conditional_variances = Vec::with_capacity(m);
        for h in 0..m {
            let observed = if h == action { reward / probabilities[h] } else { 0.0 };
            let z = observed - rewards[h];
            let v = rewards[h] / probabilities[h] - rewards[h] * rewards[h];
            martingales[h].add(z);
            variances[h].add(v);
            variance_bounds[h].add(1.0 / probabilities[h]);
            bounded[h].add((p_min * observed).min(1.0));
            weighted[h].add(observed);
            increments.push(z);
            conditional_variances.push(v);
        }
        successes[action] += reward;
        pulls[action] += 1.0;
        if !record_rounds {
            continue;
        }
        rounds.push(FieldRound {
            probabilities,
            action,
            reward,
            increments,
            conditional_variances,
        });
    }
    let n = spec.n as f64;
    FieldTrace {
        n: spec.n,
        p_min: *p_min,
        rewards: rewards.clone(),
        range_bound: 1.0 / p_min + 1.0,
        rounds,
        martingales: martingales.iter().map(CompensatedSum::value).collect(),
        variances: variances.iter().map(CompensatedSum::value).collect(),
        variance_bounds: variance_bounds.iter().map(CompensatedSum::value).collect(),
        bounded_sums: bounded.iter().map(|s| s.value().min(n)).collect(),
        reward_estimates: weighted.iter().map(|s| s.value() / n).collect(),
    }
}

/// Simulates the importance-weighted field with the spec's seed.
pub fn simulate_field(spec: &ScenarioSpec) -> Result<FieldTrace> {
    spec.validate()?;
    if !spec.is_field() {
        return Err(Error::Incompatible(
            "simulate_field needs an importance-weighted scenario".into(),
        ));
    }
    Ok(sample_field(spec, &mut rng_from_seed(spec.seed), true))
}

/// Bounds that coverage experiments know how to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundId {
    KlDrift,
    HoeffdingAzuma,
    Bernstein,
    BernsteinFixed,
    PbKl,
    PbHa,
    PbHaAdaptive,
    PbBernsteinFixed,
    PbBernstein,
}

impl BoundId {
    pub const ALL: [BoundId; 9] = [
        BoundId::KlDrift,
        BoundId::HoeffdingAzuma,
        BoundId::Bernstein,
        BoundId::BernsteinFixed,
        BoundId::PbKl,
        BoundId::PbHa,
        BoundId::PbHaAdaptive,
        BoundId::PbBernsteinFixed,
        BoundId::PbBernstein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundId::KlDrift => "kl-drift",
            BoundId::HoeffdingAzuma => "hoeffding-azuma",
            BoundId::Bernstein => "bernstein",
            BoundId::BernsteinFixed => "bernstein-fixed",
            BoundId::PbKl => "pb-kl",
            BoundId::PbHa => "pb-ha",
            BoundId::PbHaAdaptive => "pb-ha-adaptive",
            BoundId::PbBernsteinFixed => "pb-bernstein-fixed",
            BoundId::PbBernstein => "pb-bernstein",
        }
    }

    pub fn is_pac_bayes(self) -> bool {
        matches!(
            self,
            BoundId::PbKl
                | BoundId::PbHa
                | BoundId::PbHaAdaptive
                | BoundId::PbBernsteinFixed
                | BoundId::PbBernstein
        )
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundId::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "bound",
                name: s.to_string(),
            })
    }
}

/// Where Bernstein bounds take their variance term from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceSource {
    /// Exact cumulative conditional variances, known to the simulator.
    #[default]
    Exact,
    /// The looser sample-dependent bound: `Σ max(α_i², β_i²)` for sequences,
    /// `Σ_i 1/p_i(h)` for the importance-weighted field.
    SampleBound,
}

/// Posteriors tested in each trial of a PAC-Bayesian coverage experiment,
/// all against a uniform prior. A trial is a violation if the bound fails
/// for any of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoFamily {
    pub uniform: bool,
    pub point_masses: bool,
    /// Inverse temperature of a Gibbs posterior on the realised scores
    /// `-r̂(h)` (importance-weighted reward estimates).
    pub gibbs_gamma: Option<f64>,
}

impl Default for RhoFamily {
    fn default() -> Self {
        RhoFamily {
            uniform: true,
            point_masses: true,
            gibbs_gamma: Some(DEFAULT_GIBBS_GAMMA),
        }
    }
}

impl RhoFamily {
    fn fixed_members(&self, m: usize) -> Result<Vec<DiscreteDistribution>> {
        let mut members = Vec::new();
        if self.uniform {
            members.push(DiscreteDistribution::uniform(m)?);
        }
        if self.point_masses {
            for h in 0..m {
                members.push(DiscreteDistribution::point_mass(m, h)?);
            }
        }
        Ok(members)
    }

    fn size(&self, m: usize) -> usize {
        usize::from(self.uniform) + if self.point_masses { m } else { 0 } + usize::from(self.gibbs_gamma.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub bound: BoundId,
    pub delta: f64,
    /// Grid ratio for the adaptive bounds.
    pub c: f64,
    pub trials: u64,
    pub master_seed: u64,
    /// λ of the fixed-λ bounds. Defaults to the first λ-grid point for the
    /// Bernstein bounds and `√(8 ln(2/δ)/Σ(β-α)²)` for PAC-Bayes-Hoeffding-Azuma.
    pub lambda: Option<f64>,
    pub variance: VarianceSource,
    pub rho_family: RhoFamily,
}

impl CoverageConfig {
    pub fn new(bound: BoundId, delta: f64, trials: u64, master_seed: u64) -> Self {
        CoverageConfig {
            bound,
            delta,
            c: DEFAULT_GRID_RATIO,
            trials,
            master_seed,
            lambda: None,
            variance: VarianceSource::Exact,
            rho_family: RhoFamily::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchCounts {
    pub grid_ok: u64,
    pub variance_small: u64,
}

impl BranchCounts {
    fn record(&mut self, branch: Option<Branch>) {
        match branch {
            Some(Branch::GridOk) => self.grid_ok += 1,
            Some(Branch::VarianceSmall) => self.variance_small += 1,
            None => {}
        }
    }

    fn merge(&mut self, other: BranchCounts) {
        self.grid_ok += other.grid_ok;
        self.variance_small += other.variance_small;
    }
}

/// Comparison of the refined kl endpoint with the Hoeffding-Azuma endpoint
/// (kl drift bound only).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossoverStats {
    /// Trials where `q̂ + √(2q̂ε) + 2ε < q̂ + √(½ ln(2/δ)/n)`.
    pub refined_below_ha: u64,
    /// Trials with `S_n/n < 1/8`.
    pub empirical_below_eighth: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: ScenarioSpec,
    pub bound: BoundId,
    pub delta: f64,
    pub c: f64,
    pub trials: u64,
    pub violations: u64,
    pub violation_rate: f64,
    /// `δ + 3√(δ(1-δ)/T)`.
    pub acceptance_band: f64,
    pub pass: bool,
    /// Mean over all evaluations (trials × posteriors) of the bound's radius.
    pub mean_radius: f64,
    /// Mean interval width: the kl interval for kl bounds, `2 × radius` otherwise.
    pub mean_width: f64,
    pub posteriors_per_trial: usize,
    pub branch_counts: BranchCounts,
    pub grid_size: Option<usize>,
    pub lambda: Option<f64>,
    pub variance: VarianceSource,
    pub crossover: Option<CrossoverStats>,
    pub master_seed: u64,
    pub generator: String,
}

/// `δ + 3√(δ(1-δ)/T)`: three binomial standard deviations above `δ`.
pub fn acceptance_band(delta: f64, trials: u64) -> f64 {
    delta + 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt()
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialOutcome {
    violated: bool,
    radius: f64,
    width: f64,
    evaluations: usize,
    branches: BranchCounts,
    refined_below_ha: bool,
    below_eighth: bool,
}

/// Settings resolved once per experiment.
struct Plan {
    grid_size: Option<usize>,
    lambda: Option<f64>,
    rho_fixed: Vec<DiscreteDistribution>,
    pi: Option<DiscreteDistribution>,
}

fn plan(spec: &ScenarioSpec, config: &CoverageConfig) -> Result<Plan> {
    let n = spec.n as u64;
    let ranges = spec.increment_ranges()?;
    let (k, m) = match &spec.kind {
        ScenarioKind::IwSampling { rewards, p_min, .. } => (1.0 / p_min + 1.0, rewards.len()),
        _ => (ranges.abs_bound(), 1),
    };
    let grid = match config.bound {
        BoundId::Bernstein
        | BoundId::BernsteinFixed
        | BoundId::PbBernstein
        | BoundId::PbBernsteinFixed => Some(lambda_grid(k, n, config.delta, config.c)?),
        _ => None,
    };
    let lambda = match config.bound {
        BoundId::BernsteinFixed | BoundId::PbBernsteinFixed => {
            Some(config.lambda.unwrap_or_else(|| grid.as_ref().map_or(1.0 / k, |g| g.first())))
        }
        BoundId::PbHa => Some(config.lambda.unwrap_or_else(|| {
            (8.0 * (2.0 / config.delta).ln() / ranges.sum_squared_widths()).sqrt()
        })),
        _ => None,
    };
    let grid_size = match config.bound {
        BoundId::Bernstein | BoundId::PbBernstein => grid.map(|g| g.size()),
        _ => None,
    };
    let (rho_fixed, pi) = if config.bound.is_pac_bayes() {
        if config.rho_family.size(m) == 0 {
            return Err(Error::Missing("posterior family"));
        }
        (config.rho_family.fixed_members(m)?, Some(DiscreteDistribution::uniform(m)?))
    } else {
        (Vec::new(), None)
    };
    Ok(Plan {
        grid_size,
        lambda,
        rho_fixed,
        pi,
    })
}

fn sequence_trial(spec: &ScenarioSpec, config: &CoverageConfig, plan: &Plan) -> Result<TrialOutcome> {
    let trace = sample_sequence(spec, &mut rng_from_seed(spec.seed));
    let ranges = spec.increment_ranges()?;
    let n = spec.n as u64;
    let delta = config.delta;
    let martingale = trace.martingale();
    let variance = match config.variance {
        VarianceSource::Exact => trace.variance(),
        VarianceSource::SampleBound => ranges.sum_max_squares(),
    };
    let mut outcome = TrialOutcome {
        evaluations: 1,
        ..Default::default()
    };
    let radius_outcome = |radius: f64, outcome: &mut TrialOutcome| {
        outcome.violated = martingale.abs() > radius;
        outcome.radius = radius;
        outcome.width = 2.0 * radius;
    };
    match config.bound {
        BoundId::KlDrift => {
            let b = spec.drift().ok_or_else(|| {
                Error::Incompatible("the kl bound needs a scenario with constant drift b".into())
            })?;
            let successes = trace.sum().clamp(0.0, n as f64);
            let result = kl_drift_bound(successes, n, delta)?;
            let interval = result.interval.expect("kl bound reports an interval");
            outcome.violated = !interval.contains(b);
            outcome.radius = result.radius;
            outcome.width = interval.width();
            let p_hat = successes / n as f64;
            let ha_upper = p_hat + hoeffding_azuma_radius(&ranges, delta)?.radius / n as f64;
            outcome.refined_below_ha = result.refined_upper.is_some_and(|r| r < ha_upper);
            outcome.below_eighth = p_hat < 0.125;
        }
        BoundId::HoeffdingAzuma => {
            radius_outcome(hoeffding_azuma_radius(&ranges, delta)?.radius, &mut outcome);
        }
        BoundId::Bernstein => {
            let result = bernstein_adaptive(variance, ranges.abs_bound(), n, delta, config.c)?;
            outcome.branches.record(result.branch);
            radius_outcome(result.radius, &mut outcome);
        }
        BoundId::BernsteinFixed => {
            let lambda = plan.lambda.expect("planned");
            let result = bernstein_fixed_lambda(variance, lambda, ranges.abs_bound(), delta)?;
            radius_outcome(result.radius, &mut outcome);
        }
        _ => unreachable!("PAC-Bayes bounds run on fields"),
    }
    Ok(outcome)
}

fn field_trial(spec: &ScenarioSpec, config: &CoverageConfig, plan: &Plan) -> Result<TrialOutcome> {
    let trace = sample_field(spec, &mut rng_from_seed(spec.seed), false);
    let summary = trace.summary()?;
    let pi = plan.pi.as_ref().expect("planned");
    let delta = config.delta;
    let mut posteriors = plan.rho_fixed.clone();
    if let Some(gamma) = config.rho_family.gibbs_gamma {
        let scores: Vec<f64> = trace.reward_estimates.iter().map(|r| -r).collect();
        posteriors.push(gibbs_posterior(&scores, pi, gamma)?);
    }
    let drifts = trace.drifts();
    let mut outcome = TrialOutcome::default();
    let mut radius_sum = CompensatedSum::new();
    let mut width_sum = CompensatedSum::new();
    for rho in &posteriors {
        let result: PacBayesResult = match config.bound {
            BoundId::PbKl => pb_kl_bound(&summary, rho, pi, delta)?,
            BoundId::PbHa => pb_ha_fixed_lambda(&summary, rho, pi, plan.lambda.expect("planned"), delta)?,
            BoundId::PbHaAdaptive => pb_ha_adaptive(&summary, rho, pi, delta, config.c)?,
            BoundId::PbBernsteinFixed => {
                pb_bernstein_fixed_lambda(&summary, rho, pi, plan.lambda.expect("planned"), delta)?
            }
            BoundId::PbBernstein => {
                let variance_upper = match config.variance {
                    VarianceSource::Exact => None,
                    VarianceSource::SampleBound => Some(rho.expectation(&trace.variance_bounds)?),
                };
                pb_bernstein_adaptive(&summary, rho, pi, variance_upper, delta, config.c)?
            }
            _ => unreachable!("individual bounds run on sequences"),
        };
        let (violated, width) = match result.interval {
            Some(interval) => (!interval.contains(rho.expectation(&drifts)?), interval.width()),
            None => (
                rho.expectation(&trace.martingales)?.abs() > result.radius,
                2.0 * result.radius,
            ),
        };
        outcome.violated |= violated;
        outcome.branches.record(result.branch);
        radius_sum.add(result.radius);
        width_sum.add(width);
        outcome.evaluations += 1;
    }
    outcome.radius = radius_sum.value();
    outcome.width = width_sum.value();
    Ok(outcome)
}

/// Runs `trials` independent simulations and counts bound violations.
///
/// Trials run in parallel; outcomes are collected in trial order and reduced
/// sequentially, so the report is identical for every thread count.
pub fn coverage_experiment(spec: &ScenarioSpec, config: &CoverageConfig) -> Result<ExperimentReport> {
    spec.validate()?;
    check_delta(config.delta)?;
    if config.trials == 0 {
        return Err(Error::param("trials", 0.0, "at least 1"));
    }
    if !(config.c > 1.0 && config.c.is_finite()) {
        return Err(Error::param("c", config.c, "finite and > 1"));
    }
    if config.bound.is_pac_bayes() != spec.is_field() {
        return Err(Error::Incompatible(format!(
            "bound `{}` needs {} scenario",
            config.bound,
            if config.bound.is_pac_bayes() {
                "the importance-weighted"
            } else {
                "a sequence"
            }
        )));
    }
    let plan = plan(spec, config)?;
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let trial_spec = spec.with_seed(substream_seed(config.master_seed, trial));
            if spec.is_field() {
                field_trial(&trial_spec, config, &plan)
            } else {
                sequence_trial(&trial_spec, config, &plan)
            }
        })
        .collect::<Result<_>>()?;

    let mut violations = 0u64;
    let mut radius = CompensatedSum::new();
    let mut width = CompensatedSum::new();
    let mut evaluations = 0usize;
    let mut branch_counts = BranchCounts::default();
    let mut crossover = CrossoverStats::default();
    for outcome in &outcomes {
        violations += u64::from(outcome.violated);
        radius.add(outcome.radius);
        width.add(outcome.width);
        evaluations += outcome.evaluations;
        branch_counts.merge(outcome.branches);
        crossover.refined_below_ha += u64::from(outcome.refined_below_ha);
        crossover.empirical_below_eighth += u64::from(outcome.below_eighth);
    }
    let violation_rate = violations as f64 / config.trials as f64;
    let band = acceptance_band(config.delta, config.trials);
    Ok(ExperimentReport {
        scenario: spec.clone(),
        bound: config.bound,
        delta: config.delta,
        c: config.c,
        trials: config.trials,
        violations,
        violation_rate,
        acceptance_band: band,
        pass: violation_rate <= band,
        mean_radius: radius.value() / evaluations as f64,
        mean_width: width.value() / evaluations as f64,
        posteriors_per_trial: evaluations / outcomes.len(),
        branch_counts,
        grid_size: plan.grid_size,
        lambda: plan.lambda,
        variance: config.variance,
        crossover: (config.bound == BoundId::KlDrift).then_some(crossover),
        master_seed: config.master_seed,
        generator: GENERATOR_ID.to_string(),
    })
}

/// Summary statistics of one row of the tightness comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightnessScenario {
    pub n: u64,
    /// `S_n = Σ X_i` with `X_i ∈ [0,1]`.
    pub successes: f64,
    /// `V_n`; the Bernstein column is omitted without it.
    pub variance: Option<f64>,
}

impl TightnessScenario {
    pub fn new(n: u64, empirical_mean: f64, variance: Option<f64>) -> Self {
        TightnessScenario {
            n,
            successes: empirical_mean * n as f64,
            variance,
        }
    }
}

/// Widths of the confidence intervals for the drift `b` (all clipped to
/// `[0,1]`) and the refined-kl vs Hoeffding-Azuma upper endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub n: u64,
    pub empirical_mean: f64,
    pub variance: Option<f64>,
    /// `ln((n+1)/δ)/n`.
    pub kl_radius: f64,
    pub kl_interval: Interval,
    pub kl_width: f64,
    pub pinsker_width: f64,
    pub refined_interval: Interval,
    pub refined_width: f64,
    /// `q̂ + √(2q̂ε) + 2ε`, unclipped.
    pub refined_upper: f64,
    /// `q̂ + √(½ ln(2/δ)/n)`, unclipped.
    pub ha_upper: f64,
    pub ha_width: f64,
    pub bernstein_width: Option<f64>,
    /// Column with the smallest width.
    pub winner: String,
    /// The refined kl endpoint is strictly below the Hoeffding-Azuma endpoint.
    pub refined_below_ha: bool,
    /// `S_n/n < 1/8`.
    pub below_eighth: bool,
}

fn clipped(center: f64, radius: f64) -> Interval {
    Interval::around_unit(center, radius)
}

/// Compares kl, Pinsker, refined kl, Hoeffding-Azuma and Bernstein
/// intervals for the drift of `[0,1]`-valued sequences.
///
/// Hoeffding-Azuma and Bernstein use the ranges `[-b, 1-b]` (width 1, `K = 1`)
/// and are rescaled by `1/n`. The refined lower endpoint is obtained by
/// symmetry, `1 - refined_upper(1 - q̂)`.
pub fn tightness_table(
    scenarios: &[TightnessScenario],
    delta: f64,
    c: f64,
) -> Result<Vec<TightnessRow>> {
    check_delta(delta)?;
    scenarios
        .iter()
        .map(|s| {
            let kl = kl_drift_bound(s.successes, s.n, delta)?;
            let nf = s.n as f64;
            let p_hat = Prob::clamped(s.successes / nf)?;
            let eps = kl.radius;
            let kl_interval = kl.interval.expect("kl bound reports an interval");
            let refined_upper = refined_kl_upper(p_hat, eps)?;
            let refined_interval = Interval::new(
                (1.0 - refined_kl_upper(p_hat.complement(), eps)?).max(0.0),
                refined_upper.min(1.0),
            );
            let ha_radius = hoeffding_azuma_radius(&RangeSeq::constant(-0.5, 0.5, 1)?, delta)?.radius
                * nf.sqrt()
                / nf;
            let ha_upper = p_hat.value() + ha_radius;
            let bernstein_width = s
                .variance
                .map(|v| -> Result<f64> {
                    let r = bernstein_adaptive(v, 1.0, s.n, delta, c)?.radius / nf;
                    Ok(clipped(p_hat.value(), r).width())
                })
                .transpose()?;
            let pinsker_width = kl.pinsker_interval.expect("kl bound reports Pinsker").width();
            let ha_width = clipped(p_hat.value(), ha_radius).width();
            let mut columns = vec![
                ("kl", kl_interval.width()),
                ("pinsker", pinsker_width),
                ("refined", refined_interval.width()),
                ("hoeffding-azuma", ha_width),
            ];
            if let Some(w) = bernstein_width {
                columns.push(("bernstein", w));
            }
            let winner = columns
                .iter()
                .fold(columns[0], |best, col| if col.1 < best.1 { *col } else { best })
                .0
                .to_string();
            Ok(TightnessRow {
                n: s.n,
                empirical_mean: p_hat.value(),
                variance: s.variance,
                kl_radius: eps,
                kl_interval,
                kl_width: kl_interval.width(),
                pinsker_width,
                refined_interval,
                refined_width: refined_interval.width(),
                refined_upper,
                ha_upper,
                ha_width,
                bernstein_width,
                winner,
                refined_below_ha: refined_upper < ha_upper,
                below_eighth: p_hat.value() < 0.125,
            })
        })
        .collect()
}

/// Empirical means straddling 1/8 at `n ∈ {100, 1000, 10000}`, with the
/// Bernoulli variance `n q̂(1-q̂)`.
pub fn default_tightness_sweep() -> Vec<TightnessScenario> {
    let means = [0.01, 0.05, 0.1, 0.125, 0.15, 0.25, 0.5];
    [100u64, 1000, 10_000]
        .iter()
        .flat_map(|&n| {
            means
                .iter()
                .map(move |&q| TightnessScenario::new(n, q, Some(n as f64 * q * (1.0 - q))))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference SplitMix64 stream seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_ne!(substream_seed(7, 0), substream_seed(7, 1));
        assert_ne!(substream_seed(7, 0), substream_seed(8, 0));
    }

    #[test]
    fn degenerate_drifts() {
        let trace = simulate_sequence(&ScenarioSpec::iid_bernoulli(1.0, 50, 3).unwrap()).unwrap();
        assert!(trace.values.iter().all(|x| *x == 1.0));
        assert_eq!(trace.sum(), 50.0);
        assert_eq!(trace.martingale(), 0.0);
        let trace = simulate_sequence(&ScenarioSpec::iid_bernoulli(0.0, 50, 3).unwrap()).unwrap();
        assert_eq!(trace.sum(), 0.0);
        let trace = simulate_sequence(&ScenarioSpec::dependent_bounded(1.0, 1.0, 20, 3).unwrap()).unwrap();
        assert!(trace.values.iter().all(|x| *x == 1.0));
    }

    #[test]
    fn iid_concentrates() {
        // P(|S_n/n - 0.3| > 0.015) ≈ 1e-3 at n = 1e4; a fixed seed makes it deterministic.
        let trace = simulate_sequence(&ScenarioSpec::iid_bernoulli(0.3, 10_000, 11).unwrap()).unwrap();
        assert!((trace.sum() / 1e4 - 0.3).abs() <= 0.015);
    }

    #[test]
    fn sequences_are_deterministic() {
        let spec = ScenarioSpec::dependent_bounded(0.4, 0.8, 200, 99).unwrap();
        assert_eq!(simulate_sequence(&spec).unwrap(), simulate_sequence(&spec).unwrap());
        let other = simulate_sequence(&spec.with_seed(100)).unwrap();
        assert_ne!(simulate_sequence(&spec).unwrap(), other);
    }

    #[test]
    fn conditional_laws_have_the_stated_mean() {
        let specs = [
            ScenarioSpec::iid_bernoulli(0.3, 30, 1).unwrap(),
            ScenarioSpec::dependent_bounded(0.4, 1.0, 30, 1).unwrap(),
            ScenarioSpec::dependent_bounded(0.85, 0.5, 30, 1).unwrap(),
        ];
        for spec in &specs {
            let b = spec.drift().unwrap();
            let trace = simulate_sequence(spec).unwrap();
            let mut previous = None;
            for (i, x) in trace.values.iter().enumerate() {
                let law = spec.conditional_law(i, previous).unwrap();
                assert_abs_diff_eq!(law.mean(), b, epsilon = 1e-15);
                let (lo, hi) = law.support();
                assert!(0.0 <= lo && hi <= 1.0 && lo <= *x && *x <= hi);
                previous = Some(*x);
            }
        }
        let ranges = RangeSeq::new([(-0.2, 0.9), (-1.0, 0.5), (0.0, 0.0)]).unwrap();
        for shape in [Shape::TwoPoint, Shape::Uniform] {
            let spec = ScenarioSpec::mds_bounded(ranges.clone(), shape, 5).unwrap();
            for i in 0..3 {
                let law = spec.conditional_law(i, None).unwrap();
                assert_abs_diff_eq!(law.mean(), 0.0, epsilon = 1e-15);
                let (lo, hi) = law.support();
                let (alpha, beta) = ranges.get(i);
                assert!(alpha <= lo && hi <= beta);
            }
        }
    }

    #[test]
    fn dependent_conditional_mean_by_bucket() {
        // 1e6 draws of X_i grouped by the bucket of X_{i-1}.
        let b = 0.4;
        let spec = ScenarioSpec::dependent_bounded(b, 1.0, 100, 0).unwrap();
        let buckets = 5;
        let mut sums = vec![0.0; buckets];
        let mut squares = vec![0.0; buckets];
        let mut counts = vec![0.0; buckets];
        for t in 0..10_000 {
            let trace = sample_sequence(&spec, &mut rng_from_seed(substream_seed(42, t)));
            for w in trace.values.windows(2) {
                let bucket = ((w[0] / (2.0 * b)) * buckets as f64).min(buckets as f64 - 1.0) as usize;
                sums[bucket] += w[1];
                squares[bucket] += w[1] * w[1];
                counts[bucket] += 1.0;
            }
        }
        let mut populated = 0;
        for i in 0..buckets {
            if counts[i] < 100.0 {
                continue;
            }
            populated += 1;
            let mean = sums[i] / counts[i];
            let sd = (squares[i] / counts[i] - mean * mean).max(0.0).sqrt();
            assert!((mean - b).abs() <= 3.0 * sd / counts[i].sqrt(), "bucket {i}: {mean}");
        }
        assert!(populated >= 3);
    }

    #[test]
    fn invalid_specs() {
        assert!(ScenarioSpec::iid_bernoulli(1.5, 10, 0).is_err());
        assert!(ScenarioSpec::iid_bernoulli(0.5, 0, 0).is_err());
        assert!(ScenarioSpec::dependent_bounded(0.5, 2.0, 10, 0).is_err());
        assert!(ScenarioSpec::iw_sampling(vec![0.5; 5], 0.3, false, 10, 0).is_err());
        assert!(ScenarioSpec::iw_sampling(vec![], 0.1, false, 10, 0).is_err());
        assert!(ScenarioSpec::iw_sampling(vec![0.5, 1.2], 0.1, false, 10, 0).is_err());
        assert!(ScenarioSpec::iw_sampling(vec![0.5; 5], 0.2, false, 10, 0).is_ok());
        let field = ScenarioSpec::iw_sampling(vec![0.5; 2], 0.1, false, 10, 0).unwrap();
        assert!(simulate_sequence(&field).is_err());
        assert!(simulate_field(&ScenarioSpec::iid_bernoulli(0.5, 10, 0).unwrap()).is_err());
    }

    #[test]
    fn single_arm_field_is_centred_bernoulli() {
        let spec = ScenarioSpec::iw_sampling(vec![0.3], 1.0, true, 100, 5).unwrap();
        let trace = simulate_field(&spec).unwrap();
        for round in &trace.rounds {
            assert_eq!(round.probabilities, vec![1.0]);
            assert_abs_diff_eq!(round.increments[0], round.reward - 0.3, epsilon = 1e-15);
            assert_abs_diff_eq!(round.conditional_variances[0], 0.21, epsilon = 1e-15);
        }
        assert_eq!(trace.range_bound, 2.0);
    }

    #[test]
    fn field_invariants() {
        for adaptive in [false, true] {
            let spec = ScenarioSpec::iw_sampling(vec![0.1, 0.5, 0.9, 0.3, 0.7], 0.1, adaptive, 200, 8).unwrap();
            let trace = simulate_field(&spec).unwrap();
            let k = trace.range_bound;
            let n = trace.n as f64;
            for round in &trace.rounds {
                assert_abs_diff_eq!(round.probabilities.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
                assert!(round.probabilities.iter().all(|p| *p >= 0.1));
                assert!(round.increments.iter().all(|z| z.abs() <= k));
            }
            for h in 0..5 {
                assert!(trace.variances[h] <= k * k * n);
                assert!(trace.variances[h] <= trace.variance_bounds[h]);
                assert!((0.0..=n).contains(&trace.bounded_sums[h]));
            }
        }
    }

    #[test]
    fn adaptive_policy_couples_hypotheses() {
        let spec = ScenarioSpec::iw_sampling(vec![0.1, 0.9], 0.1, true, 300, 1).unwrap();
        let trace = simulate_field(&spec).unwrap();
        let last = &trace.rounds.last().unwrap().probabilities;
        assert!(last[1] > last[0]);
        let distinct = trace.rounds.iter().map(|r| r.probabilities[0].to_bits()).collect::<std::collections::BTreeSet<_>>();
        assert!(distinct.len() > 10);
    }

    #[test]
    fn non_adaptive_field_has_mean_zero() {
        let spec = ScenarioSpec::iw_sampling(vec![0.2, 0.6, 0.9], 1.0 / 3.0, false, 50, 0).unwrap();
        let trials = 10_000u64;
        let mut sums = vec![0.0; 3];
        for t in 0..trials {
            let trace = sample_field(&spec, &mut rng_from_seed(substream_seed(3, t)), false);
            for h in 0..3 {
                sums[h] += trace.martingales[h];
            }
        }
        let k = 4.0;
        for s in sums {
            assert!((s / trials as f64).abs() <= 3.0 * k * (50.0 / trials as f64).sqrt());
        }
    }

    #[test]
    fn bound_names_round_trip() {
        for bound in BoundId::ALL {
            assert_eq!(bound.name().parse::<BoundId>().unwrap(), bound);
        }
        assert!(matches!("pb-foo".parse::<BoundId>(), Err(Error::Unknown { .. })));
    }

    #[test]
    fn kl_coverage_example() {
        let spec = ScenarioSpec::iid_bernoulli(0.3, 100, 0).unwrap();
        let config = CoverageConfig::new(BoundId::KlDrift, 0.05, 10_000, 7);
        let report = coverage_experiment(&spec, &config).unwrap();
        assert_abs_diff_eq!(report.acceptance_band, 0.056_538_348_415_311_01, epsilon = 1e-12);
        assert!(report.pass, "{report:?}");
        assert!(report.violations <= report.trials);
        assert_eq!(report.generator, GENERATOR_ID);
        let again = coverage_experiment(&spec, &config).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn reports_do_not_depend_on_thread_count() {
        let spec = ScenarioSpec::iw_sampling(vec![0.2, 0.8, 0.5], 0.2, true, 50, 0).unwrap();
        let config = CoverageConfig::new(BoundId::PbBernstein, 0.1, 300, 5);
        let parallel = coverage_experiment(&spec, &config).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| coverage_experiment(&spec, &config).unwrap());
        assert_eq!(parallel, serial);
        assert_eq!(parallel.posteriors_per_trial, 5);
        assert_eq!(
            parallel.branch_counts.grid_ok + parallel.branch_counts.variance_small,
            300 * 5
        );
    }

    #[test]
    fn near_one_delta_is_trivially_recorded() {
        let spec = ScenarioSpec::iid_bernoulli(0.5, 20, 0).unwrap();
        let report = coverage_experiment(&spec, &CoverageConfig::new(BoundId::HoeffdingAzuma, 1.0 - 1e-9, 100, 1)).unwrap();
        assert!(report.violation_rate <= 1.0);
        assert!(report.pass);
    }

    #[test]
    fn incompatible_or_invalid_experiments() {
        let seq = ScenarioSpec::iid_bernoulli(0.5, 20, 0).unwrap();
        let field = ScenarioSpec::iw_sampling(vec![0.5; 2], 0.1, false, 10, 0).unwrap();
        assert!(coverage_experiment(&seq, &CoverageConfig::new(BoundId::PbKl, 0.05, 10, 0)).is_err());
        assert!(coverage_experiment(&field, &CoverageConfig::new(BoundId::KlDrift, 0.05, 10, 0)).is_err());
        assert!(coverage_experiment(&seq, &CoverageConfig::new(BoundId::KlDrift, 0.05, 0, 0)).is_err());
        assert!(coverage_experiment(&seq, &CoverageConfig::new(BoundId::KlDrift, 0.0, 10, 0)).is_err());
        let mds = ScenarioSpec::mds_bounded(RangeSeq::constant(-1.0, 1.0, 10).unwrap(), Shape::Uniform, 0).unwrap();
        assert!(coverage_experiment(&mds, &CoverageConfig::new(BoundId::KlDrift, 0.05, 10, 0)).is_err());
        assert!(coverage_experiment(&mds, &CoverageConfig::new(BoundId::Bernstein, 0.05, 10, 0)).is_ok());
    }

    #[test]
    fn tightness_examples() {
        let rows = tightness_table(
            &[
                TightnessScenario::new(100_000, 0.5, None),
                TightnessScenario::new(100, 0.05, None),
                TightnessScenario::new(1000, 0.5, Some(10.0)),
            ],
            0.05,
            1.1,
        )
        .unwrap();
        // At q̂ = 1/2 Pinsker and Hoeffding-Azuma differ by √(ln((n+1)/δ)/ln(2/δ)).
        let ratio = rows[0].pinsker_width / rows[0].ha_width;
        let expected = ((100_001.0f64 / 0.05).ln() / (40.0f64).ln()).sqrt();
        assert_abs_diff_eq!(ratio, expected, epsilon = 1e-12);
        assert!(rows[0].kl_width <= rows[0].pinsker_width);
        assert!(rows[1].below_eighth);
        assert!(rows[2].bernstein_width.unwrap() < rows[2].kl_width);
        assert_eq!(rows[2].winner, "bernstein");
        assert!(tightness_table(&[], 0.05, 1.1).unwrap().is_empty());
    }

    #[test]
    fn tightness_widths_are_ordered() {
        for row in tightness_table(&default_tightness_sweep(), 0.05, 1.1).unwrap() {
            assert!(row.kl_width <= row.pinsker_width + 1e-12, "{row:?}");
            assert!(row.kl_interval.upper <= row.refined_interval.upper + 1e-12);
            assert!(row.refined_interval.lower <= row.kl_interval.lower + 1e-12);
        }
    }
}
