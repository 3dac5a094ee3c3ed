//! PAC-Bayesian bounds for weighted averages `⟨M̄_n, ρ⟩ = Σ_h ρ(h) M̄_n(h)` of
//! martingales indexed by a finite hypothesis set.
//!
//! Every bound holds with probability `1-δ` simultaneously for all posteriors
//! `ρ`, at the price of the complexity term `KL(ρ‖π)` against a reference
//! distribution `π` fixed before the data.

use serde::{Deserialize, Serialize};

use crate::error::{check_delta, Error, Result};
use crate::individual::{bernstein_select, kl_radius, lambda_grid, Branch, Interval, RangeSeq};
use crate::numeric::log_sum_exp;
use crate::scalar::{
    discrete_kl, kl_inv_lower, kl_inv_upper, DiscreteDistribution, KlValue, Prob,
    DEFAULT_INVERSION_TOL,
};
use crate::E_MINUS_2;

/// Per-hypothesis statistics of a martingale field after `n` rounds.
///
/// Which fields are needed depends on the bound: the kl bound needs only `n`
/// (plus `sums` for the interval), Hoeffding-Azuma needs `ranges`, Bernstein
/// needs `range_bound` and, unless a variance bound is supplied, `variances`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSummary {
    pub n: u64,
    /// `S̄_n(h) = Σ_i X̄_i(h)`, each in `[0, n]`.
    pub sums: Option<Vec<f64>>,
    /// `M̄_n(h)`.
    pub martingales: Option<Vec<f64>>,
    /// `V̄_n(h)`, cumulative conditional variances.
    pub variances: Option<Vec<f64>>,
    /// `K` with `|Z̄_i(h)| <= K`.
    pub range_bound: Option<f64>,
    /// Common ranges `[α_i, β_i]` of `Z̄_i(h)`.
    pub ranges: Option<RangeSeq>,
}

impl HypothesisSummary {
    pub fn new(n: u64) -> Self {
        HypothesisSummary {
            n,
            ..Default::default()
        }
    }

    pub fn with_sums(mut self, sums: Vec<f64>) -> Self {
        self.sums = Some(sums);
        self
    }

    pub fn with_martingales(mut self, martingales: Vec<f64>) -> Self {
        self.martingales = Some(martingales);
        self
    }

    pub fn with_variances(mut self, variances: Vec<f64>) -> Self {
        self.variances = Some(variances);
        self
    }

    pub fn with_range_bound(mut self, k: f64) -> Self {
        self.range_bound = Some(k);
        self
    }

    pub fn with_ranges(mut self, ranges: RangeSeq) -> Self {
        self.ranges = Some(ranges);
        self
    }

    fn check_n(&self) -> Result<()> {
        if self.n == 0 {
            Err(Error::param("n", 0.0, "a positive integer"))
        } else {
            Ok(())
        }
    }

    fn check_len(&self, m: usize) -> Result<()> {
        for v in [&self.sums, &self.martingales, &self.variances].into_iter().flatten() {
            if v.len() != m {
                return Err(Error::LengthMismatch {
                    left: v.len(),
                    right: m,
                });
            }
        }
        Ok(())
    }

    fn range_bound(&self) -> Result<f64> {
        match self.range_bound {
            Some(k) if k > 0.0 && k.is_finite() => Ok(k),
            Some(k) => Err(Error::param("K", k, "finite and > 0")),
            None => Err(Error::Missing("range bound K")),
        }
    }

    fn ranges(&self) -> Result<&RangeSeq> {
        self.ranges.as_ref().ok_or(Error::Missing("ranges [alpha_i, beta_i]"))
    }

    /// `⟨V̄_n, ρ⟩`, validating `0 <= V̄_n(h) <= K²n`.
    fn mean_variance(&self, rho: &DiscreteDistribution, k: f64) -> Result<f64> {
        let variances = self.variances.as_ref().ok_or(Error::Missing("variances V_n(h)"))?;
        let cap = k * k * self.n as f64;
        if let Some(v) = variances.iter().find(|v| !(**v >= 0.0 && **v <= cap * (1.0 + 1e-12))) {
            return Err(Error::param("V_n(h)", *v, "within [0, K^2 n]"));
        }
        rho.expectation(variances)
    }
}

/// Outcome of a PAC-Bayesian bound for one posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacBayesResult {
    pub radius: f64,
    /// `KL(ρ‖π)`.
    pub kl_term: f64,
    pub branch: Option<Branch>,
    pub lambda_used: Option<f64>,
    pub grid_size: Option<usize>,
    /// `ε(ρ)` of the closed-form Hoeffding-Azuma bound, when defined.
    pub epsilon_rho: Option<f64>,
    /// Closed-form `(1+c)/(2√2)·√((KL + ln(2/δ) + ε(ρ)) Σ(β-α)²)`, when defined.
    pub closed_form_radius: Option<f64>,
    /// Grid index used by the weighted union bound.
    pub grid_index: Option<u32>,
    /// `⟨S̄_n/n, ρ⟩` (kl bound with sums).
    pub center: Option<f64>,
    /// Interval for `⟨b̄, ρ⟩` obtained by inverting kl (kl bound with sums).
    pub interval: Option<Interval>,
    /// `√((KL + ln((n+1)/δ))/(2n))` (kl bound).
    pub pinsker_radius: Option<f64>,
    pub confidence: f64,
}

impl PacBayesResult {
    fn new(radius: f64, kl_term: f64, delta: f64) -> Self {
        PacBayesResult {
            radius,
            kl_term,
            branch: None,
            lambda_used: None,
            grid_size: None,
            epsilon_rho: None,
            closed_form_radius: None,
            grid_index: None,
            center: None,
            interval: None,
            pinsker_radius: None,
            confidence: delta,
        }
    }
}

fn kl_between(rho: &DiscreteDistribution, pi: &DiscreteDistribution) -> Result<f64> {
    discrete_kl(rho, pi).map(KlValue::value)
}

/// Both sides of `⟨φ, ρ⟩ <= KL(ρ‖π) + ln⟨e^φ, π⟩`.
///
/// The right side is `+∞` unless `ρ ≪ π`. `⟨e^φ, π⟩` is computed in log space,
/// so `|φ|` may be several hundred.
pub fn change_of_measure_gap(
    phi: &[f64],
    rho: &DiscreteDistribution,
    pi: &DiscreteDistribution,
) -> Result<(f64, f64)> {
    if phi.len() != rho.len() {
        return Err(Error::LengthMismatch {
            left: phi.len(),
            right: rho.len(),
        });
    }
    let kl = kl_between(rho, pi)?;
    let lhs = rho.expectation(phi)?;
    let log_terms: Vec<f64> = pi
        .weights()
        .iter()
        .zip(phi)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, f)| w.ln() + f)
        .collect();
    Ok((lhs, kl + log_sum_exp(&log_terms)))
}

/// PAC-Bayes-kl: `kl(⟨S̄_n/n, ρ⟩ ‖ ⟨b̄, ρ⟩) <= (KL(ρ‖π) + ln((n+1)/δ))/n` for
/// `X̄_i(h) ∈ [0,1]`.
pub fn pb_kl_bound(
    summary: &HypothesisSummary,
    rho: &DiscreteDistribution,
    pi: &DiscreteDistribution,
    delta: f64,
) -> Result<PacBayesResult> {
    check_delta(delta)?;
    summary.check_n()?;
    summary.check_len(rho.len())?;
    let kl = kl_between(rho, pi)?;
    let n = summary.n as f64;
    let radius = kl / n + kl_radius(summary.n, delta);
    let mut result = PacBayesResult::new(radius, kl, delta);
    result.pinsker_radius = Some((radius / 2.0).sqrt());
    if let Some(sums) = &summary.sums {
        if let Some(s) = sums.iter().find(|s| !(**s >= 0.0 && **s <= n)) {
            return Err(Error::param("S_n(h)", *s, "within [0, n]"));
        }
        let center = Prob::clamped(rho.expectation(sums)? / n)?;
        result.center = Some(center.value());
        result.interval = Some(Interval::new(
            kl_inv_lower(center, radius, DEFAULT_INVERSION_TOL)?.value(),
            kl_inv_upper(center, radius, DEFAULT_INVERSION_TOL)?.value(),
        ));
    }
    Ok(result)
}

fn check_lambda_positive(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::param("lambda", lambda, "finite and > 0"))
    }
}

fn check_c(c: f64) -> Result<()> {
    if c > 1.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::param("c", c, "finite and > 1"))
    }
}

/// `(KL + ln(2/δ))/λ + (λ/8) W` with `W = Σ(β_i-α_i)²`.
fn ha_radius(kl: f64, delta: f64, lambda: f64, squared_widths: f64) -> f64 {
    (kl + (2.0 / delta).ln()) / lambda + lambda * squared_widths / 8.0
}

/// PAC-Bayes-Hoeffding-Azuma with a fixed `λ > 0`.
pub fn pb_ha_fixed_lambda(
    summary: &HypothesisSummary,
    rho: &DiscreteDistribution,
    pi: &DiscreteDistribution,
    lambda: f64,
    delta: f64,
) -> Result<PacBayesResult> {
    check_delta(delta)?;
    check_lambda_positive(lambda)?;
    summary.check_len(rho.len())?;
    let widths = summary.ranges()?.sum_squared_widths();
    let kl = kl_between(rho, pi)?;
    let mut result = PacBayesResult::new(ha_radius(kl, delta, lambda, widths), kl, delta);
    result.lambda_used = Some(lambda);
    Ok(result)
}

/// PAC-Bayes-Hoeffding-Azuma with λ picked per posterior from the grid
/// `λ_i = c^i √(8 ln(2/δ)/W)` under a weighted union bound with `δ_i = δ 2^{-(i+1)}`.
///
/// The index is `i = ⌊ln(KL/ln(2/δ) + 1)/(2 ln c)⌋`. The radius is the fixed-λ
/// bound at `(λ_i, δ_i)`; the closed form with `ε(ρ)` is attached as a
/// diagnostic when `KL > 0`.
pub fn pb_ha_adaptive(
    summary: &HypothesisSummary,
    rho: &DiscreteDistribution,
    pi: &DiscreteDistribution,
    delta: f64,
    c: f64,
) -> Result<PacBayesResult> {
    check_delta(delta)?;
    check_c(c)?;
    summary.check_len(rho.len())?;
    let widths = summary.ranges()?.sum_squared_widths();
    let kl = kl_between(rho, pi)?;
    if kl.is_infinite() {
        return Ok(PacBayesResult::new(f64::INFINITY, kl, delta));
    }
    let log_term = (2.0 / delta).ln();
    let index = ((kl / log_term + 1.0).ln() / (2.0 * c.ln())).floor();
    let lambda = c.powf(index) * (8.0 * log_term / widths).sqrt();
    let index_delta = delta * 2f64.powf(-(index + 1.0));
    let mut result = PacBayesResult::new(ha_radius(kl, index_delta, lambda, widths), kl, delta);
    result.lambda_used = Some(lambda);
    result.grid_index = Some(index as u32);
    if kl > 0.0 {
        let eps = 2f64.ln() / (2.0 * c.ln()) * (1.0 + (kl / log_term).ln());
        result.epsilon_rho = Some(eps);
        let inner = kl + log_term + eps;
        if inner >= 0.0 {
            result.closed_form_radius =
                Some((1.0 + c) / (2.0 * 2f64.sqrt()) * (inner * widths).sqrt());
        }
    }
    Ok(result)
}

/// PAC-Bayes-Bernstein with a fixed `λ ∈ (0, 1/K]`:
/// `(KL + ln(2/δ))/λ + (e-2)λ⟨V̄_n, ρ⟩`.
pub fn pb_bernstein_fixed_lambda(
    summary: &HypothesisSummary,
    rho: &DiscreteDistribution,
    pi: &DiscreteDistribution,
    lambda: f64,
    delta: f64,
) -> Result<PacBayesResult> {
    check_delta(delta)?;
    summary.check_len(rho.len())?;
    let k = summary.range_bound()?;
    if !(lambda > 0.0 && lambda <= 1.0 / k) {
        return Err(Error::param("lambda", lambda, "in (0, 1/K]"));
    }
    let variance = summary.mean_variance(rho, k)?;
    let kl = kl_between(rho, pi)?;
    let radius = (kl + (2.0 / delta).ln()) / lambda + E_MINUS_2 * lambda * variance;
    let mut result = PacBayesResult::new(radius, kl, delta);
    result.lambda_used = Some(lambda);
    Ok(result)
}

/// PAC-Bayes-Bernstein with λ picked per posterior from the shared λ-grid.
///
/// `variance_upper` bounds `⟨V̄_n, ρ⟩` and may depend on the sample; `None`
/// uses the exact `⟨V̄_n, ρ⟩` from the summary.
pub fn pb_bernstein_adaptive(
    summary: &HypothesisSummary,
    rho: &DiscreteDistribution,
    pi: &DiscreteDistribution,
    variance_upper: Option<f64>,
    delta: f64,
    c: f64,
) -> Result<PacBayesResult> {
    check_delta(delta)?;
    check_c(c)?;
    summary.check_n()?;
    summary.check_len(rho.len())?;
    let k = summary.range_bound()?;
    let variance = match variance_upper {
        Some(v) if v >= 0.0 => v,
        Some(v) => return Err(Error::param("variance upper bound", v, "nonnegative")),
        None => summary.mean_variance(rho, k)?,
    };
    let grid = lambda_grid(k, summary.n, delta, c)?;
    let kl = kl_between(rho, pi)?;
    let complexity = kl + (2.0 * grid.size() as f64 / delta).ln();
    let choice = bernstein_select(complexity, variance, k, summary.n, &grid);
    let mut result = PacBayesResult::new(choice.radius, kl, delta);
    result.branch = Some(choice.branch);
    result.lambda_used = Some(choice.lambda);
    result.grid_size = Some(grid.size());
    Ok(result)
}

/// `ρ(h) ∝ π(h) e^{-γ score(h)}`, normalised in log space.
///
/// `γ = +∞` gives the uniform distribution over the minimisers of the score
/// within the support of `π`.
pub fn gibbs_posterior(
    scores: &[f64],
    pi: &DiscreteDistribution,
    gamma: f64,
) -> Result<DiscreteDistribution> {
    if scores.len() != pi.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: pi.len(),
        });
    }
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::param("gamma", gamma, "nonnegative"));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::param("score", *s, "finite"));
    }
    if gamma == 0.0 {
        return Ok(pi.clone());
    }
    let support = || pi.weights().iter().zip(scores).filter(|(w, _)| **w > 0.0);
    if gamma == f64::INFINITY {
        let best = support().map(|(_, s)| *s).fold(f64::INFINITY, f64::min);
        let weights = pi
            .weights()
            .iter()
            .zip(scores)
            .map(|(w, s)| if *w > 0.0 && *s == best { 1.0 } else { 0.0 })
            .collect();
        return DiscreteDistribution::from_unnormalized(weights);
    }
    let log_weights: Vec<f64> = pi
        .weights()
        .iter()
        .zip(scores)
        .map(|(w, s)| if *w > 0.0 { w.ln() - gamma * s } else { f64::NEG_INFINITY })
        .collect();
    let log_norm = log_sum_exp(&log_weights);
    DiscreteDistribution::from_unnormalized(
        log_weights.iter().map(|lw| (lw - log_norm).exp()).collect(),
    )
}
