//! Binary kl divergence, its inversion, and KL between finite weight vectors.
//!
//! `kl(p‖q) = p ln(p/q) + (1-p) ln((1-p)/(1-q))` with `0 ln 0 = 0`. The value is
//! `+∞` exactly when `q ∈ {0, 1}` and `p ≠ q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, xlogx_over_y};

/// Default absolute accuracy of [`kl_inv_upper`] and [`kl_inv_lower`].
pub const DEFAULT_INVERSION_TOL: f64 = 1e-12;

/// Iteration cap of the bisection.
pub const MAX_BISECTION_ITERATIONS: usize = 200;

/// Tolerance on the total mass of a [`DiscreteDistribution`].
pub const DISTRIBUTION_SUM_TOL: f64 = 1e-12;

/// A number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Prob(f64);

impl Prob {
    pub const ZERO: Prob = Prob(0.0);
    pub const ONE: Prob = Prob(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Prob(value))
        } else {
            Err(Error::ProbabilityOutOfRange(value))
        }
    }

    /// Clamps into `[0, 1]`; NaN is rejected.
    pub fn clamped(value: f64) -> Result<Self> {
        if value.is_nan() {
            return Err(Error::ProbabilityOutOfRange(value));
        }
        Ok(Prob(value.clamp(0.0, 1.0)))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Prob {
        Prob(1.0 - self.0)
    }
}

impl TryFrom<f64> for Prob {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Prob::new(value)
    }
}

impl From<Prob> for f64 {
    fn from(p: Prob) -> f64 {
        p.0
    }
}

/// A divergence value: nonnegative, possibly `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct KlValue(f64);

impl KlValue {
    pub const ZERO: KlValue = KlValue(0.0);
    pub const INFINITE: KlValue = KlValue(f64::INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0 == f64::INFINITY
    }

    // Rounding can push a mathematically zero divergence a hair below zero.
    fn from_raw(x: f64) -> KlValue {
        KlValue(x.max(0.0))
    }
}

/// Nonnegative weights over a finite index set, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteDistribution {
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Missing("distribution weights"));
        }
        let sum = compensated_sum(weights.iter().copied());
        let valid = weights.iter().all(|w| w.is_finite() && *w >= 0.0);
        if !valid || (sum - 1.0).abs() > DISTRIBUTION_SUM_TOL {
            return Err(Error::NotADistribution { sum });
        }
        Ok(DiscreteDistribution { weights })
    }

    /// Normalises nonnegative weights with a positive total.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        let sum = compensated_sum(weights.iter().copied());
        let valid = weights.iter().all(|w| w.is_finite() && *w >= 0.0);
        if weights.is_empty() || !valid || !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::NotADistribution { sum });
        }
        Ok(DiscreteDistribution {
            weights: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Missing("distribution weights"));
        }
        Ok(DiscreteDistribution {
            weights: vec![1.0 / size as f64; size],
        })
    }

    pub fn point_mass(size: usize, index: usize) -> Result<Self> {
        if index >= size {
            return Err(Error::LengthMismatch {
                left: index + 1,
                right: size,
            });
        }
        let mut weights = vec![0.0; size];
        weights[index] = 1.0;
        Ok(DiscreteDistribution { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `⟨values, self⟩`. Entries with zero weight are skipped, so infinite
    /// values outside the support do not poison the result.
    pub fn expectation(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: self.len(),
            });
        }
        Ok(compensated_sum(
            self.weights
                .iter()
                .zip(values)
                .filter(|(w, _)| **w > 0.0)
                .map(|(w, v)| w * v),
        ))
    }

    /// `self ≪ other`: every index with positive mass here has positive mass there.
    pub fn is_absolutely_continuous_wrt(&self, other: &DiscreteDistribution) -> bool {
        self.len() == other.len()
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| *a == 0.0 || *b > 0.0)
    }
}

impl TryFrom<Vec<f64>> for DiscreteDistribution {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        DiscreteDistribution::new(weights)
    }
}

impl From<DiscreteDistribution> for Vec<f64> {
    fn from(d: DiscreteDistribution) -> Vec<f64> {
        d.weights
    }
}

/// `kl(p‖q)` between Bernoulli distributions with biases `p` and `q`.
pub fn bernoulli_kl(p: Prob, q: Prob) -> KlValue {
    let (p, q) = (p.value(), q.value());
    if p == q {
        return KlValue::ZERO;
    }
    KlValue::from_raw(xlogx_over_y(p, q) + xlogx_over_y(1.0 - p, 1.0 - q))
}

fn check_inversion_args(eps: f64, tol: f64) -> Result<()> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::param("eps", eps, "nonnegative"));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tol", tol, "positive"));
    }
    Ok(())
}

/// Midpoint of two nonnegative floats in the ordering of their bit patterns,
/// which is monotone on `[0, ∞)`. Splitting the count of representable values
/// reaches adjacent floats within 64 steps, even for roots such as `1e-60`
/// that arithmetic halving from `p` cannot resolve within the iteration cap.
fn float_midpoint(a: f64, b: f64) -> f64 {
    let (x, y) = (a.to_bits(), b.to_bits());
    f64::from_bits((x >> 1) + (y >> 1) + (x & y & 1))
}

/// Bisection for the crossing of the monotone function `q ↦ kl(p‖q)` with
/// `eps` on `[lo, hi]`. `increasing` tells which branch we are on; the
/// returned bracket satisfies `kl(p‖inner) <= eps < kl(p‖outer)` where
/// `inner` is the endpoint closer to `p`.
fn bisect(p: f64, eps: f64, tol: f64, increasing: bool) -> (f64, f64) {
    let kl = |q: f64| bernoulli_kl(Prob(p), Prob(q)).value();
    let (mut inner, mut outer) = if increasing { (p, 1.0) } else { (p, 0.0) };
    for _ in 0..MAX_BISECTION_ITERATIONS {
        let mid = float_midpoint(inner, outer);
        if mid == inner || mid == outer {
            break;
        }
        if (outer - inner).abs() <= tol && (kl(outer) - kl(inner)).abs() <= tol {
            break;
        }
        if kl(mid) > eps {
            outer = mid;
        } else {
            inner = mid;
        }
    }
    (inner, outer)
}

/// The `q ∈ [p, 1]` solving `kl(p‖q) = eps`.
///
/// Bisection on the increasing branch. The upper end of the final bracket is
/// returned, so `kl(p‖q) >= eps` and the result is a valid upper confidence
/// limit. Returns 1 when no `q < 1` reaches `eps`.
pub fn kl_inv_upper(p: Prob, eps: f64, tol: f64) -> Result<Prob> {
    check_inversion_args(eps, tol)?;
    if eps == 0.0 {
        return Ok(p);
    }
    if p.value() == 1.0 || eps == f64::INFINITY {
        return Ok(Prob::ONE);
    }
    let (_, outer) = bisect(p.value(), eps, tol, true);
    Ok(Prob(outer))
}

/// The `q ∈ [0, p]` solving `kl(p‖q) = eps`; mirror image of [`kl_inv_upper`].
/// Returns 0 when unreachable.
pub fn kl_inv_lower(p: Prob, eps: f64, tol: f64) -> Result<Prob> {
    check_inversion_args(eps, tol)?;
    if eps == 0.0 {
        return Ok(p);
    }
    if p.value() == 0.0 || eps == f64::INFINITY {
        return Ok(Prob::ZERO);
    }
    let (_, outer) = bisect(p.value(), eps, tol, false);
    Ok(Prob(outer))
}

/// `√(eps / 2)`: half-width implied by Pinsker's inequality `|p - q| <= √(kl/2)`.
pub fn pinsker_radius(eps: f64) -> Result<f64> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::param("eps", eps, "nonnegative"));
    }
    Ok((eps / 2.0).sqrt())
}

/// `q̂ + √(2 q̂ eps) + 2 eps`, an upper bound on any `p >= q̂` with
/// `kl(q̂‖p) <= eps`. Not clamped to 1.
pub fn refined_kl_upper(q_hat: Prob, eps: f64) -> Result<f64> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::param("eps", eps, "nonnegative"));
    }
    let q = q_hat.value();
    Ok(q + (2.0 * q * eps).sqrt() + 2.0 * eps)
}

/// `KL(ρ‖π) = Σ ρ(h) ln(ρ(h)/π(h))`; `+∞` unless `ρ ≪ π`.
pub fn discrete_kl(rho: &DiscreteDistribution, pi: &DiscreteDistribution) -> Result<KlValue> {
    if rho.len() != pi.len() {
        return Err(Error::LengthMismatch {
            left: rho.len(),
            right: pi.len(),
        });
    }
    if rho == pi {
        return Ok(KlValue::ZERO);
    }
    let mut terms = Vec::with_capacity(rho.len());
    for (r, p) in rho.weights().iter().zip(pi.weights()) {
        let term = xlogx_over_y(*r, *p);
        if term == f64::INFINITY {
            return Ok(KlValue::INFINITE);
        }
        terms.push(term);
    }
    Ok(KlValue::from_raw(compensated_sum(terms)))
}
