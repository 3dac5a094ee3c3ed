//! Bounds for a single martingale `M_n = Σ Z_i`.
//!
//! - [`kl_drift_bound`]: `kl(S_n/n ‖ b) <= ln((n+1)/δ)/n` for `X_i ∈ [0,1]` with
//!   conditional mean `b`.
//! - [`hoeffding_azuma_radius`]: `|M_n| <= √(½ ln(2/δ) Σ(β_i-α_i)²)`.
//! - [`bernstein_fixed_lambda`] and [`bernstein_adaptive`]: Bernstein-type
//!   bounds driven by the cumulative conditional variance `V_n`, the latter
//!   through a union bound over a geometric [`LambdaGrid`].

use serde::{Deserialize, Serialize};

use crate::error::{check_delta, Error, Result};
use crate::numeric::compensated_sum;
use crate::scalar::{
    kl_inv_lower, kl_inv_upper, pinsker_radius, refined_kl_upper, Prob, DEFAULT_INVERSION_TOL,
};
use crate::E_MINUS_2;

/// Almost-sure per-round ranges `[α_i, β_i]` of martingale differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeSeq {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl RangeSeq {
    /// Requires `α_i <= 0 <= β_i` for every round (a zero-mean variable has to
    /// straddle the origin).
    pub fn new(ranges: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let (lower, upper): (Vec<f64>, Vec<f64>) = ranges.into_iter().unzip();
        if lower.is_empty() {
            return Err(Error::Missing("range sequence"));
        }
        for (&a, &b) in lower.iter().zip(&upper) {
            if !(a.is_finite() && b.is_finite()) || a > 0.0 {
                return Err(Error::param("alpha", a, "finite and <= 0"));
            }
            if b < 0.0 {
                return Err(Error::param("beta", b, "finite and >= 0"));
            }
        }
        Ok(RangeSeq { lower, upper })
    }

    /// `n` copies of `[alpha, beta]`.
    pub fn constant(alpha: f64, beta: f64, n: usize) -> Result<Self> {
        RangeSeq::new(std::iter::repeat((alpha, beta)).take(n))
    }

    /// Ranges `[-w/2, w/2]` for the given widths.
    pub fn centered(widths: &[f64]) -> Result<Self> {
        if let Some(w) = widths.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::param("width", *w, "nonnegative"));
        }
        RangeSeq::new(widths.iter().map(|w| (-w / 2.0, w / 2.0)))
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn get(&self, i: usize) -> (f64, f64) {
        (self.lower[i], self.upper[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lower.iter().copied().zip(self.upper.iter().copied())
    }

    /// `Σ (β_i - α_i)²`.
    pub fn sum_squared_widths(&self) -> f64 {
        compensated_sum(self.iter().map(|(a, b)| (b - a) * (b - a)))
    }

    /// `Σ max(α_i², β_i²)`, an upper bound on `V_n`.
    pub fn sum_max_squares(&self) -> f64 {
        compensated_sum(self.iter().map(|(a, b)| (a * a).max(b * b)))
    }

    /// `max_i max(|α_i|, |β_i|)`, the `K` with `|Z_i| <= K`.
    pub fn abs_bound(&self) -> f64 {
        self.iter().map(|(a, b)| a.abs().max(b.abs())).fold(0.0, f64::max)
    }
}

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Interval { lower, upper }
    }

    /// `center ± radius`, clipped to `[0, 1]`.
    pub fn around_unit(center: f64, radius: f64) -> Self {
        Interval {
            lower: (center - radius).max(0.0),
            upper: (center + radius).min(1.0),
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Which case of a variance-adaptive bound produced the radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// The technical condition holds; a grid λ near the optimum is used.
    GridOk,
    /// The condition fails; λ = 1/K gives the `2K(…)` bound.
    VarianceSmall,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::GridOk => "grid_ok",
            Branch::VarianceSmall => "variance_small",
        }
    }
}

/// Outcome of an individual bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    /// Radius in the units of the bounded statistic (kl units for [`kl_drift_bound`]).
    pub radius: f64,
    pub interval: Option<Interval>,
    pub lambda_used: Option<f64>,
    pub branch: Option<Branch>,
    pub grid_size: Option<usize>,
    pub confidence: f64,
    /// Closed-form upper endpoint `q̂ + √(2q̂ε) + 2ε` (kl bound only, unclamped).
    pub refined_upper: Option<f64>,
    /// `q̂ ± √(ε/2)` clipped to `[0,1]` (kl bound only).
    pub pinsker_interval: Option<Interval>,
}

impl BoundResult {
    fn radius_only(radius: f64, delta: f64) -> Self {
        BoundResult {
            radius,
            interval: None,
            lambda_used: None,
            branch: None,
            grid_size: None,
            confidence: delta,
            refined_upper: None,
            pinsker_interval: None,
        }
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::param("n", 0.0, "a positive integer"))
    } else {
        Ok(())
    }
}

/// `ln((n+1)/δ)/n`.
pub fn kl_radius(n: u64, delta: f64) -> f64 {
    let n = n as f64;
    ((n + 1.0) / delta).ln() / n
}

/// Confidence interval for the drift `b` of `X_i ∈ [0,1]` from `S_n = Σ X_i`.
///
/// The radius is `ε = ln((n+1)/δ)/n` in kl units; the interval is the set of
/// `b` with `kl(S_n/n ‖ b) <= ε`.
pub fn kl_drift_bound(successes: f64, n: u64, delta: f64) -> Result<BoundResult> {
    check_n(n)?;
    check_delta(delta)?;
    if !(0.0..=n as f64).contains(&successes) {
        return Err(Error::param("S_n", successes, "within [0, n]"));
    }
    let p_hat = Prob::clamped(successes / n as f64)?;
    let eps = kl_radius(n, delta);
    let interval = Interval::new(
        kl_inv_lower(p_hat, eps, DEFAULT_INVERSION_TOL)?.value(),
        kl_inv_upper(p_hat, eps, DEFAULT_INVERSION_TOL)?.value(),
    );
    Ok(BoundResult {
        interval: Some(interval),
        refined_upper: Some(refined_kl_upper(p_hat, eps)?),
        pinsker_interval: Some(Interval::around_unit(p_hat.value(), pinsker_radius(eps)?)),
        ..BoundResult::radius_only(eps, delta)
    })
}

/// Two-sided Hoeffding-Azuma radius `√(½ ln(2/δ) Σ(β_i-α_i)²)`.
pub fn hoeffding_azuma_radius(ranges: &RangeSeq, delta: f64) -> Result<BoundResult> {
    check_delta(delta)?;
    let radius = (0.5 * (2.0 / delta).ln() * ranges.sum_squared_widths()).sqrt();
    Ok(BoundResult::radius_only(radius, delta))
}

/// Geometric grid `λ_i = c^i λ_0` over `[λ_0, 1/K]`, closed by `1/K`, with
/// `λ_0 = (1/K)√(ln(2/δ)/((e-2)n))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    values: Vec<f64>,
    ratio: f64,
}

impl LambdaGrid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Number of grid points `ν`, the size of the union bound.
    pub fn size(&self) -> usize {
        self.values.len()
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Largest grid value not exceeding `target`, or the smallest grid value
    /// if every point exceeds it.
    pub fn largest_at_most(&self, target: f64) -> f64 {
        self.values
            .iter()
            .copied()
            .take_while(|v| *v <= target)
            .last()
            .unwrap_or(self.values[0])
    }
}

fn check_c(c: f64) -> Result<()> {
    if c > 1.0 && c.is_finite() {
        Ok(())
    } else {
        Err(Error::param("c", c, "finite and > 1"))
    }
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::param("K", k, "finite and > 0"))
    }
}

/// The λ-grid for a union bound over Bernstein bounds with `|Z_i| <= K`.
///
/// `m = ⌈ln(√((e-2)n/ln(2/δ)))/ln c⌉` points `c^i λ_0`, `i < m`, followed by
/// `1/K`, so `ν = m + 1`. When `(e-2)n <= ln(2/δ)` the grid is `{1/K}`.
pub fn lambda_grid(k: f64, n: u64, delta: f64, c: f64) -> Result<LambdaGrid> {
    check_k(k)?;
    check_n(n)?;
    check_delta(delta)?;
    check_c(c)?;
    let log_term = (2.0 / delta).ln();
    let spread = E_MINUS_2 * n as f64 / log_term;
    let top = 1.0 / k;
    if spread <= 1.0 {
        return Ok(LambdaGrid {
            values: vec![top],
            ratio: c,
        });
    }
    let m = (spread.sqrt().ln() / c.ln()).ceil().max(1.0) as usize;
    let base = top / spread.sqrt();
    let mut values: Vec<f64> = (0..m).map(|i| base * c.powi(i as i32)).collect();
    values.retain(|v| *v < top);
    values.push(top);
    Ok(LambdaGrid { values, ratio: c })
}

/// `ln(2/δ)/λ + λ(e-2)V_n`, valid for `λ ∈ (0, 1/K]`.
pub fn bernstein_fixed_lambda(variance: f64, lambda: f64, k: f64, delta: f64) -> Result<BoundResult> {
    check_delta(delta)?;
    check_k(k)?;
    check_variance(variance)?;
    if !(lambda > 0.0 && lambda <= 1.0 / k) {
        return Err(Error::param("lambda", lambda, "in (0, 1/K]"));
    }
    let radius = (2.0 / delta).ln() / lambda + lambda * E_MINUS_2 * variance;
    Ok(BoundResult {
        lambda_used: Some(lambda),
        ..BoundResult::radius_only(radius, delta)
    })
}

fn check_variance(v: f64) -> Result<()> {
    if v >= 0.0 {
        Ok(())
    } else {
        Err(Error::param("variance", v, "nonnegative"))
    }
}

/// Shared selection step of the variance-adaptive Bernstein bounds.
///
/// `complexity` is the numerator `KL(ρ‖π) + ln(2ν/δ)` (no KL term for an
/// individual martingale). The variance bound is capped at `K²n`, which holds
/// whenever `|Z_i| <= K`.
pub(crate) struct BernsteinChoice {
    pub radius: f64,
    pub branch: Branch,
    pub lambda: f64,
}

pub(crate) fn bernstein_select(
    complexity: f64,
    variance_upper: f64,
    k: f64,
    n: u64,
    grid: &LambdaGrid,
) -> BernsteinChoice {
    let variance = variance_upper.min(k * k * n as f64);
    // variance == 0 gives λ* = +∞, i.e. the condition fails.
    let lambda_star = (complexity / (E_MINUS_2 * variance)).sqrt();
    if lambda_star.is_finite() && lambda_star <= 1.0 / k {
        BernsteinChoice {
            radius: (1.0 + grid.ratio()) * (E_MINUS_2 * variance * complexity).sqrt(),
            branch: Branch::GridOk,
            lambda: grid.largest_at_most(lambda_star),
        }
    } else {
        BernsteinChoice {
            radius: 2.0 * k * complexity,
            branch: Branch::VarianceSmall,
            lambda: 1.0 / k,
        }
    }
}

/// Variance-adaptive Bernstein bound with a union bound over [`lambda_grid`].
///
/// If `√(ln(2ν/δ)/((e-2)V)) <= 1/K` the radius is `(1+c)√((e-2)V ln(2ν/δ))`,
/// otherwise `2K ln(2ν/δ)`. `V` is any (possibly sample-dependent) upper bound
/// on the cumulative conditional variance.
pub fn bernstein_adaptive(
    variance_upper: f64,
    k: f64,
    n: u64,
    delta: f64,
    c: f64,
) -> Result<BoundResult> {
    check_variance(variance_upper)?;
    let grid = lambda_grid(k, n, delta, c)?;
    let complexity = (2.0 * grid.size() as f64 / delta).ln();
    let choice = bernstein_select(complexity, variance_upper, k, n, &grid);
    Ok(BoundResult {
        lambda_used: Some(choice.lambda),
        branch: Some(choice.branch),
        grid_size: Some(grid.size()),
        ..BoundResult::radius_only(choice.radius, delta)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kl_drift_example() {
        let r = kl_drift_bound(5.0, 100, 0.05).unwrap();
        // ln(2020)/100, mpmath: 0.07610852790395250444...
        assert_abs_diff_eq!(r.radius, 0.076_108_527_903_952_504, epsilon = 1e-15);
        // 0.05 + √(2·0.05·ε) + 2ε = 0.28945725749494405...
        let refined = r.refined_upper.unwrap();
        assert_abs_diff_eq!(refined, 0.289_457_257_494_944_06, epsilon = 1e-14);
        // Pinsker: 0.05 + √(ε/2) = 0.24507502134301114...
        let pinsker = r.pinsker_interval.unwrap();
        assert_abs_diff_eq!(pinsker.upper, 0.245_075_021_343_011_14, epsilon = 1e-14);
        assert_eq!(pinsker.lower, 0.0);
        // At n = 100 the refined closed form is looser than Pinsker; both
        // dominate the exact inversion.
        let interval = r.interval.unwrap();
        assert!(refined > pinsker.upper);
        assert!(interval.upper < pinsker.upper);
        assert!(interval.lower < 0.05 && interval.upper > 0.05);
    }

    #[test]
    fn kl_drift_interval_contains_center() {
        for n in [1u64, 10, 100, 1000] {
            for i in 0..=20 {
                let b = i as f64 / 20.0;
                let r = kl_drift_bound(b * n as f64, n, 0.05).unwrap();
                assert!(r.interval.unwrap().contains(b), "n={n} b={b}");
            }
        }
    }

    #[test]
    fn kl_drift_rejects_bad_input() {
        assert!(matches!(kl_drift_bound(5.0, 100, 1.5), Err(Error::InvalidDelta(_))));
        assert!(kl_drift_bound(5.0, 100, 0.0).is_err());
        assert!(kl_drift_bound(101.0, 100, 0.05).is_err());
        assert!(kl_drift_bound(-1.0, 100, 0.05).is_err());
        assert!(kl_drift_bound(0.0, 0, 0.05).is_err());
    }

    #[test]
    fn kl_drift_vs_pinsker_relaxation() {
        let tol = 1e-12;
        for n in [1u64, 7, 50, 100, 1000, 10_000] {
            for delta in [0.01, 0.05, 0.3] {
                for i in 0..=40 {
                    let s = n as f64 * i as f64 / 40.0;
                    let r = kl_drift_bound(s, n, delta).unwrap();
                    let gap = r.interval.unwrap().upper - s / n as f64;
                    let relaxed = (((n + 1) as f64 / delta).ln() / (2.0 * n as f64)).sqrt();
                    assert!(gap <= relaxed + tol);
                }
            }
        }
    }

    #[test]
    fn hoeffding_examples() {
        let zero = RangeSeq::constant(0.0, 0.0, 10).unwrap();
        assert_eq!(hoeffding_azuma_radius(&zero, 0.05).unwrap().radius, 0.0);

        let unit = RangeSeq::constant(-0.5, 0.5, 100).unwrap();
        let r = hoeffding_azuma_radius(&unit, 0.05).unwrap().radius;
        // √(0.5 ln 40 · 100), mpmath: 13.58101515740619498...
        assert_abs_diff_eq!(r, 13.581_015_157_406_195, epsilon = 1e-12);

        let double = RangeSeq::constant(-1.0, 1.0, 100).unwrap();
        assert_relative_eq!(
            hoeffding_azuma_radius(&double, 0.05).unwrap().radius,
            2.0 * r,
            max_relative = 1e-15
        );
    }

    #[test]
    fn range_seq_validation() {
        assert!(RangeSeq::new(Vec::new()).is_err());
        assert!(RangeSeq::new([(0.1, 0.5)]).is_err());
        assert!(RangeSeq::new([(-0.1, -0.05)]).is_err());
        assert!(RangeSeq::centered(&[1.0, -1.0]).is_err());
        let r = RangeSeq::new([(-0.2, 0.8), (-1.0, 0.5)]).unwrap();
        assert_abs_diff_eq!(r.sum_squared_widths(), 1.0 + 2.25, epsilon = 1e-15);
        assert_abs_diff_eq!(r.sum_max_squares(), 0.64 + 1.0, epsilon = 1e-15);
        assert_eq!(r.abs_bound(), 1.0);
        assert!(hoeffding_azuma_radius(&r, 1.0).is_err());
    }

    #[test]
    fn grid_examples() {
        // ⌈ln(√(0.71828·1000/ln 40))/ln 1.1⌉ + 1 = 28 + 1
        let g = lambda_grid(1.0, 1000, 0.05, 1.1).unwrap();
        assert_eq!(g.size(), 29);
        assert_eq!(g.last(), 1.0);
        let lambda0 = ((40f64).ln() / (E_MINUS_2 * 1000.0)).sqrt();
        assert_relative_eq!(g.first(), lambda0, max_relative = 1e-15);

        let wide = lambda_grid(1.0, 1000, 0.05, 1e6).unwrap();
        assert_eq!(wide.values(), &[wide.first(), 1.0]);
        assert_relative_eq!(wide.first(), lambda0, max_relative = 1e-15);

        let halved = lambda_grid(2.0, 1000, 0.05, 1.1).unwrap();
        assert_eq!(halved.size(), g.size());
        for (a, b) in halved.values().iter().zip(g.values()) {
            assert_relative_eq!(*a, b / 2.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn grid_degenerate_and_errors() {
        // (e-2)·1 < ln(2/0.05): only 1/K remains.
        let g = lambda_grid(4.0, 1, 0.05, 1.1).unwrap();
        assert_eq!(g.values(), &[0.25]);
        assert!(lambda_grid(1.0, 100, 0.05, 1.0).is_err());
        assert!(lambda_grid(0.0, 100, 0.05, 1.1).is_err());
        assert!(lambda_grid(1.0, 0, 0.05, 1.1).is_err());
    }

    #[test]
    fn grid_is_increasing_with_bounded_ratio() {
        for &(n, delta, c) in &[(100u64, 0.05, 1.1), (10_000, 0.001, 1.5), (37, 0.2, 3.0)] {
            let g = lambda_grid(1.0, n, delta, c).unwrap();
            for w in g.values().windows(2) {
                assert!(w[1] > w[0]);
                assert!(w[1] / w[0] <= c + 1e-12);
            }
        }
    }

    #[test]
    fn grid_covers_every_relevant_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(k, n, delta, c) in &[(1.0, 100u64, 0.05, 1.1), (11.0, 1000, 0.01, 1.3), (0.5, 50, 0.2, 2.0)] {
            let g = lambda_grid(k, n, delta, c).unwrap();
            for _ in 0..10_000 {
                let target = rng.gen_range(g.first()..=g.last());
                let covered = g
                    .values()
                    .iter()
                    .any(|v| target <= *v && *v <= c * target * (1.0 + 1e-12));
                assert!(covered, "λ* = {target} uncovered");
            }
        }
    }

    #[test]
    fn bernstein_fixed_examples() {
        let r = bernstein_fixed_lambda(0.0, 0.5, 1.0, 0.05).unwrap();
        assert_abs_diff_eq!(r.radius, (40f64).ln() / 0.5, epsilon = 1e-14);

        let v = 10.0;
        let star = ((40f64).ln() / (E_MINUS_2 * v)).sqrt();
        let at_star = bernstein_fixed_lambda(v, star, 1.0, 0.05).unwrap();
        assert_relative_eq!(
            at_star.radius,
            2.0 * (E_MINUS_2 * v * (40f64).ln()).sqrt(),
            max_relative = 1e-14
        );

        // mpmath: 10.96916805052309878...
        let r = bernstein_fixed_lambda(10.0, 0.5, 1.0, 0.05).unwrap();
        assert_abs_diff_eq!(r.radius, 10.969_168_050_523_099, epsilon = 1e-12);

        assert!(bernstein_fixed_lambda(10.0, 0.6, 2.0, 0.05).is_err());
        assert!(bernstein_fixed_lambda(10.0, 0.0, 1.0, 0.05).is_err());
    }

    #[test]
    fn bernstein_adaptive_example() {
        let r = bernstein_adaptive(10.0, 1.0, 100, 0.05, 1.1).unwrap();
        assert_eq!(r.grid_size, Some(17));
        assert_eq!(r.branch, Some(Branch::GridOk));
        // 2.1·√(0.71828·10·ln 680), mpmath: 14.37342348411856064...
        assert_abs_diff_eq!(r.radius, 14.373_423_484_118_561, epsilon = 1e-11);
        // Condition left side ≈ 0.9529; the chosen λ is the largest grid point below it.
        let lambda = r.lambda_used.unwrap();
        let grid = lambda_grid(1.0, 100, 0.05, 1.1).unwrap();
        assert!(lambda <= 0.952_897_191_910_521_5);
        assert!(lambda * 1.1 > 0.952_897_191_910_521_5);
        assert!(grid.values().contains(&lambda));
    }

    #[test]
    fn bernstein_adaptive_zero_variance_falls_back() {
        let r = bernstein_adaptive(0.0, 2.0, 100, 0.05, 1.1).unwrap();
        assert_eq!(r.branch, Some(Branch::VarianceSmall));
        assert_abs_diff_eq!(r.radius, 4.0 * (2.0 * 17.0 / 0.05f64).ln(), epsilon = 1e-12);
        assert_eq!(r.lambda_used, Some(0.5));
    }

    #[test]
    fn bernstein_adaptive_between_grid_minimum_and_inflated_optimum() {
        let c = 1.1;
        for &(k, n, delta) in &[(1.0, 100u64, 0.05), (2.0, 1000, 0.01), (0.5, 400, 0.1)] {
            let grid = lambda_grid(k, n, delta, c).unwrap();
            let nu = grid.size() as f64;
            let cap = k * k * n as f64;
            for i in 0..=50 {
                let v = cap * i as f64 / 50.0;
                let r = bernstein_adaptive(v, k, n, delta, c).unwrap();
                let grid_min = grid
                    .values()
                    .iter()
                    .map(|l| bernstein_fixed_lambda(v, *l, k, delta / nu).unwrap().radius)
                    .fold(f64::INFINITY, f64::min);
                assert!(r.radius >= grid_min * (1.0 - 1e-12), "v={v}: {} < {grid_min}", r.radius);
                if r.branch == Some(Branch::GridOk) {
                    let optimum = 2.0 * (E_MINUS_2 * v * (2.0 * nu / delta).ln()).sqrt();
                    assert!(r.radius <= (1.0 + c) / 2.0 * optimum * (1.0 + 1e-12));
                    // The chosen grid point itself achieves the closed form.
                    let at_choice =
                        bernstein_fixed_lambda(v, r.lambda_used.unwrap(), k, delta / nu).unwrap();
                    assert!(at_choice.radius <= r.radius * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn bernstein_beats_hoeffding_for_small_variance() {
        for n in [100u64, 400, 1000, 10_000] {
            let ranges = RangeSeq::constant(-0.5, 0.5, n as usize).unwrap();
            let ha = hoeffding_azuma_radius(&ranges, 0.05).unwrap().radius;
            for ratio in [0.01, 0.03] {
                let v = ratio * n as f64;
                let b = bernstein_adaptive(v, 1.0, n, 0.05, 1.1).unwrap();
                if b.branch == Some(Branch::GridOk) {
                    assert!(b.radius < ha, "n={n} V/n={ratio}: {} >= {ha}", b.radius);
                }
            }
        }
        // V/n = 0.1 at n = 1000 is inside the grid_ok regime.
        let b = bernstein_adaptive(100.0, 1.0, 1000, 0.05, 1.1).unwrap();
        assert_eq!(b.branch, Some(Branch::GridOk));
    }

    proptest! {
        #[test]
        fn bernstein_adaptive_monotone_in_variance(
            v1 in 0.0f64..100.0, v2 in 0.0f64..100.0, n in 1u64..500
        ) {
            let (lo, hi) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
            let a = bernstein_adaptive(lo, 1.0, n, 0.05, 1.1).unwrap();
            let b = bernstein_adaptive(hi, 1.0, n, 0.05, 1.1).unwrap();
            if a.branch == Some(Branch::GridOk) && b.branch == Some(Branch::GridOk) {
                prop_assert!(a.radius <= b.radius);
            }
        }
    }
}
