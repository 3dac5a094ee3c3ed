//! Acceptance criteria: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.
//!
//! Runs with `harness = false`, so `cargo test --test criteria` prints the
//! verdicts directly. The target name sorts after the other test targets, so
//! cargo runs it last and a failing criterion does not hide other results. Monte-Carlo work is seeded; the output is reproducible.

use std::process::{Command, ExitCode};
use std::time::Instant;

use martingale_bounds::individual::{
    bernstein_adaptive, bernstein_fixed_lambda, hoeffding_azuma_radius, kl_drift_bound,
};
use martingale_bounds::oracle::{
    bernstein_suite, comparison_suite, exact_mgf_sweep, hoeffding_suite, scalar_inequality_checks,
    McOutcome, MAX_EXACT_N,
};
use martingale_bounds::pac_bayes::{
    pb_bernstein_adaptive, pb_bernstein_fixed_lambda, pb_ha_fixed_lambda, pb_kl_bound,
};
use martingale_bounds::scalar::{
    bernoulli_kl, kl_inv_lower, kl_inv_upper, pinsker_radius, refined_kl_upper,
    DEFAULT_INVERSION_TOL,
};
use martingale_bounds::simulation::{
    coverage_experiment, splitmix64, tightness_table, BoundId, CoverageConfig, ScenarioKind,
    ScenarioSpec, Shape, TightnessScenario,
};
use martingale_bounds::{DiscreteDistribution, HypothesisSummary, Prob, RangeSeq, Result};

const DELTA: f64 = 0.05;
const MC_SAMPLES: u64 = 1_000_000;
const COLLAPSE_TOL: f64 = 1e-12;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

fn mc_summary(outcomes: &[McOutcome]) -> (bool, String) {
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.label.as_str()).collect();
    let worst = outcomes.iter().map(McOutcome::slack).fold(f64::NEG_INFINITY, f64::max);
    let detail = format!(
        "{} cases, {} failed, max (estimate - bound - 4se)/max(1, bound) = {worst:.3e}{}",
        outcomes.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" [{}]", failed.join("; "))
        }
    );
    (failed.is_empty(), detail)
}

fn exact_mgf() -> Result<Verdict> {
    let sweep = exact_mgf_sweep(MAX_EXACT_N)?;
    Ok(Verdict::new(
        sweep.pass,
        format!(
            "{} cases, max E/(n+1) = {:.15}, min E/√n = {:.6}, max E/(2√n) = {:.6}",
            sweep.cases, sweep.max_ratio, sweep.min_sqrt_ratio, sweep.max_two_sqrt_ratio
        ),
    ))
}

fn comparison() -> Result<Verdict> {
    let (pass, detail) = mc_summary(&comparison_suite(MC_SAMPLES, 2)?);
    Ok(Verdict::new(pass, detail))
}

fn individual_coverage() -> Result<Verdict> {
    let trials = 10_000;
    let mut cases = Vec::new();
    for (i, b) in [0.1, 0.5, 0.9].into_iter().enumerate() {
        cases.push((ScenarioSpec::iid_bernoulli(b, 100, 0)?, BoundId::KlDrift, 100 + i as u64));
    }
    let widths = RangeSeq::centered(&[1.0; 100])?;
    cases.push((ScenarioSpec::mds_bounded(widths, Shape::TwoPoint, 0)?, BoundId::HoeffdingAzuma, 200));
    cases.push((ScenarioSpec::dependent_bounded(0.4, 1.0, 100, 0)?, BoundId::HoeffdingAzuma, 201));
    cases.push((ScenarioSpec::dependent_bounded(0.3, 1.0, 100, 0)?, BoundId::Bernstein, 300));
    cases.push((ScenarioSpec::iid_bernoulli(0.05, 100, 0)?, BoundId::Bernstein, 301));

    let mut pass = true;
    let mut band = f64::NAN;
    let mut parts = Vec::new();
    for (spec, bound, seed) in cases {
        let report = coverage_experiment(&spec, &CoverageConfig::new(bound, DELTA, trials, seed))?;
        pass &= report.pass;
        parts.push(format!(
            "{bound}/{}: {:.4}",
            scenario_label(&spec),
            report.violation_rate
        ));
        band = report.acceptance_band;
    }
    Ok(Verdict::new(pass, format!("band {band:.4}, rates {}", parts.join(", "))))
}

fn scenario_label(spec: &ScenarioSpec) -> String {
    match &spec.kind {
        ScenarioKind::IidBernoulli { b } => format!("iid(b={b})"),
        ScenarioKind::DependentBounded { b, strength } => format!("dependent(b={b},strength={strength})"),
        ScenarioKind::MdsBounded { .. } => "mds(two-point)".into(),
        ScenarioKind::IwSampling { .. } => "iw".into(),
    }
}

fn pac_bayes_coverage() -> Result<Verdict> {
    let spec = ScenarioSpec::iw_sampling(vec![0.1, 0.3, 0.5, 0.7, 0.9], 0.1, true, 100, 0)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for (bound, seed) in [(BoundId::PbKl, 7), (BoundId::PbBernstein, 8)] {
        let report = coverage_experiment(&spec, &CoverageConfig::new(bound, DELTA, 2000, seed))?;
        pass &= report.pass;
        parts.push(format!(
            "{bound}: {}/{} violations over {} posteriors (rate {:.4}, band {:.4})",
            report.violations,
            report.trials,
            report.posteriors_per_trial,
            report.violation_rate,
            report.acceptance_band
        ));
    }
    Ok(Verdict::new(pass, parts.join("; ")))
}

/// Uniform draws in `[0, 1)` from a counter, reproducible without extra crates.
struct Uniforms(u64);

impl Uniforms {
    fn next(&mut self) -> f64 {
        self.0 += 1;
        (splitmix64(self.0) >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.next()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= COLLAPSE_TOL * a.abs().max(b.abs()).max(1.0)
}

fn collapse() -> Result<Verdict> {
    let mut u = Uniforms(0x5eed);
    let single = DiscreteDistribution::uniform(1)?;
    let mut mismatches = Vec::new();
    let mut worst = 0.0f64;
    let mut record = |what: &str, i: usize, a: f64, b: f64| {
        let scale = a.abs().max(b.abs()).max(1.0);
        worst = worst.max((a - b).abs() / scale);
        if !close(a, b) {
            mismatches.push(format!("{what}#{i}: {a:e} vs {b:e}"));
        }
    };
    for i in 0..100 {
        let n = 1 + (u.next() * 1000.0) as u64;
        let nf = n as f64;
        let delta = u.range(1e-4, 0.999);
        let c = u.range(1.05, 3.0);
        let successes = (u.next() * (nf + 1.0)).floor().min(nf);

        let individual = kl_drift_bound(successes, n, delta)?;
        let summary = HypothesisSummary::new(n).with_sums(vec![successes]);
        let pb = pb_kl_bound(&summary, &single, &single, delta)?;
        record("kl radius", i, pb.radius, individual.radius);
        let (a, b) = (pb.interval.expect("sums given"), individual.interval.expect("kl interval"));
        record("kl lower", i, a.lower, b.lower);
        record("kl upper", i, a.upper, b.upper);

        let widths: Vec<f64> = (0..n).map(|_| u.range(0.1, 3.0)).collect();
        let ranges = RangeSeq::centered(&widths)?;
        let ha = hoeffding_azuma_radius(&ranges, delta)?.radius;
        let lambda = (8.0 * (2.0 / delta).ln() / ranges.sum_squared_widths()).sqrt();
        let summary = HypothesisSummary::new(n).with_ranges(ranges);
        let pb = pb_ha_fixed_lambda(&summary, &single, &single, lambda, delta)?;
        record("hoeffding-azuma", i, pb.radius, ha);

        let k = u.range(0.1, 10.0);
        let variance = u.next() * k * k * nf;
        let summary = HypothesisSummary::new(n).with_range_bound(k).with_variances(vec![variance]);
        let lambda = u.range(1e-3, 1.0) / k;
        let pb = pb_bernstein_fixed_lambda(&summary, &single, &single, lambda, delta)?;
        let ind = bernstein_fixed_lambda(variance, lambda, k, delta)?;
        record("bernstein fixed", i, pb.radius, ind.radius);

        let ind = bernstein_adaptive(variance, k, n, delta, c)?;
        for supplied in [None, Some(variance)] {
            let pb = pb_bernstein_adaptive(&summary, &single, &single, supplied, delta, c)?;
            record("bernstein adaptive", i, pb.radius, ind.radius);
            let same_branch = if pb.branch == ind.branch { 1.0 } else { 0.0 };
            record("bernstein branch", i, same_branch, 1.0);
        }
    }
    let pass = mismatches.is_empty();
    let mut detail = format!("100 parameterizations, max relative difference {worst:.2e}");
    if !pass {
        detail.push_str(&format!(" [{}]", mismatches.join("; ")));
    }
    Ok(Verdict::new(pass, detail))
}

fn crossover() -> Result<Verdict> {
    let means = [0.01, 0.05, 0.10, 0.5];
    let scenarios: Vec<TightnessScenario> =
        means.iter().map(|&q| TightnessScenario::new(100, q, None)).collect();
    let rows = tightness_table(&scenarios, DELTA, 1.1)?;
    let below: Vec<bool> = rows.iter().map(|r| r.refined_below_ha).collect();
    let pass = below[..3].iter().all(|b| *b) && !below[3];
    let detail = rows
        .iter()
        .map(|r| format!("S/n={}: refined {:.4} vs HA {:.4}", r.empirical_mean, r.refined_upper, r.ha_upper))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Verdict::new(pass, detail))
}

/// `kl(p‖q)` for the conservative endpoint `q` is within 1e-10 of `eps`, or `q`
/// is the closest float to the root on the conservative side.
fn residual_ok(p: Prob, q: f64, eps: f64, toward_p: f64) -> bool {
    let kl = |x: f64| bernoulli_kl(p, Prob::new(x).expect("in [0,1]")).value();
    if (kl(q) - eps).abs() <= 1e-10 {
        return true;
    }
    kl(q) >= eps && kl(toward_p) < eps
}

fn inversion() -> Result<Verdict> {
    let mut residual_failures = 0u32;
    let mut rounded = 0u32;
    let mut pinsker_failures = 0u32;
    let mut refined_failures = 0u32;
    let tol = DEFAULT_INVERSION_TOL;
    for i in 0..200 {
        let p = Prob::new(i as f64 / 199.0)?;
        for j in 0..200 {
            let eps = 5.0 * j as f64 / 199.0;
            let upper = kl_inv_upper(p, eps, tol)?.value();
            let lower = kl_inv_lower(p, eps, tol)?.value();
            let kl = |x: f64| bernoulli_kl(p, Prob::new(x).expect("in [0,1]")).value();
            if upper < 1.0 {
                if !residual_ok(p, upper, eps, upper.next_down()) {
                    residual_failures += 1;
                } else if (kl(upper) - eps).abs() > 1e-10 {
                    rounded += 1;
                }
            }
            if lower > 0.0 {
                if !residual_ok(p, lower, eps, lower.next_up()) {
                    residual_failures += 1;
                } else if (kl(lower) - eps).abs() > 1e-10 {
                    rounded += 1;
                }
            }
            if upper - p.value() > pinsker_radius(eps)? + tol {
                pinsker_failures += 1;
            }
            if upper > refined_kl_upper(p, eps)? + tol {
                refined_failures += 1;
            }
        }
    }
    let pass = residual_failures == 0 && pinsker_failures == 0 && refined_failures == 0;
    Ok(Verdict::new(
        pass,
        format!(
            "40000 (p, eps) points: {residual_failures} residual failures \
             ({rounded} correctly rounded beyond 1e-10), {pinsker_failures} Pinsker, \
             {refined_failures} refined"
        ),
    ))
}

fn mgf_checks() -> Result<Verdict> {
    let (h_pass, h_detail) = mc_summary(&hoeffding_suite(MC_SAMPLES, 3)?);
    let (b_pass, b_detail) = mc_summary(&bernstein_suite(MC_SAMPLES, 4)?);
    let scalar = scalar_inequality_checks();
    let violations: u64 = scalar.iter().map(|c| c.violations).sum();
    let points: u64 = scalar.iter().map(|c| c.points).sum();
    Ok(Verdict::new(
        h_pass && b_pass && violations == 0,
        format!(
            "hoeffding: {h_detail}; bernstein: {b_detail}; scalar: {violations} violations over {points} points"
        ),
    ))
}

fn run_simulate(args: &[&str]) -> std::result::Result<Vec<u8>, String> {
    let output = Command::new(env!("CARGO_BIN_EXE_martingale-bounds"))
        .args(args)
        .output()
        .map_err(|e| format!("cannot run binary: {e}"))?;
    if !output.status.success() {
        return Err(format!(
            "exit {:?}: {}",
            output.status.code(),
            String::from_utf8_lossy(&output.stderr)
        ));
    }
    Ok(output.stdout)
}

fn determinism() -> Verdict {
    let runs: [&[&str]; 2] = [
        &[
            "simulate", "--scenario", "iw", "--H", "5", "--pmin", "0.1", "--adaptive", "--bound",
            "pb-bernstein", "--trials", "2000", "--seed", "7",
        ],
        &[
            "--format", "json", "simulate", "--scenario", "dependent", "--b", "0.3", "--bound",
            "kl-drift,hoeffding-azuma,bernstein", "--trials", "2000", "--seed", "11",
        ],
    ];
    let mut parts = Vec::new();
    for args in runs {
        let first = run_simulate(args);
        let second = run_simulate(args);
        match (first, second) {
            (Ok(a), Ok(b)) if a == b => parts.push(format!("{} bytes identical", a.len())),
            (Ok(_), Ok(_)) => return Verdict::new(false, "reports differ between runs"),
            (Err(e), _) | (_, Err(e)) => return Verdict::new(false, e),
        }
    }
    Verdict::new(true, parts.join(", "))
}

fn main() -> ExitCode {
    let criteria: [(&str, Box<dyn Fn() -> Result<Verdict>>); 9] = [
        ("exact kl moment generating function <= n+1, within [√n, 2√n] for n >= 8", Box::new(exact_mgf)),
        ("dependent process dominated by independent Bernoulli for convex f", Box::new(comparison)),
        ("coverage of kl, Hoeffding-Azuma and Bernstein bounds (T=10000)", Box::new(individual_coverage)),
        ("coverage of PAC-Bayes-kl and PAC-Bayes-Bernstein on the iw field (T=2000)", Box::new(pac_bayes_coverage)),
        ("PAC-Bayes bounds collapse to individual bounds for |H|=1", Box::new(collapse)),
        ("refined kl below Hoeffding-Azuma for S/n < 1/8 at n=100", Box::new(crossover)),
        ("kl inversion accuracy, Pinsker and refined domination", Box::new(inversion)),
        ("moment generating function checks and scalar inequalities", Box::new(mgf_checks)),
        ("simulate reports are byte-identical across runs", Box::new(|| Ok(determinism()))),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = check().unwrap_or_else(|e| Verdict::new(false, format!("error: {e}")));
        if !verdict.pass {
            failures += 1;
        }
        println!(
            "criterion {}: {} - {name} ({}; {:.1}s)",
            i + 1,
            if verdict.pass { "PASS" } else { "FAIL" },
            verdict.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
