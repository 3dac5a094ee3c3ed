//! `martingale-bounds`: compute concentration bounds from summary statistics,
//! run coverage and tightness experiments, and run the verification suite.
//!
//! Exit codes: 0 success, 1 internal error or failed verification,
//! 2 usage or precondition error.

mod input;
mod table;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use martingale_bounds::individual::{
    bernstein_adaptive, bernstein_fixed_lambda, hoeffding_azuma_radius, kl_drift_bound, BoundResult,
};
use martingale_bounds::oracle::{run_verification, CheckName, VerifyConfig, MAX_EXACT_N};
use martingale_bounds::pac_bayes::{
    pb_bernstein_adaptive, pb_bernstein_fixed_lambda, pb_ha_adaptive, pb_ha_fixed_lambda, pb_kl_bound,
};
use martingale_bounds::simulation::{
    coverage_experiment, default_tightness_sweep, tightness_table, BoundId, CoverageConfig,
    ExperimentReport, RhoFamily, ScenarioSpec, Shape, TightnessScenario, VarianceSource,
    DEFAULT_GIBBS_GAMMA, DEFAULT_GRID_RATIO, GENERATOR_ID,
};
use martingale_bounds::{DiscreteDistribution, HypothesisSummary, PacBayesResult};

use input::{config_tokens, parse_distribution, parse_list, ranges_from_widths};
use table::{Cell, Table};

/// Directory that relative `--output` paths are resolved against.
const OUTPUT_DIR_ENV: &str = "MARTINGALE_BOUNDS_OUTPUT_DIR";

#[derive(Debug)]
pub enum CliError {
    /// Invalid flags or inputs (exit 2).
    Usage(String),
    /// A violated precondition reported by the library (exit 2).
    Precondition(martingale_bounds::Error),
    /// Anything else (exit 1).
    Internal(String),
}

impl From<martingale_bounds::Error> for CliError {
    fn from(e: martingale_bounds::Error) -> Self {
        CliError::Precondition(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Precondition(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Precondition(e) => write!(f, "precondition violated: {e}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "martingale-bounds", version, about, args_override_self = true)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,

    /// Write output to this file instead of stdout. Relative paths are
    /// resolved against $MARTINGALE_BOUNDS_OUTPUT_DIR when it is set.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// JSON object with the same keys as the flags; flags given on the
    /// command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute one bound from summary statistics.
    Bound(BoundArgs),
    /// Run a Monte-Carlo coverage experiment.
    Simulate(SimulateArgs),
    /// Compare interval widths of the kl, Pinsker, refined, Hoeffding-Azuma and Bernstein bounds.
    Compare(CompareArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct BoundArgs {
    /// kl-drift, hoeffding-azuma, bernstein, bernstein-fixed, pb-kl, pb-ha,
    /// pb-ha-adaptive, pb-bernstein-fixed or pb-bernstein.
    #[arg(long)]
    bound: String,
    /// Number of rounds.
    #[arg(long)]
    n: Option<u64>,
    /// S_n = sum of the [0,1]-valued observations (kl-drift).
    #[arg(long)]
    s: Option<f64>,
    /// Confidence parameter, in (0, 1).
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Ratio of the geometric lambda grid, > 1.
    #[arg(long, default_value_t = DEFAULT_GRID_RATIO)]
    c: f64,
    /// Range widths beta_i - alpha_i: `1x100`, `0.5,1,1` or `1x50,2x50`.
    #[arg(long)]
    widths: Option<String>,
    /// Almost-sure bound K on |Z_i|.
    #[arg(long)]
    k: Option<f64>,
    /// Upper bound on the cumulative conditional variance (V_n or <V_n, rho>).
    #[arg(long)]
    variance: Option<f64>,
    /// Per-hypothesis cumulative variances, comma-separated (PAC-Bayes Bernstein).
    #[arg(long)]
    variances: Option<String>,
    /// Per-hypothesis sums S_n(h), comma-separated (pb-kl interval).
    #[arg(long)]
    sums: Option<String>,
    /// Fixed lambda (bernstein-fixed, pb-ha, pb-bernstein-fixed).
    #[arg(long)]
    lambda: Option<f64>,
    /// Posterior: inline weights `0.7,0.3` or a JSON array file.
    #[arg(long)]
    rho: Option<String>,
    /// Prior: inline weights or a JSON array file. Defaults to uniform.
    #[arg(long)]
    pi: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioName {
    Iid,
    Dependent,
    Mds,
    Iw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ShapeName {
    TwoPoint,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VarianceName {
    Exact,
    SampleBound,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "iid")]
    scenario: ScenarioName,
    /// Comma-separated bounds. Defaults: kl-drift (iid, dependent),
    /// hoeffding-azuma (mds), pb-kl (iw).
    #[arg(long)]
    bound: Option<String>,
    /// Drift b of the iid and dependent scenarios.
    #[arg(long, default_value_t = 0.5)]
    b: f64,
    /// Dependence strength of the dependent scenario, in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    strength: f64,
    /// Rounds per trial.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Range widths of the mds scenario (default: width 1 every round).
    #[arg(long)]
    widths: Option<String>,
    #[arg(long, value_enum, default_value = "two-point")]
    shape: ShapeName,
    /// Number of hypotheses of the iw scenario.
    #[arg(long = "H", alias = "hypotheses", default_value_t = 5)]
    hypotheses: usize,
    /// Mean rewards r(h), comma-separated (default: evenly spaced in [0.1, 0.9]).
    #[arg(long)]
    rewards: Option<String>,
    /// Floor of the sampling probabilities (default: 1/H).
    #[arg(long)]
    pmin: Option<f64>,
    /// Use the adaptive greedy-with-floor sampling policy.
    #[arg(long)]
    adaptive: bool,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_RATIO)]
    c: f64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Master seed; trial t uses splitmix64(seed ^ splitmix64(t)).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed lambda for the fixed-lambda bounds.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum, default_value = "exact")]
    variance: VarianceName,
    /// Inverse temperature of the data-dependent Gibbs posterior.
    #[arg(long, default_value_t = DEFAULT_GIBBS_GAMMA)]
    gamma: f64,
    /// Leave the Gibbs posterior out of the tested posteriors.
    #[arg(long)]
    no_gibbs: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Comma-separated `n:mean[:variance]` rows; an empty string gives an
    /// empty table. Default: a sweep of means around 1/8 at n = 100, 1000, 10000.
    #[arg(long)]
    points: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_GRID_RATIO)]
    c: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Comma-separated checks: exact-mgf, enumeration, comparison,
    /// hoeffding-mgf, bernstein-mgf, scalar, markov. Default: all.
    #[arg(long)]
    check: Option<String>,
    /// Largest n of the exact-mgf sweep.
    #[arg(long, default_value_t = MAX_EXACT_N)]
    n_max: u64,
    /// Monte-Carlo samples per case.
    #[arg(long, default_value_t = 1_000_000)]
    mc_samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

const SUBCOMMANDS: [&str; 4] = ["bound", "simulate", "compare", "verify"];

/// Value of `--config` in `raw`, found without a full parse so that flags
/// supplied only by the config file do not trip clap's required-argument
/// checks.
fn config_path(raw: &[OsString]) -> Option<PathBuf> {
    let mut args = raw.iter().skip(1);
    let mut found = None;
    while let Some(arg) = args.next() {
        let text = arg.to_string_lossy();
        if text == "--" {
            break;
        } else if text == "--config" {
            found = args.next().map(PathBuf::from);
        } else if let Some(value) = text.strip_prefix("--config=") {
            found = Some(PathBuf::from(value));
        }
    }
    found
}

/// Parses the command line; config-file flags are inserted right after the
/// subcommand, ahead of the user's flags, so the latter override them.
fn parse_cli(raw: Vec<OsString>) -> Result<Cli, clap::Error> {
    let Some(path) = config_path(&raw) else {
        return Cli::try_parse_from(&raw);
    };
    let tokens = match config_tokens(&path) {
        Ok(tokens) => tokens,
        Err(e) => {
            return Err(Cli::command_error(clap::error::ErrorKind::ValueValidation, e.to_string()));
        }
    };
    let Some(position) = raw
        .iter()
        .skip(1)
        .position(|a| a.to_str().is_some_and(|a| SUBCOMMANDS.contains(&a)))
    else {
        return Cli::try_parse_from(&raw);
    };
    let position = position + 1;
    let mut merged = raw[..=position].to_vec();
    merged.extend(tokens);
    merged.extend_from_slice(&raw[position + 1..]);
    Cli::try_parse_from(merged)
}

impl Cli {
    fn command_error(kind: clap::error::ErrorKind, message: String) -> clap::Error {
        use clap::CommandFactory;
        Cli::command().error(kind, message)
    }
}

fn require<T>(value: Option<T>, flag: &str, bound: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("--bound {bound} needs --{flag}")))
}

const BOUND_COLUMNS: [&str; 17] = [
    "bound",
    "radius",
    "lower",
    "upper",
    "kl_term",
    "branch",
    "lambda",
    "nu",
    "grid_index",
    "epsilon_rho",
    "closed_form_radius",
    "refined_upper",
    "pinsker_lower",
    "pinsker_upper",
    "center",
    "delta",
    "c",
];

fn individual_row(bound: BoundId, r: &BoundResult, c: f64) -> Vec<(&'static str, Cell)> {
    vec![
        ("bound", bound.name().into()),
        ("radius", r.radius.into()),
        ("lower", r.interval.map(|i| i.lower).into()),
        ("upper", r.interval.map(|i| i.upper).into()),
        ("kl_term", Cell::Empty),
        ("branch", r.branch.map(|b| b.as_str()).into()),
        ("lambda", r.lambda_used.into()),
        ("nu", r.grid_size.into()),
        ("grid_index", Cell::Empty),
        ("epsilon_rho", Cell::Empty),
        ("closed_form_radius", Cell::Empty),
        ("refined_upper", r.refined_upper.into()),
        ("pinsker_lower", r.pinsker_interval.map(|i| i.lower).into()),
        ("pinsker_upper", r.pinsker_interval.map(|i| i.upper).into()),
        ("center", Cell::Empty),
        ("delta", r.confidence.into()),
        ("c", c.into()),
    ]
}

fn pac_bayes_row(bound: BoundId, r: &PacBayesResult, c: f64) -> Vec<(&'static str, Cell)> {
    vec![
        ("bound", bound.name().into()),
        ("radius", r.radius.into()),
        ("lower", r.interval.map(|i| i.lower).into()),
        ("upper", r.interval.map(|i| i.upper).into()),
        ("kl_term", r.kl_term.into()),
        ("branch", r.branch.map(|b| b.as_str()).into()),
        ("lambda", r.lambda_used.into()),
        ("nu", r.grid_size.into()),
        ("grid_index", r.grid_index.map(|i| i as usize).into()),
        ("epsilon_rho", r.epsilon_rho.into()),
        ("closed_form_radius", r.closed_form_radius.into()),
        ("refined_upper", Cell::Empty),
        ("pinsker_lower", Cell::Empty),
        ("pinsker_upper", r.pinsker_radius.into()),
        ("center", r.center.into()),
        ("delta", r.confidence.into()),
        ("c", c.into()),
    ]
}

fn cmd_bound(args: &BoundArgs) -> Result<Table, CliError> {
    let bound: BoundId = args.bound.parse()?;
    let name = bound.name();
    let mut table = Table::new("bound", BOUND_COLUMNS.to_vec());
    let row = match bound {
        BoundId::KlDrift => {
            let n = require(args.n, "n", name)?;
            let s = require(args.s, "s", name)?;
            individual_row(bound, &kl_drift_bound(s, n, args.delta)?, args.c)
        }
        BoundId::HoeffdingAzuma => {
            let ranges = ranges_from_widths(require(args.widths.as_deref(), "widths", name)?)?;
            individual_row(bound, &hoeffding_azuma_radius(&ranges, args.delta)?, args.c)
        }
        BoundId::Bernstein => {
            let r = bernstein_adaptive(
                require(args.variance, "variance", name)?,
                require(args.k, "k", name)?,
                require(args.n, "n", name)?,
                args.delta,
                args.c,
            )?;
            individual_row(bound, &r, args.c)
        }
        BoundId::BernsteinFixed => {
            let r = bernstein_fixed_lambda(
                require(args.variance, "variance", name)?,
                require(args.lambda, "lambda", name)?,
                require(args.k, "k", name)?,
                args.delta,
            )?;
            individual_row(bound, &r, args.c)
        }
        _ => {
            let rho = parse_distribution("rho", require(args.rho.as_deref(), "rho", name)?)?;
            let pi = match &args.pi {
                Some(text) => parse_distribution("pi", text)?,
                None => DiscreteDistribution::uniform(rho.len())?,
            };
            let summary = pac_bayes_summary(args, bound)?;
            let r = match bound {
                BoundId::PbKl => pb_kl_bound(&summary, &rho, &pi, args.delta)?,
                BoundId::PbHa => pb_ha_fixed_lambda(
                    &summary,
                    &rho,
                    &pi,
                    require(args.lambda, "lambda", name)?,
                    args.delta,
                )?,
                BoundId::PbHaAdaptive => pb_ha_adaptive(&summary, &rho, &pi, args.delta, args.c)?,
                BoundId::PbBernsteinFixed => pb_bernstein_fixed_lambda(
                    &summary,
                    &rho,
                    &pi,
                    require(args.lambda, "lambda", name)?,
                    args.delta,
                )?,
                BoundId::PbBernstein => {
                    if args.variance.is_none() && args.variances.is_none() {
                        return Err(CliError::Usage(format!(
                            "--bound {name} needs --variance or --variances"
                        )));
                    }
                    pb_bernstein_adaptive(&summary, &rho, &pi, args.variance, args.delta, args.c)?
                }
                _ => unreachable!("individual bounds handled above"),
            };
            pac_bayes_row(bound, &r, args.c)
        }
    };
    table.push(row);
    Ok(table)
}

fn pac_bayes_summary(args: &BoundArgs, bound: BoundId) -> Result<HypothesisSummary, CliError> {
    let name = bound.name();
    let mut summary = match bound {
        BoundId::PbHa | BoundId::PbHaAdaptive => {
            let ranges = ranges_from_widths(require(args.widths.as_deref(), "widths", name)?)?;
            HypothesisSummary::new(ranges.len() as u64).with_ranges(ranges)
        }
        _ => HypothesisSummary::new(require(args.n, "n", name)?),
    };
    if let Some(sums) = &args.sums {
        summary = summary.with_sums(parse_list("sums", sums)?);
    }
    if let Some(variances) = &args.variances {
        summary = summary.with_variances(parse_list("variances", variances)?);
    }
    if matches!(bound, BoundId::PbBernstein | BoundId::PbBernsteinFixed) {
        summary = summary.with_range_bound(require(args.k, "k", name)?);
    }
    Ok(summary)
}

fn scenario_from(args: &SimulateArgs) -> Result<ScenarioSpec, CliError> {
    Ok(match args.scenario {
        ScenarioName::Iid => ScenarioSpec::iid_bernoulli(args.b, args.n, args.seed)?,
        ScenarioName::Dependent => ScenarioSpec::dependent_bounded(args.b, args.strength, args.n, args.seed)?,
        ScenarioName::Mds => {
            let ranges = match &args.widths {
                Some(text) => ranges_from_widths(text)?,
                None => ranges_from_widths(&format!("1x{}", args.n))?,
            };
            if ranges.len() != args.n {
                return Err(CliError::Usage(format!(
                    "--widths gives {} rounds but --n is {}",
                    ranges.len(),
                    args.n
                )));
            }
            let shape = match args.shape {
                ShapeName::TwoPoint => Shape::TwoPoint,
                ShapeName::Uniform => Shape::Uniform,
            };
            ScenarioSpec::mds_bounded(ranges, shape, args.seed)?
        }
        ScenarioName::Iw => {
            let m = args.hypotheses;
            if m == 0 {
                return Err(CliError::Usage("--H must be at least 1".into()));
            }
            let rewards = match &args.rewards {
                Some(text) => parse_list("rewards", text)?,
                None if m == 1 => vec![0.5],
                None => (0..m).map(|h| 0.1 + 0.8 * h as f64 / (m - 1) as f64).collect(),
            };
            if rewards.len() != m {
                return Err(CliError::Usage(format!(
                    "--rewards has {} entries but --H is {m}",
                    rewards.len()
                )));
            }
            let p_min = args.pmin.unwrap_or(1.0 / m as f64);
            ScenarioSpec::iw_sampling(rewards, p_min, args.adaptive, args.n, args.seed)?
        }
    })
}

const SIMULATE_COLUMNS: [&str; 26] = [
    "scenario",
    "bound",
    "n",
    "trials",
    "violations",
    "violation_rate",
    "acceptance_band",
    "pass",
    "mean_radius",
    "mean_width",
    "posteriors_per_trial",
    "grid_ok",
    "variance_small",
    "nu",
    "lambda",
    "variance",
    "refined_below_ha",
    "empirical_below_eighth",
    "b",
    "hypotheses",
    "p_min",
    "adaptive",
    "delta",
    "c",
    "seed",
    "generator",
];

fn simulate_row(name: &str, args: &SimulateArgs, spec: &ScenarioSpec, r: &ExperimentReport) -> Vec<(&'static str, Cell)> {
    let (hypotheses, p_min, adaptive) = match &spec.kind {
        martingale_bounds::simulation::ScenarioKind::IwSampling {
            rewards,
            p_min,
            adaptive,
        } => (Cell::from(rewards.len()), Cell::from(*p_min), Cell::from(*adaptive)),
        _ => (Cell::Empty, Cell::Empty, Cell::Empty),
    };
    vec![
        ("scenario", name.into()),
        ("bound", r.bound.name().into()),
        ("n", spec.n.into()),
        ("trials", r.trials.into()),
        ("violations", r.violations.into()),
        ("violation_rate", r.violation_rate.into()),
        ("acceptance_band", r.acceptance_band.into()),
        ("pass", r.pass.into()),
        ("mean_radius", r.mean_radius.into()),
        ("mean_width", r.mean_width.into()),
        ("posteriors_per_trial", r.posteriors_per_trial.into()),
        ("grid_ok", r.branch_counts.grid_ok.into()),
        ("variance_small", r.branch_counts.variance_small.into()),
        ("nu", r.grid_size.into()),
        ("lambda", r.lambda.into()),
        (
            "variance",
            match r.variance {
                VarianceSource::Exact => "exact",
                VarianceSource::SampleBound => "sample-bound",
            }
            .into(),
        ),
        ("refined_below_ha", r.crossover.map(|c| c.refined_below_ha as usize).into()),
        (
            "empirical_below_eighth",
            r.crossover.map(|c| c.empirical_below_eighth as usize).into(),
        ),
        ("b", spec.drift().into()),
        ("hypotheses", hypotheses),
        ("p_min", p_min),
        ("adaptive", adaptive),
        ("delta", r.delta.into()),
        ("c", r.c.into()),
        ("seed", args.seed.into()),
        ("generator", r.generator.clone().into()),
    ]
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Table, CliError> {
    let spec = scenario_from(args)?;
    let default_bound = match args.scenario {
        ScenarioName::Iid | ScenarioName::Dependent => "kl-drift",
        ScenarioName::Mds => "hoeffding-azuma",
        ScenarioName::Iw => "pb-kl",
    };
    let bounds: Vec<BoundId> = args
        .bound
        .as_deref()
        .unwrap_or(default_bound)
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, _>>()?;
    let scenario_name = format!("{:?}", args.scenario).to_lowercase();
    let mut table = Table::new("simulate", SIMULATE_COLUMNS.to_vec());
    for bound in bounds {
        let config = CoverageConfig {
            c: args.c,
            lambda: args.lambda,
            variance: match args.variance {
                VarianceName::Exact => VarianceSource::Exact,
                VarianceName::SampleBound => VarianceSource::SampleBound,
            },
            rho_family: RhoFamily {
                gibbs_gamma: (!args.no_gibbs).then_some(args.gamma),
                ..RhoFamily::default()
            },
            ..CoverageConfig::new(bound, args.delta, args.trials, args.seed)
        };
        let report = coverage_experiment(&spec, &config)?;
        table.push(simulate_row(&scenario_name, args, &spec, &report));
    }
    Ok(table)
}

fn parse_points(text: &str) -> Result<Vec<TightnessScenario>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            let bad = || CliError::Usage(format!("--points: `{item}` is not n:mean[:variance]"));
            if !(2..=3).contains(&parts.len()) {
                return Err(bad());
            }
            let n: u64 = parts[0].parse().map_err(|_| bad())?;
            let mean: f64 = parts[1].parse().map_err(|_| bad())?;
            let variance = parts.get(2).map(|v| v.parse::<f64>().map_err(|_| bad())).transpose()?;
            Ok(TightnessScenario::new(n, mean, variance))
        })
        .collect()
}

const COMPARE_COLUMNS: [&str; 20] = [
    "n",
    "empirical_mean",
    "variance",
    "kl_radius",
    "kl_lower",
    "kl_upper",
    "kl_width",
    "pinsker_width",
    "refined_lower",
    "refined_upper",
    "refined_width",
    "ha_upper",
    "ha_width",
    "bernstein_width",
    "winner",
    "refined_below_ha",
    "below_eighth",
    "delta",
    "c",
    "generator",
];

fn cmd_compare(args: &CompareArgs) -> Result<Table, CliError> {
    let scenarios = match &args.points {
        Some(text) => parse_points(text)?,
        None => default_tightness_sweep(),
    };
    let rows = tightness_table(&scenarios, args.delta, args.c)?;
    let mut table = Table::new("compare", COMPARE_COLUMNS.to_vec());
    for r in rows {
        table.push(vec![
            ("n", r.n.into()),
            ("empirical_mean", r.empirical_mean.into()),
            ("variance", r.variance.into()),
            ("kl_radius", r.kl_radius.into()),
            ("kl_lower", r.kl_interval.lower.into()),
            ("kl_upper", r.kl_interval.upper.into()),
            ("kl_width", r.kl_width.into()),
            ("pinsker_width", r.pinsker_width.into()),
            ("refined_lower", r.refined_interval.lower.into()),
            ("refined_upper", r.refined_upper.into()),
            ("refined_width", r.refined_width.into()),
            ("ha_upper", r.ha_upper.into()),
            ("ha_width", r.ha_width.into()),
            ("bernstein_width", r.bernstein_width.into()),
            ("winner", r.winner.into()),
            ("refined_below_ha", r.refined_below_ha.into()),
            ("below_eighth", r.below_eighth.into()),
            ("delta", args.delta.into()),
            ("c", args.c.into()),
            ("generator", GENERATOR_ID.into()),
        ]);
    }
    Ok(table)
}

const VERIFY_COLUMNS: [&str; 10] = [
    "check",
    "pass",
    "cases",
    "max_slack",
    "samples",
    "detail",
    "n_max",
    "mc_samples",
    "seed",
    "generator",
];

/// Returns the table and whether every check passed.
fn cmd_verify(args: &VerifyArgs) -> Result<(Table, bool), CliError> {
    let checks = match &args.check {
        Some(text) => text
            .split(',')
            .map(|s| s.trim().parse::<CheckName>())
            .collect::<Result<Vec<_>, _>>()?,
        None => CheckName::ALL.to_vec(),
    };
    let config = VerifyConfig {
        checks,
        n_max: args.n_max,
        mc_samples: args.mc_samples,
        seed: args.seed,
    };
    let report = run_verification(&config)?;
    let mut table = Table::new("verify", VERIFY_COLUMNS.to_vec());
    for check in &report.checks {
        table.push(vec![
            ("check", check.name.name().into()),
            ("pass", check.pass.into()),
            ("cases", check.cases.into()),
            ("max_slack", check.max_slack.into()),
            ("samples", check.samples.into()),
            ("detail", check.detail.clone().into()),
            ("n_max", report.n_max.into()),
            ("mc_samples", report.mc_samples.into()),
            ("seed", report.seed.into()),
            ("generator", report.generator.clone().into()),
        ]);
    }
    Ok((table, report.pass))
}

fn write_output(cli: &Cli, table: &Table) -> Result<(), CliError> {
    let text = match cli.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    match &cli.output {
        Some(path) => {
            let path = match std::env::var_os(OUTPUT_DIR_ENV) {
                Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
                _ => path.clone(),
            };
            fs::write(&path, text)
                .map_err(|e| CliError::Internal(format!("cannot write `{}`: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Internal(format!("cannot write to stdout: {e}"))),
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let (table, ok) = match &cli.command {
        Command::Bound(args) => (cmd_bound(args)?, true),
        Command::Simulate(args) => (cmd_simulate(args)?, true),
        Command::Compare(args) => (cmd_compare(args)?, true),
        Command::Verify(args) => cmd_verify(args)?,
    };
    write_output(cli, &table)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = match parse_cli(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed: at least one check did not pass");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
