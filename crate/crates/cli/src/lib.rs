//! Command-line front end for the `bbl` binary.
//!
//! Every value printed here comes straight from a `bbl_core` call; the only
//! work done locally is argument parsing and formatting.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use bbl_core::beliefs::solve_optimal_beliefs;
use bbl_core::continuous::{compare, AgentKind, ContinuousDistribution};
use bbl_core::equilibrium::{sweep, EquilibriumPoint};
use bbl_core::oracles::{grid_search_alpha, grid_search_beliefs};
use bbl_core::portfolio::{
    expected_utility, feasible_bounds, naive_alpha, rational_alpha, sophisticated_alpha, sophisticated_objective,
    Asset, Bounds,
};
use bbl_core::timing::timing_preference;
use bbl_core::{cutoff_probability, eta_for_cutoff, ConsumptionUtility, DiscreteLottery, Preferences};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// Significant digits in every printed number.
pub const SIG_DIGITS: usize = 10;

#[derive(Debug, Parser)]
#[command(name = "bbl", version, about = "Optimal subjective beliefs for loss-averse agents")]
pub struct Cli {
    /// Output format; csv is only available for `equilibrium`.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write output to this file instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cutoff probability from (eta, lambda), or eta from (p-star, lambda).
    Pstar(PstarArgs),
    /// Optimal beliefs over a discrete lottery.
    Beliefs(LotteryArgs),
    /// Preference for early versus late resolution.
    Timing(LotteryArgs),
    /// Rank two continuous lotteries.
    Compare(CompareArgs),
    /// Optimal share of wealth in a risky asset.
    Portfolio(PortfolioArgs),
    /// Equilibrium price sweep over cutoff probabilities.
    Equilibrium(EquilibriumArgs),
    /// Rerun solvers against the brute-force oracles.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Debug, Args)]
pub struct PstarArgs {
    #[arg(long, required_unless_present = "p_star", conflicts_with = "p_star")]
    pub eta: Option<f64>,
    #[arg(long)]
    pub p_star: Option<f64>,
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct LotteryArgs {
    /// Lottery JSON, inline or a file path.
    #[arg(long)]
    pub lottery: String,
    /// Preferences JSON, inline or a file path.
    #[arg(long)]
    pub prefs: String,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(long)]
    pub prefs: String,
    #[arg(long, value_enum, default_value_t = Agent::Naive)]
    pub agent: Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Agent {
    Rational,
    Naive,
    Sophisticated,
}

#[derive(Debug, Args)]
pub struct PortfolioArgs {
    /// Asset JSON `{"r_f": .., "excess": <distribution>}`.
    #[arg(long)]
    pub asset: String,
    /// Consumption utility JSON; defaults to linear.
    #[arg(long)]
    pub utility: Option<String>,
    /// Preferences JSON; required unless the agent is rational.
    #[arg(long)]
    pub prefs: Option<String>,
    #[arg(long, value_enum, default_value_t = Agent::Sophisticated)]
    pub agent: Agent,
    /// Search interval `lo:hi` for the share.
    #[arg(long, default_value = "-10:10", allow_hyphen_values = true)]
    pub bounds: String,
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    /// Distribution JSON for the risky payoff.
    #[arg(long)]
    pub dist: String,
    #[arg(long)]
    pub lambda: f64,
    /// Cutoff grid `start:end:step`.
    #[arg(long, default_value = "0.05:0.95:0.01")]
    pub grid: String,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Exact belief solver against a simplex grid.
    Beliefs {
        #[command(flatten)]
        input: LotteryArgs,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Portfolio share against a dense scan of its objective.
    Portfolio {
        #[command(flatten)]
        input: PortfolioArgs,
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
    /// Belief solver against the grid oracle on random lotteries.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 0.02)]
        step: f64,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Numerical(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<bbl_core::Error> for Failure {
    fn from(e: bbl_core::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

/// What a subcommand produced: the rendered body plus an optional numerical
/// failure to report after it is written.
struct Output {
    body: String,
    failure: Option<String>,
}

impl Output {
    fn ok(body: String) -> Self {
        Output { body, failure: None }
    }
}

/// Run with process arguments, writing to standard output and error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Run with explicit output streams. Returns the process exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = dispatch(&cli).and_then(|o| {
        emit(&cli, &o.body, out)?;
        match o.failure {
            Some(m) => Err(Failure::Numerical(m)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {f}");
            match f {
                Failure::Input(_) => EXIT_INPUT,
                Failure::Numerical(_) => EXIT_NUMERICAL,
            }
        }
    }
}

fn emit(cli: &Cli, body: &str, out: &mut dyn Write) -> Result<(), Failure> {
    match &cli.output {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => out.write_all(body.as_bytes()).map_err(|e| Failure::Input(format!("cannot write output: {e}"))),
    }
}

fn dispatch(cli: &Cli) -> Result<Output, Failure> {
    if cli.format == Format::Csv && !matches!(cli.command, Command::Equilibrium(_)) {
        return Err(Failure::Input("--format csv is only supported by `equilibrium`".into()));
    }
    match &cli.command {
        Command::Pstar(a) => pstar(a),
        Command::Beliefs(a) => {
            let (lottery, prefs) = lottery_inputs(a)?;
            Ok(Output::ok(to_json(&solve_optimal_beliefs(&lottery, &prefs)?)))
        }
        Command::Timing(a) => {
            let (lottery, prefs) = lottery_inputs(a)?;
            Ok(Output::ok(to_json(&timing_preference(&lottery, &prefs)?)))
        }
        Command::Compare(a) => {
            let da: ContinuousDistribution = load("a", &a.a)?;
            let db: ContinuousDistribution = load("b", &a.b)?;
            let prefs: Preferences = load("prefs", &a.prefs)?;
            let kind = match a.agent {
                Agent::Naive => AgentKind::Naive,
                Agent::Sophisticated => AgentKind::Sophisticated,
                Agent::Rational => return Err(Failure::Input("compare supports naive or sophisticated agents".into())),
            };
            Ok(Output::ok(to_json(&compare(&da, &db, &prefs, kind)?)))
        }
        Command::Portfolio(a) => portfolio(a),
        Command::Equilibrium(a) => equilibrium(a, cli.format),
        Command::Verify(v) => verify(v),
    }
}

fn pstar(a: &PstarArgs) -> Result<Output, Failure> {
    let x = match (a.eta, a.p_star) {
        (Some(eta), _) => cutoff_probability(&Preferences::new(eta, a.lambda)?),
        (None, Some(p)) => eta_for_cutoff(p, a.lambda)?,
        (None, None) => return Err(Failure::Input("one of --eta or --p-star is required".into())),
    };
    Ok(Output::ok(format!("{}\n", format_number(x))))
}

fn lottery_inputs(a: &LotteryArgs) -> Result<(DiscreteLottery, Preferences), Failure> {
    Ok((load("lottery", &a.lottery)?, load("prefs", &a.prefs)?))
}

fn portfolio_inputs(a: &PortfolioArgs) -> Result<(Asset, ConsumptionUtility, Option<Preferences>, Bounds), Failure> {
    let asset: Asset = load("asset", &a.asset)?;
    let utility = match &a.utility {
        Some(s) => load("utility", s)?,
        None => ConsumptionUtility::Linear,
    };
    let prefs = match &a.prefs {
        Some(s) => Some(load::<Preferences>("prefs", s)?),
        None if a.agent == Agent::Rational => None,
        None => return Err(Failure::Input("--prefs is required for naive and sophisticated agents".into())),
    };
    let bounds = parse_bounds(&a.bounds)?;
    Ok((asset, utility, prefs, bounds))
}

fn portfolio(a: &PortfolioArgs) -> Result<Output, Failure> {
    let (asset, utility, prefs, bounds) = portfolio_inputs(a)?;
    let solution = match (a.agent, prefs) {
        (Agent::Rational, _) => rational_alpha(&asset, &utility, bounds)?,
        (Agent::Naive, Some(p)) => naive_alpha(&asset, &p, &utility, bounds)?,
        (Agent::Sophisticated, Some(p)) => sophisticated_alpha(&asset, &p, &utility, bounds)?,
        _ => unreachable!("prefs checked in portfolio_inputs"),
    };
    let failure = (!solution.converged)
        .then(|| format!("fixed point did not converge after {} iterations", solution.iterations));
    Ok(Output {
        body: to_json(&solution),
        failure,
    })
}

pub const CSV_HEADER: &str = "p_star,eta,pi_rational,pi_naive,pi_sophisticated";

fn equilibrium(a: &EquilibriumArgs, format: Format) -> Result<Output, Failure> {
    let dist: ContinuousDistribution = load("dist", &a.dist)?;
    let grid = parse_grid(&a.grid).map_err(Failure::Input)?;
    let points = sweep(&dist, a.lambda, &grid)?;
    let body = match format {
        Format::Json => to_json(&points),
        Format::Csv => csv(&points),
    };
    Ok(Output::ok(body))
}

fn csv(points: &[EquilibriumPoint]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for p in points {
        let row = [p.p_star, p.eta, p.pi_rational, p.pi_naive, p.pi_sophisticated].map(format_number);
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct BeliefCheck {
    solver_utility: f64,
    oracle_utility: f64,
    oracle_q: Vec<f64>,
    ok: bool,
}

#[derive(Serialize)]
struct AlphaCheck {
    alpha: f64,
    oracle_alpha: f64,
    step: f64,
    ok: bool,
}

#[derive(Serialize)]
struct RandomCheck {
    seed: u64,
    checked: usize,
    failures: usize,
    worst_gap: f64,
}

/// Slack allowed when the exact solver is compared with a coarser oracle.
const ORACLE_SLACK: f64 = 1e-12;

fn check_beliefs(lottery: &DiscreteLottery, prefs: &Preferences, step: f64) -> Result<BeliefCheck, Failure> {
    let solver = solve_optimal_beliefs(lottery, prefs)?;
    let (q, v) = grid_search_beliefs(lottery, prefs, step)?;
    Ok(BeliefCheck {
        solver_utility: solver.total_utility,
        oracle_utility: v,
        oracle_q: q,
        ok: solver.total_utility >= v - ORACLE_SLACK,
    })
}

fn verify(v: &VerifyCommand) -> Result<Output, Failure> {
    match v {
        VerifyCommand::Beliefs { input, step } => {
            let (lottery, prefs) = lottery_inputs(input)?;
            let check = check_beliefs(&lottery, &prefs, *step)?;
            let failure = (!check.ok).then(|| "solver utility is below the grid oracle".to_string());
            Ok(Output {
                body: to_json(&check),
                failure,
            })
        }
        VerifyCommand::Portfolio { input, points } => {
            let (asset, utility, prefs, bounds) = portfolio_inputs(input)?;
            let b = feasible_bounds(&asset, &utility, bounds)?;
            let (alpha, oracle_alpha) = match (input.agent, prefs) {
                (Agent::Rational, _) => {
                    let s = rational_alpha(&asset, &utility, bounds)?;
                    let (g, _) = grid_search_alpha(|x| expected_utility(&asset, &utility, x), b.lo, b.hi, *points)?;
                    (s.alpha, g)
                }
                (Agent::Sophisticated, Some(p)) => {
                    let s = sophisticated_alpha(&asset, &p, &utility, bounds)?;
                    let (g, _) = grid_search_alpha(
                        |x| sophisticated_objective(&asset, &p, &utility, x).unwrap_or(f64::NAN),
                        b.lo,
                        b.hi,
                        *points,
                    )?;
                    (s.alpha, g)
                }
                (Agent::Naive, _) => {
                    return Err(Failure::Input("the naive share is a fixed point with no objective to scan".into()))
                }
                _ => unreachable!("prefs checked in portfolio_inputs"),
            };
            let step = (b.hi - b.lo) / (*points - 1) as f64;
            let ok = (alpha - oracle_alpha).abs() <= step;
            let failure = (!ok).then(|| "share differs from the grid oracle by more than one step".to_string());
            Ok(Output {
                body: to_json(&AlphaCheck {
                    alpha,
                    oracle_alpha,
                    step,
                    ok,
                }),
                failure,
            })
        }
        VerifyCommand::Random { seed, count, step } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let (mut failures, mut worst_gap) = (0, 0.0_f64);
            for _ in 0..*count {
                let s = rng.gen_range(2..=3);
                let payoffs: Vec<f64> = (0..s).map(|_| rng.gen_range(0.0..10.0)).collect();
                let mut probs: Vec<f64> = (0..s).map(|_| rng.gen_range(0.05..1.0)).collect();
                let total: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|p| *p /= total);
                let lambda = rng.gen_range(1.5..3.0);
                let eta = rng.gen_range(1.0 / lambda..1.0);
                let lottery = DiscreteLottery::new(payoffs, probs)?;
                let check = check_beliefs(&lottery, &Preferences::new(eta, lambda)?, *step)?;
                worst_gap = worst_gap.max(check.oracle_utility - check.solver_utility);
                failures += usize::from(!check.ok);
            }
            let failure = (failures > 0).then(|| format!("{failures} of {count} lotteries failed the oracle check"));
            Ok(Output {
                body: to_json(&RandomCheck {
                    seed: *seed,
                    checked: *count,
                    failures,
                    worst_gap,
                }),
                failure,
            })
        }
    }
}

/// Parse JSON from an inline argument (leading `{` or `[`) or a file path,
/// naming the offending field on failure.
fn load<T: DeserializeOwned>(flag: &str, arg: &str) -> Result<T, Failure> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('{') || trimmed.starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Failure::Input(format!("--{flag}: cannot read {arg}: {e}")))?
    };
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            Failure::Input(format!("--{flag}: {}", e.inner()))
        } else {
            Failure::Input(format!("--{flag}: field `{path}`: {}", e.inner()))
        }
    })
}

fn parse_f64(what: &str, s: &str) -> Result<f64, Failure> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Failure::Input(format!("{what}: `{s}` is not a finite number")))
}

fn parse_bounds(s: &str) -> Result<Bounds, Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi] = parts[..] else {
        return Err(Failure::Input(format!("--bounds: expected lo:hi, got `{s}`")));
    };
    Ok(Bounds::new(parse_f64("--bounds", lo)?, parse_f64("--bounds", hi)?)?)
}

/// Points `start, start + step, ...` up to `end`. The last point is `end`
/// itself whenever it lies within half a step of the stepped sequence.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts[..] else {
        return Err(format!("--grid: expected start:end:step, got `{s}`"));
    };
    let num = |x: &str| x.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    let (Some(start), Some(end), Some(step)) = (num(a), num(b), num(c)) else {
        return Err(format!("--grid: `{s}` has a component that is not a finite number"));
    };
    if !(step > 0.0) || end < start {
        return Err(format!("--grid: need step > 0 and start <= end, got `{s}`"));
    }
    let n = ((end - start) / step + 0.5).floor() as usize;
    let mut points: Vec<f64> = (0..=n).map(|k| start + k as f64 * step).collect();
    let last = points.last_mut().expect("grid has at least one point");
    if n > 0 && (*last - end).abs() <= 0.5 * step {
        *last = end;
    }
    Ok(points)
}

/// Round to [`SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest round-trip representation of `x` after rounding, so `0.8` prints
/// as `0.8` and `1` as `1.0`.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    serde_json::to_string(&round_sig(x)).expect("finite floats serialize")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

fn to_json<T: Serialize>(x: &T) -> String {
    let mut v = serde_json::to_value(x).expect("outputs serialize to JSON");
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s
}
