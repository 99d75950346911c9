//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a checked property fails, 2 on a usage
//! error (a one-line message goes to stderr).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use stubborn_usd_core::analytics::{self, scan_drifts};
use stubborn_usd_core::engine::{default_max_interactions, AbsorptionResult, BatchSummary, Outcome, TrialSpec};
use stubborn_usd_core::oracle::{solve_chain, ExactChainSolution};
use stubborn_usd_core::protocol::threshold;
use stubborn_usd_core::{Configuration, ProtocolParams};

use crate::batch::{default_parallelism, thread_pool, trial_results};
use crate::compare::{compare_monte_carlo, McComparison};
use crate::couple::{random_instances, run_coupled, CoupledRun, CouplingInstance};
use crate::error::{LabError, Result};
use crate::sweep::{render_svg, run_sweep, write_csv, StubbornnessAxis, SweepCell, SweepSpec, UndecidedSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stubborn-usd", version, about = "Undecided state dynamics with a stubborn opinion")]
pub struct Cli {
    /// Worker threads (default: available cores, capped by STUBBORN_USD_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run independent trials from one configuration.
    Simulate(SimulateArgs),
    /// Run a grid of (x1, p) cells and write a CSV table.
    Sweep(SweepArgs),
    /// Exact absorption probabilities and times for small n.
    Oracle(OracleArgs),
    /// Coupled runs checking that the configuration order is preserved.
    Couple(CoupleArgs),
    /// Compare closed-form drifts with exhaustive enumeration.
    DriftCheck(DriftCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub x1: u64,
    #[arg(long, conflicts_with = "u")]
    pub x2: Option<u64>,
    #[arg(long)]
    pub u: Option<u64>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "dp")]
    pub p: Option<f64>,
    /// Offset from the threshold 1 - x1/x2.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "p")]
    pub dp: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Interaction budget per trial (default ceil(200 n ln^2 n)).
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Record each trial's configuration every STRIDE interactions.
    #[arg(long, default_value_t = 0)]
    pub stride: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trajectory CSV file; required with --format csv and --stride > 0.
    #[arg(long)]
    pub traj_out: Option<PathBuf>,
    /// Draw initiator and responder as distinct agents.
    #[arg(long)]
    pub distinct_pairs: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub n: u64,
    /// `start:end:step` (inclusive) or a comma-separated list.
    #[arg(long)]
    pub x1: String,
    #[arg(long, conflicts_with = "u_frac")]
    pub u: Option<u64>,
    /// Undecided agents as a fraction of n.
    #[arg(long)]
    pub u_frac: Option<f64>,
    /// Comma-separated stubbornness values.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "dp")]
    pub p: Option<String>,
    /// Comma-separated offsets from each cell's threshold.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "p")]
    pub dp: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, allow_hyphen_values = true)]
    pub p: f64,
    /// Query one state, `x1,x2,u`; all states otherwise.
    #[arg(long)]
    pub config: Option<String>,
    /// Monte Carlo trials per queried state.
    #[arg(long)]
    pub check_mc: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest tolerated |z| for --check-mc.
    #[arg(long, default_value_t = 5.0)]
    pub z_max: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoupleArgs {
    /// Upper configuration `x1,x2,u`.
    #[arg(long, required_unless_present = "random", requires = "b")]
    pub a: Option<String>,
    #[arg(long, requires = "a")]
    pub pa: Option<f64>,
    /// Lower configuration `x1,x2,u`.
    #[arg(long)]
    pub b: Option<String>,
    #[arg(long, requires = "b")]
    pub pb: Option<f64>,
    /// Draw this many random ordered instances on --n agents instead.
    #[arg(long, conflicts_with_all = ["a", "b"], requires = "n")]
    pub random: Option<u64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    pub steps: u64,
    /// Repetitions of the given pair with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Allow an agent to interact with itself.
    #[arg(long)]
    pub self_pairs: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DriftCheckArgs {
    #[arg(long, default_value_t = 12)]
    pub n_max: u64,
    /// Comma-separated stubbornness values (default 0, 0.1, ..., 1).
    #[arg(long)]
    pub p_grid: Option<String>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> LabError {
    LabError::Invalid(msg.into())
}

/// Parses `x1,x2,u`.
pub fn parse_config(s: &str) -> Result<Configuration> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(usage(format!("configuration `{s}` must be x1,x2,u")));
    }
    let mut v = [0u64; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| usage(format!("`{part}` is not a non-negative count")))?;
    }
    Ok(Configuration::new(v[0], v[1], v[2])?)
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| usage(format!("`{t}` is not a number"))))
        .collect()
}

/// `start:end:step` (inclusive) or a comma-separated list of counts.
pub fn parse_count_grid(s: &str) -> Result<Vec<u64>> {
    let bad = |t: &str| usage(format!("`{t}` is not a non-negative count"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [a, b, step] = parts[..] else {
            return Err(usage(format!("range `{s}` must be start:end:step")));
        };
        let a: u64 = a.parse().map_err(|_| bad(a))?;
        let b: u64 = b.parse().map_err(|_| bad(b))?;
        let step: u64 = step.parse().map_err(|_| bad(step))?;
        if step == 0 || a > b {
            return Err(usage(format!("range `{s}` is empty")));
        }
        Ok((a..=b).step_by(step as usize).collect())
    } else {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|_| bad(t)))
            .collect()
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = open_out(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct TrialRecord {
    trial: u64,
    outcome: Outcome,
    interactions: u64,
    /// `[t, x1, x2, u]` rows.
    points: Vec<[u64; 4]>,
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    n: u64,
    initial: Configuration,
    p: f64,
    p_s: Option<f64>,
    delta_w0: f64,
    self_pairs: bool,
    seed: u64,
    max_interactions: u64,
    record_stride: u64,
    summary: BatchSummary,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    trajectories: Vec<TrialRecord>,
}

fn simulate(args: &SimulateArgs) -> Result<i32> {
    let rest = args
        .n
        .checked_sub(args.x1)
        .ok_or_else(|| usage(format!("x1 = {} exceeds n = {}", args.x1, args.n)))?;
    let (x2, u) = match (args.x2, args.u) {
        (Some(x2), None) => (Some(x2), rest.checked_sub(x2)),
        (None, Some(u)) => (rest.checked_sub(u), Some(u)),
        (None, None) => (Some(rest), Some(0)),
        (Some(_), Some(_)) => unreachable!("clap rejects --x2 with --u"),
    };
    let (Some(x2), Some(u)) = (x2, u) else {
        return Err(usage(format!("counts exceed n = {}", args.n)));
    };
    let initial = Configuration::new(args.x1, x2, u)?;
    let p_s = threshold(initial.x1, initial.x2);
    let p = match (args.p, args.dp) {
        (Some(p), _) => p,
        (None, Some(dp)) => p_s.ok_or_else(|| usage("--dp needs x2 > 0"))? + dp,
        (None, None) => unreachable!("clap requires --p or --dp"),
    };
    let params = ProtocolParams::with_scheduler(p, !args.distinct_pairs)?;
    if args.trials == 0 {
        return Err(usage("trials must be at least 1"));
    }
    if args.format == Format::Csv && args.stride > 0 && args.traj_out.is_none() {
        return Err(usage("--format csv with --stride needs --traj-out"));
    }
    let spec = TrialSpec {
        initial,
        params,
        seed: args.seed,
        max_interactions: args.max_steps.unwrap_or_else(|| default_max_interactions(args.n)),
        record_stride: args.stride,
    };
    let results = trial_results(&spec, args.trials)?;
    let outcomes: Vec<AbsorptionResult> = results.iter().map(|(r, _)| *r).collect();
    let summary = BatchSummary::from_results(&outcomes);
    let trajectories: Vec<TrialRecord> = results
        .into_iter()
        .enumerate()
        .filter_map(|(i, (r, traj))| {
            traj.map(|t| TrialRecord {
                trial: i as u64,
                outcome: r.outcome,
                interactions: r.interactions,
                points: t.points.iter().map(|(t, c)| [*t, c.x1, c.x2, c.u]).collect(),
            })
        })
        .collect();
    let delta_w0 = analytics::weighted_bias(&initial, p);

    match args.format {
        Format::Json => write_json(
            &SimulateReport {
                n: args.n,
                initial,
                p,
                p_s,
                delta_w0,
                self_pairs: params.self_pairs,
                seed: args.seed,
                max_interactions: spec.max_interactions,
                record_stride: args.stride,
                summary,
                trajectories,
            },
            args.out.as_deref(),
        )?,
        Format::Csv => {
            let cell = SweepCell { x1: initial.x1, x2: initial.x2, u: initial.u, p, p_s, delta_w0, summary };
            let mut out = open_out(args.out.as_deref())?;
            write_csv(std::slice::from_ref(&cell), &mut out)?;
            out.flush()?;
            if let Some(path) = &args.traj_out {
                let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
                w.write_record(["trial", "t", "x1", "x2", "u"])?;
                for rec in &trajectories {
                    for pt in &rec.points {
                        w.write_record([rec.trial, pt[0], pt[1], pt[2], pt[3]].map(|v| v.to_string()))?;
                    }
                }
                w.flush()?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn sweep(args: &SweepArgs) -> Result<i32> {
    let u = match (args.u, args.u_frac) {
        (Some(u), _) => UndecidedSpec::Count(u),
        (None, Some(f)) => UndecidedSpec::Fraction(f),
        (None, None) => UndecidedSpec::Count(0),
    };
    let p_axis = match (&args.p, &args.dp) {
        (Some(p), _) => StubbornnessAxis::Absolute(parse_f64_list(p)?),
        (None, Some(dp)) => StubbornnessAxis::Offset(parse_f64_list(dp)?),
        (None, None) => unreachable!("clap requires --p or --dp"),
    };
    let spec = SweepSpec {
        n: args.n,
        x1_grid: parse_count_grid(&args.x1)?,
        u,
        p_axis,
        trials: args.trials,
        seed: args.seed,
        max_interactions: args.max_steps,
    };
    let cells = run_sweep(&spec)?;
    let mut out = open_out(args.out.as_deref())?;
    write_csv(&cells, &mut out)?;
    out.flush()?;
    if let Some(path) = &args.svg {
        std::fs::write(path, render_svg(&cells))?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct StateRow {
    x1: u64,
    x2: u64,
    u: u64,
    win1: f64,
    win2: f64,
    exp_time: Option<f64>,
}

#[derive(Debug, Serialize)]
struct McCheck {
    trials: u64,
    seed: u64,
    z_max: f64,
    max_abs_z: f64,
    passed: bool,
    comparisons: Vec<McComparison>,
}

#[derive(Debug, Serialize)]
struct OracleReport {
    n: u64,
    p: f64,
    residual: f64,
    time_residual: f64,
    states: Vec<StateRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    check_mc: Option<McCheck>,
}

fn state_row(sol: &ExactChainSolution, c: &Configuration) -> StateRow {
    StateRow { x1: c.x1, x2: c.x2, u: c.u, win1: sol.win1(c), win2: sol.win2(c), exp_time: sol.exp_time(c) }
}

fn oracle(args: &OracleArgs, parallelism: usize) -> Result<i32> {
    let sol = solve_chain(args.n, args.p)?;
    let states: Vec<Configuration> = match &args.config {
        Some(s) => {
            let c = parse_config(s)?;
            if c.n() != args.n {
                return Err(usage(format!("configuration {c} does not sum to n = {}", args.n)));
            }
            vec![c]
        }
        None => sol.states().collect(),
    };
    let check_mc = match args.check_mc {
        Some(0) => return Err(usage("--check-mc needs at least one trial")),
        Some(trials) => {
            let comparisons = states
                .iter()
                .map(|c| compare_monte_carlo(&sol, c, trials, args.seed, parallelism))
                .collect::<Result<Vec<_>>>()?;
            let max_abs_z = comparisons.iter().map(|m| m.z_score.abs()).fold(0.0, f64::max);
            Some(McCheck {
                trials,
                seed: args.seed,
                z_max: args.z_max,
                max_abs_z,
                passed: max_abs_z <= args.z_max,
                comparisons,
            })
        }
        None => None,
    };
    let passed = check_mc.as_ref().is_none_or(|m| m.passed);
    let report = OracleReport {
        n: sol.n,
        p: sol.p,
        residual: sol.residual,
        time_residual: sol.time_residual,
        states: states.iter().map(|c| state_row(&sol, c)).collect(),
        check_mc,
    };
    write_json(&report, args.out.as_deref())?;
    Ok(if passed { EXIT_OK } else { EXIT_VIOLATION })
}

#[derive(Debug, Serialize)]
struct CoupleReport {
    steps: u64,
    self_pairs: bool,
    seed: u64,
    violations: u64,
    runs: Vec<CoupledRun>,
}

fn couple(args: &CoupleArgs) -> Result<i32> {
    let instances = match args.random {
        Some(count) => {
            let n = args.n.ok_or_else(|| usage("--random needs --n"))?;
            random_instances(n, count, args.seed)?
        }
        None => {
            let (Some(a), Some(b)) = (&args.a, &args.b) else {
                return Err(usage("give --a and --b, or --random with --n"));
            };
            let upper = parse_config(a)?;
            let lower = parse_config(b)?;
            let p = args.pa.ok_or_else(|| usage("--a needs --pa"))?;
            let p_lower = args.pb.ok_or_else(|| usage("--b needs --pb"))?;
            vec![CouplingInstance { upper, p, lower, p_lower }; args.runs as usize]
        }
    };
    let runs = run_coupled(&instances, args.steps, args.seed, args.self_pairs)?;
    let violations = runs.iter().filter(|r| !r.report.preserved).count() as u64;
    write_json(
        &CoupleReport { steps: args.steps, self_pairs: args.self_pairs, seed: args.seed, violations, runs },
        args.out.as_deref(),
    )?;
    Ok(if violations == 0 { EXIT_OK } else { EXIT_VIOLATION })
}

#[derive(Debug, Serialize)]
struct DriftReport {
    n_max: u64,
    p_grid: Vec<f64>,
    tolerance: f64,
    configurations: u64,
    discrepancies: Vec<(&'static str, f64)>,
    max_discrepancy: f64,
    step_bound_violations: u64,
    passed: bool,
}

fn drift_check(args: &DriftCheckArgs) -> Result<i32> {
    let p_grid = match &args.p_grid {
        Some(s) => parse_f64_list(s)?,
        None => (0..=10).map(|k| k as f64 / 10.0).collect(),
    };
    if p_grid.is_empty() {
        return Err(usage("--p-grid is empty"));
    }
    if args.n_max < 2 {
        return Err(usage("--n-max must be at least 2"));
    }
    let d = scan_drifts(args.n_max, &p_grid)?;
    let passed = d.max() <= args.tol && d.step_bound_violations == 0;
    write_json(
        &DriftReport {
            n_max: args.n_max,
            p_grid,
            tolerance: args.tol,
            configurations: d.configurations,
            discrepancies: d.named(),
            max_discrepancy: d.max(),
            step_bound_violations: d.step_bound_violations,
            passed,
        },
        args.out.as_deref(),
    )?;
    Ok(if passed { EXIT_OK } else { EXIT_VIOLATION })
}

/// Runs a parsed command and returns its exit code.
pub fn execute(cli: &Cli) -> Result<i32> {
    let parallelism = match cli.threads {
        Some(0) => return Err(usage("--threads must be at least 1")),
        Some(k) => k,
        None => default_parallelism(),
    };
    let pool = thread_pool(parallelism)?;
    pool.install(|| match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Oracle(a) => oracle(a, parallelism),
        Command::Couple(a) => couple(a),
        Command::DriftCheck(a) => drift_check(a),
    })
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => {
            let msg = e.to_string();
            let line = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("{}", line.trim());
            return EXIT_USAGE;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
