//! Command-line entry point: spec ingestion, experiment orchestration,
//! and report emission.
//!
//! Exit codes: 0 success (and feasible verdicts), 2 usage or input
//! validation error, 3 infeasible verdict, 4 boundary-uncertain verdict,
//! 5 runtime failure. CSV reports are deterministic: repeating an
//! invocation with identical flags reproduces the bytes exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::feasibility::{check, enumerate_subsets, render_verdict, FeasibilityError};
use crate::idle::{idle_time, idle_time_monte_carlo, IdleError};
use crate::model::{
    subset_label, validate_spec, SpecError, SystemSpec, TaskId, ValidationError,
};
use crate::policy::{make_policy, PolicyError};
use crate::reduction::{reduce, ReductionError};
use crate::rng::split;
use crate::simulator::{config_digest, replicate, run as run_simulation, RunMetrics, SimError};

/// A task's requirement counts as met when its empirical throughput is
/// within this many standard errors below the target.
const MET_TOLERANCE_SIGMA: f64 = 3.0;

/// Subset enumeration guard for the `idle` report.
const MAX_ENUMERATED_TASKS: usize = 20;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_UNCERTAIN: i32 = 4;
pub const EXIT_RUNTIME: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Feasibility(#[from] FeasibilityError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Idle(#[from] IdleError),
    #[error("write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<Vec<ValidationError>> for CliError {
    fn from(errors: Vec<ValidationError>) -> Self {
        CliError::Spec(SpecError::Invalid(errors))
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::Spec(_)
            | CliError::Policy(_)
            | CliError::Reduction(_) => EXIT_USAGE,
            CliError::Feasibility(_)
            | CliError::Sim(_)
            | CliError::Idle(_)
            | CliError::Write { .. } => EXIT_RUNTIME,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "rtspn",
    version,
    about = "Scheduling toolkit for real-time stochastic processing networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide timely-throughput feasibility of a spec.
    Check(CheckArgs),
    /// Simulate a scheduling policy and report per-task throughput.
    Simulate(SimulateArgs),
    /// Transform a two-resource spec into its single-resource reduction.
    Reduce(ReduceArgs),
    /// Tabulate expected idle time per task subset, analytic vs Monte Carlo.
    Idle(IdleArgs),
    /// Grid-sweep one parameter, checking (and optionally simulating) each point.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    #[value(name = "requirement")]
    Requirement,
    #[value(name = "rate")]
    Rate,
    #[value(name = "frame_length")]
    FrameLength,
}

#[derive(Args)]
struct CheckArgs {
    /// System spec JSON file.
    #[arg(long)]
    spec: PathBuf,
    /// `text` for the verdict report, `csv` for the slack table.
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

#[derive(Args)]
struct SimulateArgs {
    /// System spec JSON file.
    #[arg(long)]
    spec: PathBuf,
    /// Scheduling policy: ldf|ltdf|static|random|share.
    #[arg(long)]
    policy: String,
    /// Repeatable `key=value` policy parameter (e.g. `order=2,1,3`).
    #[arg(long = "policy-arg", value_name = "KEY=VALUE")]
    policy_args: Vec<String>,
    /// Number of frames per run.
    #[arg(long)]
    frames: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent replications; seeds derive from --seed.
    #[arg(long, default_value_t = 1)]
    replications: u64,
    /// Write CSV here (plus a `.json` metadata sidecar) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    /// Two-resource system spec JSON file.
    #[arg(long)]
    spec: PathBuf,
    /// Write the reduced spec here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IdleArgs {
    /// System spec JSON file.
    #[arg(long)]
    spec: PathBuf,
    /// Monte Carlo samples per subset.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// System spec JSON file (the base point).
    #[arg(long)]
    spec: PathBuf,
    /// Which parameter the grid varies.
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Task whose parameter is swept (required for requirement/rate).
    #[arg(long)]
    task: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    from: f64,
    #[arg(long, allow_negative_numbers = true)]
    to: f64,
    /// Grid size including both endpoints; at least 2.
    #[arg(long)]
    steps: usize,
    /// Simulate each grid point as well as checking it.
    #[arg(long, default_value_t = false)]
    simulate: bool,
    /// Policy for --simulate.
    #[arg(long, default_value_t = String::from("ldf"))]
    policy: String,
    /// Repeatable `key=value` policy parameter.
    #[arg(long = "policy-arg", value_name = "KEY=VALUE")]
    policy_args: Vec<String>,
    /// Frames per simulated grid point.
    #[arg(long, default_value_t = 10_000)]
    frames: u64,
    /// Base seed; grid point i simulates with a seed derived from (seed, i).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Concurrent grid points. Output is identical for any value.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Initialize stderr logging; verbosity comes from `RTSPN_LOG`
/// (default `warn`, so numerical warnings surface).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("RTSPN_LOG", "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

/// Parse argv, dispatch, and return the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err)
            if matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{err}");
            return EXIT_OK;
        }
        Err(err) => {
            eprint!("{err}");
            return EXIT_USAGE;
        }
    };
    let result = match cli.command {
        Command::Check(args) => cmd_check(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Reduce(args) => cmd_reduce(&args),
        Command::Idle(args) => cmd_idle(&args),
        Command::Sweep(args) => cmd_sweep(&args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn write_report(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn parse_policy_args(raw: &[String]) -> Result<BTreeMap<String, String>, CliError> {
    let mut args = BTreeMap::new();
    for entry in raw {
        let Some((key, value)) = entry.split_once('=') else {
            return Err(CliError::Usage(format!(
                "policy argument {entry:?} is not of the form key=value"
            )));
        };
        if key.is_empty() {
            return Err(CliError::Usage(format!("policy argument {entry:?} has an empty key")));
        }
        if args.insert(key.to_string(), value.to_string()).is_some() {
            return Err(CliError::Usage(format!("duplicate policy argument key {key:?}")));
        }
    }
    Ok(args)
}

// ── check ─────────────────────────────────────────────────────────────

fn cmd_check(args: &CheckArgs) -> Result<i32, CliError> {
    let spec = SystemSpec::load(&args.spec)?;
    let verdict = check(&spec)?;
    match args.format {
        OutputFormat::Text => print!("{}", render_verdict(&verdict)),
        OutputFormat::Csv => {
            let mut csv = String::from("subset,workload,idle,idle_stderr,load,slack,status\n");
            for record in &verdict.slack_table {
                let status = if record.violated {
                    "violated"
                } else if record.uncertain {
                    "uncertain"
                } else {
                    "ok"
                };
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{status}",
                    subset_label(&record.subset),
                    record.workload,
                    record.idle.value,
                    record.idle.std_error,
                    record.load,
                    record.slack
                )
                .expect("string write");
            }
            print!("{csv}");
        }
    }
    // An uncertain boundary outranks the point verdict: the caller must
    // not rely on either answer.
    Ok(if verdict.boundary_uncertain {
        EXIT_UNCERTAIN
    } else if verdict.feasible {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    })
}

// ── simulate ──────────────────────────────────────────────────────────

struct SimRow {
    task: TaskId,
    arrivals: u64,
    completions: u64,
    service_time: f64,
    throughput: f64,
    throughput_stderr: f64,
    required_q: f64,
}

impl SimRow {
    fn met(&self) -> bool {
        self.throughput >= self.required_q - MET_TOLERANCE_SIGMA * self.throughput_stderr
    }
}

fn simulate_csv(rows: &[SimRow]) -> String {
    let mut csv = String::from(
        "task_id,arrivals,completions,service_time,throughput,throughput_stderr,required_q,met\n",
    );
    for row in rows {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            row.task,
            row.arrivals,
            row.completions,
            row.service_time,
            row.throughput,
            row.throughput_stderr,
            row.required_q,
            row.met() as u8
        )
        .expect("string write");
    }
    csv
}

#[derive(Serialize)]
struct IdleSummary {
    total: f64,
    mean_per_frame: f64,
    std_error: f64,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    seed: u64,
    config_digest: &'a str,
    policy: &'a str,
    frames: u64,
    replications: u64,
    idle: IdleSummary,
    wall_clock_seconds: f64,
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn single_run_rows(spec: &SystemSpec, metrics: &RunMetrics) -> Vec<SimRow> {
    metrics
        .tasks
        .iter()
        .map(|t| SimRow {
            task: t.task,
            arrivals: t.arrivals,
            completions: t.completions,
            service_time: t.service,
            throughput: t.throughput,
            throughput_stderr: t.throughput_std_error,
            required_q: spec.task(t.task).expect("metrics task in spec").requirement,
        })
        .collect()
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32, CliError> {
    let spec = SystemSpec::load(&args.spec)?;
    let policy_args = parse_policy_args(&args.policy_args)?;
    let started = Instant::now();

    let (rows, idle) = if args.replications == 1 {
        let mut policy = make_policy(&args.policy, &spec, &policy_args)?;
        let metrics = run_simulation(&spec, policy.as_mut(), args.frames, args.seed)?;
        let idle = IdleSummary {
            total: metrics.total_idle,
            mean_per_frame: metrics.idle_mean,
            std_error: metrics.idle_std_error,
        };
        (single_run_rows(&spec, &metrics), idle)
    } else {
        let (runs, aggregate) = replicate(
            &spec,
            |s| make_policy(&args.policy, s, &policy_args),
            args.frames,
            args.seed,
            args.replications,
        )?;
        let rows = aggregate
            .tasks
            .iter()
            .map(|agg| SimRow {
                task: agg.task,
                arrivals: runs
                    .iter()
                    .map(|r| r.task(agg.task).expect("same spec").arrivals)
                    .sum(),
                completions: runs
                    .iter()
                    .map(|r| r.task(agg.task).expect("same spec").completions)
                    .sum(),
                service_time: runs
                    .iter()
                    .map(|r| r.task(agg.task).expect("same spec").service)
                    .sum(),
                throughput: agg.throughput,
                throughput_stderr: agg.throughput_std_error,
                required_q: spec.task(agg.task).expect("metrics task in spec").requirement,
            })
            .collect();
        let idle = IdleSummary {
            total: runs.iter().map(|r| r.total_idle).sum(),
            mean_per_frame: aggregate.idle_mean,
            std_error: aggregate.idle_std_error,
        };
        (rows, idle)
    };

    let csv = simulate_csv(&rows);
    write_report(args.out.as_deref(), &csv)?;
    if let Some(out) = &args.out {
        let digest = config_digest(&spec, &args.policy, args.frames, args.seed);
        let sidecar = Sidecar {
            seed: args.seed,
            config_digest: &digest,
            policy: &args.policy,
            frames: args.frames,
            replications: args.replications,
            idle,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        };
        let path = sidecar_path(out);
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        std::fs::write(&path, json + "\n")
            .map_err(|source| CliError::Write { path, source })?;
    }
    Ok(EXIT_OK)
}

// ── reduce ────────────────────────────────────────────────────────────

fn cmd_reduce(args: &ReduceArgs) -> Result<i32, CliError> {
    let spec = SystemSpec::load(&args.spec)?;
    let reduced = reduce(&spec)?;
    let mut json = reduced.to_annotated_json();
    if !json.ends_with('\n') {
        json.push('\n');
    }
    write_report(args.out.as_deref(), &json)?;
    Ok(EXIT_OK)
}

// ── idle ──────────────────────────────────────────────────────────────

fn cmd_idle(args: &IdleArgs) -> Result<i32, CliError> {
    let spec = SystemSpec::load(&args.spec)?;
    let ids = spec.task_ids();
    if ids.len() > MAX_ENUMERATED_TASKS {
        return Err(CliError::Usage(format!(
            "{} tasks exceed the subset enumeration limit of {MAX_ENUMERATED_TASKS}",
            ids.len()
        )));
    }
    let mut csv = String::from("subset,analytic_value,mc_value,mc_stderr,samples\n");
    for (index, subset) in enumerate_subsets(&ids).iter().enumerate() {
        // Distinct seed streams for the fallback path and the reference
        // Monte Carlo column.
        let analytic = idle_time(subset, &spec, args.samples, split(args.seed, 2 * index as u64))?;
        let mc = idle_time_monte_carlo(
            subset,
            &spec,
            args.samples,
            split(args.seed, 2 * index as u64 + 1),
        )?;
        writeln!(
            csv,
            "{},{},{},{},{}",
            subset_label(subset),
            analytic.value,
            mc.value,
            mc.std_error,
            args.samples
        )
        .expect("string write");
    }
    write_report(args.out.as_deref(), &csv)?;
    Ok(EXIT_OK)
}

// ── sweep ─────────────────────────────────────────────────────────────

struct SweepRow {
    value: f64,
    feasible: bool,
    min_slack: f64,
    /// Per-task (throughput, met); present when simulating.
    sim: Option<Vec<(f64, bool)>>,
}

fn grid_values(from: f64, to: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|i| {
            // Endpoints exact; interior points interpolated.
            if i == 0 {
                from
            } else if i == steps - 1 {
                to
            } else {
                from + (to - from) * i as f64 / (steps - 1) as f64
            }
        })
        .collect()
}

fn apply_param(
    base: &SystemSpec,
    param: SweepParam,
    task: Option<TaskId>,
    value: f64,
) -> Result<SystemSpec, CliError> {
    let mut spec = base.clone();
    match param {
        SweepParam::FrameLength => spec.frame_length = value,
        SweepParam::Requirement | SweepParam::Rate => {
            let id = task.expect("checked by cmd_sweep");
            let slot = spec
                .tasks
                .iter_mut()
                .find(|t| t.id == id)
                .expect("checked by cmd_sweep");
            match param {
                SweepParam::Requirement => slot.requirement = value,
                SweepParam::Rate => slot.rate = value,
                SweepParam::FrameLength => unreachable!(),
            }
        }
    }
    Ok(validate_spec(spec)?)
}

fn sweep_point(
    spec: &SystemSpec,
    args: &SweepArgs,
    policy_args: &BTreeMap<String, String>,
    task: Option<TaskId>,
    index: usize,
    value: f64,
) -> Result<SweepRow, CliError> {
    let point = apply_param(spec, args.param, task, value)?;
    let verdict = check(&point)?;
    let sim = if args.simulate {
        let mut policy = make_policy(&args.policy, &point, policy_args)?;
        let metrics = run_simulation(
            &point,
            policy.as_mut(),
            args.frames,
            split(args.seed, index as u64),
        )?;
        Some(
            point
                .task_ids()
                .iter()
                .map(|&id| {
                    let t = metrics.task(id).expect("metrics cover spec tasks");
                    let met = t.throughput
                        >= point.task(id).expect("spec task").requirement
                            - MET_TOLERANCE_SIGMA * t.throughput_std_error;
                    (t.throughput, met)
                })
                .collect(),
        )
    } else {
        None
    };
    Ok(SweepRow {
        value,
        feasible: verdict.feasible && !verdict.boundary_uncertain,
        min_slack: verdict.margin,
        sim,
    })
}

fn sweep_csv(ids: &[TaskId], rows: &[SweepRow], partial: bool) -> String {
    let mut csv = String::from("param_value,feasible,min_slack");
    for id in ids {
        write!(csv, ",q_hat_{id}").expect("string write");
    }
    csv.push_str(",met\n");
    for row in rows {
        write!(csv, "{},{},{}", row.value, row.feasible as u8, row.min_slack)
            .expect("string write");
        match &row.sim {
            Some(per_task) => {
                for (q_hat, _) in per_task {
                    write!(csv, ",{q_hat}").expect("string write");
                }
                let all_met = per_task.iter().all(|&(_, met)| met);
                writeln!(csv, ",{}", all_met as u8).expect("string write");
            }
            None => {
                for _ in ids {
                    csv.push(',');
                }
                csv.push_str(",\n");
            }
        }
    }
    if partial {
        csv.push_str("partial=true\n");
    }
    csv
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32, CliError> {
    let spec = SystemSpec::load(&args.spec)?;
    if args.steps < 2 {
        return Err(CliError::Usage(format!(
            "--steps must be at least 2, got {}",
            args.steps
        )));
    }
    if !(args.from.is_finite() && args.to.is_finite()) {
        return Err(CliError::Usage("sweep range must be finite".to_string()));
    }
    let task = match args.param {
        SweepParam::FrameLength => {
            if args.task.is_some() {
                return Err(CliError::Usage(
                    "--task does not apply to a frame_length sweep".to_string(),
                ));
            }
            None
        }
        SweepParam::Requirement | SweepParam::Rate => {
            let id = TaskId(args.task.ok_or_else(|| {
                CliError::Usage("--task is required for requirement/rate sweeps".to_string())
            })?);
            if spec.task(id).is_none() {
                return Err(CliError::Usage(format!("no task {id} in the spec")));
            }
            Some(id)
        }
    };
    let policy_args = parse_policy_args(&args.policy_args)?;
    let grid = grid_values(args.from, args.to, args.steps);

    let compute = |(index, &value): (usize, &f64)| {
        sweep_point(&spec, args, &policy_args, task, index, value)
    };
    let results: Vec<Result<SweepRow, CliError>> = if args.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build()
            .map_err(|e| CliError::Usage(format!("--jobs {}: {e}", args.jobs)))?;
        use rayon::prelude::*;
        pool.install(|| grid.par_iter().enumerate().map(compute).collect())
    } else {
        grid.iter().enumerate().map(compute).collect()
    };

    let mut rows = Vec::with_capacity(results.len());
    let mut first_error = None;
    for result in results {
        match result {
            Ok(row) => rows.push(row),
            Err(err) => {
                if first_error.is_none() {
                    first_error = Some(err);
                }
            }
        }
    }
    let csv = sweep_csv(&spec.task_ids(), &rows, first_error.is_some());
    write_report(args.out.as_deref(), &csv)?;
    match first_error {
        Some(err) => {
            eprintln!("error: sweep incomplete: {err}");
            Ok(EXIT_RUNTIME)
        }
        None => Ok(EXIT_OK),
    }
}
