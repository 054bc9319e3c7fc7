//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 usage error, 2 input/output or parse error,
//! 3 no schedule (infeasible, or none found within the limits),
//! 4 validation found violations.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::instance::Instance;
use crate::io::{
    generate_instance, parse_instance, read_file, write_atomic, GeneratorParams, Preset, ScheduleDocument,
    Strictness,
};
use crate::oracle::oracle_solve;
use crate::preprocess::{assign_machines, build_setup_matrices};
use crate::report::{
    compare, compute_metrics, format_2dp, format_dp, metrics_from_csv, metrics_to_csv, render_gantt, render_tables,
    MetricsReport,
};
use crate::solver::{solve_with_log, Objective, SolverConfig, SolverStatus};
use crate::validate::validate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NO_SCHEDULE: i32 = 3;
pub const EXIT_VIOLATIONS: i32 = 4;

/// Environment variable read when `--time-limit` is not given.
pub const TIME_LIMIT_ENV: &str = "RJSP_TIME_LIMIT";

#[derive(Parser, Debug)]
#[command(name = "rjsp", version, about = "Rich job-shop scheduling: solve, validate, generate, compare")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve an instance document.
    Solve(SolveArgs),
    /// Check a schedule document against an instance.
    Validate(ValidateArgs),
    /// Write a synthetic instance document.
    Generate(GenerateArgs),
    /// Solve a small instance by exhaustive enumeration.
    Oracle(OracleArgs),
    /// Improvement of proposed over reference metrics.
    Compare(CompareArgs),
    /// Render metrics files as quality and solver tables.
    Tables(TablesArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ObjectiveArg {
    Makespan,
    TotalTard,
    AvgTard,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Makespan => Objective::Makespan,
            ObjectiveArg::TotalTard => Objective::MakespanPlusTotalTardiness,
            ObjectiveArg::AvgTard => Objective::MakespanPlusAvgTardiness,
        }
    }
}

#[derive(Args, Debug)]
struct InstanceArg {
    /// Instance document (JSON).
    instance: PathBuf,
    /// Warn about unknown fields instead of rejecting them.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    input: InstanceArg,
    #[arg(long, value_enum, default_value = "makespan")]
    objective: ObjectiveArg,
    /// Wall-clock limit in seconds.
    #[arg(long, env = TIME_LIMIT_ENV, default_value_t = 7200.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Stop after this many search nodes.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Seconds between progress lines.
    #[arg(long, default_value_t = 5.0)]
    log_interval: f64,
    /// Progress log file; `-` for standard error.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Validate the schedule and fail with exit code 4 on violations.
    #[arg(long)]
    validate: bool,
    #[arg(long)]
    schedule_out: Option<PathBuf>,
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    #[arg(long)]
    gantt_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    input: InstanceArg,
    /// Schedule document (JSON).
    schedule: PathBuf,
    /// Write the violation report as JSON.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Named size preset; explicit flags override its values.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    machines: Option<usize>,
    /// Tasks per job as `min,max`.
    #[arg(long, value_parser = parse_range)]
    tasks_per_job: Option<(i64, i64)>,
    /// Durations in model units as `min,max`.
    #[arg(long, value_parser = parse_range)]
    duration: Option<(i64, i64)>,
    /// Eligible machines per task as `min,max`.
    #[arg(long, value_parser = parse_range)]
    eligibility: Option<(i64, i64)>,
    /// Cleaning times in model units as `min,max`.
    #[arg(long, value_parser = parse_range)]
    cleaning: Option<(i64, i64)>,
    #[arg(long)]
    calendar_density: Option<f64>,
    #[arg(long)]
    due_tightness: Option<f64>,
    #[arg(long)]
    decimal_digits: Option<u32>,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    input: InstanceArg,
    #[arg(long, value_enum, default_value = "makespan")]
    objective: ObjectiveArg,
    #[arg(long)]
    schedule_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Reference metrics CSV (first row is used).
    reference: PathBuf,
    /// Proposed metrics CSV (first row is used).
    proposed: PathBuf,
    /// Write the comparison table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TablesArgs {
    /// Metrics CSV files; every row becomes a table row.
    #[arg(required = true)]
    metrics: Vec<PathBuf>,
    /// Write the quality table as CSV.
    #[arg(long)]
    quality_out: Option<PathBuf>,
    /// Write the solver table as CSV.
    #[arg(long)]
    solver_out: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(',').ok_or("expected min,max")?;
    let a = a.trim().parse().map_err(|_| format!("bad number {a:?}"))?;
    let b = b.trim().parse().map_err(|_| format!("bad number {b:?}"))?;
    Ok((a, b))
}

/// A failed command: message and exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::Config(_) => EXIT_USAGE,
            _ => EXIT_IO,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

type Outcome = Result<i32, Failure>;

/// Runs the command line `argv` (program name first).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a, out, err),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Generate(a) => cmd_generate(a, out),
        Command::Oracle(a) => cmd_oracle(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Tables(a) => cmd_tables(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load(input: &InstanceArg, err: &mut dyn Write) -> Result<Instance, Failure> {
    let text = read_file(&input.instance)?;
    let mode = if input.lenient {
        Strictness::Lenient
    } else {
        Strictness::Strict
    };
    let parsed = parse_instance(&text, mode).map_err(|e| fail(EXIT_IO, format!("{}: {e}", input.instance.display())))?;
    for w in &parsed.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(parsed.instance)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    write_atomic(path, contents.as_bytes()).map_err(Failure::from)
}

fn cmd_solve(a: SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    if !(a.time_limit.is_finite() && a.time_limit > 0.0) {
        return Err(fail(EXIT_USAGE, format!("time limit must be positive, got {}", a.time_limit)));
    }
    if !(a.log_interval.is_finite() && a.log_interval >= 0.0) {
        return Err(fail(EXIT_USAGE, "log interval must be nonnegative"));
    }
    let instance = load(&a.input, err)?;
    let assignment = assign_machines(&instance);
    let setups = build_setup_matrices(&instance, &assignment);
    let config = SolverConfig {
        objective: a.objective.into(),
        time_limit: Duration::from_secs_f64(a.time_limit),
        seed: a.seed,
        workers: a.workers,
        log_interval: Duration::from_secs_f64(a.log_interval),
        node_limit: a.node_limit,
    };

    let mut log_buf: Vec<u8> = Vec::new();
    let outcome = match a.log.as_deref() {
        Some(p) if p == Path::new("-") => solve_with_log(&instance, &assignment, &setups, &config, Some(err))?,
        Some(_) => solve_with_log(&instance, &assignment, &setups, &config, Some(&mut log_buf))?,
        None => solve_with_log(&instance, &assignment, &setups, &config, None)?,
    };
    if let Some(p) = a.log.as_deref().filter(|p| *p != Path::new("-")) {
        write_atomic(p, &log_buf)?;
    }

    let _ = writeln!(out, "status: {}", outcome.status);
    let Some(schedule) = outcome.schedule.as_ref() else {
        if let Some(cert) = &outcome.certificate {
            let _ = writeln!(out, "reason: {}", cert.reason);
            let labels: Vec<String> = cert.tasks.iter().map(|&t| instance.task_label(t)).collect();
            if !labels.is_empty() {
                let _ = writeln!(out, "tasks: {}", labels.join(", "));
            }
            for (kind, n) in &cert.conflicts {
                let _ = writeln!(out, "conflicts[{kind}]: {n}");
            }
        }
        return Ok(EXIT_NO_SCHEDULE);
    };
    let value = outcome.objective.as_ref().expect("schedule has a value");
    let metrics = compute_metrics(schedule, &instance, &assignment, Some(&outcome));
    let _ = writeln!(out, "objective: {} = {}", value.objective.name(), value.scaled);
    let _ = writeln!(out, "best bound: {}", outcome.best_bound);
    let _ = writeln!(out, "gap: {}%", format_2dp(metrics.gap_percent));
    let _ = writeln!(out, "makespan: {} d", format_2dp(metrics.makespan_days));
    let _ = writeln!(
        out,
        "tardiness: total {} d, avg {} d, max {} d, late jobs {}",
        format_2dp(metrics.total_tardiness_days),
        format_2dp(metrics.avg_tardiness_days),
        format_2dp(metrics.max_tardiness_days),
        metrics.late_jobs
    );

    let mut code = EXIT_OK;
    if a.validate {
        let report = validate(schedule, &instance, &assignment)?;
        let _ = write!(out, "{report}");
        if !report.is_empty() {
            code = EXIT_VIOLATIONS;
        }
    }
    if let Some(p) = &a.schedule_out {
        let mut doc = ScheduleDocument::from_schedule(schedule, &instance, &assignment);
        doc.objective = Some(value.objective.name().to_string());
        doc.status = Some(outcome.status.to_string());
        write(p, &doc.to_json())?;
    }
    if let Some(p) = &a.metrics_out {
        write(p, &metrics_to_csv(&[(a.input.instance.display().to_string(), metrics)]))?;
    }
    if let Some(p) = &a.gantt_out {
        write(p, &render_gantt(schedule, &instance))?;
    }
    Ok(code)
}

fn cmd_validate(a: ValidateArgs, out: &mut dyn Write) -> Outcome {
    let mut sink = std::io::sink();
    let instance = load(&a.input, &mut sink)?;
    let text = read_file(&a.schedule)?;
    let doc = ScheduleDocument::from_json(&text).map_err(|e| fail(EXIT_IO, format!("{}: {e}", a.schedule.display())))?;
    let (schedule, assignment) = doc.to_schedule(&instance)?;
    let report = validate(&schedule, &instance, &assignment)?;
    let _ = write!(out, "{report}");
    if let Some(p) = &a.report_out {
        write(p, &report.to_json())?;
    }
    Ok(if report.is_empty() { EXIT_OK } else { EXIT_VIOLATIONS })
}

fn cmd_generate(a: GenerateArgs, out: &mut dyn Write) -> Outcome {
    let mut params = match a.preset.as_deref() {
        Some(name) => Preset::from_name(name)
            .ok_or_else(|| fail(EXIT_USAGE, format!("unknown preset {name:?} (small, medium, large)")))?
            .params(a.seed),
        None => GeneratorParams {
            seed: a.seed,
            ..GeneratorParams::default()
        },
    };
    if let Some(v) = a.jobs {
        params.job_count = v;
    }
    if let Some(v) = a.machines {
        params.machine_count = v;
    }
    if let Some(v) = a.tasks_per_job {
        params.tasks_per_job = v;
    }
    if let Some(v) = a.duration {
        params.duration = v;
    }
    if let Some(v) = a.eligibility {
        params.eligibility = v;
    }
    if let Some(v) = a.cleaning {
        params.cleaning = v;
    }
    if let Some(v) = a.calendar_density {
        params.calendar_density = v;
    }
    if let Some(v) = a.due_tightness {
        params.due_tightness = v;
    }
    if let Some(v) = a.decimal_digits {
        params.decimal_digits = v;
    }
    let doc = generate_instance(&params).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    let text = doc.to_json();
    match &a.out {
        Some(p) => write(p, &text)?,
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    Ok(EXIT_OK)
}

fn cmd_oracle(a: OracleArgs, out: &mut dyn Write) -> Outcome {
    let mut sink = std::io::sink();
    let instance = load(&a.input, &mut sink)?;
    let assignment = assign_machines(&instance);
    let solution = oracle_solve(&instance, &assignment, a.objective.into())?;
    let Some(sol) = solution else {
        let _ = writeln!(out, "status: infeasible");
        return Ok(EXIT_NO_SCHEDULE);
    };
    let _ = writeln!(out, "status: optimal");
    let _ = writeln!(out, "objective: {} = {}", sol.value.objective.name(), sol.value.scaled);
    let _ = writeln!(out, "makespan: {}", sol.value.makespan);
    let _ = writeln!(out, "total tardiness: {}", sol.value.total_tardiness);
    if let Some(p) = &a.schedule_out {
        let mut doc = ScheduleDocument::from_schedule(&sol.schedule, &instance, &assignment);
        doc.objective = Some(sol.value.objective.name().to_string());
        doc.status = Some(SolverStatus::Optimal.to_string());
        write(p, &doc.to_json())?;
    }
    Ok(EXIT_OK)
}

fn first_row(path: &Path) -> Result<(String, MetricsReport), Failure> {
    let text = read_file(path)?;
    metrics_from_csv(&text)
        .map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))?
        .into_iter()
        .next()
        .ok_or_else(|| fail(EXIT_IO, format!("{}: no metrics rows", path.display())))
}

fn cmd_compare(a: CompareArgs, out: &mut dyn Write) -> Outcome {
    let (_, reference) = first_row(&a.reference)?;
    let (_, proposed) = first_row(&a.proposed)?;
    let c = compare(&reference, &proposed);
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["metric", "reference", "proposed", "improvement_percent"]);
    let _ = writeln!(out, "{:<22}  {:>10}  {:>10}  {:>15}", "Metric", "Reference", "Proposed", "Improvement [%]");
    for row in &c.rows {
        let imp = row.improvement_percent.map_or_else(|| "n/a".to_string(), |v| format_dp(v, 1));
        let (r, p) = (format_2dp(row.reference), format_2dp(row.proposed));
        let _ = writeln!(out, "{:<22}  {r:>10}  {p:>10}  {imp:>15}", row.metric);
        let _ = w.write_record([row.metric, &r, &p, &imp]);
    }
    if let Some(path) = &a.out {
        let bytes = w.into_inner().map_err(|e| fail(EXIT_IO, e.to_string()))?;
        write_atomic(path, &bytes)?;
    }
    Ok(EXIT_OK)
}

fn cmd_tables(a: TablesArgs, out: &mut dyn Write) -> Outcome {
    let mut rows = Vec::new();
    for p in &a.metrics {
        let text = read_file(p)?;
        rows.extend(metrics_from_csv(&text).map_err(|e| fail(EXIT_IO, format!("{}: {e}", p.display())))?);
    }
    let tables = render_tables(&rows, None);
    let _ = write!(out, "{}\n{}", tables.quality.text, tables.solver.text);
    if let Some(p) = &a.quality_out {
        write(p, &tables.quality.csv)?;
    }
    if let Some(p) = &a.solver_out {
        write(p, &tables.solver.csv)?;
    }
    Ok(EXIT_OK)
}
