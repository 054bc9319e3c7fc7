use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, JobIdx, MachineIdx};
use crate::preprocess::AssignmentResult;
use crate::solver::{Schedule, SolverOutcome};

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricsReport {
    pub objective: String,
    pub status: String,
    pub makespan_days: Rational,
    pub total_tardiness_days: Rational,
    pub avg_tardiness_days: Rational,
    pub max_tardiness_days: Rational,
    pub late_jobs: u64,
    /// Whole seconds, rounded down.
    pub runtime_seconds: Rational,
    pub objective_value: i64,
    pub best_bound: i64,
    pub gap_percent: Rational,
    pub seq_literals: u64,
    pub tasks_per_machine_min: u64,
    pub tasks_per_machine_mean: Rational,
    pub tasks_per_machine_max: u64,
}

/// Rounds half away from zero to two decimals.
pub fn format_2dp(value: Rational) -> String {
    format_dp(value, 2)
}

pub fn format_dp(value: Rational, digits: u32) -> String {
    let pow = 10i64.pow(digits);
    let scaled = value * pow;
    let half = Ratio::new(1, 2);
    let rounded = if scaled.is_negative() {
        -((-scaled) + half).floor()
    } else {
        (scaled + half).floor()
    }
    .to_integer();
    let sign = if rounded < 0 { "-" } else { "" };
    let abs = rounded.unsigned_abs();
    if digits == 0 {
        return format!("{sign}{abs}");
    }
    let pow = pow as u64;
    format!("{sign}{}.{:0width$}", abs / pow, abs % pow, width = digits as usize)
}

/// `100 * (objective - bound) / objective`, zero for a zero objective.
pub fn gap_percent(objective: i64, bound: i64) -> Rational {
    if objective == 0 {
        Rational::zero()
    } else {
        Ratio::new(100 * (objective - bound), objective)
    }
}

/// Days from model units.
pub fn to_days(units: i64, instance: &Instance) -> Rational {
    Ratio::new(units, instance.time_scale().units_per_day())
}

/// Metrics of `schedule`. Without a solver outcome (an oracle or
/// hand-made schedule) the objective is the makespan and the bound equals it.
pub fn compute_metrics(
    schedule: &Schedule,
    instance: &Instance,
    assignment: &AssignmentResult,
    outcome: Option<&SolverOutcome>,
) -> MetricsReport {
    let jobs = instance.jobs().len().max(1) as i64;
    let tardiness: Vec<i64> = (0..instance.jobs().len())
        .map(|j| schedule.tardiness(instance, JobIdx(j)))
        .collect();
    let total: i64 = tardiness.iter().sum();
    let loads: Vec<u64> = (0..instance.machines().len())
        .map(|m| assignment.tasks_on(MachineIdx(m)).len() as u64)
        .collect();
    let makespan = schedule.makespan();
    let (objective, status, objective_value, best_bound, runtime) = match outcome {
        Some(o) => (
            o.objective.as_ref().map_or("-", |v| v.objective.name()).to_string(),
            o.status.to_string(),
            o.objective.as_ref().map_or(makespan, |v| v.scaled),
            o.best_bound,
            o.stats.runtime.as_secs() as i64,
        ),
        None => ("makespan".to_string(), "-".to_string(), makespan, makespan, 0),
    };
    MetricsReport {
        objective,
        status,
        makespan_days: to_days(makespan, instance),
        total_tardiness_days: to_days(total, instance),
        avg_tardiness_days: to_days(total, instance) / jobs,
        max_tardiness_days: to_days(tardiness.iter().copied().max().unwrap_or(0), instance),
        late_jobs: tardiness.iter().filter(|&&t| t > 0).count() as u64,
        runtime_seconds: Ratio::from_integer(runtime),
        objective_value,
        best_bound,
        gap_percent: gap_percent(objective_value, best_bound),
        seq_literals: loads.iter().map(|&n| n * n.saturating_sub(1)).sum(),
        tasks_per_machine_min: loads.iter().copied().min().unwrap_or(0),
        tasks_per_machine_mean: Ratio::new(loads.iter().sum::<u64>() as i64, loads.len().max(1) as i64),
        tasks_per_machine_max: loads.iter().copied().max().unwrap_or(0),
    }
}

/// Relative improvement of each quality metric, in percent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonRow {
    pub metric: &'static str,
    pub reference: Rational,
    pub proposed: Rational,
    /// `None` when the reference value is zero.
    pub improvement_percent: Option<Rational>,
}

impl MetricsReport {
    /// The quality columns in table order.
    pub fn quality(&self) -> [(&'static str, Rational); 6] {
        [
            ("makespan_days", self.makespan_days),
            ("total_tardiness_days", self.total_tardiness_days),
            ("avg_tardiness_days", self.avg_tardiness_days),
            ("max_tardiness_days", self.max_tardiness_days),
            ("late_jobs", Ratio::from_integer(self.late_jobs as i64)),
            ("runtime_seconds", self.runtime_seconds),
        ]
    }
}

pub fn compare(reference: &MetricsReport, proposed: &MetricsReport) -> Comparison {
    let rows = reference
        .quality()
        .into_iter()
        .zip(proposed.quality())
        .map(|((metric, r), (_, p))| ComparisonRow {
            metric,
            reference: r,
            proposed: p,
            improvement_percent: (!r.is_zero()).then(|| (r - p) * 100 / r),
        })
        .collect();
    Comparison { rows }
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    label: String,
    objective: String,
    status: String,
    makespan_days: String,
    total_tardiness_days: String,
    avg_tardiness_days: String,
    max_tardiness_days: String,
    late_jobs: u64,
    runtime_seconds: String,
    objective_value: i64,
    best_bound: i64,
    gap_percent: String,
    seq_literals: u64,
    tasks_per_machine_min: u64,
    tasks_per_machine_mean: String,
    tasks_per_machine_max: u64,
}

/// CSV with one row per labelled report; rationals are written exactly as
/// `n` or `n/d`.
pub fn metrics_to_csv(rows: &[(String, MetricsReport)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (label, m) in rows {
        w.serialize(CsvRow {
            label: label.clone(),
            objective: m.objective.clone(),
            status: m.status.clone(),
            makespan_days: m.makespan_days.to_string(),
            total_tardiness_days: m.total_tardiness_days.to_string(),
            avg_tardiness_days: m.avg_tardiness_days.to_string(),
            max_tardiness_days: m.max_tardiness_days.to_string(),
            late_jobs: m.late_jobs,
            runtime_seconds: m.runtime_seconds.to_string(),
            objective_value: m.objective_value,
            best_bound: m.best_bound,
            gap_percent: m.gap_percent.to_string(),
            seq_literals: m.seq_literals,
            tasks_per_machine_min: m.tasks_per_machine_min,
            tasks_per_machine_mean: m.tasks_per_machine_mean.to_string(),
            tasks_per_machine_max: m.tasks_per_machine_max,
        })
        .expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8")
}

pub fn metrics_from_csv(text: &str) -> Result<Vec<(String, MetricsReport)>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<CsvRow>().enumerate() {
        let row = row.map_err(|e| Error::Document(format!("metrics row {}: {e}", i + 1)))?;
        let q = |field: &str, s: &str| {
            Rational::from_str(s).map_err(|_| Error::Document(format!("metrics row {}: bad {field} {s:?}", i + 1)))
        };
        out.push((
            row.label.clone(),
            MetricsReport {
                makespan_days: q("makespan_days", &row.makespan_days)?,
                total_tardiness_days: q("total_tardiness_days", &row.total_tardiness_days)?,
                avg_tardiness_days: q("avg_tardiness_days", &row.avg_tardiness_days)?,
                max_tardiness_days: q("max_tardiness_days", &row.max_tardiness_days)?,
                runtime_seconds: q("runtime_seconds", &row.runtime_seconds)?,
                gap_percent: q("gap_percent", &row.gap_percent)?,
                tasks_per_machine_mean: q("tasks_per_machine_mean", &row.tasks_per_machine_mean)?,
                objective: row.objective,
                status: row.status,
                late_jobs: row.late_jobs,
                objective_value: row.objective_value,
                best_bound: row.best_bound,
                seq_literals: row.seq_literals,
                tasks_per_machine_min: row.tasks_per_machine_min,
                tasks_per_machine_max: row.tasks_per_machine_max,
            },
        ));
    }
    Ok(out)
}
