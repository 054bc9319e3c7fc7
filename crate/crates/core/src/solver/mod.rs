//! Exact anytime solver.
//!
//! [`build_model`] turns an instance with fixed machine assignment into a
//! constraint model (job chains, machine circuits with cleaning, calendars,
//! makespan and tardiness). [`solve`] runs depth-first branch-and-bound on
//! the circuit arcs from a greedy warm start and reports the incumbent, an
//! admissible bound and the relative gap.

mod greedy;
mod model;
mod propagate;
mod schedule;
mod search;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use num_rational::Ratio;

pub use model::{build_model, ArcEnd, ArcState, Model, ModelError, SequenceArc};
pub use propagate::{Conflict, ConflictKind, Propagation, SearchState};
pub use schedule::{evaluate_objective, Objective, ObjectiveValue, ReportedAggregates, Schedule};

use crate::error::{Error, Result};
use crate::instance::{Instance, TaskId};
use crate::preprocess::{AssignmentResult, SetupMatrix};
use search::{Limits, Shared, Worker};

/// Default wall-clock limit in seconds.
pub const DEFAULT_TIME_LIMIT: f64 = 7200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub objective: Objective,
    pub time_limit: Duration,
    pub seed: u64,
    pub workers: usize,
    pub log_interval: Duration,
    /// Optional cap on explored nodes; unlike the time limit it keeps
    /// interrupted single-worker runs reproducible.
    pub node_limit: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            objective: Objective::Makespan,
            time_limit: Duration::from_secs_f64(DEFAULT_TIME_LIMIT),
            seed: 0,
            workers: 1,
            log_interval: Duration::from_secs(5),
            node_limit: None,
        }
    }
}

impl SolverConfig {
    pub fn new(objective: Objective) -> Self {
        Self {
            objective,
            ..Self::default()
        }
    }

    pub fn with_time_limit_secs(mut self, secs: f64) -> Self {
        self.time_limit = Duration::from_secs_f64(secs.max(0.0));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unknown,
}

impl fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::Feasible => "feasible",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SolverStats {
    pub nodes: u64,
    pub propagations: u64,
    pub conflicts: BTreeMap<ConflictKind, u64>,
    /// Task-to-task arc variables.
    pub arc_variables: usize,
    pub sentinel_arcs: usize,
    pub root_bound: i64,
    pub runtime: Duration,
}

/// Why no schedule exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfeasibilityCertificate {
    pub reason: String,
    pub tasks: Vec<TaskId>,
    /// Constraint classes that closed the search tree, with counts.
    pub conflicts: BTreeMap<ConflictKind, u64>,
}

/// One progress line: `elapsed=<s> incumbent=<v|-> bound=<v> gap=<f|-> nodes=<n>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgressRecord {
    pub elapsed: Duration,
    pub incumbent: Option<i64>,
    pub bound: i64,
    pub nodes: u64,
}

impl ProgressRecord {
    pub fn gap(&self) -> Option<Ratio<i64>> {
        self.incumbent.map(|inc| relative_gap(inc, self.bound))
    }
}

impl fmt::Display for ProgressRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let incumbent = self
            .incumbent
            .map_or_else(|| "-".to_string(), |v| v.to_string());
        let gap = self.gap().map_or_else(
            || "-".to_string(),
            |g| format!("{:.6}", *g.numer() as f64 / *g.denom() as f64),
        );
        write!(
            f,
            "elapsed={:.3} incumbent={} bound={} gap={} nodes={}",
            self.elapsed.as_secs_f64(),
            incumbent,
            self.bound,
            gap,
            self.nodes
        )
    }
}

impl FromStr for ProgressRecord {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::Document(format!("malformed progress line {line:?}"));
        let fields: Vec<(&str, &str)> = line
            .split_whitespace()
            .map(|kv| kv.split_once('=').ok_or_else(bad))
            .collect::<Result<_>>()?;
        let names: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
        if names != ["elapsed", "incumbent", "bound", "gap", "nodes"] {
            return Err(bad());
        }
        let elapsed: f64 = fields[0].1.parse().map_err(|_| bad())?;
        let incumbent = match fields[1].1 {
            "-" => None,
            v => Some(v.parse().map_err(|_| bad())?),
        };
        Ok(Self {
            elapsed: Duration::from_secs_f64(elapsed.max(0.0)),
            incumbent,
            bound: fields[2].1.parse().map_err(|_| bad())?,
            nodes: fields[4].1.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutcome {
    pub status: SolverStatus,
    pub schedule: Option<Schedule>,
    pub objective: Option<ObjectiveValue>,
    /// Admissible lower bound on the integer objective.
    pub best_bound: i64,
    /// `(objective - bound) / objective`; `None` without a schedule.
    pub gap: Option<Ratio<i64>>,
    pub stats: SolverStats,
    pub certificate: Option<InfeasibilityCertificate>,
    pub progress: Vec<ProgressRecord>,
}

/// `(objective - bound) / objective`, zero when the objective is zero.
pub fn relative_gap(objective: i64, bound: i64) -> Ratio<i64> {
    if objective == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new((objective - bound).max(0), objective)
    }
}

/// Greedy warm-start schedule, or `None` if it overruns the horizon or the
/// model cannot be built.
pub fn greedy_schedule(
    instance: &Instance,
    assignment: &AssignmentResult,
    setups: &[SetupMatrix],
) -> Option<Schedule> {
    let model = build_model(instance, assignment, setups, Objective::Makespan).ok()?;
    let (starts, orders) = greedy::greedy_starts(&model)?;
    let mut schedule = Schedule {
        ends: starts
            .iter()
            .zip(&model.duration)
            .map(|(s, d)| s + d)
            .collect(),
        starts,
        machine_orders: orders
            .into_iter()
            .map(|o| o.into_iter().map(TaskId).collect())
            .collect(),
        reported: None,
    };
    schedule.reported = Some(schedule.aggregates(instance));
    Some(schedule)
}

pub fn solve(
    instance: &Instance,
    assignment: &AssignmentResult,
    setups: &[SetupMatrix],
    config: &SolverConfig,
) -> Result<SolverOutcome> {
    solve_with_log(instance, assignment, setups, config, None)
}

/// Like [`solve`], also writing one [`ProgressRecord`] line to `log` every
/// `log_interval` and a final line at the end.
pub fn solve_with_log(
    instance: &Instance,
    assignment: &AssignmentResult,
    setups: &[SetupMatrix],
    config: &SolverConfig,
    mut log: Option<&mut dyn Write>,
) -> Result<SolverOutcome> {
    if config.time_limit.is_zero() {
        return Err(Error::Config("time limit must be positive".into()));
    }
    if config.workers == 0 {
        return Err(Error::Config("at least one worker is required".into()));
    }
    let started = Instant::now();
    let deadline = started + config.time_limit;

    let model = match build_model(instance, assignment, setups, config.objective) {
        Ok(m) => m,
        Err(ModelError::TaskDoesNotFit { task, .. }) => {
            let err = build_model(instance, assignment, setups, config.objective).unwrap_err();
            return Ok(infeasible(
                err.to_string(),
                vec![task],
                BTreeMap::new(),
                SolverStats {
                    runtime: started.elapsed(),
                    ..SolverStats::default()
                },
            ));
        }
    };
    let mut stats = SolverStats {
        arc_variables: model.task_arc_count(),
        sentinel_arcs: model.sentinel_arc_count(),
        ..SolverStats::default()
    };

    let root_state = SearchState::root(&model);
    let root = match model.propagate(&root_state, None) {
        Ok(p) => p,
        Err(conflict) => {
            stats.runtime = started.elapsed();
            let mut conflicts = BTreeMap::new();
            conflicts.insert(conflict.kind, 1);
            return Ok(infeasible(
                format!("root propagation failed ({})", conflict.kind),
                conflict.tasks,
                conflicts,
                stats,
            ));
        }
    };
    stats.root_bound = root.lower_bound;
    let shared = Shared::new(root.lower_bound);

    if let Some(schedule) = greedy_schedule(instance, assignment, setups) {
        let value = evaluate_objective(&schedule, instance, config.objective);
        shared.offer(value, schedule);
    }

    let limits = Limits {
        deadline,
        node_limit: config.node_limit,
    };
    let mut progress = Vec::new();
    let emit = |shared: &Shared, progress: &mut Vec<ProgressRecord>, log: &mut Option<&mut dyn Write>| {
        let record = ProgressRecord {
            elapsed: started.elapsed(),
            incumbent: shared.best(),
            bound: shared.bound.load(Ordering::SeqCst).min(shared.best().unwrap_or(i64::MAX)),
            nodes: shared.nodes.load(Ordering::SeqCst),
        };
        if let Some(w) = log.as_mut() {
            // Progress output is best effort.
            let _ = writeln!(w, "{record}");
        }
        progress.push(record);
    };

    // The root can already be closed by the warm start.
    let root_closed = shared
        .best()
        .is_some_and(|best| model.propagate(&root_state, Some(best)).is_err());
    let finished = AtomicUsize::new(0);
    if root_closed {
        shared.proven.store(true, Ordering::SeqCst);
    } else {
        std::thread::scope(|scope| {
            for w in 0..config.workers {
                let model = &model;
                let shared = &shared;
                let limits = &limits;
                let root = &root;
                let root_state = root_state.clone();
                let finished = &finished;
                scope.spawn(move || {
                    let end = Worker::new(model, shared, limits, w, config.seed).run(root_state, root);
                    finished.fetch_add(1, Ordering::SeqCst);
                    end
                });
            }
            let tick = Duration::from_millis(10);
            let mut next_log = started + config.log_interval;
            while finished.load(Ordering::SeqCst) < config.workers {
                std::thread::sleep(tick);
                if !config.log_interval.is_zero() && Instant::now() >= next_log {
                    emit(&shared, &mut progress, &mut log);
                    next_log += config.log_interval;
                }
            }
        });
    }

    stats.runtime = started.elapsed();
    stats.nodes = shared.nodes.load(Ordering::SeqCst);
    stats.propagations = shared.propagations.load(Ordering::SeqCst);
    stats.conflicts = shared.conflicts.lock().expect("conflict lock").clone();
    let proven = shared.proven.load(Ordering::SeqCst);
    let incumbent = shared.incumbent.lock().expect("incumbent lock").take();

    let outcome = match (incumbent, proven) {
        (Some(inc), true) => {
            shared.publish_bound(inc.value.scaled);
            SolverOutcome {
                status: SolverStatus::Optimal,
                best_bound: inc.value.scaled,
                gap: Some(Ratio::from_integer(0)),
                objective: Some(inc.value),
                schedule: Some(inc.schedule),
                stats,
                certificate: None,
                progress: Vec::new(),
            }
        }
        (Some(inc), false) => {
            let bound = shared.bound.load(Ordering::SeqCst).min(inc.value.scaled);
            SolverOutcome {
                status: SolverStatus::Feasible,
                best_bound: bound,
                gap: Some(relative_gap(inc.value.scaled, bound)),
                objective: Some(inc.value),
                schedule: Some(inc.schedule),
                stats,
                certificate: None,
                progress: Vec::new(),
            }
        }
        (None, true) => {
            let conflicts = stats.conflicts.clone();
            infeasible("search tree exhausted without a schedule".into(), Vec::new(), conflicts, stats)
        }
        (None, false) => SolverOutcome {
            status: SolverStatus::Unknown,
            best_bound: shared.bound.load(Ordering::SeqCst),
            gap: None,
            objective: None,
            schedule: None,
            stats,
            certificate: None,
            progress: Vec::new(),
        },
    };
    emit(&shared, &mut progress, &mut log);
    Ok(SolverOutcome { progress, ..outcome })
}

fn infeasible(
    reason: String,
    tasks: Vec<TaskId>,
    conflicts: BTreeMap<ConflictKind, u64>,
    stats: SolverStats,
) -> SolverOutcome {
    SolverOutcome {
        status: SolverStatus::Infeasible,
        schedule: None,
        objective: None,
        best_bound: 0,
        gap: None,
        stats,
        certificate: Some(InfeasibilityCertificate {
            reason,
            tasks,
            conflicts,
        }),
        progress: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{InstanceSpec, JobSpec, MachineSpec, TaskSpec, Time, TimeScale};
    use crate::preprocess::{assign_machines, build_setup_matrices};

    fn run(spec: InstanceSpec, config: &SolverConfig) -> SolverOutcome {
        let inst = Instance::build(spec).unwrap();
        let a = assign_machines(&inst);
        let s = build_setup_matrices(&inst, &a);
        solve(&inst, &a, &s, config).unwrap()
    }

    fn one_machine(durations: &[Time], cleaning: Time) -> InstanceSpec {
        let mut spec = InstanceSpec::new(TimeScale::unit());
        spec.machines.push(MachineSpec::new("M", "f"));
        spec.cleaning.global_default = cleaning;
        for (i, &p) in durations.iter().enumerate() {
            spec.jobs.push(JobSpec {
                id: format!("J{i}"),
                due_date: 0,
                tasks: vec![TaskSpec::new(p, &["M"])],
            });
        }
        spec
    }

    #[test]
    fn chain_on_two_machines_is_optimal() {
        let mut spec = InstanceSpec::new(TimeScale::unit());
        spec.machines.push(MachineSpec::new("A", "f"));
        spec.machines.push(MachineSpec::new("B", "f"));
        spec.jobs.push(JobSpec {
            id: "J".into(),
            due_date: 0,
            tasks: vec![TaskSpec::new(3, &["A"]), TaskSpec::new(4, &["B"])],
        });
        let out = run(spec, &SolverConfig::default());
        assert_eq!(out.status, SolverStatus::Optimal);
        assert_eq!(out.objective.unwrap().makespan, 7);
        assert_eq!(out.gap, Some(Ratio::from_integer(0)));
    }

    #[test]
    fn cleaning_between_two_jobs() {
        let out = run(one_machine(&[2, 3], 1), &SolverConfig::default());
        assert_eq!(out.status, SolverStatus::Optimal);
        assert_eq!(out.objective.unwrap().makespan, 6);
        assert_eq!(out.best_bound, 6);
    }

    #[test]
    fn asymmetric_cleaning_picks_cheap_direction() {
        let mut spec = one_machine(&[2, 3], 0);
        spec.jobs[0].tasks[0].attributes.product_family = "a".into();
        spec.jobs[1].tasks[0].attributes.product_family = "b".into();
        use crate::instance::CleaningKey;
        spec.cleaning.entries.insert(
            CleaningKey::new(("a", "default"), ("b", "default"), "f"),
            0,
        );
        spec.cleaning.entries.insert(
            CleaningKey::new(("b", "default"), ("a", "default"), "f"),
            5,
        );
        let out = run(spec, &SolverConfig::default());
        assert_eq!(out.objective.unwrap().makespan, 5);
        let sched = out.schedule.unwrap();
        assert_eq!(sched.starts, vec![0, 2]);
    }

    #[test]
    fn tardiness_objective_orders_by_due_date() {
        let mut spec = one_machine(&[4, 1], 0);
        spec.jobs[0].due_date = 10;
        spec.jobs[1].due_date = 1;
        let out = run(spec, &SolverConfig::new(Objective::MakespanPlusTotalTardiness));
        let v = out.objective.unwrap();
        assert_eq!(v.makespan, 5);
        assert_eq!(v.total_tardiness, 0);
        assert_eq!(out.status, SolverStatus::Optimal);
    }

    #[test]
    fn oversized_task_is_infeasible_with_certificate() {
        let mut spec = one_machine(&[4], 0);
        spec.horizon = Some(12);
        spec.global_nonworking = vec![(3, 5), (8, 9)];
        let out = run(spec, &SolverConfig::default());
        assert_eq!(out.status, SolverStatus::Infeasible);
        let cert = out.certificate.unwrap();
        assert_eq!(cert.tasks, vec![TaskId(0)]);
        assert!(cert.reason.contains("J0#1"), "{}", cert.reason);
    }

    #[test]
    fn zero_time_limit_is_rejected() {
        let inst = Instance::build(one_machine(&[1], 0)).unwrap();
        let a = assign_machines(&inst);
        let s = build_setup_matrices(&inst, &a);
        let config = SolverConfig {
            time_limit: Duration::ZERO,
            ..SolverConfig::default()
        };
        assert!(solve(&inst, &a, &s, &config).is_err());
    }

    #[test]
    fn single_worker_runs_are_deterministic() {
        let durations = [5, 3, 7, 2, 6, 4];
        let a = run(one_machine(&durations, 2), &SolverConfig::default());
        let b = run(one_machine(&durations, 2), &SolverConfig::default());
        assert_eq!(a.schedule, b.schedule);
        assert_eq!(a.stats.nodes, b.stats.nodes);
    }

    #[test]
    fn parallel_workers_agree_on_the_optimum() {
        let durations = [5, 3, 7, 2, 6, 4];
        let one = run(one_machine(&durations, 2), &SolverConfig::default());
        let four = run(
            one_machine(&durations, 2),
            &SolverConfig {
                workers: 4,
                seed: 7,
                ..SolverConfig::default()
            },
        );
        assert_eq!(four.status, SolverStatus::Optimal);
        assert_eq!(one.objective.unwrap().scaled, four.objective.unwrap().scaled);
    }

    #[test]
    fn gap_examples() {
        let pct = |g: Ratio<i64>| (*g.numer() as f64 / *g.denom() as f64 * 10000.0).round() / 100.0;
        assert_eq!(pct(relative_gap(21551, 21386)), 0.77);
        assert_eq!(pct(relative_gap(43411, 36935)), 14.92);
        assert_eq!(relative_gap(0, 0), Ratio::from_integer(0));
    }

    #[test]
    fn progress_line_round_trips() {
        let rec = ProgressRecord {
            elapsed: Duration::from_millis(1500),
            incumbent: Some(21551),
            bound: 21386,
            nodes: 42,
        };
        let line = rec.to_string();
        assert_eq!(line, "elapsed=1.500 incumbent=21551 bound=21386 gap=0.007656 nodes=42");
        assert_eq!(line.parse::<ProgressRecord>().unwrap(), rec);
        let none: ProgressRecord = "elapsed=0.000 incumbent=- bound=3 gap=- nodes=0".parse().unwrap();
        assert_eq!(none.incumbent, None);
        assert!("elapsed=1 bound=2".parse::<ProgressRecord>().is_err());
    }

    #[test]
    fn node_limit_stops_with_incumbent() {
        let durations = [9, 8, 7, 6, 5, 4, 3, 2, 1, 9, 8, 7];
        let out = run(
            one_machine(&durations, 3),
            &SolverConfig {
                node_limit: Some(5),
                ..SolverConfig::default()
            },
        );
        assert!(matches!(out.status, SolverStatus::Feasible | SolverStatus::Optimal));
        assert!(out.best_bound <= out.objective.unwrap().scaled);
    }
}
