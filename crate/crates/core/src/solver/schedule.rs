use num_rational::Ratio;

use crate::instance::{Instance, JobIdx, MachineIdx, TaskId, Time};
use crate::preprocess::AssignmentResult;

/// Objective formulations over the same feasible set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Objective {
    /// `C_max`.
    Makespan,
    /// `C_max + sum_j T_j`.
    MakespanPlusTotalTardiness,
    /// `C_max + (sum_j T_j) / |J|`, optimized as `|J| C_max + sum_j T_j`.
    MakespanPlusAvgTardiness,
}

impl Objective {
    pub const ALL: [Objective; 3] = [
        Objective::Makespan,
        Objective::MakespanPlusTotalTardiness,
        Objective::MakespanPlusAvgTardiness,
    ];

    /// Coefficient of `C_max` in the integer form of the objective.
    pub fn makespan_weight(self, jobs: usize) -> i64 {
        match self {
            Objective::MakespanPlusAvgTardiness => jobs as i64,
            _ => 1,
        }
    }

    pub fn counts_tardiness(self) -> bool {
        !matches!(self, Objective::Makespan)
    }

    /// Short name used on the command line and in documents.
    pub fn name(self) -> &'static str {
        match self {
            Objective::Makespan => "makespan",
            Objective::MakespanPlusTotalTardiness => "total-tard",
            Objective::MakespanPlusAvgTardiness => "avg-tard",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == name)
    }
}

/// Evaluated objective of one schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjectiveValue {
    pub objective: Objective,
    /// Integer value the solver minimizes (model time units; the
    /// average-tardiness form is multiplied by `|J|`).
    pub scaled: i64,
    pub makespan: Time,
    pub total_tardiness: Time,
    pub jobs: usize,
}

impl ObjectiveValue {
    /// Value as reported externally, in model time units.
    pub fn report(&self) -> Ratio<i64> {
        Ratio::new(self.scaled, self.objective.makespan_weight(self.jobs))
    }
}

/// Aggregates stated alongside a schedule; the validator recomputes them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportedAggregates {
    pub makespan: Time,
    /// Indexed by [`JobIdx`].
    pub job_tardiness: Vec<Time>,
    pub total_tardiness: Time,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    /// Indexed by [`TaskId`].
    pub starts: Vec<Time>,
    pub ends: Vec<Time>,
    /// Indexed by [`MachineIdx`]; tasks in processing order.
    pub machine_orders: Vec<Vec<TaskId>>,
    pub reported: Option<ReportedAggregates>,
}

impl Schedule {
    /// Builds a schedule from start times; machine orders follow start
    /// times (ties by task id) and the aggregates are filled in.
    pub fn from_starts(instance: &Instance, assignment: &AssignmentResult, starts: Vec<Time>) -> Self {
        let ends = starts
            .iter()
            .enumerate()
            .map(|(i, s)| s + instance.task(TaskId(i)).duration)
            .collect();
        let mut machine_orders = vec![Vec::new(); instance.machines().len()];
        for (i, m) in assignment.assignments.iter().enumerate() {
            machine_orders[m.0].push(TaskId(i));
        }
        for order in &mut machine_orders {
            order.sort_by_key(|t| (starts[t.0], *t));
        }
        let mut schedule = Self {
            starts,
            ends,
            machine_orders,
            reported: None,
        };
        schedule.reported = Some(schedule.aggregates(instance));
        schedule
    }

    pub fn completion(&self, instance: &Instance, job: JobIdx) -> Time {
        self.ends[instance.last_task(job).0]
    }

    pub fn tardiness(&self, instance: &Instance, job: JobIdx) -> Time {
        (self.completion(instance, job) - instance.job(job).due_date).max(0)
    }

    pub fn makespan(&self) -> Time {
        self.ends.iter().copied().max().unwrap_or(0)
    }

    /// Recomputes makespan and per-job tardiness from the times.
    pub fn aggregates(&self, instance: &Instance) -> ReportedAggregates {
        let job_tardiness: Vec<Time> = (0..instance.jobs().len())
            .map(|j| self.tardiness(instance, JobIdx(j)))
            .collect();
        ReportedAggregates {
            makespan: self.makespan(),
            total_tardiness: job_tardiness.iter().sum(),
            job_tardiness,
        }
    }

    pub fn machine_of(&self, task: TaskId) -> Option<MachineIdx> {
        self.machine_orders
            .iter()
            .position(|o| o.contains(&task))
            .map(MachineIdx)
    }
}

/// Evaluates one of the three objectives on a complete schedule.
pub fn evaluate_objective(schedule: &Schedule, instance: &Instance, objective: Objective) -> ObjectiveValue {
    let jobs = instance.jobs().len();
    let makespan = (0..jobs)
        .map(|j| schedule.completion(instance, JobIdx(j)))
        .max()
        .unwrap_or(0);
    let total_tardiness: Time = (0..jobs).map(|j| schedule.tardiness(instance, JobIdx(j))).sum();
    let scaled = match objective {
        Objective::Makespan => makespan,
        Objective::MakespanPlusTotalTardiness => makespan + total_tardiness,
        Objective::MakespanPlusAvgTardiness => jobs as i64 * makespan + total_tardiness,
    };
    ObjectiveValue {
        objective,
        scaled,
        makespan,
        total_tardiness,
        jobs,
    }
}
