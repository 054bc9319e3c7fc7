//! Problem data model.
//!
//! An [`Instance`] is built once from an [`InstanceSpec`] (already scaled to
//! integers) and is immutable afterwards. Jobs and machines are stored sorted
//! by id, and tasks get a flat [`TaskId`] in `(job id, task index)` order.

mod calendar;
mod cleaning;
mod horizon;
mod time;

use std::collections::BTreeSet;
use std::fmt;

pub use calendar::{normalize_calendars, BlockedTime, CalendarInterval, CalendarKind};
pub use cleaning::{CleaningKey, CleaningTable};
pub use horizon::compute_horizon;
pub use time::{scale_time, unscale_time, BaseUnit, RawDecimal, Time, TimeScale, MAX_DECIMAL_DIGITS};

use crate::error::{Error, Result};

/// Reserved label for unknown categorical attributes.
pub const DEFAULT_LABEL: &str = "default";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MachineIdx(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JobIdx(pub usize);

/// Flat task index, ordered by `(job id, task index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TaskId(pub usize);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaskAttributes {
    pub product_family: String,
    pub ingredient_strength: String,
    pub operation_family: String,
}

impl TaskAttributes {
    /// Empty labels are recorded as [`DEFAULT_LABEL`].
    pub fn new(product_family: &str, ingredient_strength: &str, operation_family: &str) -> Self {
        let label = |s: &str| {
            if s.trim().is_empty() {
                DEFAULT_LABEL.to_string()
            } else {
                s.to_string()
            }
        };
        Self {
            product_family: label(product_family),
            ingredient_strength: label(ingredient_strength),
            operation_family: label(operation_family),
        }
    }
}

impl Default for TaskAttributes {
    fn default() -> Self {
        Self::new("", "", "")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Machine {
    pub id: String,
    pub operation_family: String,
    /// Normalized: sorted, disjoint, clipped to the horizon.
    pub maintenance: Vec<CalendarInterval>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub job: JobIdx,
    /// Position inside the job, starting at 1.
    pub index: u32,
    pub duration: Time,
    /// Sorted, deduplicated, nonempty.
    pub eligible_machines: Vec<MachineIdx>,
    pub assigned_machine: Option<MachineIdx>,
    pub attributes: TaskAttributes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub id: String,
    pub tasks: Vec<Task>,
    /// May be negative when the job is already late at time zero.
    pub due_date: Time,
}

/// Builder input for an [`Instance`]; all times are already scaled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSpec {
    pub time_scale: TimeScale,
    pub jobs: Vec<JobSpec>,
    pub machines: Vec<MachineSpec>,
    pub global_nonworking: Vec<(Time, Time)>,
    pub cleaning: CleaningTable,
    pub horizon: Option<Time>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobSpec {
    pub id: String,
    pub due_date: Time,
    pub tasks: Vec<TaskSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskSpec {
    pub duration: Time,
    pub eligible_machines: Vec<String>,
    pub assigned_machine: Option<String>,
    pub attributes: TaskAttributes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineSpec {
    pub id: String,
    pub operation_family: String,
    pub maintenance: Vec<(Time, Time)>,
}

impl TaskSpec {
    pub fn new(duration: Time, machines: &[&str]) -> Self {
        Self {
            duration,
            eligible_machines: machines.iter().map(|m| m.to_string()).collect(),
            assigned_machine: None,
            attributes: TaskAttributes::default(),
        }
    }

    pub fn with_attributes(mut self, attributes: TaskAttributes) -> Self {
        self.attributes = attributes;
        self
    }
}

impl MachineSpec {
    pub fn new(id: &str, operation_family: &str) -> Self {
        Self {
            id: id.to_string(),
            operation_family: operation_family.to_string(),
            maintenance: Vec::new(),
        }
    }
}

impl InstanceSpec {
    pub fn new(time_scale: TimeScale) -> Self {
        Self {
            time_scale,
            jobs: Vec::new(),
            machines: Vec::new(),
            global_nonworking: Vec::new(),
            cleaning: CleaningTable::default(),
            horizon: None,
        }
    }

    pub fn task_count(&self) -> usize {
        self.jobs.iter().map(|j| j.tasks.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    time_scale: TimeScale,
    jobs: Vec<Job>,
    machines: Vec<Machine>,
    global_nonworking: Vec<CalendarInterval>,
    cleaning: CleaningTable,
    horizon: Time,
    job_offsets: Vec<usize>,
    task_job: Vec<JobIdx>,
}

impl Instance {
    /// Validates the spec, sorts jobs and machines by id, computes the
    /// horizon when absent and normalizes every calendar.
    pub fn build(spec: InstanceSpec) -> Result<Self> {
        let horizon = match spec.horizon {
            Some(h) if h <= 0 => {
                return Err(Error::invalid("horizon", format!("must be positive, got {h}")))
            }
            Some(h) => h,
            None => compute_horizon(&spec)?,
        };
        let InstanceSpec {
            time_scale,
            mut jobs,
            mut machines,
            global_nonworking,
            cleaning,
            ..
        } = spec;

        if jobs.iter().all(|j| j.tasks.is_empty()) {
            return Err(Error::EmptyInstance);
        }
        check_unique(jobs.iter().map(|j| j.id.as_str()), "job")?;
        check_unique(machines.iter().map(|m| m.id.as_str()), "machine")?;
        jobs.sort_by(|a, b| a.id.cmp(&b.id));
        machines.sort_by(|a, b| a.id.cmp(&b.id));

        check_cleaning(&cleaning)?;

        let machine_index = |id: &str, location: &str| -> Result<MachineIdx> {
            machines
                .binary_search_by(|m| m.id.as_str().cmp(id))
                .map(MachineIdx)
                .map_err(|_| Error::invalid(location, format!("unknown machine {id:?}")))
        };

        let global = normalize_calendars(
            &global_nonworking
                .iter()
                .map(|&(s, e)| CalendarInterval::global(s, e))
                .collect::<Vec<_>>(),
            Some(horizon),
        )
        .map_err(|e| Error::invalid("global_nonworking", e.to_string()))?;

        let mut built_machines = Vec::with_capacity(machines.len());
        for (i, m) in machines.iter().enumerate() {
            if m.id.is_empty() {
                return Err(Error::invalid(format!("machines[{i}]"), "empty id"));
            }
            let windows: Vec<_> = m
                .maintenance
                .iter()
                .map(|&(s, e)| CalendarInterval::maintenance(MachineIdx(i), s, e))
                .collect();
            let maintenance = normalize_calendars(&windows, Some(horizon))
                .map_err(|e| Error::invalid(format!("machine {:?} maintenance", m.id), e.to_string()))?;
            built_machines.push(Machine {
                id: m.id.clone(),
                operation_family: if m.operation_family.trim().is_empty() {
                    DEFAULT_LABEL.to_string()
                } else {
                    m.operation_family.clone()
                },
                maintenance,
            });
        }

        let mut built_jobs = Vec::with_capacity(jobs.len());
        let mut job_offsets = Vec::with_capacity(jobs.len() + 1);
        let mut task_job = Vec::new();
        for (j, job) in jobs.iter().enumerate() {
            job_offsets.push(task_job.len());
            if job.id.is_empty() {
                return Err(Error::invalid(format!("jobs[{j}]"), "empty id"));
            }
            if job.tasks.is_empty() {
                return Err(Error::invalid(format!("job {:?}", job.id), "job has no tasks"));
            }
            let mut tasks = Vec::with_capacity(job.tasks.len());
            for (t, task) in job.tasks.iter().enumerate() {
                let location = format!("job {:?} task {}", job.id, t + 1);
                if task.duration < 1 {
                    return Err(Error::invalid(
                        &location,
                        format!("duration must be positive, got {}", task.duration),
                    ));
                }
                if task.duration > horizon {
                    return Err(Error::invalid(
                        &location,
                        format!("duration {} exceeds horizon {horizon}", task.duration),
                    ));
                }
                let mut eligible = task
                    .eligible_machines
                    .iter()
                    .map(|m| machine_index(m, &location))
                    .collect::<Result<Vec<_>>>()?;
                eligible.sort();
                eligible.dedup();
                if eligible.is_empty() {
                    return Err(Error::invalid(&location, "no eligible machines"));
                }
                let assigned = match &task.assigned_machine {
                    Some(m) => {
                        let idx = machine_index(m, &location)?;
                        if !eligible.contains(&idx) {
                            return Err(Error::invalid(
                                &location,
                                format!("assigned machine {m:?} is not eligible"),
                            ));
                        }
                        Some(idx)
                    }
                    None => None,
                };
                tasks.push(Task {
                    job: JobIdx(j),
                    index: (t + 1) as u32,
                    duration: task.duration,
                    eligible_machines: eligible,
                    assigned_machine: assigned,
                    attributes: TaskAttributes::new(
                        &task.attributes.product_family,
                        &task.attributes.ingredient_strength,
                        &task.attributes.operation_family,
                    ),
                });
                task_job.push(JobIdx(j));
            }
            built_jobs.push(Job {
                id: job.id.clone(),
                tasks,
                due_date: job.due_date,
            });
        }
        job_offsets.push(task_job.len());

        Ok(Self {
            time_scale,
            jobs: built_jobs,
            machines: built_machines,
            global_nonworking: global,
            cleaning,
            horizon,
            job_offsets,
            task_job,
        })
    }

    /// Reconstructs a builder spec; `Instance::build(i.to_spec())` yields `i`.
    pub fn to_spec(&self) -> InstanceSpec {
        InstanceSpec {
            time_scale: self.time_scale.clone(),
            jobs: self
                .jobs
                .iter()
                .map(|j| JobSpec {
                    id: j.id.clone(),
                    due_date: j.due_date,
                    tasks: j
                        .tasks
                        .iter()
                        .map(|t| TaskSpec {
                            duration: t.duration,
                            eligible_machines: t
                                .eligible_machines
                                .iter()
                                .map(|m| self.machines[m.0].id.clone())
                                .collect(),
                            assigned_machine: t.assigned_machine.map(|m| self.machines[m.0].id.clone()),
                            attributes: t.attributes.clone(),
                        })
                        .collect(),
                })
                .collect(),
            machines: self
                .machines
                .iter()
                .map(|m| MachineSpec {
                    id: m.id.clone(),
                    operation_family: m.operation_family.clone(),
                    maintenance: m.maintenance.iter().map(|iv| (iv.start, iv.end)).collect(),
                })
                .collect(),
            global_nonworking: self
                .global_nonworking
                .iter()
                .map(|iv| (iv.start, iv.end))
                .collect(),
            cleaning: self.cleaning.clone(),
            horizon: Some(self.horizon),
        }
    }

    pub fn time_scale(&self) -> &TimeScale {
        &self.time_scale
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn job(&self, j: JobIdx) -> &Job {
        &self.jobs[j.0]
    }

    pub fn machines(&self) -> &[Machine] {
        &self.machines
    }

    pub fn machine(&self, m: MachineIdx) -> &Machine {
        &self.machines[m.0]
    }

    pub fn machine_by_id(&self, id: &str) -> Option<MachineIdx> {
        self.machines
            .binary_search_by(|m| m.id.as_str().cmp(id))
            .ok()
            .map(MachineIdx)
    }

    pub fn job_by_id(&self, id: &str) -> Option<JobIdx> {
        self.jobs
            .binary_search_by(|j| j.id.as_str().cmp(id))
            .ok()
            .map(JobIdx)
    }

    pub fn global_nonworking(&self) -> &[CalendarInterval] {
        &self.global_nonworking
    }

    pub fn cleaning(&self) -> &CleaningTable {
        &self.cleaning
    }

    pub fn horizon(&self) -> Time {
        self.horizon
    }

    pub fn task_count(&self) -> usize {
        self.task_job.len()
    }

    pub fn task(&self, id: TaskId) -> &Task {
        let j = self.task_job[id.0];
        &self.jobs[j.0].tasks[id.0 - self.job_offsets[j.0]]
    }

    pub fn task_ids(&self) -> impl Iterator<Item = TaskId> + '_ {
        (0..self.task_count()).map(TaskId)
    }

    pub fn tasks(&self) -> impl Iterator<Item = (TaskId, &Task)> + '_ {
        self.jobs
            .iter()
            .flat_map(|j| j.tasks.iter())
            .enumerate()
            .map(|(i, t)| (TaskId(i), t))
    }

    /// Task ids of job `j`, in chain order.
    pub fn job_tasks(&self, j: JobIdx) -> impl Iterator<Item = TaskId> {
        (self.job_offsets[j.0]..self.job_offsets[j.0 + 1]).map(TaskId)
    }

    pub fn last_task(&self, j: JobIdx) -> TaskId {
        TaskId(self.job_offsets[j.0 + 1] - 1)
    }

    pub fn task_id(&self, job: JobIdx, index: u32) -> Option<TaskId> {
        let start = *self.job_offsets.get(job.0)?;
        let end = *self.job_offsets.get(job.0 + 1)?;
        let id = start + index.checked_sub(1)? as usize;
        (id < end).then_some(TaskId(id))
    }

    /// Previous task of the same job.
    pub fn job_predecessor(&self, id: TaskId) -> Option<TaskId> {
        let j = self.task_job[id.0];
        (id.0 > self.job_offsets[j.0]).then(|| TaskId(id.0 - 1))
    }

    pub fn job_successor(&self, id: TaskId) -> Option<TaskId> {
        let j = self.task_job[id.0];
        (id.0 + 1 < self.job_offsets[j.0 + 1]).then(|| TaskId(id.0 + 1))
    }

    /// Human-readable `job#index` label.
    pub fn task_label(&self, id: TaskId) -> String {
        let t = self.task(id);
        format!("{}#{}", self.jobs[t.job.0].id, t.index)
    }

    /// All windows blocking machine `m`: global non-working plus its maintenance.
    pub fn blocked_time(&self, m: MachineIdx) -> BlockedTime {
        BlockedTime::new(
            self.global_nonworking
                .iter()
                .chain(self.machines[m.0].maintenance.iter())
                .map(|iv| (iv.start, iv.end)),
        )
    }

    /// Same instance with every time quantity multiplied by `k`.
    pub fn scaled_by(&self, k: i64) -> Result<Self> {
        let mut spec = self.to_spec();
        for job in &mut spec.jobs {
            job.due_date *= k;
            for t in &mut job.tasks {
                t.duration *= k;
            }
        }
        for m in &mut spec.machines {
            for w in &mut m.maintenance {
                *w = (w.0 * k, w.1 * k);
            }
        }
        for w in &mut spec.global_nonworking {
            *w = (w.0 * k, w.1 * k);
        }
        for v in spec.cleaning.entries.values_mut() {
            *v *= k;
        }
        for v in spec.cleaning.family_defaults.values_mut() {
            *v *= k;
        }
        spec.cleaning.global_default *= k;
        spec.horizon = spec.horizon.map(|h| h * k);
        Self::build(spec)
    }
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>, kind: &'static str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId {
                kind,
                id: id.to_string(),
            });
        }
    }
    Ok(())
}

fn check_cleaning(table: &CleaningTable) -> Result<()> {
    if table.global_default < 0 {
        return Err(Error::invalid("cleaning.global_default", "must be nonnegative"));
    }
    for (family, v) in &table.family_defaults {
        if *v < 0 {
            return Err(Error::invalid(
                format!("cleaning.family_defaults[{family:?}]"),
                "must be nonnegative",
            ));
        }
    }
    for (key, v) in &table.entries {
        if *v < 0 {
            return Err(Error::invalid(format!("cleaning entry {key:?}"), "must be nonnegative"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_machine() -> InstanceSpec {
        let mut spec = InstanceSpec::new(TimeScale::unit());
        spec.machines.push(MachineSpec::new("M1", "blend"));
        spec
    }

    #[test]
    fn builds_sorted_and_indexed() {
        let mut spec = one_machine();
        spec.machines.push(MachineSpec::new("M0", "blend"));
        spec.jobs.push(JobSpec {
            id: "B".into(),
            due_date: 3,
            tasks: vec![TaskSpec::new(2, &["M1"]), TaskSpec::new(1, &["M0", "M1", "M0"])],
        });
        spec.jobs.push(JobSpec {
            id: "A".into(),
            due_date: -4,
            tasks: vec![TaskSpec::new(4, &["M1"])],
        });
        let inst = Instance::build(spec).unwrap();
        assert_eq!(inst.jobs()[0].id, "A");
        assert_eq!(inst.machines()[0].id, "M0");
        assert_eq!(inst.task_count(), 3);
        assert_eq!(inst.task_label(TaskId(2)), "B#2");
        assert_eq!(inst.task(TaskId(2)).eligible_machines, vec![MachineIdx(0), MachineIdx(1)]);
        assert_eq!(inst.job_predecessor(TaskId(2)), Some(TaskId(1)));
        assert_eq!(inst.job_predecessor(TaskId(1)), None);
        assert_eq!(inst.last_task(JobIdx(1)), TaskId(2));
        assert_eq!(inst.task_id(JobIdx(1), 2), Some(TaskId(2)));
        assert_eq!(inst.task_id(JobIdx(1), 3), None);
        assert_eq!(inst.job(JobIdx(0)).due_date, -4);
    }

    #[test]
    fn rejects_duplicates_and_unknown_machines() {
        let mut spec = one_machine();
        spec.machines.push(MachineSpec::new("M1", "x"));
        spec.jobs.push(JobSpec {
            id: "A".into(),
            due_date: 0,
            tasks: vec![TaskSpec::new(1, &["M1"])],
        });
        assert!(matches!(
            Instance::build(spec),
            Err(Error::DuplicateId { kind: "machine", .. })
        ));

        let mut spec = one_machine();
        spec.jobs.push(JobSpec {
            id: "A".into(),
            due_date: 0,
            tasks: vec![TaskSpec::new(1, &["M9"])],
        });
        assert!(matches!(Instance::build(spec), Err(Error::Invalid { .. })));
    }

    #[test]
    fn rejects_nonpositive_duration_and_empty() {
        let mut spec = one_machine();
        spec.jobs.push(JobSpec {
            id: "A".into(),
            due_date: 0,
            tasks: vec![TaskSpec::new(0, &["M1"])],
        });
        assert!(Instance::build(spec).is_err());
        assert!(matches!(Instance::build(one_machine()), Err(Error::EmptyInstance)));
    }

    #[test]
    fn unknown_labels_become_default() {
        let a = TaskAttributes::new("", "10mg", " ");
        assert_eq!(a.product_family, DEFAULT_LABEL);
        assert_eq!(a.operation_family, DEFAULT_LABEL);
        assert_eq!(a.ingredient_strength, "10mg");
    }

    #[test]
    fn spec_round_trip() {
        let mut spec = one_machine();
        spec.machines[0].maintenance = vec![(3, 5), (4, 6)];
        spec.global_nonworking = vec![(8, 9)];
        spec.jobs.push(JobSpec {
            id: "A".into(),
            due_date: 2,
            tasks: vec![TaskSpec::new(2, &["M1"]), TaskSpec::new(3, &["M1"])],
        });
        let inst = Instance::build(spec).unwrap();
        assert_eq!(inst.machines()[0].maintenance.len(), 1);
        let again = Instance::build(inst.to_spec()).unwrap();
        assert_eq!(inst, again);
    }
}
