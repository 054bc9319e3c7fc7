//! Independent feasibility checker.
//!
//! Works from the instance data alone: machine orders are rebuilt from the
//! start times and cleaning times are looked up in the cleaning table, so a
//! bug in preprocessing or in the solver's model cannot hide itself here.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{CalendarInterval, Instance, JobIdx, MachineIdx, TaskId, Time};
use crate::preprocess::AssignmentResult;
use crate::solver::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Precedence,
    Overlap,
    Calendar,
    Maintenance,
    CleaningGap,
    TardinessMismatch,
    Horizon,
    /// `end - start` differs from the task duration.
    Duration,
    /// Stated machine orders disagree with the start times.
    OrderMismatch,
}

impl ViolationKind {
    pub fn name(self) -> &'static str {
        match self {
            ViolationKind::Precedence => "precedence",
            ViolationKind::Overlap => "overlap",
            ViolationKind::Calendar => "calendar",
            ViolationKind::Maintenance => "maintenance",
            ViolationKind::CleaningGap => "cleaning_gap",
            ViolationKind::TardinessMismatch => "tardiness_mismatch",
            ViolationKind::Horizon => "horizon",
            ViolationKind::Duration => "duration",
            ViolationKind::OrderMismatch => "order_mismatch",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(skip)]
    pub tasks: Vec<TaskId>,
    #[serde(rename = "tasks")]
    pub labels: Vec<String>,
    /// Observed quantity (a gap, an end time, a tardiness) in model units.
    pub measured: Option<Time>,
    /// The bound it should satisfy.
    pub required: Option<Time>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "all checks passed: 0 violations");
        }
        writeln!(f, "{} violation(s)", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "{:<18} {:<24} {}", v.kind.name(), v.labels.join(","), v.detail)?;
        }
        Ok(())
    }
}

struct Checker<'a> {
    instance: &'a Instance,
    report: ViolationReport,
}

impl Checker<'_> {
    fn push(&mut self, kind: ViolationKind, tasks: &[TaskId], measured: Option<Time>, required: Option<Time>, detail: String) {
        self.report.violations.push(Violation {
            kind,
            tasks: tasks.to_vec(),
            labels: tasks.iter().map(|&t| self.instance.task_label(t)).collect(),
            measured,
            required,
            detail,
        });
    }
}

/// Checks `schedule` against every constraint of `instance` under the
/// given machine assignment and returns all violations found.
///
/// Fails only if the schedule does not cover the instance's tasks.
pub fn validate(schedule: &Schedule, instance: &Instance, assignment: &AssignmentResult) -> Result<ViolationReport> {
    let n = instance.task_count();
    if schedule.starts.len() != n || schedule.ends.len() != n {
        return Err(Error::MalformedSchedule(format!(
            "expected {n} tasks, schedule has {} starts and {} ends",
            schedule.starts.len(),
            schedule.ends.len()
        )));
    }
    if assignment.assignments.len() != n {
        return Err(Error::MalformedSchedule(format!(
            "expected {n} machine assignments, found {}",
            assignment.assignments.len()
        )));
    }
    let s = &schedule.starts;
    let e = &schedule.ends;
    let mut c = Checker {
        instance,
        report: ViolationReport::default(),
    };

    for (id, task) in instance.tasks() {
        let t = id.0;
        if e[t] - s[t] != task.duration {
            c.push(
                ViolationKind::Duration,
                &[id],
                Some(e[t] - s[t]),
                Some(task.duration),
                format!("interval [{}, {}) has length {} but duration is {}", s[t], e[t], e[t] - s[t], task.duration),
            );
        }
    }

    // (a) job chains
    for (id, _) in instance.tasks() {
        if let Some(prev) = instance.job_predecessor(id) {
            if s[id.0] < e[prev.0] {
                c.push(
                    ViolationKind::Precedence,
                    &[prev, id],
                    Some(s[id.0]),
                    Some(e[prev.0]),
                    format!("starts at {} before predecessor ends at {}", s[id.0], e[prev.0]),
                );
            }
        }
    }

    // Machine orders rebuilt from start times.
    let machines = instance.machines().len();
    let mut orders: Vec<Vec<TaskId>> = vec![Vec::new(); machines];
    for (t, m) in assignment.assignments.iter().enumerate() {
        orders[m.0].push(TaskId(t));
    }
    for order in &mut orders {
        order.sort_by_key(|t| (s[t.0], e[t.0], *t));
    }

    // (b) pairwise non-overlap
    for order in &orders {
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[i + 1..] {
                let overlap = e[a.0].min(e[b.0]) - s[a.0].max(s[b.0]);
                if overlap > 0 {
                    c.push(
                        ViolationKind::Overlap,
                        &[a, b],
                        Some(overlap),
                        Some(0),
                        format!("[{}, {}) and [{}, {}) share {} units", s[a.0], e[a.0], s[b.0], e[b.0], overlap),
                    );
                }
            }
        }
    }

    // (c) calendars
    for (id, _) in instance.tasks() {
        let m = assignment.assignments[id.0];
        let (start, end) = (s[id.0], e[id.0]);
        let hit = |w: &CalendarInterval| w.start < end && start < w.end && start < end;
        for w in instance.global_nonworking().iter().filter(|w| hit(w)) {
            c.push(
                ViolationKind::Calendar,
                &[id],
                Some(end.min(w.end) - start.max(w.start)),
                Some(0),
                format!("[{start}, {end}) intersects non-working [{}, {})", w.start, w.end),
            );
        }
        let machine = instance.machine(m);
        for w in machine.maintenance.iter().filter(|w| hit(w)) {
            c.push(
                ViolationKind::Maintenance,
                &[id],
                Some(end.min(w.end) - start.max(w.start)),
                Some(0),
                format!("[{start}, {end}) intersects maintenance [{}, {}) on {}", w.start, w.end, machine.id),
            );
        }
    }

    // (d) cleaning between consecutive tasks
    for (m, order) in orders.iter().enumerate() {
        let machine = instance.machine(MachineIdx(m));
        for pair in order.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if e[a.0] > s[b.0] {
                continue; // already an overlap
            }
            let kappa = instance
                .cleaning()
                .lookup(
                    &instance.task(a).attributes,
                    &instance.task(b).attributes,
                    &machine.operation_family,
                )
                .max(0);
            let gap = s[b.0] - e[a.0];
            if gap < kappa {
                c.push(
                    ViolationKind::CleaningGap,
                    &[a, b],
                    Some(gap),
                    Some(kappa),
                    format!("gap {gap} < required cleaning {kappa}"),
                );
            }
        }
    }

    // (e) reported aggregates
    if let Some(rep) = &schedule.reported {
        let mut total = 0;
        for (j, job) in instance.jobs().iter().enumerate() {
            let last = instance.last_task(JobIdx(j));
            let tard = (e[last.0] - job.due_date).max(0);
            total += tard;
            match rep.job_tardiness.get(j) {
                Some(&r) if r == tard => {}
                other => c.push(
                    ViolationKind::TardinessMismatch,
                    &[last],
                    other.copied(),
                    Some(tard),
                    format!("job {} reports tardiness {:?}, recomputed {tard}", job.id, other),
                ),
            }
        }
        if rep.job_tardiness.len() > instance.jobs().len() {
            c.push(
                ViolationKind::TardinessMismatch,
                &[],
                Some(rep.job_tardiness.len() as Time),
                Some(instance.jobs().len() as Time),
                "more tardiness entries than jobs".into(),
            );
        }
        if rep.total_tardiness != total {
            c.push(
                ViolationKind::TardinessMismatch,
                &[],
                Some(rep.total_tardiness),
                Some(total),
                format!("reported total tardiness {}, recomputed {total}", rep.total_tardiness),
            );
        }
        let makespan = e.iter().copied().max().unwrap_or(0);
        if rep.makespan != makespan {
            c.push(
                ViolationKind::TardinessMismatch,
                &[],
                Some(rep.makespan),
                Some(makespan),
                format!("reported makespan {}, recomputed {makespan}", rep.makespan),
            );
        }
    }

    // (f) horizon
    let h = instance.horizon();
    for (id, _) in instance.tasks() {
        if e[id.0] > h || s[id.0] < 0 {
            c.push(
                ViolationKind::Horizon,
                &[id],
                Some(if s[id.0] < 0 { s[id.0] } else { e[id.0] }),
                Some(h),
                format!("[{}, {}) leaves [0, {h}]", s[id.0], e[id.0]),
            );
        }
    }

    // Stated orders must match the rebuilt ones.
    if !schedule.machine_orders.is_empty() {
        if schedule.machine_orders.len() != machines {
            c.push(
                ViolationKind::OrderMismatch,
                &[],
                Some(schedule.machine_orders.len() as Time),
                Some(machines as Time),
                "machine order count differs from machine count".into(),
            );
        } else {
            for (m, (stated, rebuilt)) in schedule.machine_orders.iter().zip(&orders).enumerate() {
                if stated != rebuilt {
                    c.push(
                        ViolationKind::OrderMismatch,
                        stated,
                        None,
                        None,
                        format!("stated order on {} disagrees with start times", instance.machine(MachineIdx(m)).id),
                    );
                }
            }
        }
    }

    Ok(c.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{InstanceSpec, JobSpec, MachineSpec, TaskSpec, TimeScale};
    use crate::preprocess::assign_machines;

    fn chain() -> Instance {
        let mut spec = InstanceSpec::new(TimeScale::unit());
        spec.machines.push(MachineSpec::new("A", "f"));
        spec.machines.push(MachineSpec::new("B", "f"));
        spec.jobs.push(JobSpec {
            id: "J".into(),
            due_date: 5,
            tasks: vec![TaskSpec::new(3, &["A"]), TaskSpec::new(4, &["B"])],
        });
        Instance::build(spec).unwrap()
    }

    fn one_machine(durations: &[Time], cleaning: Time) -> Instance {
        let mut spec = InstanceSpec::new(TimeScale::unit());
        spec.machines.push(MachineSpec::new("M", "f"));
        spec.cleaning.global_default = cleaning;
        spec.horizon = Some(50);
        for (i, &p) in durations.iter().enumerate() {
            spec.jobs.push(JobSpec {
                id: format!("J{i}"),
                due_date: 0,
                tasks: vec![TaskSpec::new(p, &["M"])],
            });
        }
        Instance::build(spec).unwrap()
    }

    fn check(inst: &Instance, starts: Vec<Time>) -> ViolationReport {
        let a = assign_machines(inst);
        let sched = Schedule::from_starts(inst, &a, starts);
        validate(&sched, inst, &a).unwrap()
    }

    #[test]
    fn valid_chain_has_no_violations() {
        let report = check(&chain(), vec![0, 3]);
        assert!(report.is_empty(), "{report}");
        assert_eq!(report.to_string(), "all checks passed: 0 violations\n");
    }

    #[test]
    fn overlap_names_both_tasks() {
        let inst = one_machine(&[3, 3], 0);
        let report = check(&inst, vec![0, 2]);
        assert_eq!(report.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.kind, ViolationKind::Overlap);
        assert_eq!(v.labels, vec!["J0#1", "J1#1"]);
    }

    #[test]
    fn short_cleaning_gap_is_measured() {
        let inst = one_machine(&[5, 1], 2);
        let report = check(&inst, vec![0, 6]);
        assert_eq!(report.len(), 1);
        let v = &report.violations[0];
        assert_eq!(v.kind, ViolationKind::CleaningGap);
        assert_eq!((v.measured, v.required), (Some(1), Some(2)));
    }

    #[test]
    fn collects_every_violation() {
        let inst = chain();
        let a = assign_machines(&inst);
        let mut sched = Schedule::from_starts(&inst, &a, vec![0, 1]);
        sched.reported.as_mut().unwrap().total_tardiness = 99;
        let report = validate(&sched, &inst, &a).unwrap();
        assert_eq!(report.count(ViolationKind::Precedence), 1);
        assert_eq!(report.count(ViolationKind::TardinessMismatch), 1);
    }

    #[test]
    fn calendar_and_horizon() {
        let mut spec = InstanceSpec::new(TimeScale::unit());
        let mut m = MachineSpec::new("M", "f");
        m.maintenance.push((6, 8));
        spec.machines.push(m);
        spec.global_nonworking.push((2, 3));
        spec.horizon = Some(10);
        for i in 0..2 {
            spec.jobs.push(JobSpec {
                id: format!("J{i}"),
                due_date: 0,
                tasks: vec![TaskSpec::new(2, &["M"])],
            });
        }
        let inst = Instance::build(spec).unwrap();
        let report = check(&inst, vec![1, 9]);
        assert_eq!(report.count(ViolationKind::Calendar), 1);
        assert_eq!(report.count(ViolationKind::Horizon), 1);
        let report = check(&inst, vec![5, 3]);
        assert_eq!(report.count(ViolationKind::Maintenance), 1);
    }

    #[test]
    fn stated_order_must_match_starts() {
        let inst = one_machine(&[1, 1], 0);
        let a = assign_machines(&inst);
        let mut sched = Schedule::from_starts(&inst, &a, vec![0, 1]);
        sched.machine_orders[0].reverse();
        let report = validate(&sched, &inst, &a).unwrap();
        assert_eq!(report.count(ViolationKind::OrderMismatch), 1);
    }

    #[test]
    fn missing_task_is_malformed() {
        let inst = chain();
        let a = assign_machines(&inst);
        let mut sched = Schedule::from_starts(&inst, &a, vec![0, 3]);
        sched.starts.pop();
        assert!(matches!(validate(&sched, &inst, &a), Err(Error::MalformedSchedule(_))));
    }

    #[test]
    fn report_serializes_with_labels() {
        let inst = one_machine(&[5, 1], 2);
        let json = check(&inst, vec![0, 6]).to_json();
        assert!(json.contains("\"kind\": \"cleaning_gap\""), "{json}");
        assert!(json.contains("\"J0#1\""));
    }
}
