//! JSON schedule documents. Times are integer model units.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, JobIdx, MachineIdx, TaskId, Time};
use crate::preprocess::AssignmentResult;
use crate::solver::{ReportedAggregates, Schedule};

use super::instance_doc::FORMAT_VERSION;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEntry {
    pub task: String,
    pub machine: String,
    pub start: Time,
    pub end: Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleDocument {
    pub format_version: u32,
    /// Model units per base unit.
    pub scale_factor: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    pub tasks: Vec<TaskEntry>,
    #[serde(default)]
    pub machine_orders: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub makespan: Option<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_tardiness: Option<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub job_tardiness: Option<BTreeMap<String, Time>>,
}

impl ScheduleDocument {
    pub fn from_schedule(schedule: &Schedule, instance: &Instance, assignment: &AssignmentResult) -> Self {
        let machine_name = |m: MachineIdx| instance.machine(m).id.clone();
        let tasks = instance
            .task_ids()
            .map(|t| TaskEntry {
                task: instance.task_label(t),
                machine: machine_name(assignment.machine_of(t)),
                start: schedule.starts[t.0],
                end: schedule.ends[t.0],
            })
            .collect();
        let machine_orders = schedule
            .machine_orders
            .iter()
            .enumerate()
            .map(|(m, order)| {
                (
                    machine_name(MachineIdx(m)),
                    order.iter().map(|&t| instance.task_label(t)).collect(),
                )
            })
            .collect();
        let rep = schedule.reported.as_ref();
        Self {
            format_version: FORMAT_VERSION,
            scale_factor: instance.time_scale().factor(),
            objective: None,
            status: None,
            tasks,
            machine_orders,
            makespan: rep.map(|r| r.makespan),
            total_tardiness: rep.map(|r| r.total_tardiness),
            job_tardiness: rep.map(|r| {
                r.job_tardiness
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| (instance.job(JobIdx(j)).id.clone(), v))
                    .collect()
            }),
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("document serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::invalid(
                "format_version",
                format!("unsupported version {} (expected {FORMAT_VERSION})", doc.format_version),
            ));
        }
        Ok(doc)
    }

    /// Resolves labels against `instance`. Every task must appear exactly
    /// once; the machine of each entry becomes the assignment.
    pub fn to_schedule(&self, instance: &Instance) -> Result<(Schedule, AssignmentResult)> {
        if self.scale_factor != instance.time_scale().factor() {
            return Err(Error::MalformedSchedule(format!(
                "scale factor {} does not match the instance ({})",
                self.scale_factor,
                instance.time_scale().factor()
            )));
        }
        let labels: BTreeMap<String, TaskId> = instance.task_ids().map(|t| (instance.task_label(t), t)).collect();
        let task_of = |label: &str| {
            labels
                .get(label)
                .copied()
                .ok_or_else(|| Error::MalformedSchedule(format!("unknown task {label:?}")))
        };
        let machine_of = |id: &str| {
            instance
                .machine_by_id(id)
                .ok_or_else(|| Error::MalformedSchedule(format!("unknown machine {id:?}")))
        };
        let n = instance.task_count();
        let mut seen = vec![false; n];
        let mut starts = vec![0; n];
        let mut ends = vec![0; n];
        let mut assignments = vec![MachineIdx(0); n];
        for entry in &self.tasks {
            let t = task_of(&entry.task)?;
            if std::mem::replace(&mut seen[t.0], true) {
                return Err(Error::MalformedSchedule(format!("task {} listed twice", entry.task)));
            }
            starts[t.0] = entry.start;
            ends[t.0] = entry.end;
            assignments[t.0] = machine_of(&entry.machine)?;
        }
        if let Some(t) = seen.iter().position(|s| !s) {
            return Err(Error::MalformedSchedule(format!(
                "task {} is missing",
                instance.task_label(TaskId(t))
            )));
        }
        let mut machine_orders = vec![Vec::new(); instance.machines().len()];
        for (machine, order) in &self.machine_orders {
            let m = machine_of(machine)?;
            machine_orders[m.0] = order.iter().map(|l| task_of(l)).collect::<Result<_>>()?;
        }
        if self.machine_orders.is_empty() {
            machine_orders.clear();
        }
        let reported = match (self.makespan, self.total_tardiness, &self.job_tardiness) {
            (Some(makespan), Some(total_tardiness), Some(per_job)) => {
                let mut job_tardiness = vec![0; instance.jobs().len()];
                for (id, &v) in per_job {
                    let j = instance
                        .job_by_id(id)
                        .ok_or_else(|| Error::MalformedSchedule(format!("unknown job {id:?}")))?;
                    job_tardiness[j.0] = v;
                }
                Some(ReportedAggregates {
                    makespan,
                    job_tardiness,
                    total_tardiness,
                })
            }
            (None, None, None) => None,
            _ => {
                return Err(Error::MalformedSchedule(
                    "makespan, total_tardiness and job_tardiness must appear together".into(),
                ))
            }
        };
        let schedule = Schedule {
            starts,
            ends,
            machine_orders,
            reported,
        };
        Ok((schedule, AssignmentResult::from_assignments(instance, assignments)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{InstanceSpec, JobSpec, MachineSpec, TaskSpec, TimeScale};
    use crate::preprocess::assign_machines;

    fn fixture() -> (Instance, AssignmentResult, Schedule) {
        let mut spec = InstanceSpec::new(TimeScale::unit());
        spec.machines.push(MachineSpec::new("A", "f"));
        spec.machines.push(MachineSpec::new("B", "f"));
        spec.jobs.push(JobSpec {
            id: "J".into(),
            due_date: 5,
            tasks: vec![TaskSpec::new(3, &["A"]), TaskSpec::new(4, &["B"])],
        });
        let inst = Instance::build(spec).unwrap();
        let a = assign_machines(&inst);
        let s = Schedule::from_starts(&inst, &a, vec![0, 3]);
        (inst, a, s)
    }

    #[test]
    fn round_trip() {
        let (inst, a, s) = fixture();
        let text = ScheduleDocument::from_schedule(&s, &inst, &a).to_json();
        let (back, back_a) = ScheduleDocument::from_json(&text).unwrap().to_schedule(&inst).unwrap();
        assert_eq!(back, s);
        assert_eq!(back_a, a);
    }

    #[test]
    fn missing_task_is_malformed() {
        let (inst, a, s) = fixture();
        let mut doc = ScheduleDocument::from_schedule(&s, &inst, &a);
        doc.tasks.pop();
        assert!(matches!(doc.to_schedule(&inst), Err(Error::MalformedSchedule(_))));
    }
}
