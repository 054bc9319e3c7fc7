use thiserror::Error;

use super::Objective;
use crate::instance::{BlockedTime, Instance, MachineIdx, TaskId, Time};
use crate::preprocess::{AssignmentResult, SetupMatrix};

/// End point of a sequencing arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArcEnd {
    Source,
    Sink,
    Task(TaskId),
}

/// Decision `to` immediately follows `from` on `machine`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequenceArc {
    pub machine: MachineIdx,
    pub from: ArcEnd,
    pub to: ArcEnd,
    /// Cleaning time for task-task arcs, zero for sentinel arcs.
    pub setup: Time,
}

impl SequenceArc {
    pub fn is_task_arc(&self) -> bool {
        matches!((self.from, self.to), (ArcEnd::Task(_), ArcEnd::Task(_)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcState {
    Selected,
    Excluded,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("task {label} (duration {duration}) fits no working window of its machine (longest {longest})")]
    TaskDoesNotFit {
        task: TaskId,
        label: String,
        duration: Time,
        longest: Time,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct MachineModel {
    pub tasks: Vec<usize>,
    /// `setup[a * n + b]`: cleaning when local `b` directly follows local `a`.
    pub setup: Vec<Time>,
    /// `gap[a * n + b]`: lower bound on `S_b - E_a` whenever `a` precedes `b`,
    /// directly or not.
    pub gap: Vec<Time>,
    pub blocked: BlockedTime,
}

impl MachineModel {
    pub fn n(&self) -> usize {
        self.tasks.len()
    }
}

/// Constraint model over one instance with fixed machine assignment.
///
/// Holds the job chains, per-machine setup and calendar data, the arc
/// variables of every machine circuit, and the objective.
#[derive(Debug, Clone)]
pub struct Model<'a> {
    pub(crate) instance: &'a Instance,
    pub(crate) objective: Objective,
    pub(crate) horizon: Time,
    pub(crate) duration: Vec<Time>,
    pub(crate) machine_of: Vec<usize>,
    pub(crate) local_of: Vec<usize>,
    pub(crate) job_prev: Vec<Option<usize>>,
    pub(crate) job_next: Vec<Option<usize>>,
    pub(crate) job_last: Vec<usize>,
    pub(crate) due: Vec<Time>,
    /// Processing still needed in the job after the task ends.
    pub(crate) job_tail: Vec<Time>,
    pub(crate) machines: Vec<MachineModel>,
    arcs: Vec<SequenceArc>,
}

pub fn build_model<'a>(
    instance: &'a Instance,
    assignment: &AssignmentResult,
    setups: &[SetupMatrix],
    objective: Objective,
) -> Result<Model<'a>, ModelError> {
    let n = instance.task_count();
    let horizon = instance.horizon();
    let duration: Vec<Time> = instance.task_ids().map(|t| instance.task(t).duration).collect();
    let machine_of: Vec<usize> = assignment.assignments.iter().map(|m| m.0).collect();
    let mut local_of = vec![0; n];
    let mut job_prev = vec![None; n];
    let mut job_next = vec![None; n];
    let mut job_tail = vec![0; n];
    let mut job_last = Vec::with_capacity(instance.jobs().len());
    let mut due = Vec::with_capacity(instance.jobs().len());
    for (j, job) in instance.jobs().iter().enumerate() {
        let ids: Vec<usize> = instance.job_tasks(crate::instance::JobIdx(j)).map(|t| t.0).collect();
        let mut tail = 0;
        for (k, &t) in ids.iter().enumerate().rev() {
            job_tail[t] = tail;
            tail += duration[t];
            if k > 0 {
                job_prev[t] = Some(ids[k - 1]);
            }
            if k + 1 < ids.len() {
                job_next[t] = Some(ids[k + 1]);
            }
        }
        job_last.push(*ids.last().expect("jobs are nonempty"));
        due.push(job.due_date);
    }

    let mut machines = Vec::with_capacity(instance.machines().len());
    let mut arcs = Vec::new();
    for (m, matrix) in setups.iter().enumerate() {
        debug_assert_eq!(matrix.machine, MachineIdx(m));
        let tasks: Vec<usize> = matrix.tasks.iter().map(|t| t.0).collect();
        let k = tasks.len();
        let blocked = instance.blocked_time(MachineIdx(m));
        let longest = blocked.longest_window(horizon);
        for &t in &tasks {
            if duration[t] > longest {
                return Err(ModelError::TaskDoesNotFit {
                    task: TaskId(t),
                    label: instance.task_label(TaskId(t)),
                    duration: duration[t],
                    longest,
                });
            }
        }
        let mut setup = vec![0; k * k];
        for a in 0..k {
            local_of[tasks[a]] = a;
            for b in 0..k {
                if a != b {
                    setup[a * k + b] = matrix.at(a, b);
                }
            }
        }
        let mut gap = vec![0; k * k];
        for a in 0..k {
            let via = (0..k)
                .filter(|&c| c != a)
                .map(|c| (c, setup[a * k + c] + duration[tasks[c]]));
            for b in 0..k {
                if a == b {
                    continue;
                }
                let detour = via
                    .clone()
                    .filter(|&(c, _)| c != b)
                    .map(|(_, w)| w)
                    .min()
                    .unwrap_or(Time::MAX);
                gap[a * k + b] = setup[a * k + b].min(detour);
            }
        }
        for a in 0..k {
            let from = TaskId(tasks[a]);
            arcs.push(SequenceArc {
                machine: MachineIdx(m),
                from: ArcEnd::Source,
                to: ArcEnd::Task(from),
                setup: 0,
            });
            arcs.push(SequenceArc {
                machine: MachineIdx(m),
                from: ArcEnd::Task(from),
                to: ArcEnd::Sink,
                setup: 0,
            });
            for b in 0..k {
                if a != b {
                    arcs.push(SequenceArc {
                        machine: MachineIdx(m),
                        from: ArcEnd::Task(from),
                        to: ArcEnd::Task(TaskId(tasks[b])),
                        setup: setup[a * k + b],
                    });
                }
            }
        }
        machines.push(MachineModel {
            tasks,
            setup,
            gap,
            blocked,
        });
    }

    Ok(Model {
        instance,
        objective,
        horizon,
        duration,
        machine_of,
        local_of,
        job_prev,
        job_next,
        job_last,
        due,
        job_tail,
        machines,
        arcs,
    })
}

impl<'a> Model<'a> {
    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn horizon(&self) -> Time {
        self.horizon
    }

    pub fn arcs(&self) -> &[SequenceArc] {
        &self.arcs
    }

    /// Task-to-task arc variables (the sequencing literals).
    pub fn task_arc_count(&self) -> usize {
        self.arcs.iter().filter(|a| a.is_task_arc()).count()
    }

    pub fn sentinel_arc_count(&self) -> usize {
        self.arcs.len() - self.task_arc_count()
    }

    pub(crate) fn setup(&self, from: usize, to: usize) -> Time {
        let m = &self.machines[self.machine_of[from]];
        m.setup[self.local_of[from] * m.n() + self.local_of[to]]
    }

    pub(crate) fn gap(&self, from: usize, to: usize) -> Time {
        let m = &self.machines[self.machine_of[from]];
        m.gap[self.local_of[from] * m.n() + self.local_of[to]]
    }

    pub(crate) fn blocked(&self, task: usize) -> &BlockedTime {
        &self.machines[self.machine_of[task]].blocked
    }

    pub(crate) fn job_count(&self) -> usize {
        self.job_last.len()
    }
}
