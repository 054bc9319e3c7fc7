//! Bound propagation for a partial sequencing.
//!
//! A search state fixes, for every machine, a prefix of its processing order.
//! Propagation derives start-time windows from the job chains, the fixed
//! prefixes (with cleaning), the calendars, an objective deadline taken from
//! the incumbent, and pairwise ordering deductions among unsequenced tasks.

use std::fmt;

use super::model::{ArcEnd, ArcState, Model, SequenceArc};
use crate::instance::{TaskId, Time};

/// Per-machine processing-order prefixes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SearchState {
    pub(crate) seq: Vec<Vec<usize>>,
    pub(crate) sequenced: Vec<bool>,
}

impl SearchState {
    pub fn root(model: &Model<'_>) -> Self {
        Self {
            seq: vec![Vec::new(); model.machines.len()],
            sequenced: vec![false; model.duration.len()],
        }
    }

    /// Selects the arc from the current last task (or the source) of the
    /// task's machine to `task`.
    pub fn append(&mut self, model: &Model<'_>, task: TaskId) {
        debug_assert!(!self.sequenced[task.0]);
        self.seq[model.machine_of[task.0]].push(task.0);
        self.sequenced[task.0] = true;
    }

    pub fn is_complete(&self) -> bool {
        self.sequenced.iter().all(|&s| s)
    }

    pub fn order(&self, machine: usize) -> impl Iterator<Item = TaskId> + '_ {
        self.seq[machine].iter().map(|&t| TaskId(t))
    }

    pub(crate) fn unsequenced<'m>(&'m self, model: &'m Model<'_>, machine: usize) -> impl Iterator<Item = usize> + 'm {
        model.machines[machine]
            .tasks
            .iter()
            .copied()
            .filter(move |&t| !self.sequenced[t])
    }

    /// Ternary view of an arc variable implied by the prefixes.
    pub fn arc_state(&self, model: &Model<'_>, arc: &SequenceArc) -> ArcState {
        let seq = &self.seq[arc.machine.0];
        let pos = |t: TaskId| seq.iter().position(|&x| x == t.0);
        let complete = seq.len() == model.machines[arc.machine.0].n();
        match (arc.from, arc.to) {
            (ArcEnd::Source, ArcEnd::Task(b)) => match pos(b) {
                Some(0) => ArcState::Selected,
                Some(_) => ArcState::Excluded,
                None if seq.is_empty() => ArcState::Undecided,
                None => ArcState::Excluded,
            },
            (ArcEnd::Task(a), ArcEnd::Task(b)) => match (pos(a), pos(b)) {
                (Some(i), Some(j)) if j == i + 1 => ArcState::Selected,
                (Some(_), Some(_)) => ArcState::Excluded,
                (Some(i), None) if i + 1 == seq.len() => ArcState::Undecided,
                (Some(_), None) => ArcState::Excluded,
                (None, Some(_)) => ArcState::Excluded,
                (None, None) => ArcState::Undecided,
            },
            (ArcEnd::Task(a), ArcEnd::Sink) => match pos(a) {
                Some(i) if i + 1 < seq.len() => ArcState::Excluded,
                Some(_) if complete => ArcState::Selected,
                _ => ArcState::Undecided,
            },
            _ => ArcState::Excluded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConflictKind {
    /// Job chains and chosen orders form a cycle.
    Precedence,
    /// A task cannot end by the horizon.
    Horizon,
    /// A start window became empty under the deadlines and calendars.
    Window,
    /// Two unsequenced tasks can be ordered neither way.
    Disjunctive,
    /// The lower bound cannot beat the incumbent.
    Bound,
}

impl fmt::Display for ConflictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConflictKind::Precedence => "precedence",
            ConflictKind::Horizon => "horizon",
            ConflictKind::Window => "window",
            ConflictKind::Disjunctive => "disjunctive",
            ConflictKind::Bound => "bound",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conflict {
    pub kind: ConflictKind,
    pub tasks: Vec<TaskId>,
}

impl Conflict {
    fn new(kind: ConflictKind, tasks: Vec<usize>) -> Self {
        Self {
            kind,
            tasks: tasks.into_iter().map(TaskId).collect(),
        }
    }
}

/// Fixpoint of a propagation call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Propagation {
    /// Earliest start per task.
    pub head: Vec<Time>,
    /// Latest start per task.
    pub latest: Vec<Time>,
    /// Admissible lower bound on the integer objective in this subtree.
    pub lower_bound: i64,
    pub makespan_bound: Time,
    /// Deduced `(before, after)` pairs among unsequenced tasks.
    pub forced: Vec<(usize, usize)>,
    pub rounds: u32,
}

impl Propagation {
    pub fn start_lower(&self, t: TaskId) -> Time {
        self.head[t.0]
    }

    pub fn start_upper(&self, t: TaskId) -> Time {
        self.latest[t.0]
    }
}

const MAX_ROUNDS: u32 = 32;

struct Edge {
    to: usize,
    /// `S_to >= S_from + weight`.
    weight: Time,
}

impl<'a> Model<'a> {
    /// Propagates a state to a fixpoint.
    ///
    /// `incumbent` is the best integer objective known; the subtree must
    /// strictly improve on it.
    pub fn propagate(&self, state: &SearchState, incumbent: Option<i64>) -> Result<Propagation, Conflict> {
        let n = self.duration.len();
        let mut forced: Vec<(usize, usize)> = Vec::new();
        let mut rounds = 0;
        loop {
            rounds += 1;
            let (succ, indegree) = self.edges(state, &forced);
            let order = topological_order(&succ, indegree)
                .map_err(|stuck| Conflict::new(ConflictKind::Precedence, stuck))?;

            let mut head = vec![0; n];
            for &t in &order {
                let start = self.blocked(t).earliest_fit(head[t], self.duration[t]);
                if start + self.duration[t] > self.horizon {
                    return Err(Conflict::new(ConflictKind::Horizon, vec![t]));
                }
                head[t] = start;
                for e in &succ[t] {
                    head[e.to] = head[e.to].max(start + e.weight);
                }
            }

            let (makespan_bound, tardiness) = self.bounds(state, &head);
            let weight = self.objective.makespan_weight(self.job_count());
            let tardiness_sum: Time = tardiness.iter().sum();
            let lower_bound = if self.objective.counts_tardiness() {
                weight * makespan_bound + tardiness_sum
            } else {
                makespan_bound
            };
            if let Some(best) = incumbent {
                if lower_bound >= best {
                    return Err(Conflict::new(ConflictKind::Bound, Vec::new()));
                }
            }

            // Deadlines on task ends.
            let mut deadline = vec![self.horizon; n];
            if let Some(best) = incumbent {
                let cmax = if self.objective.counts_tardiness() {
                    (best - 1 - tardiness_sum).div_euclid(weight)
                } else {
                    best - 1
                };
                for d in deadline.iter_mut() {
                    *d = (*d).min(cmax);
                }
                if self.objective.counts_tardiness() {
                    for (j, &last) in self.job_last.iter().enumerate() {
                        let slack = best - 1 - (lower_bound - tardiness[j]);
                        deadline[last] = deadline[last].min(self.due[j] + slack);
                    }
                }
            }

            let mut latest = vec![Time::MAX; n];
            for &t in order.iter().rev() {
                let mut ub = deadline[t] - self.duration[t];
                for e in &succ[t] {
                    ub = ub.min(latest[e.to] - e.weight);
                }
                let fitted = self.blocked(t).latest_fit(ub, self.duration[t]);
                if fitted < head[t] {
                    return Err(Conflict::new(ConflictKind::Window, vec![t]));
                }
                latest[t] = fitted;
            }

            let mut changed = false;
            for m in 0..self.machines.len() {
                let open: Vec<usize> = state.unsequenced(self, m).collect();
                for (i, &a) in open.iter().enumerate() {
                    for &b in &open[i + 1..] {
                        let a_first = head[a] + self.duration[a] + self.gap(a, b) <= latest[b];
                        let b_first = head[b] + self.duration[b] + self.gap(b, a) <= latest[a];
                        match (a_first, b_first) {
                            (false, false) => {
                                return Err(Conflict::new(ConflictKind::Disjunctive, vec![a, b]))
                            }
                            (true, false) if !forced.contains(&(a, b)) => {
                                forced.push((a, b));
                                changed = true;
                            }
                            (false, true) if !forced.contains(&(b, a)) => {
                                forced.push((b, a));
                                changed = true;
                            }
                            _ => {}
                        }
                    }
                }
            }

            if !changed || rounds >= MAX_ROUNDS {
                return Ok(Propagation {
                    head,
                    latest,
                    lower_bound,
                    makespan_bound,
                    forced,
                    rounds,
                });
            }
        }
    }

    /// Precedence graph of the state: job chains, fixed prefixes, every
    /// unsequenced task after its machine's prefix, and deduced orders.
    fn edges(&self, state: &SearchState, forced: &[(usize, usize)]) -> (Vec<Vec<Edge>>, Vec<usize>) {
        let n = self.duration.len();
        let mut succ: Vec<Vec<Edge>> = (0..n).map(|_| Vec::new()).collect();
        let mut indegree = vec![0usize; n];
        let mut add = |from: usize, to: usize, weight: Time, succ: &mut Vec<Vec<Edge>>| {
            succ[from].push(Edge { to, weight });
            indegree[to] += 1;
        };
        for t in 0..n {
            if let Some(next) = self.job_next[t] {
                add(t, next, self.duration[t], &mut succ);
            }
        }
        for (m, seq) in state.seq.iter().enumerate() {
            for w in seq.windows(2) {
                add(w[0], w[1], self.duration[w[0]] + self.setup(w[0], w[1]), &mut succ);
            }
            if let Some(&last) = seq.last() {
                let open: Vec<usize> = state.unsequenced(self, m).collect();
                for &b in &open {
                    let min_in = std::iter::once(last)
                        .chain(open.iter().copied().filter(|&x| x != b))
                        .map(|x| self.setup(x, b))
                        .min()
                        .unwrap_or(0);
                    add(last, b, self.duration[last] + min_in, &mut succ);
                }
            }
        }
        for &(a, b) in forced {
            add(a, b, self.duration[a] + self.gap(a, b), &mut succ);
        }
        (succ, indegree)
    }

    /// Lower bounds on the makespan and on each job's tardiness.
    fn bounds(&self, state: &SearchState, head: &[Time]) -> (Time, Vec<Time>) {
        let mut cmax = 0;
        let mut tardiness = Vec::with_capacity(self.job_last.len());
        for (j, &last) in self.job_last.iter().enumerate() {
            let end = head[last] + self.duration[last];
            cmax = cmax.max(end);
            tardiness.push((end - self.due[j]).max(0));
        }
        for (m, machine) in self.machines.iter().enumerate() {
            let open: Vec<usize> = state.unsequenced(self, m).collect();
            if open.is_empty() {
                continue;
            }
            let last = state.seq[m].last().copied();
            let release = open.iter().map(|&t| head[t]).min().unwrap_or(0);
            let work: Time = open.iter().map(|&t| self.duration[t]).sum();
            let tail = open.iter().map(|&t| self.job_tail[t]).min().unwrap_or(0);
            let min_in: Vec<Time> = open
                .iter()
                .map(|&b| {
                    last.into_iter()
                        .chain(open.iter().copied().filter(|&x| x != b))
                        .map(|x| self.setup(x, b))
                        .min()
                        .unwrap_or(0)
                })
                .collect();
            // Heads already include the cleaning into the first open task.
            let cleaning: Time =
                min_in.iter().sum::<Time>() - min_in.iter().copied().max().unwrap_or(0);
            let by_sum = release + work + cleaning + tail;
            let by_calendar = machine.blocked.advance_working(release, work) + tail;
            cmax = cmax.max(by_sum).max(by_calendar);
        }
        (cmax, tardiness)
    }
}

/// Kahn's algorithm; on a cycle returns the tasks that never became free.
fn topological_order(succ: &[Vec<Edge>], mut indegree: Vec<usize>) -> Result<Vec<usize>, Vec<usize>> {
    let mut stack: Vec<usize> = (0..succ.len()).rev().filter(|&t| indegree[t] == 0).collect();
    let mut order = Vec::with_capacity(succ.len());
    while let Some(t) = stack.pop() {
        order.push(t);
        for e in succ[t].iter().rev() {
            indegree[e.to] -= 1;
            if indegree[e.to] == 0 {
                stack.push(e.to);
            }
        }
    }
    if order.len() == succ.len() {
        Ok(order)
    } else {
        Err((0..succ.len()).filter(|&t| indegree[t] > 0).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Instance, InstanceSpec, JobSpec, MachineSpec, TaskSpec, TimeScale};
    use crate::preprocess::{assign_machines, build_setup_matrices};
    use crate::solver::{build_model, Objective};

    fn with_model<R>(spec: InstanceSpec, f: impl FnOnce(&Model<'_>) -> R) -> R {
        let inst = Instance::build(spec).unwrap();
        let a = assign_machines(&inst);
        let s = build_setup_matrices(&inst, &a);
        let model = build_model(&inst, &a, &s, Objective::Makespan).unwrap();
        f(&model)
    }

    fn single_machine(durations: &[Time], cleaning: Time, horizon: Time) -> InstanceSpec {
        let mut spec = InstanceSpec::new(TimeScale::unit());
        spec.machines.push(MachineSpec::new("M", "f"));
        spec.cleaning.global_default = cleaning;
        spec.horizon = Some(horizon);
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
    fn job_chain_windows() {
        let mut spec = InstanceSpec::new(TimeScale::unit());
        spec.machines.push(MachineSpec::new("M1", "f"));
        spec.machines.push(MachineSpec::new("M2", "f"));
        spec.jobs.push(JobSpec {
            id: "J".into(),
            due_date: 0,
            tasks: vec![TaskSpec::new(3, &["M1"]), TaskSpec::new(4, &["M2"])],
        });
        spec.horizon = Some(10);
        with_model(spec, |model| {
            let p = model.propagate(&SearchState::root(model), None).unwrap();
            assert_eq!(p.start_lower(TaskId(1)), 3);
            assert_eq!(p.start_upper(TaskId(0)), 3);
            assert_eq!(p.start_upper(TaskId(1)), 6);
        });
    }

    #[test]
    fn single_task_window_is_zero_to_h_minus_p() {
        with_model(single_machine(&[4], 0, 9), |model| {
            let p = model.propagate(&SearchState::root(model), None).unwrap();
            assert_eq!((p.head[0], p.latest[0]), (0, 5));
        });
    }

    #[test]
    fn break_pushes_start_past_window() {
        let mut spec = single_machine(&[3], 0, 20);
        spec.global_nonworking = vec![(2, 4)];
        // Starts 0..=3 overlap [2, 4) for a 3-long task.
        let feasible: Vec<Time> = (0..=6).filter(|s| s + 3 <= 2 || *s >= 4).collect();
        assert_eq!(feasible[0], 4);
        with_model(spec, |model| {
            let p = model.propagate(&SearchState::root(model), None).unwrap();
            assert_eq!(p.head[0], 4);
        });
    }

    #[test]
    fn pairwise_ordering_at_tight_horizons() {
        // Both orders need 2 + 1 + 3 = 6.
        with_model(single_machine(&[2, 3], 1, 6), |model| {
            let p = model.propagate(&SearchState::root(model), None).unwrap();
            assert!(p.forced.is_empty());
        });
        with_model(single_machine(&[2, 3], 1, 5), |model| {
            let c = model.propagate(&SearchState::root(model), None).unwrap_err();
            assert_eq!(c.kind, ConflictKind::Disjunctive);
        });
    }

    #[test]
    fn asymmetric_cleaning_forces_order() {
        let mut spec = single_machine(&[2, 3], 0, 7);
        spec.cleaning = crate::instance::CleaningTable::uniform(0);
        let mut inst_spec = spec.clone();
        inst_spec.jobs[1].tasks[0].attributes = crate::instance::TaskAttributes::new("B", "x", "f");
        inst_spec.jobs[0].tasks[0].attributes = crate::instance::TaskAttributes::new("A", "x", "f");
        inst_spec.cleaning.entries.insert(
            crate::instance::CleaningKey::new(("B", "x"), ("A", "x"), "f"),
            5,
        );
        with_model(inst_spec, |model| {
            // J1 -> J0 needs 3 + 5 + 2 = 10 > 7, so J0 must come first.
            let p = model.propagate(&SearchState::root(model), None).unwrap();
            assert_eq!(p.forced, vec![(0, 1)]);
            assert_eq!(p.head[1], 2);
        });
    }

    #[test]
    fn incumbent_prunes_equal_bound() {
        with_model(single_machine(&[2, 3], 1, 20), |model| {
            let p = model.propagate(&SearchState::root(model), None).unwrap();
            assert_eq!(p.lower_bound, 6);
            let c = model.propagate(&SearchState::root(model), Some(6)).unwrap_err();
            assert_eq!(c.kind, ConflictKind::Bound);
            assert!(model.propagate(&SearchState::root(model), Some(7)).is_ok());
        });
    }

    #[test]
    fn prefix_fixes_order_and_cleaning() {
        with_model(single_machine(&[2, 3, 1], 2, 30), |model| {
            let mut state = SearchState::root(model);
            state.append(model, TaskId(1));
            state.append(model, TaskId(0));
            let p = model.propagate(&state, None).unwrap();
            assert_eq!(p.head[0], 5);
            assert_eq!(p.head[2], 9);
            assert_eq!(p.lower_bound, 10);
        });
    }

    #[test]
    fn arc_states_follow_prefix() {
        with_model(single_machine(&[1, 1, 1], 0, 10), |model| {
            let mut state = SearchState::root(model);
            state.append(model, TaskId(2));
            let find = |from: ArcEnd, to: ArcEnd| {
                *model.arcs().iter().find(|a| a.from == from && a.to == to).unwrap()
            };
            let t = |i| ArcEnd::Task(TaskId(i));
            assert_eq!(state.arc_state(model, &find(ArcEnd::Source, t(2))), ArcState::Selected);
            assert_eq!(state.arc_state(model, &find(ArcEnd::Source, t(0))), ArcState::Excluded);
            assert_eq!(state.arc_state(model, &find(t(2), t(0))), ArcState::Undecided);
            assert_eq!(state.arc_state(model, &find(t(0), t(2))), ArcState::Excluded);
            assert_eq!(state.arc_state(model, &find(t(0), t(1))), ArcState::Undecided);
            state.append(model, TaskId(0));
            assert_eq!(state.arc_state(model, &find(t(2), t(0))), ArcState::Selected);
            assert_eq!(state.arc_state(model, &find(t(2), t(1))), ArcState::Excluded);
            assert_eq!(state.arc_state(model, &find(t(2), ArcEnd::Sink)), ArcState::Excluded);
        });
    }

    #[test]
    fn cyclic_orders_conflict() {
        // A: A1 (M1) -> A2 (M2); B: B1 (M2) -> B2 (M1).
        // M1 runs B2 before A1 and M2 runs A2 before B1: A1 -> A2 -> B1 -> B2 -> A1.
        let mut spec = InstanceSpec::new(TimeScale::unit());
        spec.machines.push(MachineSpec::new("M1", "f"));
        spec.machines.push(MachineSpec::new("M2", "f"));
        spec.jobs.push(JobSpec {
            id: "A".into(),
            due_date: 0,
            tasks: vec![TaskSpec::new(1, &["M1"]), TaskSpec::new(1, &["M2"])],
        });
        spec.jobs.push(JobSpec {
            id: "B".into(),
            due_date: 0,
            tasks: vec![TaskSpec::new(1, &["M2"]), TaskSpec::new(1, &["M1"])],
        });
        with_model(spec, |model| {
            let mut state = SearchState::root(model);
            state.append(model, TaskId(3));
            state.append(model, TaskId(1));
            let c = model.propagate(&state, None).unwrap_err();
            assert_eq!(c.kind, ConflictKind::Precedence);
        });
    }
}
