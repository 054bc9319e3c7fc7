//! Brute-force ground truth for small instances.
//!
//! Enumerates every combination of per-machine processing orders, builds
//! the left-shifted schedule of each by repeated forward passes, and keeps
//! the best. Shares no code with the solver beyond the instance types.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::instance::{Instance, MachineIdx, TaskId, Time};
use crate::preprocess::AssignmentResult;
use crate::solver::{evaluate_objective, Objective, ObjectiveValue, Schedule};

/// Largest number of tasks on one machine the oracle accepts.
pub const MAX_TASKS_PER_MACHINE: usize = 6;
/// Largest total task count the oracle accepts.
pub const MAX_TASKS: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub value: ObjectiveValue,
    pub schedule: Schedule,
}

/// Optimal value plus every machine-order combination attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalOrders {
    pub value: i64,
    pub orders: BTreeSet<Vec<Vec<TaskId>>>,
}

/// Rejects instances beyond the enumeration budget.
pub fn check_budget(instance: &Instance, assignment: &AssignmentResult) -> Result<()> {
    let n = instance.task_count();
    if n > MAX_TASKS {
        return Err(Error::OracleBudget(format!("{n} tasks (limit {MAX_TASKS})")));
    }
    for (m, machine) in instance.machines().iter().enumerate() {
        let k = assignment.tasks_on(MachineIdx(m)).len();
        if k > MAX_TASKS_PER_MACHINE {
            return Err(Error::OracleBudget(format!(
                "machine {} has {k} tasks (limit {MAX_TASKS_PER_MACHINE})",
                machine.id
            )));
        }
    }
    Ok(())
}

/// Minimum objective over all machine orders and the lexicographically
/// smallest start vector attaining it; `None` if no order is feasible.
pub fn oracle_solve(
    instance: &Instance,
    assignment: &AssignmentResult,
    objective: Objective,
) -> Result<Option<OracleSolution>> {
    let mut best: Option<OracleSolution> = None;
    enumerate(instance, assignment, |orders, starts| {
        let schedule = build_schedule(instance, orders, starts);
        let value = evaluate_objective(&schedule, instance, objective);
        let better = match &best {
            None => true,
            Some(b) => (value.scaled, &schedule.starts) < (b.value.scaled, &b.schedule.starts),
        };
        if better {
            best = Some(OracleSolution { value, schedule });
        }
    })?;
    Ok(best)
}

/// Every machine-order combination whose left-shifted schedule is optimal.
pub fn optimal_orders(
    instance: &Instance,
    assignment: &AssignmentResult,
    objective: Objective,
) -> Result<Option<OptimalOrders>> {
    let mut best: Option<OptimalOrders> = None;
    enumerate(instance, assignment, |orders, starts| {
        let schedule = build_schedule(instance, orders, starts);
        let value = evaluate_objective(&schedule, instance, objective).scaled;
        match &mut best {
            Some(b) if value > b.value => {}
            Some(b) if value == b.value => {
                b.orders.insert(orders.to_vec());
            }
            _ => {
                best = Some(OptimalOrders {
                    value,
                    orders: BTreeSet::from([orders.to_vec()]),
                })
            }
        }
    })?;
    Ok(best)
}

fn build_schedule(instance: &Instance, orders: &[Vec<TaskId>], starts: &[Time]) -> Schedule {
    let mut schedule = Schedule {
        starts: starts.to_vec(),
        ends: starts
            .iter()
            .enumerate()
            .map(|(t, s)| s + instance.task(TaskId(t)).duration)
            .collect(),
        machine_orders: orders.to_vec(),
        reported: None,
    };
    schedule.reported = Some(schedule.aggregates(instance));
    schedule
}

/// Calls `visit` with every feasible order combination and its left-shifted
/// start times, in lexicographic order of the combinations.
fn enumerate(
    instance: &Instance,
    assignment: &AssignmentResult,
    mut visit: impl FnMut(&[Vec<TaskId>], &[Time]),
) -> Result<()> {
    check_budget(instance, assignment)?;
    let machines = instance.machines().len();
    let per_machine: Vec<Vec<Vec<TaskId>>> = (0..machines)
        .map(|m| permutations(assignment.tasks_on(MachineIdx(m))))
        .collect();
    let blocked: Vec<Vec<(Time, Time)>> = (0..machines)
        .map(|m| {
            let mut spans: Vec<(Time, Time)> = instance
                .global_nonworking()
                .iter()
                .chain(&instance.machine(MachineIdx(m)).maintenance)
                .map(|w| (w.start, w.end))
                .collect();
            spans.sort_unstable();
            spans
        })
        .collect();

    let mut pick = vec![0usize; machines];
    loop {
        let orders: Vec<Vec<TaskId>> = pick
            .iter()
            .zip(&per_machine)
            .map(|(&i, perms)| perms[i].clone())
            .collect();
        if let Some(starts) = left_shift(instance, assignment, &orders, &blocked) {
            visit(&orders, &starts);
        }
        // Odometer, last machine fastest.
        let mut m = machines;
        loop {
            if m == 0 {
                return Ok(());
            }
            m -= 1;
            pick[m] += 1;
            if pick[m] < per_machine[m].len() {
                break;
            }
            pick[m] = 0;
        }
    }
}

/// All orderings of `items` in lexicographic order.
fn permutations(mut items: Vec<TaskId>) -> Vec<Vec<TaskId>> {
    items.sort_unstable();
    let mut out = vec![items.clone()];
    // Standard next-permutation.
    loop {
        let Some(i) = (1..items.len()).rev().find(|&i| items[i - 1] < items[i]) else {
            return out;
        };
        let j = (i..items.len()).rev().find(|&j| items[j] > items[i - 1]).expect("pivot");
        items.swap(i - 1, j);
        items[i..].reverse();
        out.push(items.clone());
    }
}

/// First start at or after `from` where `[start, start + d)` avoids every
/// blocked span.
fn naive_fit(spans: &[(Time, Time)], from: Time, d: Time) -> Time {
    let mut start = from;
    loop {
        match spans.iter().find(|&&(a, b)| a < start + d && start < b) {
            Some(&(_, b)) => start = b,
            None => return start,
        }
    }
}

/// Earliest starts under fixed machine orders, or `None` when the orders
/// deadlock against the job chains or the schedule overruns the horizon.
fn left_shift(
    instance: &Instance,
    assignment: &AssignmentResult,
    orders: &[Vec<TaskId>],
    blocked: &[Vec<(Time, Time)>],
) -> Option<Vec<Time>> {
    let n = instance.task_count();
    let mut machine_prev: Vec<Option<TaskId>> = vec![None; n];
    for order in orders {
        for pair in order.windows(2) {
            machine_prev[pair[1].0] = Some(pair[0]);
        }
    }
    let kappa = |a: TaskId, b: TaskId| -> Time {
        let m = assignment.assignments[b.0];
        instance
            .cleaning()
            .lookup(
                &instance.task(a).attributes,
                &instance.task(b).attributes,
                &instance.machine(m).operation_family,
            )
            .max(0)
    };
    let duration = |t: TaskId| instance.task(t).duration;
    let horizon = instance.horizon();

    let mut starts = vec![0; n];
    let mut passes = 0;
    loop {
        passes += 1;
        if passes > n + 1 {
            return None;
        }
        let mut changed = false;
        for t in 0..n {
            let id = TaskId(t);
            let mut release = 0;
            if let Some(p) = instance.job_predecessor(id) {
                release = release.max(starts[p.0] + duration(p));
            }
            if let Some(p) = machine_prev[t] {
                release = release.max(starts[p.0] + duration(p) + kappa(p, id));
            }
            let m = assignment.assignments[t];
            let s = naive_fit(&blocked[m.0], release, duration(id));
            if s != starts[t] {
                starts[t] = s;
                changed = true;
            }
            if s + duration(id) > horizon {
                return None;
            }
        }
        if !changed {
            return Some(starts);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CleaningKey, InstanceSpec, JobSpec, MachineSpec, TaskAttributes, TaskSpec, TimeScale};
    use crate::preprocess::assign_machines;
    use crate::validate::validate;

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

    fn solve(spec: InstanceSpec) -> (Instance, OracleSolution) {
        let inst = Instance::build(spec).unwrap();
        let a = assign_machines(&inst);
        let sol = oracle_solve(&inst, &a, Objective::Makespan).unwrap().unwrap();
        assert!(validate(&sol.schedule, &inst, &a).unwrap().is_empty());
        (inst, sol)
    }

    #[test]
    fn single_task() {
        let (_, sol) = solve(one_machine(&[5], 0));
        assert_eq!(sol.value.scaled, 5);
        assert_eq!(sol.schedule.starts, vec![0]);
    }

    #[test]
    fn symmetric_cleaning() {
        let (_, sol) = solve(one_machine(&[2, 3], 1));
        assert_eq!(sol.value.makespan, 6);
    }

    #[test]
    fn asymmetric_cleaning_puts_short_task_first() {
        let mut spec = one_machine(&[2, 3], 0);
        spec.jobs[0].tasks[0].attributes = TaskAttributes::new("a", "", "");
        spec.jobs[1].tasks[0].attributes = TaskAttributes::new("b", "", "");
        spec.cleaning.entries.insert(CleaningKey::new(("a", "default"), ("b", "default"), "f"), 0);
        spec.cleaning.entries.insert(CleaningKey::new(("b", "default"), ("a", "default"), "f"), 5);
        let (_, sol) = solve(spec);
        assert_eq!(sol.value.makespan, 5);
        assert_eq!(sol.schedule.machine_orders[0], vec![TaskId(0), TaskId(1)]);
        assert_eq!(sol.schedule.starts, vec![0, 2]);
    }

    #[test]
    fn calendar_pushes_task_past_break() {
        let mut spec = one_machine(&[3], 0);
        spec.global_nonworking.push((2, 4));
        let (_, sol) = solve(spec);
        assert_eq!(sol.schedule.starts, vec![4]);
    }

    #[test]
    fn cross_machine_cycles_are_discarded() {
        // Two jobs A->B and B->A; orders that contradict both chains deadlock.
        let mut spec = InstanceSpec::new(TimeScale::unit());
        spec.machines.push(MachineSpec::new("A", "f"));
        spec.machines.push(MachineSpec::new("B", "f"));
        spec.jobs.push(JobSpec {
            id: "J0".into(),
            due_date: 0,
            tasks: vec![TaskSpec::new(2, &["A"]), TaskSpec::new(2, &["B"])],
        });
        spec.jobs.push(JobSpec {
            id: "J1".into(),
            due_date: 0,
            tasks: vec![TaskSpec::new(2, &["B"]), TaskSpec::new(2, &["A"])],
        });
        let inst = Instance::build(spec).unwrap();
        let a = assign_machines(&inst);
        let all = optimal_orders(&inst, &a, Objective::Makespan).unwrap().unwrap();
        assert_eq!(all.value, 4);
        assert_eq!(all.orders.len(), 1);
    }

    #[test]
    fn permutations_are_lexicographic() {
        let p = permutations(vec![TaskId(2), TaskId(0), TaskId(1)]);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![TaskId(0), TaskId(1), TaskId(2)]);
        assert_eq!(p[5], vec![TaskId(2), TaskId(1), TaskId(0)]);
    }

    #[test]
    fn budget_is_enforced() {
        let inst = Instance::build(one_machine(&[1; 7], 0)).unwrap();
        let a = assign_machines(&inst);
        match oracle_solve(&inst, &a, Objective::Makespan) {
            Err(Error::OracleBudget(msg)) => assert!(msg.contains("7 tasks"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
