use crate::instance::{Instance, MachineIdx, TaskId, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MachineLoad {
    pub task_count: usize,
    pub total_processing: Time,
}

/// One designated machine per task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentResult {
    /// Indexed by [`TaskId`].
    pub assignments: Vec<MachineIdx>,
    /// Indexed by [`MachineIdx`].
    pub per_machine_load: Vec<MachineLoad>,
}

impl AssignmentResult {
    pub fn machine_of(&self, task: TaskId) -> MachineIdx {
        self.assignments[task.0]
    }

    /// Tasks of machine `m` in [`TaskId`] order.
    pub fn tasks_on(&self, m: MachineIdx) -> Vec<TaskId> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == m)
            .map(|(i, _)| TaskId(i))
            .collect()
    }

    /// Builds a result from explicit assignments and recomputes the loads.
    pub fn from_assignments(instance: &Instance, assignments: Vec<MachineIdx>) -> Self {
        let mut per_machine_load = vec![MachineLoad::default(); instance.machines().len()];
        for (i, m) in assignments.iter().enumerate() {
            let load = &mut per_machine_load[m.0];
            load.task_count += 1;
            load.total_processing += instance.task(TaskId(i)).duration;
        }
        Self {
            assignments,
            per_machine_load,
        }
    }
}

/// Load-spreading assignment.
///
/// Tasks with a single eligible machine (or a pre-set assignment) are placed
/// first. The rest are visited by decreasing duration, ties by task id, and
/// each goes to the eligible machine with the smallest assigned processing
/// time, then the fewest tasks, then the smallest machine id.
pub fn assign_machines(instance: &Instance) -> AssignmentResult {
    let n = instance.task_count();
    let mut assignments: Vec<Option<MachineIdx>> = vec![None; n];
    let mut loads = vec![MachineLoad::default(); instance.machines().len()];

    let mut place = |id: TaskId, m: MachineIdx, loads: &mut Vec<MachineLoad>| {
        assignments[id.0] = Some(m);
        loads[m.0].task_count += 1;
        loads[m.0].total_processing += instance.task(id).duration;
    };

    let mut flexible = Vec::new();
    for (id, task) in instance.tasks() {
        match (task.assigned_machine, task.eligible_machines.as_slice()) {
            (Some(m), _) => place(id, m, &mut loads),
            (None, [only]) => place(id, *only, &mut loads),
            _ => flexible.push(id),
        }
    }
    flexible.sort_by_key(|&id| (std::cmp::Reverse(instance.task(id).duration), id));
    for id in flexible {
        let best = instance
            .task(id)
            .eligible_machines
            .iter()
            .copied()
            .min_by_key(|m| (loads[m.0].total_processing, loads[m.0].task_count, *m))
            .expect("eligible set is nonempty");
        place(id, best, &mut loads);
    }

    AssignmentResult {
        assignments: assignments
            .into_iter()
            .map(|a| a.expect("every task visited"))
            .collect(),
        per_machine_load: loads,
    }
}
