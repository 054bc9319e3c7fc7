use super::AssignmentResult;
use crate::instance::{CleaningTable, Instance, Machine, MachineIdx, Task, TaskId, Time};

/// Cleaning time when `to` directly follows `from` on `machine`.
pub fn clean_cost(from: &Task, to: &Task, machine: &Machine, table: &CleaningTable) -> Time {
    table
        .lookup(&from.attributes, &to.attributes, &machine.operation_family)
        .max(0)
}

/// Dense ordered-pair cleaning times of one machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetupMatrix {
    pub machine: MachineIdx,
    /// Tasks on the machine in [`TaskId`] order; matrix rows and columns follow it.
    pub tasks: Vec<TaskId>,
    values: Vec<Time>,
}

impl SetupMatrix {
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Setup between local positions `from` and `to`.
    pub fn at(&self, from: usize, to: usize) -> Time {
        self.values[from * self.tasks.len() + to]
    }

    pub fn local_index(&self, task: TaskId) -> Option<usize> {
        self.tasks.binary_search(&task).ok()
    }

    pub fn get(&self, from: TaskId, to: TaskId) -> Option<Time> {
        Some(self.at(self.local_index(from)?, self.local_index(to)?))
    }

    /// Number of ordered pairs of distinct tasks.
    pub fn pair_count(&self) -> usize {
        let n = self.tasks.len();
        n * n.saturating_sub(1)
    }

    /// Iterates `(from, to, setup)` over all ordered pairs of distinct tasks.
    pub fn pairs(&self) -> impl Iterator<Item = (TaskId, TaskId, Time)> + '_ {
        let n = self.tasks.len();
        (0..n).flat_map(move |a| {
            (0..n)
                .filter(move |&b| b != a)
                .map(move |b| (self.tasks[a], self.tasks[b], self.at(a, b)))
        })
    }
}

pub fn build_setup_matrices(instance: &Instance, assignment: &AssignmentResult) -> Vec<SetupMatrix> {
    (0..instance.machines().len())
        .map(|m| {
            let machine = MachineIdx(m);
            let tasks = assignment.tasks_on(machine);
            let n = tasks.len();
            let mut values = vec![0; n * n];
            for (a, &from) in tasks.iter().enumerate() {
                for (b, &to) in tasks.iter().enumerate() {
                    if a != b {
                        values[a * n + b] = clean_cost(
                            instance.task(from),
                            instance.task(to),
                            instance.machine(machine),
                            instance.cleaning(),
                        );
                    }
                }
            }
            SetupMatrix {
                machine,
                tasks,
                values,
            }
        })
        .collect()
}

/// Total sequencing literals: the sum of `n_m (n_m - 1)` over machines.
pub fn sequencing_literals(setups: &[SetupMatrix]) -> usize {
    setups.iter().map(SetupMatrix::pair_count).sum()
}
