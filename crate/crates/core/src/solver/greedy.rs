use super::model::Model;
use crate::instance::Time;

/// Serial schedule generation: repeatedly starts the ready task (its job
/// predecessor already placed) that can begin earliest, ties by due date
/// then task id. Returns start times, or `None` if some task would end past
/// the horizon.
pub(crate) fn greedy_starts(model: &Model<'_>) -> Option<(Vec<Time>, Vec<Vec<usize>>)> {
    let n = model.duration.len();
    let mut starts = vec![0; n];
    let mut placed = vec![false; n];
    let mut machine_last: Vec<Option<usize>> = vec![None; model.machines.len()];
    let mut orders: Vec<Vec<usize>> = vec![Vec::new(); model.machines.len()];
    // Next unplaced task of each job.
    let mut ready: Vec<usize> = model
        .job_last
        .iter()
        .enumerate()
        .map(|(j, _)| first_of_job(model, j))
        .collect();
    let mut remaining = n;

    while remaining > 0 {
        let mut best: Option<(Time, Time, usize, usize)> = None;
        for (j, &t) in ready.iter().enumerate() {
            if t == usize::MAX {
                continue;
            }
            let start = earliest(model, t, &starts, &machine_last);
            let key = (start, model.due[j], t, j);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        let (start, _, t, j) = best.expect("a ready task exists while tasks remain");
        if start + model.duration[t] > model.horizon {
            return None;
        }
        starts[t] = start;
        placed[t] = true;
        let m = model.machine_of[t];
        machine_last[m] = Some(t);
        orders[m].push(t);
        ready[j] = model.job_next[t].unwrap_or(usize::MAX);
        remaining -= 1;
    }
    debug_assert!(placed.iter().all(|&p| p));
    Some((starts, orders))
}

fn first_of_job(model: &Model<'_>, job: usize) -> usize {
    let mut t = model.job_last[job];
    while let Some(prev) = model.job_prev[t] {
        t = prev;
    }
    t
}

fn earliest(model: &Model<'_>, t: usize, starts: &[Time], machine_last: &[Option<usize>]) -> Time {
    let mut release = 0;
    if let Some(prev) = model.job_prev[t] {
        release = release.max(starts[prev] + model.duration[prev]);
    }
    if let Some(last) = machine_last[model.machine_of[t]] {
        release = release.max(starts[last] + model.duration[last] + model.setup(last, t));
    }
    model.blocked(t).earliest_fit(release, model.duration[t])
}
