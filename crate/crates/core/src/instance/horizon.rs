use std::collections::BTreeMap;

use super::{normalize_calendars, CalendarInterval, InstanceSpec, Time};
use crate::error::{Error, Result};

/// Upper bound `H` on the end of any left-shifted schedule.
///
/// Starts from the processing-time sum plus, per task, the largest cleaning
/// time any possible predecessor could impose. Every blocked window that
/// starts before the running bound then adds its length plus `p_max - 1`:
/// a task that does not fit before a window idles for less than its own
/// duration before jumping over it. The sum is repeated until it stops
/// growing.
pub fn compute_horizon(spec: &InstanceSpec) -> Result<Time> {
    let tasks: Vec<_> = spec.jobs.iter().flat_map(|j| j.tasks.iter()).collect();
    if tasks.is_empty() {
        return Err(Error::EmptyInstance);
    }
    let families: BTreeMap<&str, &str> = spec
        .machines
        .iter()
        .map(|m| (m.id.as_str(), m.operation_family.as_str()))
        .collect();

    let processing: Time = tasks.iter().map(|t| t.duration).sum();

    let mut cleaning_allowance: Time = 0;
    for (b, to) in tasks.iter().enumerate() {
        let mut worst = 0;
        for (a, from) in tasks.iter().enumerate() {
            if a == b {
                continue;
            }
            for m in &to.eligible_machines {
                if !from.eligible_machines.contains(m) {
                    continue;
                }
                let family = families.get(m.as_str()).copied().unwrap_or(super::DEFAULT_LABEL);
                worst = worst.max(spec.cleaning.lookup(&from.attributes, &to.attributes, family));
            }
        }
        cleaning_allowance += worst;
    }

    let p_max_all = tasks.iter().map(|t| t.duration).max().unwrap_or(0);
    // (start, cost) for every window a task chain might have to jump.
    let mut windows: Vec<(Time, Time)> = Vec::new();
    let global: Vec<_> = spec
        .global_nonworking
        .iter()
        .map(|&(s, e)| CalendarInterval::global(s, e))
        .collect();
    for iv in normalize_calendars(&global, None)? {
        windows.push((iv.start, iv.len() + p_max_all - 1));
    }
    for m in &spec.machines {
        let p_max = tasks
            .iter()
            .filter(|t| t.eligible_machines.contains(&m.id))
            .map(|t| t.duration)
            .max();
        let Some(p_max) = p_max else { continue };
        let own: Vec<_> = m
            .maintenance
            .iter()
            .map(|&(s, e)| CalendarInterval::global(s, e))
            .collect();
        for iv in normalize_calendars(&own, None)? {
            windows.push((iv.start, iv.len() + p_max - 1));
        }
    }
    windows.sort_unstable();

    let base = processing + cleaning_allowance;
    let mut horizon = base;
    loop {
        let extra: Time = windows
            .iter()
            .take_while(|(start, _)| *start < horizon)
            .map(|(_, cost)| cost)
            .sum();
        let next = base + extra;
        if next == horizon {
            return Ok(horizon);
        }
        horizon = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{BlockedTime, CleaningTable, JobSpec, MachineSpec, TaskSpec, TimeScale};

    fn spec(durations: &[Time], cleaning: Time, breaks: &[(Time, Time)]) -> InstanceSpec {
        let mut s = InstanceSpec::new(TimeScale::unit());
        s.machines.push(MachineSpec::new("M", "f"));
        s.cleaning = CleaningTable::uniform(cleaning);
        s.global_nonworking = breaks.to_vec();
        for (i, &p) in durations.iter().enumerate() {
            s.jobs.push(JobSpec {
                id: format!("J{i}"),
                due_date: 0,
                tasks: vec![TaskSpec::new(p, &["M"])],
            });
        }
        s
    }

    #[test]
    fn single_task_no_cleaning() {
        assert_eq!(compute_horizon(&spec(&[5], 0, &[])).unwrap(), 5);
    }

    #[test]
    fn worst_case_cleaning_before_each_task() {
        assert_eq!(compute_horizon(&spec(&[2, 3], 1, &[])).unwrap(), 7);
    }

    #[test]
    fn break_adds_its_length_and_straddle_waste() {
        // Enumerating starts of a 3-long task against [2, 4): the first
        // feasible start is 4, so the task ends at 7.
        let earliest_end = (0..)
            .find(|s: &Time| s + 3 <= 2 || *s >= 4)
            .map(|s| s + 3)
            .unwrap();
        assert_eq!(earliest_end, 7);
        let h = compute_horizon(&spec(&[3], 0, &[(2, 4)])).unwrap();
        assert_eq!(h, 7);
        assert!(h >= earliest_end);
    }

    #[test]
    fn breaks_beyond_bound_are_ignored() {
        assert_eq!(compute_horizon(&spec(&[3], 0, &[(50, 60)])).unwrap(), 3);
    }

    #[test]
    fn empty_instance_rejected() {
        assert!(matches!(compute_horizon(&spec(&[], 0, &[])), Err(Error::EmptyInstance)));
    }

    proptest::proptest! {
        // A single machine processing its tasks in any order, left-shifted,
        // never ends past the bound.
        #[test]
        fn bound_covers_left_shifted_sequence(
            durations in proptest::collection::vec(1i64..6, 1..5),
            cleaning in 0i64..3,
            raw in proptest::collection::vec((0i64..30, 1i64..5), 0..4),
        ) {
            let breaks: Vec<_> = raw.iter().map(|&(s, l)| (s, s + l)).collect();
            let h = compute_horizon(&spec(&durations, cleaning, &breaks)).unwrap();
            let blocked = BlockedTime::new(breaks.iter().copied());
            let mut t = 0;
            for (i, &p) in durations.iter().enumerate() {
                let ready = if i == 0 { 0 } else { t + cleaning };
                let s = blocked.earliest_fit(ready, p);
                t = s + p;
            }
            proptest::prop_assert!(t <= h, "end {} > horizon {}", t, h);
        }
    }
}
