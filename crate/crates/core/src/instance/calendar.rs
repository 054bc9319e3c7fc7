//! Non-working windows and the per-machine blocked-time index.

use serde::{Deserialize, Serialize};

use super::{MachineIdx, Time};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalendarKind {
    GlobalNonworking,
    Maintenance,
}

/// Half-open window `[start, end)` during which no task may run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CalendarInterval {
    pub start: Time,
    pub end: Time,
    pub kind: CalendarKind,
    /// Set iff `kind` is [`CalendarKind::Maintenance`].
    pub machine: Option<MachineIdx>,
}

impl CalendarInterval {
    pub fn global(start: Time, end: Time) -> Self {
        Self {
            start,
            end,
            kind: CalendarKind::GlobalNonworking,
            machine: None,
        }
    }

    pub fn maintenance(machine: MachineIdx, start: Time, end: Time) -> Self {
        Self {
            start,
            end,
            kind: CalendarKind::Maintenance,
            machine: Some(machine),
        }
    }

    pub fn len(&self) -> Time {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// True when `[start, start + duration)` intersects this window.
    pub fn overlaps(&self, start: Time, end: Time) -> bool {
        start < self.end && self.start < end
    }
}

/// Sorts, merges overlapping or abutting windows and clips the result to
/// `[0, horizon]` when a horizon is given.
///
/// Windows of different kinds may be merged together; the merged window is
/// tagged as maintenance (with that window's machine) when any part of it is.
pub fn normalize_calendars(
    intervals: &[CalendarInterval],
    horizon: Option<Time>,
) -> Result<Vec<CalendarInterval>> {
    for iv in intervals {
        if iv.start >= iv.end {
            return Err(Error::Interval {
                start: iv.start,
                end: iv.end,
            });
        }
    }
    let mut sorted = intervals.to_vec();
    sorted.sort_by_key(|iv| (iv.start, iv.end, iv.kind, iv.machine));

    let mut merged: Vec<CalendarInterval> = Vec::with_capacity(sorted.len());
    for iv in sorted {
        match merged.last_mut() {
            Some(last) if iv.start <= last.end => {
                last.end = last.end.max(iv.end);
                if iv.kind == CalendarKind::Maintenance && last.kind != CalendarKind::Maintenance {
                    last.kind = CalendarKind::Maintenance;
                    last.machine = iv.machine;
                }
            }
            _ => merged.push(iv),
        }
    }

    if let Some(h) = horizon {
        merged.retain_mut(|iv| {
            iv.start = iv.start.max(0);
            iv.end = iv.end.min(h);
            iv.start < iv.end
        });
    } else {
        merged.retain_mut(|iv| {
            iv.start = iv.start.max(0);
            iv.start < iv.end
        });
    }
    Ok(merged)
}

/// Sorted disjoint blocked windows of one machine, with fit queries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockedTime {
    spans: Vec<(Time, Time)>,
}

impl BlockedTime {
    /// Builds the index from arbitrary windows; they are merged here.
    pub fn new<I: IntoIterator<Item = (Time, Time)>>(spans: I) -> Self {
        let mut spans: Vec<(Time, Time)> = spans.into_iter().filter(|(s, e)| s < e).collect();
        spans.sort_unstable();
        let mut merged: Vec<(Time, Time)> = Vec::with_capacity(spans.len());
        for (s, e) in spans {
            match merged.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        Self { spans: merged }
    }

    pub fn spans(&self) -> &[(Time, Time)] {
        &self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Smallest `s >= from` such that `[s, s + duration)` avoids every window.
    pub fn earliest_fit(&self, from: Time, duration: Time) -> Time {
        let mut s = from;
        // First window that ends after `s`.
        let mut i = self.spans.partition_point(|&(_, e)| e <= s);
        while let Some(&(ws, we)) = self.spans.get(i) {
            if ws < s + duration {
                s = s.max(we);
                i += 1;
            } else {
                break;
            }
        }
        s
    }

    /// Largest `s <= until` such that `[s, s + duration)` avoids every window.
    /// May return a negative value when nothing fits at or after zero.
    pub fn latest_fit(&self, until: Time, duration: Time) -> Time {
        let mut s = until;
        // Last window that starts before `s + duration`.
        let mut i = self.spans.partition_point(|&(ws, _)| ws < s + duration);
        while i > 0 {
            let (ws, we) = self.spans[i - 1];
            if we > s {
                s = s.min(ws - duration);
                i -= 1;
            } else {
                break;
            }
        }
        s
    }

    /// Total blocked time inside `[from, to)`.
    pub fn blocked_within(&self, from: Time, to: Time) -> Time {
        self.spans
            .iter()
            .map(|&(s, e)| (e.min(to) - s.max(from)).max(0))
            .sum()
    }

    /// Earliest `t` such that `[from, t)` contains at least `work` units of
    /// non-blocked time.
    pub fn advance_working(&self, from: Time, work: Time) -> Time {
        let mut t = from;
        let mut left = work;
        let mut i = self.spans.partition_point(|&(_, e)| e <= t);
        while left > 0 {
            match self.spans.get(i) {
                Some(&(ws, we)) if ws <= t => {
                    t = we;
                    i += 1;
                }
                Some(&(ws, _)) => {
                    let free = ws - t;
                    if free >= left {
                        return t + left;
                    }
                    left -= free;
                    t = ws;
                }
                None => return t + left,
            }
        }
        t
    }

    /// Longest working stretch inside `[0, horizon)`.
    pub fn longest_window(&self, horizon: Time) -> Time {
        let mut best = 0;
        let mut cursor = 0;
        for &(s, e) in &self.spans {
            if s >= horizon {
                break;
            }
            best = best.max(s.max(cursor) - cursor);
            cursor = cursor.max(e);
        }
        best.max(horizon - cursor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: Time, e: Time) -> CalendarInterval {
        CalendarInterval::global(s, e)
    }

    #[test]
    fn normalize_merges_overlaps() {
        let out = normalize_calendars(&[g(0, 2), g(1, 3)], None).unwrap();
        assert_eq!(out, vec![g(0, 3)]);
    }

    #[test]
    fn normalize_sorts_without_merging() {
        let out = normalize_calendars(&[g(5, 6), g(0, 2)], None).unwrap();
        assert_eq!(out, vec![g(0, 2), g(5, 6)]);
    }

    #[test]
    fn normalize_empty() {
        assert!(normalize_calendars(&[], Some(10)).unwrap().is_empty());
    }

    #[test]
    fn normalize_merges_abutting_and_clips() {
        let out = normalize_calendars(&[g(-3, 1), g(1, 4), g(8, 20)], Some(10)).unwrap();
        assert_eq!(out, vec![g(0, 4), g(8, 10)]);
    }

    #[test]
    fn normalize_rejects_empty_interval() {
        assert!(matches!(
            normalize_calendars(&[g(4, 4)], None),
            Err(Error::Interval { start: 4, end: 4 })
        ));
    }

    #[test]
    fn mixed_kinds_merge_to_maintenance() {
        let m = CalendarInterval::maintenance(MachineIdx(2), 3, 6);
        let out = normalize_calendars(&[g(0, 4), m], None).unwrap();
        assert_eq!(out, vec![CalendarInterval::maintenance(MachineIdx(2), 0, 6)]);
    }

    #[test]
    fn earliest_fit_skips_straddled_break() {
        let b = BlockedTime::new([(2, 4)]);
        // Starts 0..=3 all overlap [2, 4) for a 3-long task.
        assert_eq!(b.earliest_fit(0, 3), 4);
        assert_eq!(b.earliest_fit(0, 2), 0);
        assert_eq!(b.earliest_fit(1, 2), 4);
        assert_eq!(b.earliest_fit(4, 5), 4);
    }

    #[test]
    fn earliest_fit_chains_breaks() {
        let b = BlockedTime::new([(2, 4), (6, 7), (9, 12)]);
        assert_eq!(b.earliest_fit(0, 3), 12);
        assert_eq!(b.earliest_fit(0, 2), 0);
        assert_eq!(b.earliest_fit(3, 2), 4);
    }

    #[test]
    fn latest_fit_mirrors_earliest() {
        let b = BlockedTime::new([(2, 4), (6, 7)]);
        assert_eq!(b.latest_fit(10, 3), 10);
        assert_eq!(b.latest_fit(5, 3), -1);
        assert_eq!(b.latest_fit(3, 2), 0);
        assert_eq!(b.latest_fit(4, 2), 4);
        assert_eq!(b.latest_fit(5, 2), 4);
    }

    #[test]
    fn advance_working_counts_only_free_time() {
        let b = BlockedTime::new([(2, 4)]);
        assert_eq!(b.advance_working(0, 3), 5);
        assert_eq!(b.advance_working(0, 2), 2);
        assert_eq!(b.advance_working(3, 1), 5);
        assert_eq!(b.blocked_within(0, 10), 2);
        assert_eq!(b.blocked_within(3, 10), 1);
    }

    #[test]
    fn longest_window_inside_horizon() {
        let b = BlockedTime::new([(2, 4), (5, 6)]);
        assert_eq!(b.longest_window(10), 4);
        assert_eq!(b.longest_window(5), 2);
        assert_eq!(BlockedTime::default().longest_window(7), 7);
    }

    fn brute_earliest(spans: &[(Time, Time)], from: Time, d: Time) -> Time {
        (from..)
            .find(|&s| spans.iter().all(|&(a, b)| s + d <= a || b <= s))
            .unwrap()
    }

    proptest::proptest! {
        #[test]
        fn earliest_fit_matches_enumeration(
            raw in proptest::collection::vec((0i64..40, 1i64..6), 0..6),
            from in 0i64..40,
            d in 1i64..6,
        ) {
            let spans: Vec<(Time, Time)> = raw.iter().map(|&(s, l)| (s, s + l)).collect();
            let b = BlockedTime::new(spans.iter().copied());
            proptest::prop_assert_eq!(b.earliest_fit(from, d), brute_earliest(&spans, from, d));
        }

        #[test]
        fn latest_fit_is_feasible_and_maximal(
            raw in proptest::collection::vec((0i64..40, 1i64..6), 0..6),
            until in 0i64..60,
            d in 1i64..6,
        ) {
            let spans: Vec<(Time, Time)> = raw.iter().map(|&(s, l)| (s, s + l)).collect();
            let b = BlockedTime::new(spans.iter().copied());
            let s = b.latest_fit(until, d);
            let fits = |s: Time| spans.iter().all(|&(a, e)| s + d <= a || e <= s);
            proptest::prop_assert!(s <= until);
            proptest::prop_assert!(fits(s));
            proptest::prop_assert!(((s + 1)..=until).all(|t| !fits(t)));
        }

        #[test]
        fn normalize_is_idempotent(raw in proptest::collection::vec((0i64..50, 1i64..8), 0..8)) {
            let ivs: Vec<_> = raw.iter().map(|&(s, l)| g(s, s + l)).collect();
            let once = normalize_calendars(&ivs, Some(45)).unwrap();
            let twice = normalize_calendars(&once, Some(45)).unwrap();
            proptest::prop_assert_eq!(&once, &twice);
            for t in 0..45 {
                let covered = ivs.iter().any(|iv| iv.start <= t && t < iv.end);
                let covered_after = once.iter().any(|iv| iv.start <= t && t < iv.end);
                proptest::prop_assert_eq!(covered, covered_after);
            }
        }
    }
}
