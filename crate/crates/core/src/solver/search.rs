//! Depth-first branch-and-bound over machine sequencing arcs.
//!
//! Each node extends the processing-order prefix of one machine by one task
//! (selecting the arc from the machine's last task to that task); siblings
//! are the alternative selections. Workers share the incumbent and the
//! global bound; each explores the full tree in its own candidate order.
//!
//! Once the main tree has run for a while, every slice of main search is
//! followed by an equally long dive around the incumbent: most machines keep
//! their incumbent order, a few keep only the part starting before a random
//! time, and the rest is searched again. Dives only improve the incumbent;
//! the bound still comes from the main tree alone.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicI64, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::Model;
use super::propagate::{ConflictKind, Propagation, SearchState};
use super::schedule::{evaluate_objective, ObjectiveValue, Schedule};
use crate::instance::{TaskId, Time};

pub(crate) struct Incumbent {
    pub value: ObjectiveValue,
    pub schedule: Schedule,
}

pub(crate) struct Shared {
    best: AtomicI64,
    pub incumbent: Mutex<Option<Incumbent>>,
    pub bound: AtomicI64,
    pub nodes: AtomicU64,
    pub propagations: AtomicU64,
    pub stop: AtomicBool,
    pub proven: AtomicBool,
    pub conflicts: Mutex<BTreeMap<ConflictKind, u64>>,
}

impl Shared {
    pub fn new(root_bound: i64) -> Self {
        Self {
            best: AtomicI64::new(i64::MAX),
            incumbent: Mutex::new(None),
            bound: AtomicI64::new(root_bound),
            nodes: AtomicU64::new(0),
            propagations: AtomicU64::new(0),
            stop: AtomicBool::new(false),
            proven: AtomicBool::new(false),
            conflicts: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn best(&self) -> Option<i64> {
        match self.best.load(Ordering::SeqCst) {
            i64::MAX => None,
            v => Some(v),
        }
    }

    /// Installs a schedule if it is strictly better, or equally good with a
    /// lexicographically smaller start vector.
    pub fn offer(&self, value: ObjectiveValue, schedule: Schedule) -> bool {
        let mut guard = self.incumbent.lock().expect("incumbent lock");
        let better = match guard.as_ref() {
            None => true,
            Some(cur) => {
                value.scaled < cur.value.scaled
                    || (value.scaled == cur.value.scaled && schedule.starts < cur.schedule.starts)
            }
        };
        if better {
            self.best.store(value.scaled, Ordering::SeqCst);
            *guard = Some(Incumbent { value, schedule });
        }
        better
    }

    pub fn publish_bound(&self, bound: i64) {
        self.bound.fetch_max(bound, Ordering::SeqCst);
    }
}

/// Main-tree nodes before the first dive, and the length of each slice.
const DIVE_AFTER: u64 = 4096;
const DIVE_NODES: u64 = 1024;

pub(crate) struct Limits {
    pub deadline: Instant,
    pub node_limit: Option<u64>,
}

struct Frame {
    state: SearchState,
    lower_bound: i64,
    /// Remaining alternatives, best last.
    candidates: Vec<usize>,
}

pub(crate) struct Worker<'m, 'a> {
    model: &'m Model<'a>,
    shared: &'m Shared,
    limits: &'m Limits,
    rng: Option<ChaCha8Rng>,
    dive_rng: ChaCha8Rng,
    jitter: Time,
    conflicts: BTreeMap<ConflictKind, u64>,
}

/// How a worker's search ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum WorkerEnd {
    Exhausted,
    Interrupted,
}

impl<'m, 'a> Worker<'m, 'a> {
    pub fn new(model: &'m Model<'a>, shared: &'m Shared, limits: &'m Limits, index: usize, seed: u64) -> Self {
        let n = model.duration.len().max(1) as i64;
        let jitter = model.duration.iter().sum::<Time>() / n;
        // Worker 0 follows the plain heuristic order; the others perturb it.
        let rng = (index > 0).then(|| ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64)));
        Self {
            model,
            shared,
            limits,
            rng,
            dive_rng: ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64) ^ 0x6469_7665),
            jitter,
            conflicts: BTreeMap::new(),
        }
    }

    fn interrupted(&self) -> bool {
        self.shared.stop.load(Ordering::Relaxed)
            || Instant::now() >= self.limits.deadline
            || self
                .limits
                .node_limit
                .is_some_and(|limit| self.shared.nodes.load(Ordering::Relaxed) >= limit)
    }

    pub fn run(mut self, root: SearchState, root_propagation: &Propagation) -> WorkerEnd {
        let mut stack = vec![self.expand(root.clone(), root_propagation, false)];
        let mut main_nodes = 0u64;
        let end = loop {
            if self.interrupted() {
                break WorkerEnd::Interrupted;
            }
            if !self.step(&mut stack, false) {
                break WorkerEnd::Exhausted;
            }
            main_nodes += 1;
            if main_nodes.is_multiple_of(64) {
                self.shared.publish_bound(self.frontier_bound(&stack));
            }
            if main_nodes >= DIVE_AFTER && main_nodes.is_multiple_of(DIVE_NODES) {
                self.dive(&root);
            }
        };
        if end == WorkerEnd::Exhausted {
            self.shared.proven.store(true, Ordering::SeqCst);
            self.shared.stop.store(true, Ordering::SeqCst);
        } else {
            self.shared.publish_bound(self.frontier_bound(&stack));
        }
        let mut all = self.shared.conflicts.lock().expect("conflict lock");
        for (k, v) in self.conflicts {
            *all.entry(k).or_default() += v;
        }
        end
    }

    /// Expands one node; false once the stack is empty.
    fn step(&mut self, stack: &mut Vec<Frame>, diving: bool) -> bool {
        let best = self.shared.best();
        let task = loop {
            let Some(top) = stack.last_mut() else {
                return false;
            };
            if best.is_some_and(|b| top.lower_bound >= b) || top.candidates.is_empty() {
                stack.pop();
                continue;
            }
            break top.candidates.pop().expect("nonempty");
        };
        let mut child = stack.last().expect("nonempty").state.clone();
        child.append(self.model, TaskId(task));
        self.shared.nodes.fetch_add(1, Ordering::Relaxed);

        match self.model.propagate(&child, best) {
            Err(conflict) => {
                *self.conflicts.entry(conflict.kind).or_default() += 1;
            }
            Ok(p) => {
                self.shared
                    .propagations
                    .fetch_add(p.rounds as u64, Ordering::Relaxed);
                if child.is_complete() {
                    self.record_leaf(&child, &p);
                } else {
                    let frame = self.expand(child, &p, diving);
                    stack.push(frame);
                }
            }
        }
        true
    }

    /// Searches a neighbourhood of the incumbent for a strictly better schedule.
    fn dive(&mut self, root: &SearchState) {
        let (orders, starts, makespan) = {
            let guard = self.shared.incumbent.lock().expect("incumbent lock");
            let Some(inc) = guard.as_ref() else {
                return;
            };
            (inc.schedule.machine_orders.clone(), inc.schedule.starts.clone(), inc.schedule.makespan())
        };
        let machines = self.model.machines.len();
        let freed = self.dive_rng.gen_range(1..=machines.min(3));
        let free: Vec<usize> = rand::seq::index::sample(&mut self.dive_rng, machines, freed).into_vec();
        let cut = self.dive_rng.gen_range(0..=makespan);
        let mut state = root.clone();
        for (m, order) in orders.iter().enumerate() {
            for &t in order {
                if free.contains(&m) && starts[t.0] >= cut {
                    break;
                }
                if !state.sequenced[t.0] {
                    state.append(self.model, t);
                }
            }
        }
        if state.is_complete() {
            return;
        }
        let Ok(p) = self.model.propagate(&state, self.shared.best()) else {
            return;
        };
        let mut stack = vec![self.expand(state, &p, true)];
        for _ in 0..DIVE_NODES {
            if self.interrupted() || !self.step(&mut stack, true) {
                break;
            }
        }
    }

    /// Smallest lower bound over unexplored alternatives, capped by the incumbent.
    fn frontier_bound(&self, stack: &[Frame]) -> i64 {
        let best = self.shared.best().unwrap_or(i64::MAX);
        stack
            .iter()
            .filter(|f| !f.candidates.is_empty())
            .map(|f| f.lower_bound)
            .min()
            .unwrap_or(best)
            .min(best)
    }

    fn record_leaf(&self, state: &SearchState, p: &Propagation) {
        let instance = self.model.instance;
        let starts = p.head.clone();
        let machine_orders = (0..self.model.machines.len())
            .map(|m| state.order(m).collect())
            .collect();
        let mut schedule = Schedule {
            ends: starts
                .iter()
                .zip(&self.model.duration)
                .map(|(s, d)| s + d)
                .collect(),
            starts,
            machine_orders,
            reported: None,
        };
        schedule.reported = Some(schedule.aggregates(instance));
        let value = evaluate_objective(&schedule, instance, self.model.objective);
        debug_assert_eq!(value.scaled, p.lower_bound);
        self.shared.offer(value, schedule);
    }

    /// Chooses the machine to branch on and orders its candidate successors.
    fn expand(&mut self, state: SearchState, p: &Propagation, diving: bool) -> Frame {
        let model = self.model;
        let mut chosen: Option<(bool, Time, usize, Vec<usize>)> = None;
        for m in 0..model.machines.len() {
            let open: Vec<usize> = state.unsequenced(model, m).collect();
            if open.is_empty() {
                continue;
            }
            let candidates: Vec<usize> = open
                .iter()
                .copied()
                .filter(|&b| !p.forced.iter().any(|&(a, c)| c == b && open.contains(&a)))
                .collect();
            let load: Time = open.iter().map(|&t| model.duration[t]).sum();
            // Forced moves first, then the most loaded machine.
            let key = (candidates.len() <= 1, load);
            let better = match &chosen {
                None => true,
                Some((forced, l, _, _)) => key > (*forced, *l),
            };
            if better {
                chosen = Some((key.0, load, m, candidates));
            }
        }
        let (_, _, m, candidates) = chosen.expect("expand is only called on incomplete states");
        let last = state.seq[m].last().copied();
        let mut keyed: Vec<(Time, Time, usize)> = candidates
            .into_iter()
            .map(|b| {
                let mut est = p.head[b];
                if let Some(l) = last {
                    est = est.max(p.head[l] + model.duration[l] + model.setup(l, b));
                }
                let rng = if diving { Some(&mut self.dive_rng) } else { self.rng.as_mut() };
                if let Some(rng) = rng {
                    est += rng.gen_range(0..=self.jitter.max(0));
                }
                (est, p.latest[b], b)
            })
            .collect();
        keyed.sort_unstable();
        Frame {
            state,
            lower_bound: p.lower_bound,
            candidates: keyed.into_iter().rev().map(|(_, _, b)| b).collect(),
        }
    }
}
