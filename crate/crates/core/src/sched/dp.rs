//! The forward DP sweep over the (ground point, time step) lattice.
//!
//! For every step and every observable ground point, candidate predecessors
//! are the committed nodes inside the slew band below it, plus a fresh path
//! start. Candidates are visited in descending cumulative value through a
//! lazily corrected heap: the optimistic key assumes the predecessor path
//! never saw the point; when a popped candidate's true value is lower (the
//! path did see it), it is re-queued with the exact value. The first
//! slew-feasible candidate is committed and all other paths to that node are
//! discarded. An environment trait supplies times, candidate points, values
//! and feasibility so the sweep runs identically against real scenario state
//! and toy instances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

/// Folded per-gp observation state carried along a path: whatever the
/// environment needs to value a repeat observation, updated in O(1) per
/// observation (for the count rule: informative count and latest informative
/// time, merged over the knowledge log).
pub type PathObsState = (u32, f64);

/// Environment driving one DP sweep.
///
/// `node_value` must not increase as observations are folded into the path
/// state; the sweep's optimistic candidate ordering relies on that
/// monotonicity.
pub trait DpEnv {
    fn n_steps(&self) -> usize;
    fn step_time(&self, k: usize) -> f64;
    /// Ground points observable at step `k`, ascending.
    fn nodes_at(&self, k: usize) -> &[u32];
    /// Value of observing `gp` at step `k`. `path` is the folded state of
    /// the prior in-path observations of the same point, `None` when the
    /// path has not observed it.
    fn node_value(&self, gp: u32, k: usize, path: Option<PathObsState>) -> f64;
    /// Fold one more in-path observation of `gp` at `t_obs` into the state.
    fn fold_path_obs(&self, gp: u32, prior: Option<PathObsState>, t_obs: f64) -> PathObsState;
    /// Whether the maneuver from `gp_from` observed at step `k_from` to
    /// `gp_to` at step `k_to` fits the time gap.
    fn slew_feasible(&self, gp_from: u32, k_from: usize, gp_to: u32, k_to: usize) -> bool;
    /// Whether a path may start at (`gp`, `k`).
    fn start_feasible(&self, gp: u32, k: usize) -> bool;
    /// Predecessor band in steps: (min, max) gap measured in steps.
    fn band(&self) -> (usize, usize);
}

/// Search-effort counters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DpStats {
    /// (gp, step) nodes processed by the sweep.
    pub nodes_expanded: u64,
    /// Candidates popped from the descending-value heaps.
    pub candidates_popped: u64,
}

/// Result of one sweep: the best path as (gp, step) pairs plus its internal
/// search value, the per-step running best for anytime checks, and counters.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub path: Vec<(u32, usize)>,
    pub value: f64,
    /// Best (value, node arena index) observed up to and including each step.
    pub best_by_step: Vec<Option<(f64, usize)>>,
    pub stats: DpStats,
    /// Back-pointer arena for extracting anytime prefixes.
    arena: Vec<Committed>,
}

#[derive(Debug, Clone)]
struct Committed {
    gp: u32,
    step: usize,
    value: f64,
    pred: Option<usize>,
    /// Persistent per-gp observation history of the path ending here.
    hist: Option<Rc<Hist>>,
}

/// Path-copied binary trie over gp bits; keeps "which times did this path
/// observe gp" queries cheap without walking the whole back-pointer chain,
/// so sweeps stay linear in the number of steps.
#[derive(Debug)]
enum Hist {
    Leaf(Rc<ObsCons>),
    Branch([Option<Rc<Hist>>; 2]),
}

#[derive(Debug)]
struct ObsCons {
    t: f64,
    prev: Option<Rc<ObsCons>>,
}

fn hist_insert(node: Option<&Rc<Hist>>, gp: u32, t: f64, bit: i32) -> Rc<Hist> {
    if bit < 0 {
        let prev = match node.map(Rc::as_ref) {
            Some(Hist::Leaf(times)) => Some(times.clone()),
            _ => None,
        };
        return Rc::new(Hist::Leaf(Rc::new(ObsCons { t, prev })));
    }
    let side = ((gp >> bit) & 1) as usize;
    let mut children: [Option<Rc<Hist>>; 2] = match node.map(Rc::as_ref) {
        Some(Hist::Branch(c)) => c.clone(),
        _ => [None, None],
    };
    children[side] = Some(hist_insert(children[side].as_ref(), gp, t, bit - 1));
    Rc::new(Hist::Branch(children))
}

/// Ascending observation times of `gp` in the history, empty when unseen.
fn hist_query(mut node: Option<&Rc<Hist>>, gp: u32, mut bit: i32) -> Vec<f64> {
    while bit >= 0 {
        match node.map(Rc::as_ref) {
            Some(Hist::Branch(children)) => {
                node = children[((gp >> bit) & 1) as usize].as_ref();
                bit -= 1;
            }
            _ => return Vec::new(),
        }
    }
    match node.map(Rc::as_ref) {
        Some(Hist::Leaf(times)) => {
            let mut out = Vec::new();
            let mut cur = Some(times);
            while let Some(c) = cur {
                out.push(c.t);
                cur = c.prev.as_ref();
            }
            out.reverse();
            out
        }
        _ => Vec::new(),
    }
}

impl SweepResult {
    /// Path ending at the best node no later than `step` (anytime property).
    pub fn path_up_to(&self, step: usize) -> Vec<(u32, usize)> {
        match self.best_by_step.get(step).copied().flatten() {
            None => Vec::new(),
            Some((_, idx)) => extract_path(&self.arena, idx),
        }
    }
}

fn extract_path(arena: &[Committed], mut idx: usize) -> Vec<(u32, usize)> {
    let mut path = Vec::new();
    loop {
        let n = &arena[idx];
        path.push((n.gp, n.step));
        match n.pred {
            Some(p) => idx = p,
            None => break,
        }
    }
    path.reverse();
    path
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Candidate {
    /// Head of the sorted committed list of a band step: (step, position).
    Stream { step: usize, pos: usize },
    /// A re-queued candidate with its exact value.
    Exact { step: usize, pos: usize },
    Fresh,
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    value: f64,
    cand: Candidate,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap on value; deterministic tie-break: later band step first,
        // then lower list position, fresh entries last
        let rank = |c: &Candidate| match c {
            Candidate::Stream { step, pos } | Candidate::Exact { step, pos } => {
                (0usize, usize::MAX - step, *pos)
            }
            Candidate::Fresh => (1, 0, 0),
        };
        self.value
            .total_cmp(&other.value)
            .then_with(|| rank(&other.cand).cmp(&rank(&self.cand)))
    }
}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Run the forward sweep and return the max-value feasible path over all
/// terminal nodes.
pub fn sweep(env: &dyn DpEnv) -> SweepResult {
    let n_steps = env.n_steps();
    let (band_min, band_max) = env.band();
    // trie depth covering the gp universe of this instance
    let max_gp = (0..n_steps)
        .flat_map(|k| env.nodes_at(k).iter().copied())
        .max()
        .unwrap_or(0);
    let top_bit = 31 - (max_gp | 1).leading_zeros() as i32;
    let mut arena: Vec<Committed> = Vec::new();
    // per step: committed node arena indices sorted by value descending
    let mut by_step: Vec<Vec<usize>> = vec![Vec::new(); n_steps];
    let mut stats = DpStats::default();
    let mut best_overall: Option<(f64, usize)> = None;
    let mut best_by_step: Vec<Option<(f64, usize)>> = Vec::with_capacity(n_steps);

    for k in 0..n_steps {
        let mut committed_here: Vec<usize> = Vec::new();
        for &gp in env.nodes_at(k) {
            stats.nodes_expanded += 1;
            let v_unseen = env.node_value(gp, k, &[]);

            let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
            if env.start_feasible(gp, k) {
                heap.push(HeapEntry { value: v_unseen, cand: Candidate::Fresh });
            }
            let lo = k.saturating_sub(band_max);
            let hi = k.saturating_sub(band_min);
            if band_min <= k {
                for kb in lo..=hi {
                    if let Some(&head) = by_step[kb].first() {
                        heap.push(HeapEntry {
                            value: arena[head].value + v_unseen,
                            cand: Candidate::Stream { step: kb, pos: 0 },
                        });
                    }
                }
            }

            let mut committed: Option<Committed> = None;
            while let Some(HeapEntry { value, cand }) = heap.pop() {
                stats.candidates_popped += 1;
                match cand {
                    Candidate::Fresh => {
                        committed =
                            Some(Committed { gp, step: k, value, pred: None, hist: None });
                        break;
                    }
                    Candidate::Stream { step, pos } | Candidate::Exact { step, pos } => {
                        let idx = by_step[step][pos];
                        if matches!(cand, Candidate::Stream { .. }) {
                            // keep the lazy stream flowing
                            if let Some(&next) = by_step[step].get(pos + 1) {
                                heap.push(HeapEntry {
                                    value: arena[next].value + v_unseen,
                                    cand: Candidate::Stream { step, pos: pos + 1 },
                                });
                            }
                            let obs = hist_query(arena[idx].hist.as_ref(), gp, top_bit);
                            if !obs.is_empty() {
                                let exact = arena[idx].value + env.node_value(gp, k, &obs);
                                if exact < value {
                                    heap.push(HeapEntry {
                                        value: exact,
                                        cand: Candidate::Exact { step, pos },
                                    });
                                    continue;
                                }
                            }
                        }
                        let pred = &arena[idx];
                        if env.slew_feasible(pred.gp, pred.step, gp, k) {
                            committed = Some(Committed {
                                gp,
                                step: k,
                                value,
                                pred: Some(idx),
                                hist: pred.hist.clone(),
                            });
                            break;
                        }
                    }
                }
            }

            if let Some(mut node) = committed {
                node.hist =
                    Some(hist_insert(node.hist.as_ref(), gp, env.step_time(k), top_bit));
                let idx = arena.len();
                let node_value_total = node.value;
                arena.push(node);
                committed_here.push(idx);
                if best_overall.is_none_or(|(bv, _)| node_value_total > bv) {
                    best_overall = Some((node_value_total, idx));
                }
            }
        }
        committed_here.sort_by(|&a, &b| {
            arena[b].value.total_cmp(&arena[a].value).then(arena[a].gp.cmp(&arena[b].gp))
        });
        by_step[k] = committed_here;
        best_by_step.push(best_overall);
    }

    let (value, path) = match best_overall {
        None => (0.0, Vec::new()),
        Some((v, idx)) => (v, extract_path(&arena, idx)),
    };
    SweepResult { path, value, best_by_step, stats, arena }
}

/// Evaluate a concrete path with the environment's own value semantics,
/// independent of the search. Returns `None` when the path violates time
/// ordering or slew feasibility.
pub fn evaluate_path(env: &dyn DpEnv, path: &[(u32, usize)]) -> Option<f64> {
    let mut total = 0.0;
    for (i, &(gp, k)) in path.iter().enumerate() {
        if i == 0 {
            if !env.start_feasible(gp, k) {
                return None;
            }
        } else {
            let (pg, pk) = path[i - 1];
            if pk >= k || !env.slew_feasible(pg, pk, gp, k) {
                return None;
            }
        }
        let obs: Vec<f64> = path[..i]
            .iter()
            .filter(|&&(g, _)| g == gp)
            .map(|&(_, pk)| env.step_time(pk))
            .collect();
        total += env.node_value(gp, k, &obs);
    }
    Some(total)
}
