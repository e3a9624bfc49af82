//! Simultaneous breadth-first walks.
//!
//! For one family of clocks `ξ_i ~ Exp(x_i)` and every `q > 0`,
//!
//! ```text
//! Z^{x,q}(s) = Σ_i x_i 1{ξ_i / q ≤ s} - s
//! ```
//!
//! Exploring `Z^{x,q}` left to right with a "listening frontier" recovers the
//! connected components of the multiplicative coalescent at time `q`: a
//! component starts at the first unexplored clock, every block whose clock
//! rings before the frontier joins it and pushes the frontier forward by its
//! mass, and the component closes as soon as the next clock rings after the
//! frontier. Each component is an excursion of `Z^{x,q}` above its past
//! minimum, with length equal to the component mass.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use crate::clocks::ClockFamily;
use crate::direct::MergeEvent;
use crate::error::{Error, Result};
use crate::lengths::OrderedLengths;
use crate::mass::{compensated_sum, MassVector};
use crate::partition::Partition;
use crate::path::JumpPath;

/// `Z^{x,q}` stored symbolically: jump `k` happens at `ξ_(k)/q`, has size
/// `x_{π_k}` and belongs to block `π_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPath {
    q: f64,
    path: JumpPath,
    blocks: Vec<usize>,
}

impl WalkPath {
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn jump_times(&self) -> &[f64] {
        self.path.times()
    }

    pub fn jump_sizes(&self) -> &[f64] {
        self.path.sizes()
    }

    /// Block index of each jump.
    pub fn jump_blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn path(&self) -> &JumpPath {
        &self.path
    }

    pub fn value_at(&self, s: f64) -> f64 {
        self.path.value_at(s)
    }

    pub fn left_limit(&self, s: f64) -> f64 {
        self.path.left_limit(s)
    }
}

pub fn build_walk(x: &MassVector, clocks: &ClockFamily, q: f64) -> Result<WalkPath> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::NonPositiveQ(q));
    }
    if clocks.len() != x.len() {
        return Err(Error::ClockCountMismatch { expected: x.len(), found: clocks.len() });
    }
    let times: Vec<f64> = clocks.sorted().map(|xi| xi / q).collect();
    let sizes: Vec<f64> = clocks.order().iter().map(|&i| x.get(i)).collect();
    Ok(WalkPath { q, path: JumpPath::new(times, sizes, -1.0), blocks: clocks.order().to_vec() })
}

/// One explored component: an excursion `[start, end]` of the walk.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    /// Block whose clock opened the excursion.
    pub root: usize,
    /// Blocks in breadth-first (clock) order, root first.
    pub members: Vec<usize>,
    pub start: f64,
    pub end: f64,
    /// Compensated sum of member masses, equal to `end - start` up to rounding.
    pub mass: f64,
    /// Index range of the members in the walk's jump order.
    pub first_jump: usize,
    pub last_jump: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exploration {
    pub components: Vec<Component>,
    /// Load-free intervals `F_1, F_2, ...`: `[0, ξ_(1)/q]`, then from the end
    /// of each component to the next clock.
    pub free_intervals: Vec<(f64, f64)>,
}

impl Exploration {
    pub fn partition(&self, n: usize) -> Partition {
        Partition::canonical(n, self.components.iter().map(|c| c.members.clone()).collect())
    }
}

pub fn explore(walk: &WalkPath) -> Exploration {
    let times = walk.jump_times();
    let sizes = walk.jump_sizes();
    let blocks = walk.jump_blocks();
    let mut components = Vec::new();
    let mut free_intervals = Vec::new();
    let mut prev_end = 0.0;
    let mut k = 0;
    while k < times.len() {
        let start = times[k];
        free_intervals.push((prev_end, start));
        let mut frontier = start + sizes[k];
        let first = k;
        k += 1;
        while k < times.len() && times[k] <= frontier {
            frontier += sizes[k];
            k += 1;
        }
        components.push(Component {
            root: blocks[first],
            members: blocks[first..k].to_vec(),
            start,
            end: frontier,
            mass: compensated_sum(sizes[first..k].iter().copied()),
            first_jump: first,
            last_jump: k - 1,
        });
        prev_end = frontier;
    }
    Exploration { components, free_intervals }
}

pub fn excursion_lengths(expl: &Exploration) -> OrderedLengths {
    OrderedLengths::from_unsorted(expl.components.iter().map(|c| c.mass).collect())
}

/// Components of the coalescent at time `q`; `q = 0` gives singletons.
pub fn partition_at_q(x: &MassVector, clocks: &ClockFamily, q: f64) -> Result<Partition> {
    if q == 0.0 {
        return Ok(Partition::trivial(x.len()));
    }
    if q < 0.0 || q.is_nan() {
        return Err(Error::NegativeTime(q));
    }
    Ok(explore(&build_walk(x, clocks, q)?).partition(x.len()))
}

/// Ordered component masses at time `q`; `q = 0` gives `x` itself.
pub fn lengths_at_q(x: &MassVector, clocks: &ClockFamily, q: f64) -> Result<OrderedLengths> {
    if q == 0.0 {
        return Ok(OrderedLengths::from_unsorted(x.as_slice().to_vec()));
    }
    if q < 0.0 || q.is_nan() {
        return Err(Error::NegativeTime(q));
    }
    Ok(excursion_lengths(&explore(&build_walk(x, clocks, q)?)))
}

/// The walk with every load-free interval cut out of the time axis and the
/// jump at its right end (the component root) dropped.
///
/// What remains has unit negative drift, one jump per non-root block, and
/// component `k` occupying `[C_{k-1}, C_k]` with `C_k` the cumulative
/// component mass: the classical breadth-first walk at time `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutWalk {
    pub path: JumpPath,
    pub blocks: Vec<usize>,
    /// Component masses in exploration order.
    pub segments: Vec<f64>,
}

pub fn cut_free_intervals(walk: &WalkPath, expl: &Exploration) -> CutWalk {
    let times = walk.jump_times();
    let sizes = walk.jump_sizes();
    let mut cut_times = Vec::new();
    let mut cut_sizes = Vec::new();
    let mut blocks = Vec::new();
    let mut removed = 0.0;
    for (comp, free) in expl.components.iter().zip(&expl.free_intervals) {
        removed += free.1 - free.0;
        for k in comp.first_jump + 1..=comp.last_jump {
            cut_times.push(times[k] - removed);
            cut_sizes.push(sizes[k]);
            blocks.push(walk.jump_blocks()[k]);
        }
    }
    CutWalk {
        path: JumpPath::new(cut_times, cut_sizes, -1.0),
        blocks,
        segments: expl.components.iter().map(|c| c.mass).collect(),
    }
}

/// The merge events of `q ↦ partition_at_q(x, clocks, q)` over all `q > 0`.
///
/// Components are always contiguous runs of the clock order. A run starting at
/// position `a` and ending at `k - 1` absorbs the run starting at `k` once
/// `ξ_(k)/q ≤ ξ_(a)/q + Σ_{a ≤ m < k} x_{π_m}`, i.e. at
/// `q = (ξ_(k) - ξ_(a)) / (S_k - S_a)` with `S` the cumulative masses in clock
/// order. Sweeping these boundary times in increasing order yields every
/// merge, each one joining two neighbouring runs.
pub fn merge_history(x: &MassVector, clocks: &ClockFamily) -> Vec<MergeEvent> {
    let n = x.len();
    let order = clocks.order();
    let xi: Vec<f64> = clocks.sorted().collect();
    let cumulative = cumulative_masses(x, order);
    let boundary_time = |a: usize, k: usize| (xi[k] - xi[a]) / (cumulative[k] - cumulative[a]);

    // runs are identified by their first position
    let mut run_end: Vec<usize> = (0..n).collect();
    let mut is_start = vec![true; n];
    let mut heap = BinaryHeap::new();
    for k in 1..n {
        heap.push(Reverse(Boundary { time: boundary_time(k - 1, k), left: k - 1, right: k }));
    }
    let mut events = Vec::with_capacity(n.saturating_sub(1));
    while let Some(Reverse(b)) = heap.pop() {
        let valid = is_start[b.left] && is_start[b.right] && run_end[b.left] + 1 == b.right;
        if !valid {
            continue;
        }
        let end = run_end[b.right];
        let left: Vec<usize> = order[b.left..b.right].to_vec();
        let right: Vec<usize> = order[b.right..=end].to_vec();
        events.push(MergeEvent::new(b.time, left, right));
        is_start[b.right] = false;
        run_end[b.left] = end;
        if end + 1 < n {
            heap.push(Reverse(Boundary { time: boundary_time(b.left, end + 1), left: b.left, right: end + 1 }));
        }
    }
    events
}

/// `S_k = Σ_{m < k} x_{π_m}`, shared with Uribe's diagram slopes.
pub(crate) fn cumulative_masses(x: &MassVector, order: &[usize]) -> Vec<f64> {
    let mut s = Vec::with_capacity(order.len());
    let mut acc = 0.0;
    for &i in order {
        s.push(acc);
        acc += x.get(i);
    }
    s
}

#[derive(Debug, Clone, Copy)]
struct Boundary {
    time: f64,
    left: usize,
    right: usize,
}

impl PartialEq for Boundary {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Boundary {}

impl PartialOrd for Boundary {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Boundary {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.right.cmp(&other.right))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clocks::draw_clocks;
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;

    fn worked() -> (MassVector, ClockFamily) {
        let x = MassVector::new(vec![1.1, 0.8, 0.5, 0.4, 0.4, 0.3, 0.2]).unwrap();
        let c = ClockFamily::from_values(&x, vec![6.0, 0.2, 1.4, 0.7, 5.6, 4.6, 3.4]).unwrap();
        (x, c)
    }

    fn assert_all_close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
        for (u, v) in a.iter().zip(b) {
            assert_relative_eq!(*u, *v, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn worked_walk() {
        let (x, c) = worked();
        let w = build_walk(&x, &c, 2.0).unwrap();
        assert_all_close(w.jump_times(), &[0.1, 0.35, 0.7, 1.7, 2.3, 2.8, 3.0]);
        assert_eq!(w.jump_sizes(), &[0.8, 0.4, 0.5, 0.2, 0.3, 0.4, 1.1]);
    }

    #[test]
    fn worked_exploration() {
        let (x, c) = worked();
        let e = explore(&build_walk(&x, &c, 2.0).unwrap());
        let members: Vec<Vec<usize>> = e.components.iter().map(|c| c.members.iter().map(|i| i + 1).collect()).collect();
        assert_eq!(members, vec![vec![2, 4, 3, 7], vec![6], vec![5, 1]]);
        let bounds: Vec<f64> = e.components.iter().flat_map(|c| [c.start, c.end]).collect();
        assert_all_close(&bounds, &[0.1, 2.0, 2.3, 2.6, 2.8, 4.3]);
        assert_all_close(excursion_lengths(&e).as_slice(), &[1.9, 1.5, 0.3]);
        let free: Vec<f64> = e.free_intervals.iter().flat_map(|f| [f.0, f.1]).collect();
        assert_all_close(&free, &[0.0, 0.1, 2.0, 2.3, 2.6, 2.8]);
        let p = partition_at_q(&x, &c, 2.0).unwrap();
        assert_eq!(alloc::format!("{p}"), "{{1,5},{2,3,4,7},{6}}");
    }

    #[test]
    fn worked_cut_walk() {
        let (x, c) = worked();
        let w = build_walk(&x, &c, 2.0).unwrap();
        let cut = cut_free_intervals(&w, &explore(&w));
        assert_relative_eq!(cut.path.times()[0], 0.25, max_relative = 1e-12);
        assert_all_close(cut.path.times(), &[0.25, 0.6, 1.6, 2.4 - 0.0]);
        let blocks: Vec<usize> = cut.blocks.iter().map(|b| b + 1).collect();
        assert_eq!(blocks, vec![4, 3, 7, 1]);
        assert_all_close(&cut.segments, &[1.9, 0.3, 1.5]);
    }

    #[test]
    fn single_block_walk() {
        let x = MassVector::new(vec![0.7]).unwrap();
        let c = ClockFamily::from_values(&x, vec![3.0]).unwrap();
        let w = build_walk(&x, &c, 2.0).unwrap();
        assert_eq!(w.jump_times(), &[1.5]);
        assert_eq!(w.jump_sizes(), &[0.7]);
        let e = explore(&w);
        assert_eq!(e.components.len(), 1);
        assert!(merge_history(&x, &c).is_empty());
    }

    #[test]
    fn nonpositive_q_rejected() {
        let (x, c) = worked();
        assert_eq!(build_walk(&x, &c, 0.0), Err(Error::NonPositiveQ(0.0)));
        assert!(build_walk(&x, &c, -1.0).is_err());
        assert!(partition_at_q(&x, &c, -1.0).is_err());
        assert_eq!(partition_at_q(&x, &c, 0.0).unwrap(), Partition::trivial(7));
    }

    #[test]
    fn doubling_q_halves_jump_times() {
        let (x, c) = worked();
        let a = build_walk(&x, &c, 1.5).unwrap();
        let b = build_walk(&x, &c, 3.0).unwrap();
        for (u, v) in a.jump_times().iter().zip(b.jump_times()) {
            assert_relative_eq!(*u, 2.0 * v, max_relative = 1e-15);
        }
        assert_eq!(a.jump_sizes(), b.jump_sizes());
    }

    #[test]
    fn small_q_gives_singletons() {
        let (x, c) = worked();
        let xi: Vec<f64> = c.sorted().collect();
        let min_gap = xi.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let q = 0.99 * min_gap / 1.1;
        let e = explore(&build_walk(&x, &c, q).unwrap());
        assert!(e.components.iter().all(|c| c.members.len() == 1));
        assert_all_close(excursion_lengths(&e).as_slice(), x.as_slice());
        let w = build_walk(&x, &c, q).unwrap();
        assert!(cut_free_intervals(&w, &e).path.times().is_empty());
    }

    #[test]
    fn fully_merged_length_is_total_mass() {
        let (x, c) = worked();
        let l = lengths_at_q(&x, &c, 1e6).unwrap();
        assert_eq!(l.len(), 1);
        assert_relative_eq!(l.largest(), 3.7, max_relative = 1e-12);
    }

    #[test]
    fn worked_merge_history() {
        let (x, c) = worked();
        let h = merge_history(&x, &c);
        assert_eq!(h.len(), 6);
        assert_relative_eq!(h[0].time, 0.625, max_relative = 1e-12);
        // first three merges build {2,4,3,7}; {5}+{1} at q=1 lands in between
        let before_two: Vec<&MergeEvent> = h.iter().filter(|e| e.time <= 2.0).collect();
        assert_eq!(before_two.len(), 4);
        let p = crate::direct::apply_events(&Partition::trivial(7), before_two);
        assert_eq!(p, partition_at_q(&x, &c, 2.0).unwrap());
    }

    #[test]
    fn excursion_property_and_history_agree_with_sweep() {
        for seed in 0..300u64 {
            let mut rng = stream_rng(21, seed);
            let n = 2 + (seed as usize % 40);
            let raw: Vec<f64> = (0..n).map(|i| 0.1 + ((i * 7919 + seed as usize) % 97) as f64 / 40.0).collect();
            let x = MassVector::from_unsorted(raw).unwrap();
            let c = draw_clocks(&x, &mut rng).unwrap();
            let history = merge_history(&x, &c);
            assert_eq!(history.len(), n - 1);
            let q = 0.5 / x.moments().sigma2 * (1.0 + (seed % 5) as f64);
            let w = build_walk(&x, &c, q).unwrap();
            let e = explore(&w);
            for comp in &e.components {
                let base = w.left_limit(comp.start);
                assert!((w.value_at(comp.end) - base).abs() < 1e-9);
                assert!((comp.end - comp.start - comp.mass).abs() < 1e-9);
                for k in comp.first_jump + 1..=comp.last_jump {
                    let t = w.jump_times()[k];
                    assert!(w.left_limit(t) > base - 1e-12);
                    assert!(w.value_at(t) > base);
                }
                // interval-neighbour merging: members are a contiguous run of π
                assert_eq!(comp.last_jump - comp.first_jump + 1, comp.members.len());
            }
            let swept = crate::direct::apply_events(&Partition::trivial(n), history.iter().filter(|ev| ev.time <= q));
            assert_eq!(swept, e.partition(n));
            // the value-domain excursion finder agrees with the frontier sweep
            let by_value = w.path().excursions();
            assert_eq!(by_value.len(), e.components.len());
            for (a, b) in by_value.iter().zip(&e.components) {
                assert_relative_eq!(a.length(), b.mass, max_relative = 1e-9);
            }
        }
    }
}
