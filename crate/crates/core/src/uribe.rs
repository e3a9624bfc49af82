//! Uribe's diagram.
//!
//! Line `k` (in clock order) starts at height `ξ_(k)` and falls with slope
//! `-S_k`, where `S_k` is the mass of the blocks whose clocks rang before
//! `ξ_(k)`. Line `k` stops at `s_k`, the first time it meets a line with a
//! smaller index, and the class of line `k` then moves into the class of the
//! line `ℓ_k` it met.
//!
//! Writing `P_j = (S_j, ξ_(j))`, the meeting time `s_{k,j}` is the slope of the
//! segment `P_j P_k`, so `ℓ_k` is the point of contact of the upper tangent
//! from `P_k` to `{P_j : j < k}`. An upper hull kept as a monotone chain finds
//! all of them in `O(n)` once the clocks are sorted.

use alloc::vec;
use alloc::vec::Vec;

use crate::bfw::cumulative_masses;
use crate::clocks::ClockFamily;
use crate::direct::{apply_events, MergeEvent};
use crate::error::{Error, Result};
use crate::lengths::OrderedLengths;
use crate::mass::MassVector;
use crate::partition::Partition;

#[derive(Debug, Clone, PartialEq)]
pub struct Diagram {
    /// `π`: block of each line.
    pub order: Vec<usize>,
    pub intercepts: Vec<f64>,
    pub slopes: Vec<f64>,
    /// `s_k`; infinite for the first line, which never stops.
    pub stop_times: Vec<f64>,
    /// `ℓ_k` (line index); zero for the first line.
    pub targets: Vec<usize>,
    masses: Vec<f64>,
}

impl Diagram {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Height of line `k` at time `s`.
    pub fn height(&self, k: usize, s: f64) -> f64 {
        self.intercepts[k] + self.slopes[k] * s
    }

    /// `s_{k,j}` for `j < k`, in closed form.
    pub fn meeting_time(&self, k: usize, j: usize) -> f64 {
        (self.intercepts[k] - self.intercepts[j]) / (self.slopes[j] - self.slopes[k])
    }
}

pub fn build_diagram(x: &MassVector, clocks: &ClockFamily) -> Result<Diagram> {
    if clocks.len() != x.len() {
        return Err(Error::ClockCountMismatch { expected: x.len(), found: clocks.len() });
    }
    let n = x.len();
    let order = clocks.order().to_vec();
    let intercepts: Vec<f64> = clocks.sorted().collect();
    let cumulative = cumulative_masses(x, &order);
    let mut stop_times = vec![f64::INFINITY; n];
    let mut targets = vec![0; n];

    let cross = |a: usize, b: usize, c: usize| {
        (cumulative[b] - cumulative[a]) * (intercepts[c] - intercepts[a])
            - (intercepts[b] - intercepts[a]) * (cumulative[c] - cumulative[a])
    };
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for k in 0..n {
        while hull.len() >= 2 {
            let b = hull[hull.len() - 1];
            let a = hull[hull.len() - 2];
            let turn = cross(a, b, k);
            if turn == 0.0 {
                return Err(Error::TieInStopTimes { line: k, other: a });
            }
            if turn > 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        if let Some(&j) = hull.last() {
            targets[k] = j;
            stop_times[k] = (intercepts[k] - intercepts[j]) / (cumulative[k] - cumulative[j]);
        }
        hull.push(k);
    }
    let slopes = cumulative.iter().map(|s| -s).collect();
    let masses = order.iter().map(|&i| x.get(i)).collect();
    Ok(Diagram { order, intercepts, slopes, stop_times, targets, masses })
}

/// `s_k` and `ℓ_k` straight from the definition, `O(n²)`.
pub fn brute_force_stops(d: &Diagram) -> Vec<(f64, usize)> {
    (1..d.len())
        .map(|k| {
            let mut best = (f64::INFINITY, 0);
            for j in 0..k {
                let s = d.meeting_time(k, j);
                if s < best.0 {
                    best = (s, j);
                }
            }
            best
        })
        .collect()
}

/// Line `absorbed` stops at `time` and its class joins that of `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UribeEvent {
    pub time: f64,
    pub target: usize,
    pub absorbed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UribeCoalescent {
    pub n: usize,
    pub events: Vec<UribeEvent>,
    /// Block-level view of the same events.
    pub merges: Vec<MergeEvent>,
    /// Events whose static target had already stopped. The class was sent to
    /// the nearest active lower line instead. Always zero so far.
    pub discrepancies: usize,
    line_masses: Vec<f64>,
}

/// Processes the stops in time order. Each class is named after the lowest
/// line it contains, which is the line still being drawn.
pub fn run_coalescent(d: &Diagram) -> UribeCoalescent {
    let n = d.len();
    let mut by_time: Vec<usize> = (1..n).collect();
    by_time.sort_by(|&a, &b| d.stop_times[a].total_cmp(&d.stop_times[b]).then(a.cmp(&b)));

    let mut active = vec![true; n];
    let mut contents: Vec<Vec<usize>> = d.order.iter().map(|&i| vec![i]).collect();
    let mut events = Vec::with_capacity(n.saturating_sub(1));
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut discrepancies = 0;
    for k in by_time {
        let mut target = d.targets[k];
        if !active[target] {
            discrepancies += 1;
            while !active[target] {
                target -= 1;
            }
        }
        let time = d.stop_times[k];
        let moved = core::mem::take(&mut contents[k]);
        merges.push(MergeEvent::new(time, contents[target].clone(), moved.clone()));
        contents[target].extend(moved);
        active[k] = false;
        events.push(UribeEvent { time, target, absorbed: k });
    }
    UribeCoalescent { n, events, merges, discrepancies, line_masses: d.masses.clone() }
}

impl UribeCoalescent {
    /// `S`, the first stop time; infinite when `n = 1`.
    pub fn first_event_time(&self) -> f64 {
        self.events.first().map_or(f64::INFINITY, |e| e.time)
    }

    /// The time all lines have merged into one class; zero when `n = 1`.
    pub fn connectivity_time(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.time)
    }

    pub fn partition_at(&self, s: f64) -> Result<Partition> {
        if s < 0.0 || s.is_nan() {
            return Err(Error::NegativeTime(s));
        }
        Ok(apply_events(&Partition::trivial(self.n), self.merges.iter().take_while(|e| e.time <= s)))
    }

    /// Class masses `M_i(s)` indexed by line.
    pub fn class_masses(&self, s: f64) -> Result<Vec<f64>> {
        if s < 0.0 || s.is_nan() {
            return Err(Error::NegativeTime(s));
        }
        let mut m = self.line_masses.clone();
        for e in self.events.iter().take_while(|e| e.time <= s) {
            m[e.target] += m[e.absorbed];
            m[e.absorbed] = 0.0;
        }
        Ok(m)
    }
}

/// Ordered non-zero class masses at time `s`.
pub fn mass_process(uc: &UribeCoalescent, s: f64) -> Result<OrderedLengths> {
    Ok(OrderedLengths::from_unsorted(uc.class_masses(s)?))
}

/// Draws clocks until the diagram has no tied stop times.
pub fn sample_coalescent<R: rand::Rng + ?Sized>(x: &MassVector, rng: &mut R) -> Result<(ClockFamily, UribeCoalescent)> {
    loop {
        let clocks = crate::clocks::draw_clocks(x, rng)?;
        match build_diagram(x, &clocks) {
            Ok(d) => return Ok((clocks, run_coalescent(&d))),
            Err(Error::TieInStopTimes { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}
