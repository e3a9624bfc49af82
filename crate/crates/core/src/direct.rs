//! Event-driven simulation of the multiplicative coalescent.
//!
//! With current block masses `m_a`, every pair merges at rate `m_a m_b`, so
//! the total rate is `R = (σ₁² - Σ m_a²) / 2`. Because `σ₁` never changes,
//! the weight `m_a (σ₁ - m_a)` of each block only changes when that block
//! merges; a Fenwick tree over these weights picks the first block of the
//! merging pair in `O(log n)` and a second tree over the masses picks its
//! partner.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::fenwick::Fenwick;
use crate::mass::MassVector;
use crate::partition::Partition;

/// Two blocks (sorted index sets) merging at `time`. `left` is the block with
/// the smaller minimum element.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeEvent {
    pub time: f64,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl MergeEvent {
    pub(crate) fn new(time: f64, mut a: Vec<usize>, mut b: Vec<usize>) -> Self {
        a.sort_unstable();
        b.sort_unstable();
        if a[0] > b[0] {
            core::mem::swap(&mut a, &mut b);
        }
        Self { time, left: a, right: b }
    }
}

/// Initial partition plus the merges that coarsen it, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTrajectory {
    pub initial: Partition,
    pub events: Vec<MergeEvent>,
}

impl PartitionTrajectory {
    /// Partition after all events with `time <= q`.
    pub fn partition_at(&self, q: f64) -> Result<Partition> {
        if q < 0.0 || q.is_nan() {
            return Err(Error::NegativeTime(q));
        }
        Ok(apply_events(&self.initial, self.events.iter().take_while(|e| e.time <= q)))
    }

    pub fn final_partition(&self) -> Partition {
        apply_events(&self.initial, self.events.iter())
    }
}

pub(crate) fn apply_events<'a, I>(initial: &Partition, events: I) -> Partition
where
    I: IntoIterator<Item = &'a MergeEvent>,
{
    let mut labels = initial.labels();
    for e in events {
        let target = labels[e.left[0]];
        let source = labels[e.right[0]];
        for l in labels.iter_mut() {
            if *l == source {
                *l = target;
            }
        }
    }
    Partition::from_labels(&labels)
}

/// Runs the chain from the trivial partition of `x` until a single block
/// remains or the next event would fall after `horizon`.
pub fn simulate_direct<R: Rng + ?Sized>(x: &MassVector, horizon: f64, rng: &mut R) -> Result<PartitionTrajectory> {
    if horizon < 0.0 || horizon.is_nan() {
        return Err(Error::NegativeTime(horizon));
    }
    let n = x.len();
    let total = x.total();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut mass: Vec<f64> = x.as_slice().to_vec();
    let pair_weights: Vec<f64> = mass.iter().map(|&m| m * (total - m)).collect();
    let mut pair_tree = Fenwick::new(&pair_weights);
    let mut mass_tree = Fenwick::new(&mass);

    let mut events = Vec::with_capacity(n.saturating_sub(1));
    let mut time = 0.0;
    let mut alive = n;
    while alive > 1 {
        // Σ_a m_a (σ₁ - m_a) = 2R
        let rate = 0.5 * pair_tree.total();
        if rate.is_nan() || rate <= 0.0 {
            break;
        }
        let wait: f64 = Exp1.sample(rng);
        time += wait / rate;
        if time > horizon {
            break;
        }
        let (a, b) = pick_pair(&pair_tree, &mass_tree, total, rng);
        let moved = core::mem::take(&mut members[b]);
        let event = MergeEvent::new(time, members[a].clone(), moved.clone());
        members[a].extend(moved);
        mass[a] += mass[b];
        mass[b] = 0.0;
        pair_tree.set(a, mass[a] * (total - mass[a]).max(0.0));
        pair_tree.set(b, 0.0);
        mass_tree.set(a, mass[a]);
        mass_tree.set(b, 0.0);
        events.push(event);
        alive -= 1;
    }
    Ok(PartitionTrajectory { initial: Partition::trivial(n), events })
}

fn pick_pair<R: Rng + ?Sized>(pair_tree: &Fenwick, mass_tree: &Fenwick, total: f64, rng: &mut R) -> (usize, usize) {
    loop {
        let u: f64 = rng.random::<f64>() * pair_tree.total();
        let a = pair_tree.search(u);
        let ma = mass_tree.value(a);
        // partner b ≠ a with probability m_b / (σ₁ - m_a)
        let mut v: f64 = rng.random::<f64>() * (total - ma);
        if v >= mass_tree.prefix(a) {
            v += ma;
        }
        let b = mass_tree.search(v);
        if b != a && mass_tree.value(b) > 0.0 && pair_tree.value(a) > 0.0 {
            return (a, b);
        }
    }
}
