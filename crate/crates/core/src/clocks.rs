//! Exponential clocks `ξ_i ~ Exp(x_i)` and the size-biased order they induce.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::mass::MassVector;

/// One independent exponential clock per block, together with the
/// permutation `π` that sorts them (`ξ_{π_1} < ξ_{π_2} < ...`).
///
/// Sorting clocks with rates `x_i` is the same as picking blocks one after
/// another with probability proportional to mass, so `π` is the size-biased
/// ordering of the blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockFamily {
    xi: Vec<f64>,
    order: Vec<usize>,
}

impl ClockFamily {
    /// Wraps explicit clock values, e.g. a worked example.
    pub fn from_values(x: &MassVector, xi: Vec<f64>) -> Result<Self> {
        if xi.len() != x.len() {
            return Err(Error::ClockCountMismatch { expected: x.len(), found: xi.len() });
        }
        for (index, &value) in xi.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidClock { index, value });
            }
        }
        let order = sort_order(&xi);
        if let Some((first, second)) = first_tie(&xi, &order) {
            return Err(Error::TiedClocks { first, second });
        }
        Ok(Self { xi, order })
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// Clock values indexed by block.
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    /// `π`, 0-based: `order()[k]` is the block whose clock rings `k`-th.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Order statistics `ξ_(1) < ξ_(2) < ...`.
    pub fn sorted(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.order.iter().map(move |&i| self.xi[i])
    }
}

fn sort_order(xi: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..xi.len()).collect();
    order.sort_by(|&a, &b| xi[a].total_cmp(&xi[b]).then(a.cmp(&b)));
    order
}

fn first_tie(xi: &[f64], order: &[usize]) -> Option<(usize, usize)> {
    order.windows(2).find(|w| xi[w[0]] == xi[w[1]]).map(|w| (w[0], w[1]))
}

/// Draws `ξ_i ~ Exp(x_i)` independently. Exactly tied clocks are redrawn, which
/// keeps the exponential marginals intact.
pub fn draw_clocks<R: Rng + ?Sized>(x: &MassVector, rng: &mut R) -> Result<ClockFamily> {
    let rates = x.as_slice();
    for (index, &value) in rates.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::DegenerateRate { index, value });
        }
    }
    let mut xi: Vec<f64> = rates.iter().map(|&rate| draw_exp(rng, rate)).collect();
    loop {
        let order = sort_order(&xi);
        let mut tied = false;
        for w in order.windows(2) {
            if xi[w[0]] == xi[w[1]] {
                tied = true;
                xi[w[1]] = draw_exp(rng, rates[w[1]]);
            }
        }
        if !tied {
            return Ok(ClockFamily { xi, order });
        }
    }
}

fn draw_exp<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    loop {
        let e: f64 = Exp1.sample(rng);
        let v = e / rate;
        if v > 0.0 && v.is_finite() {
            return v;
        }
    }
}
