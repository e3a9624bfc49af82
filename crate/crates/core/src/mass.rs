//! Block masses and their power sums `σ_r(x) = Σ_i x_i^r`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Neumaier's compensated summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if libm::fabs(sum) >= libm::fabs(v) {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// A finite configuration of positive block masses, stored non-increasing.
///
/// Block `i` (0-based here, 1-based in every external format) keeps its
/// position for the lifetime of the value, so clocks and partitions can refer
/// to blocks by index.
#[derive(Debug, Clone, PartialEq)]
pub struct MassVector {
    masses: Vec<f64>,
}

impl MassVector {
    /// Validates an already non-increasing list of masses.
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::EmptyMasses);
        }
        for (index, &value) in masses.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidMass { index, value });
            }
        }
        if let Some(index) = masses.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::UnsortedMasses { index: index + 1 });
        }
        Ok(Self { masses })
    }

    /// Sorts the masses non-increasingly before validating them.
    pub fn from_unsorted(mut masses: Vec<f64>) -> Result<Self> {
        masses.sort_by(|a, b| b.total_cmp(a));
        Self::new(masses)
    }

    /// `n` blocks of identical mass.
    pub fn uniform(n: usize, mass: f64) -> Result<Self> {
        Self::new(alloc::vec![mass; n])
    }

    /// The standard critical sequence: `n` blocks of mass `n^{-2/3}`.
    pub fn standard(n: usize) -> Result<Self> {
        Self::uniform(n, libm::pow(n as f64, -2.0 / 3.0))
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.masses
    }

    pub fn get(&self, index: usize) -> f64 {
        self.masses[index]
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.masses.iter().copied())
    }

    pub fn moments(&self) -> MomentStats {
        moments(self)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.masses
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentStats {
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
}

impl MomentStats {
    /// `σ₃ / σ₂³`, the quantity whose limit is `κ + Σ c_j³`.
    pub fn cubic_ratio(&self) -> f64 {
        self.sigma3 / (self.sigma2 * self.sigma2 * self.sigma2)
    }
}

pub fn moments(x: &MassVector) -> MomentStats {
    let m = x.as_slice();
    MomentStats {
        sigma1: compensated_sum(m.iter().copied()),
        sigma2: compensated_sum(m.iter().map(|v| v * v)),
        sigma3: compensated_sum(m.iter().map(|v| v * v * v)),
    }
}
