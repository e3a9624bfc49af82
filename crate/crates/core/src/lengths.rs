use alloc::vec::Vec;

use crate::mass::compensated_sum;

/// Block masses or excursion lengths in non-increasing order (zeros dropped).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrderedLengths {
    lengths: Vec<f64>,
}

impl OrderedLengths {
    pub fn from_unsorted(mut lengths: Vec<f64>) -> Self {
        lengths.retain(|&v| v > 0.0);
        lengths.sort_by(|a, b| b.total_cmp(a));
        Self { lengths }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lengths
    }

    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    /// Largest entry, `0` when empty.
    pub fn largest(&self) -> f64 {
        self.lengths.first().copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.lengths.iter().copied())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.lengths
    }
}
