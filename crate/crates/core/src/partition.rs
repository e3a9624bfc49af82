//! Set partitions of the block indices `{0, .., n-1}` in canonical form.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::mass::{compensated_sum, MassVector};

/// A partition of `{0, .., n-1}`. Each block is sorted ascending and blocks
/// are sorted by their smallest element, so two partitions are equal exactly
/// when they are structurally equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// All singletons.
    pub fn trivial(n: usize) -> Self {
        Self { n, blocks: (0..n).map(|i| vec![i]).collect() }
    }

    pub fn from_blocks(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidBlocks);
            }
            for &i in block {
                if i >= n || seen[i] {
                    return Err(Error::InvalidBlocks);
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidBlocks);
        }
        Ok(Self::canonical(n, blocks))
    }

    /// Builds a partition from a block label per element. Labels are
    /// arbitrary, only equality matters.
    pub fn from_labels(labels: &[usize]) -> Self {
        let n = labels.len();
        let width = labels.iter().max().map_or(0, |m| m + 1);
        let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); width];
        for (i, &l) in labels.iter().enumerate() {
            by_label[l].push(i);
        }
        Self::canonical(n, by_label.into_iter().filter(|b| !b.is_empty()).collect())
    }

    pub(crate) fn canonical(n: usize, mut blocks: Vec<Vec<usize>>) -> Self {
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Self { n, blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Index of the block containing each element.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                labels[i] = b;
            }
        }
        labels
    }

    /// True when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.n != coarser.n {
            return false;
        }
        let labels = coarser.labels();
        self.blocks.iter().all(|b| b.iter().all(|&i| labels[i] == labels[b[0]]))
    }

    /// Block masses, in block order.
    pub fn masses(&self, x: &MassVector) -> Vec<f64> {
        self.blocks.iter().map(|b| compensated_sum(b.iter().map(|&i| x.get(i)))).collect()
    }
}

/// Formats 1-based, e.g. `{{1,5},{2,3,4,7},{6}}`.
impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, block) in self.blocks.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            f.write_str("{")?;
            for (j, i) in block.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{}", i + 1)?;
            }
            f.write_str("}")?;
        }
        f.write_str("}")
    }
}
