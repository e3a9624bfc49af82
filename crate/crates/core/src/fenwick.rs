use alloc::vec;
use alloc::vec::Vec;

/// Binary indexed tree over nonnegative weights with prefix-sum search.
pub(crate) struct Fenwick {
    tree: Vec<f64>,
    values: Vec<f64>,
}

impl Fenwick {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len();
        let mut tree = vec![0.0; n + 1];
        for (i, &v) in values.iter().enumerate() {
            tree[i + 1] += v;
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i + 1];
            }
        }
        Self { tree, values: values.to_vec() }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        let delta = v - self.values[i];
        self.values[i] = v;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    /// Sum of the first `i` values.
    pub fn prefix(&self, i: usize) -> f64 {
        let mut k = i;
        let mut s = 0.0;
        while k > 0 {
            s += self.tree[k];
            k -= k & k.wrapping_neg();
        }
        s
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.values.len())
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`, clamped to
    /// the last index with positive weight.
    pub fn search(&self, mut target: f64) -> usize {
        let n = self.values.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        let mut idx = pos.min(n - 1);
        while self.values[idx] <= 0.0 && idx > 0 {
            idx -= 1;
        }
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_and_search() {
        let mut f = Fenwick::new(&[1.0, 0.0, 2.0, 3.0]);
        assert_eq!(f.total(), 6.0);
        assert_eq!(f.prefix(3), 3.0);
        assert_eq!(f.search(0.5), 0);
        assert_eq!(f.search(1.5), 2);
        assert_eq!(f.search(5.9), 3);
        f.set(2, 0.0);
        assert_eq!(f.search(1.5), 3);
        assert_eq!(f.total(), 4.0);
    }
}
