//! Seeded parallel replication.
//!
//! Replication `i` of a batch always draws from stream `base + i` of the root
//! seed, so results do not depend on the number of worker threads.

use mcoal_core::{stream_rng, StreamRng};
use rayon::prelude::*;

/// Stream id for replication `rep` of case `case` in criterion `criterion`.
pub fn stream_id(criterion: u64, case: u64, rep: u64) -> u64 {
    (criterion << 40) | (case << 32) | rep
}

pub fn replicate<T, F>(root: u64, base: u64, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng) -> T + Sync,
{
    (0..count).into_par_iter().map(|i| f(&mut stream_rng(root, base + i as u64))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn independent_of_thread_count() {
        let draw = |rng: &mut StreamRng| rng.random::<u64>();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| replicate(9, 100, 1000, draw));
        let b = four.install(|| replicate(9, 100, 1000, draw));
        assert_eq!(a, b);
        assert_eq!(a[3], stream_rng(9, 103).random::<u64>());
    }

    #[test]
    fn stream_ids_do_not_collide() {
        assert_ne!(stream_id(1, 0, 5), stream_id(0, 1, 5));
        assert_eq!(stream_id(3, 2, 7), (3 << 40) + (2 << 32) + 7);
    }
}
