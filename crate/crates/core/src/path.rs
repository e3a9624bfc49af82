//! Piecewise-linear paths with finitely many upward jumps.

use alloc::vec::Vec;

/// `P(s) = Σ_{t_i ≤ s} h_i + slope · s`, right-continuous, `P(0-) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpPath {
    times: Vec<f64>,
    sizes: Vec<f64>,
    cumulative: Vec<f64>,
    slope: f64,
}

/// One excursion above past minima, `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Excursion {
    pub start: f64,
    pub end: f64,
}

impl Excursion {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

impl JumpPath {
    /// `times` must be non-decreasing.
    pub fn new(times: Vec<f64>, sizes: Vec<f64>, slope: f64) -> Self {
        debug_assert_eq!(times.len(), sizes.len());
        debug_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        let mut cumulative = Vec::with_capacity(sizes.len());
        let mut acc = 0.0;
        for &h in &sizes {
            acc += h;
            cumulative.push(acc);
        }
        Self { times, sizes, cumulative, slope }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    fn jumps_up_to(&self, s: f64) -> f64 {
        let k = self.times.partition_point(|&t| t <= s);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    fn jumps_before(&self, s: f64) -> f64 {
        let k = self.times.partition_point(|&t| t < s);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    pub fn value_at(&self, s: f64) -> f64 {
        self.jumps_up_to(s) + self.slope * s
    }

    /// `P(s-)`.
    pub fn left_limit(&self, s: f64) -> f64 {
        self.jumps_before(s) + self.slope * s
    }

    /// `min_{u ≤ s} P(u)`. Only meaningful for a nonpositive slope, where the
    /// infimum is attained at `s` or just before a jump.
    pub fn running_min(&self, s: f64) -> f64 {
        let mut m = self.value_at(s).min(0.0);
        for &t in self.times.iter().take_while(|&&t| t <= s) {
            m = m.min(self.left_limit(t));
        }
        m
    }

    /// Excursions above past minima for a path with negative slope, found by
    /// tracking values: an excursion starts at a jump that leaves a running
    /// minimum and ends where the path comes back down to that minimum.
    pub fn excursions(&self) -> Vec<Excursion> {
        assert!(self.slope < 0.0, "excursions need a negative slope");
        let mut out = Vec::new();
        let mut i = 0;
        let n = self.times.len();
        while i < n {
            let start = self.times[i];
            let level = self.left_limit(start);
            let mut value = self.value_at(start);
            let mut t = start;
            let mut j = i + 1;
            loop {
                // time at which the path would return to `level` without more jumps
                let hit = t + (value - level) / -self.slope;
                if j < n && self.times[j] <= hit {
                    t = self.times[j];
                    value = self.value_at(t);
                    j = self.times.partition_point(|&u| u <= t);
                } else {
                    out.push(Excursion { start, end: hit });
                    break;
                }
            }
            i = j;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    #[test]
    fn values_and_limits() {
        let p = JumpPath::new(vec![1.0, 2.0], vec![0.5, 2.0], -1.0);
        assert_eq!(p.value_at(0.5), -0.5);
        assert_eq!(p.value_at(1.0), -0.5);
        assert_eq!(p.left_limit(1.0), -1.0);
        assert_eq!(p.value_at(2.0), 0.5);
        assert_eq!(p.running_min(2.5), -1.5);
    }

    #[test]
    fn excursion_end_points() {
        // jump 0.5 at 1 ends at 1.5; jump 2 at 2 ends at 4
        let p = JumpPath::new(vec![1.0, 2.0], vec![0.5, 2.0], -1.0);
        let e = p.excursions();
        assert_eq!(e.len(), 2);
        assert_relative_eq!(e[0].start, 1.0);
        assert_relative_eq!(e[0].end, 1.5);
        assert_relative_eq!(e[1].start, 2.0);
        assert_relative_eq!(e[1].end, 4.0);
    }
}
