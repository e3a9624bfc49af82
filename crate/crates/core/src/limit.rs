//! The Lévy-type limit processes and their reflected excursions.
//!
//! ```text
//! W^{κ,t-τ,c}(s) = √κ W(s) + (t - τ) s - κ s²/2 + Σ_j (c_j 1{ξ_j ≤ s} - c_j² s)
//! ```
//!
//! with `W` a standard Brownian motion and independent `ξ_j ~ Exp(c_j)`.
//! Paths live on a timeline made of a uniform grid plus the exact jump times,
//! where every jump time carries two samples: the left limit, then the value
//! after the jump. The random input does not depend on `t`, so one realization
//! serves every drift.

use alloc::vec::Vec;

use libm::sqrt;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::lengths::OrderedLengths;
use crate::mass::compensated_sum;
use crate::path::Excursion;

/// Default cutoff below which jump sizes `c_j` are dropped.
pub const DEFAULT_C_MIN: f64 = 1e-3;

/// `(κ, τ, c)` with `c` truncated to finitely many entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTriple {
    kappa: f64,
    tau: f64,
    c: Vec<f64>,
    discarded_entries: usize,
    discarded_cube_tail: f64,
}

impl ParamTriple {
    pub fn new(kappa: f64, tau: f64, c: Vec<f64>) -> Result<Self> {
        Self::with_cutoff(kappa, tau, c, 0.0)
    }

    /// Keeps only `c_j ≥ c_min` and records `Σ c_j³` over the dropped tail.
    pub fn with_cutoff(kappa: f64, tau: f64, mut c: Vec<f64>, c_min: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter("kappa must be finite and nonnegative"));
        }
        if !tau.is_finite() {
            return Err(Error::InvalidParameter("tau must be finite"));
        }
        if c.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter("c entries must be finite and nonnegative"));
        }
        if c.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("c must be non-increasing"));
        }
        let keep = c.iter().take_while(|&&v| v >= c_min && v > 0.0).count();
        let tail = c.split_off(keep);
        Ok(Self {
            kappa,
            tau,
            c,
            discarded_entries: tail.len(),
            discarded_cube_tail: compensated_sum(tail.iter().map(|v| v * v * v)),
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn discarded_entries(&self) -> usize {
        self.discarded_entries
    }

    pub fn discarded_cube_tail(&self) -> f64 {
        self.discarded_cube_tail
    }

    /// With `κ = 0` the parameter space asks for `Σ c_j² = ∞`, which no
    /// finite truncation satisfies. Reported, never enforced.
    pub fn l2_condition_unverifiable(&self) -> bool {
        self.kappa == 0.0
    }

    /// `κ = 0` and no jumps: the path is a deterministic line.
    pub fn is_degenerate(&self) -> bool {
        self.kappa == 0.0 && self.c.is_empty()
    }

    fn c_sum(&self) -> f64 {
        compensated_sum(self.c.iter().copied())
    }

    fn c_square_sum(&self) -> f64 {
        compensated_sum(self.c.iter().map(|v| v * v))
    }
}

/// A horizon long enough for the drift to dominate at parameter `t`.
///
/// For `κ > 0` this is `max(2(|t - τ| + Σc)/κ, 6 κ^{-1/3})`, the second term
/// covering several typical excursion lengths when the first is small. For
/// `κ = 0` the decay rate is `Σc²`, and `10 / c_min` more lets the smallest
/// jump ring a few times. Degenerate parameters need an explicit horizon.
pub fn default_horizon(params: &ParamTriple, t: f64) -> Result<f64> {
    let push = (t - params.tau).abs() + params.c_sum();
    if params.kappa > 0.0 {
        Ok(f64::max(2.0 * push / params.kappa, 6.0 * libm::cbrt(1.0 / params.kappa)))
    } else if let Some(&c_min) = params.c.last() {
        Ok(2.0 * push / params.c_square_sum() + 10.0 / c_min)
    } else {
        Err(Error::InvalidParameter("kappa = 0 with empty c needs an explicit horizon"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub s: f64,
    pub value: f64,
    /// Left limit taken just before a jump at `s`.
    pub left_limit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitPath {
    params: ParamTriple,
    t: f64,
    grid_step: f64,
    horizon: f64,
    timeline: Vec<f64>,
    /// Standard Brownian motion at each timeline point.
    brownian: Vec<f64>,
    /// `(ξ_j, c_j)`, including jumps beyond the horizon.
    jumps: Vec<(f64, f64)>,
    samples: Vec<Sample>,
}

/// Draws one realization and evaluates it at drift `t`.
pub fn simulate_levy<R: Rng + ?Sized>(
    params: &ParamTriple,
    t: f64,
    grid_step: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<LimitPath> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::InvalidParameter("grid step must be positive"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter("horizon must be positive"));
    }
    if !t.is_finite() {
        return Err(Error::InvalidParameter("t must be finite"));
    }
    let mut jumps = Vec::with_capacity(params.c.len());
    for &c in &params.c {
        let xi: f64 = Exp::new(c).map_err(|_| Error::InvalidParameter("c"))?.sample(rng);
        jumps.push((xi, c));
    }
    let mut jump_times: Vec<f64> = jumps.iter().map(|j| j.0).filter(|&x| x < horizon).collect();
    jump_times.sort_by(f64::total_cmp);

    let cells = libm::ceil(horizon / grid_step - 1e-9).max(1.0) as usize;
    let mut timeline = Vec::with_capacity(cells + 1 + jump_times.len());
    let mut next_jump = jump_times.iter().peekable();
    for k in 0..=cells {
        let g = if k == cells { horizon } else { k as f64 * grid_step };
        while let Some(&&x) = next_jump.peek() {
            if x >= g {
                break;
            }
            timeline.push(x);
            next_jump.next();
        }
        timeline.push(g);
    }
    timeline.dedup();

    // Independent N(0, Δ) increments on each cell of the merged timeline.
    let mut brownian = Vec::with_capacity(timeline.len());
    let mut w = 0.0;
    let mut prev = 0.0;
    for &s in &timeline {
        let dt = s - prev;
        if dt > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            w += z * sqrt(dt);
        }
        brownian.push(w);
        prev = s;
    }

    let mut path =
        LimitPath { params: params.clone(), t, grid_step, horizon, timeline, brownian, jumps, samples: Vec::new() };
    path.samples = path.evaluate();
    Ok(path)
}

impl LimitPath {
    pub fn params(&self) -> &ParamTriple {
        &self.params
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn timeline(&self) -> &[f64] {
        &self.timeline
    }

    pub fn brownian(&self) -> &[f64] {
        &self.brownian
    }

    pub fn brownian_increments(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.brownian
            .iter()
            .map(|&w| {
                let d = w - prev;
                prev = w;
                d
            })
            .collect()
    }

    pub fn jumps(&self) -> &[(f64, f64)] {
        &self.jumps
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// The same realization at another drift.
    pub fn with_t(&self, t: f64) -> LimitPath {
        let mut p = LimitPath { samples: Vec::new(), t, ..self.clone() };
        p.samples = p.evaluate();
        p
    }

    /// `W(s)` from the stored noise: `s` must be a timeline point, `right`
    /// selects the value after a jump at `s` over the left limit.
    pub fn value_at_timeline(&self, index: usize, right: bool) -> f64 {
        let s = self.timeline[index];
        let jumped = compensated_sum(self.jumps.iter().filter(|j| if right { j.0 <= s } else { j.0 < s }).map(|j| j.1));
        self.continuous_part(s, self.brownian[index]) + jumped
    }

    fn continuous_part(&self, s: f64, w: f64) -> f64 {
        let p = &self.params;
        sqrt(p.kappa) * w + (self.t - p.tau) * s - 0.5 * p.kappa * s * s - p.c_square_sum() * s
    }

    fn evaluate(&self) -> Vec<Sample> {
        let mut jump_list: Vec<(f64, f64)> = self.jumps.iter().copied().filter(|j| j.0 < self.horizon).collect();
        jump_list.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut next = 0;
        let mut jumped = 0.0;
        let mut out = Vec::with_capacity(self.timeline.len() + jump_list.len());
        for (&s, &w) in self.timeline.iter().zip(&self.brownian) {
            let base = self.continuous_part(s, w);
            if next < jump_list.len() && jump_list[next].0 == s {
                out.push(Sample { s, value: base + jumped, left_limit: true });
                while next < jump_list.len() && jump_list[next].0 == s {
                    jumped += jump_list[next].1;
                    next += 1;
                }
            }
            out.push(Sample { s, value: base + jumped, left_limit: false });
        }
        out
    }
}

/// `B = W - running min`, on the samples of a [`LimitPath`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectedPath {
    pub samples: Vec<Sample>,
    pub running_min: Vec<f64>,
    pub reflected: Vec<f64>,
    pub horizon: f64,
}

pub fn reflect(path: &LimitPath) -> ReflectedPath {
    reflect_samples(path.samples.clone(), path.horizon)
}

pub fn reflect_samples(samples: Vec<Sample>, horizon: f64) -> ReflectedPath {
    let mut running_min = Vec::with_capacity(samples.len());
    let mut reflected = Vec::with_capacity(samples.len());
    let mut m = f64::INFINITY;
    for smp in &samples {
        m = m.min(smp.value);
        running_min.push(m);
        reflected.push(smp.value - m);
    }
    ReflectedPath { samples, running_min, reflected, horizon }
}

impl ReflectedPath {
    /// Samples where `B = 0`, i.e. the path sits at its running minimum.
    pub fn record_mask(&self) -> Vec<bool> {
        self.reflected.iter().map(|&b| b == 0.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitExcursions {
    /// Closed excursions of length at least `min_length`, in time order.
    pub intervals: Vec<Excursion>,
    pub lengths: OrderedLengths,
    /// Running length of an excursion still open at the horizon. It is not
    /// part of `lengths`.
    pub open_at_horizon: Option<f64>,
    /// Start of that open excursion.
    pub open_start: Option<f64>,
    /// Excursions whose starting record is the left limit at a jump time.
    /// Diagnostic only, meaningful only as the grid step goes to zero.
    pub jump_started: usize,
    pub horizon: f64,
}

impl LimitExcursions {
    /// `intervals` followed by the open excursion cut at the horizon, if any.
    pub fn intervals_with_open(&self) -> Vec<Excursion> {
        let mut out = self.intervals.clone();
        if let Some(start) = self.open_start {
            out.push(Excursion { start, end: self.horizon });
        }
        out
    }
}

/// Maximal stretches with `B > 0`. An excursion starts at the last record
/// sample before it and ends where the path crosses back down to that
/// record, found by linear interpolation between the two samples around the
/// crossing (exact when `κ = 0`).
pub fn limit_excursions(rp: &ReflectedPath, min_length: f64) -> LimitExcursions {
    let mut intervals = Vec::new();
    let mut jump_started = 0;
    let mut open: Option<(usize, f64)> = None;
    let n = rp.samples.len();
    for i in 1..n {
        let cur = rp.samples[i];
        match open {
            None if rp.reflected[i] > 0.0 => {
                open = Some((i - 1, rp.running_min[i - 1]));
            }
            Some((start, level)) if rp.reflected[i] == 0.0 => {
                let prev = rp.samples[i - 1];
                let end = if cur.s > prev.s && prev.value > cur.value {
                    prev.s + (prev.value - level) / (prev.value - cur.value) * (cur.s - prev.s)
                } else {
                    cur.s
                };
                let start_sample = rp.samples[start];
                let exc = Excursion { start: start_sample.s, end };
                if exc.length() >= min_length {
                    if start_sample.left_limit {
                        jump_started += 1;
                    }
                    intervals.push(exc);
                }
                open = None;
            }
            _ => {}
        }
    }
    let open_start = open.map(|(start, _)| rp.samples[start].s);
    let open_at_horizon = open_start.map(|s| rp.horizon - s);
    let lengths = OrderedLengths::from_unsorted(intervals.iter().map(|e| e.length()).collect());
    LimitExcursions { intervals, lengths, open_at_horizon, open_start, jump_started, horizon: rp.horizon }
}

/// Whether the excursions at `t1` sit inside those at `t2 > t1` on one
/// realization: every record sample at `t2` is a record sample at `t1`.
pub fn excursion_nesting_check(path: &LimitPath, t1: f64, t2: f64) -> bool {
    let r1 = reflect(&path.with_t(t1)).record_mask();
    let r2 = reflect(&path.with_t(t2)).record_mask();
    r1.iter().zip(&r2).all(|(&a, &b)| !b || a)
}

/// Every interval of `inner` is contained in some interval of `outer`.
pub fn intervals_nested(inner: &[Excursion], outer: &[Excursion]) -> bool {
    inner.iter().all(|e| {
        let k = outer.partition_point(|o| o.end < e.end);
        k < outer.len() && outer[k].start <= e.start && e.end <= outer[k].end
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn one_jump(xi: f64, t: f64) -> LimitPath {
        let mut timeline: Vec<f64> = (0..=300).map(|k| k as f64 * 0.01).collect();
        timeline.push(xi);
        timeline.sort_by(f64::total_cmp);
        timeline.dedup();
        let mut p = LimitPath {
            params: ParamTriple::new(0.0, 0.0, vec![1.0]).unwrap(),
            t,
            grid_step: 0.01,
            horizon: 3.0,
            brownian: vec![0.0; timeline.len()],
            timeline,
            jumps: vec![(xi, 1.0)],
            samples: Vec::new(),
        };
        p.samples = p.evaluate();
        p
    }

    #[test]
    fn params_validation_and_truncation() {
        assert!(ParamTriple::new(-1.0, 0.0, vec![]).is_err());
        assert!(ParamTriple::new(1.0, 0.0, vec![0.5, 1.0]).is_err());
        let p = ParamTriple::with_cutoff(1.0, 0.0, vec![1.0, 0.5, 1e-4, 1e-5], 1e-3).unwrap();
        assert_eq!(p.c(), &[1.0, 0.5]);
        assert_eq!(p.discarded_entries(), 2);
        assert_relative_eq!(p.discarded_cube_tail(), 1e-12 + 1e-15, max_relative = 1e-12);
        assert!(ParamTriple::new(0.0, 0.0, vec![]).unwrap().is_degenerate());
    }

    #[test]
    fn horizon_defaults() {
        let std = ParamTriple::new(1.0, 0.0, vec![]).unwrap();
        assert_eq!(default_horizon(&std, 0.0).unwrap(), 6.0);
        assert_eq!(default_horizon(&std, 5.0).unwrap(), 10.0);
        let pure = ParamTriple::new(0.0, 0.0, vec![1.0]).unwrap();
        assert_eq!(default_horizon(&pure, 1.0).unwrap(), 14.0);
        assert!(default_horizon(&ParamTriple::new(0.0, 0.0, vec![]).unwrap(), 0.0).is_err());
    }

    #[test]
    fn single_jump_path_and_excursion() {
        let p = one_jump(0.5, 0.0);
        let at = |s: f64| {
            let k = p.samples.iter().rposition(|x| x.s <= s + 1e-12).unwrap();
            p.samples[k].value
        };
        assert_relative_eq!(at(0.3), -0.3, epsilon = 1e-12);
        assert_relative_eq!(at(0.5), 0.5, epsilon = 1e-12);
        assert_relative_eq!(at(1.2), -0.2, epsilon = 1e-12);
        let rp = reflect(&p);
        assert!(rp.reflected.iter().all(|&b| b >= 0.0));
        let ex = limit_excursions(&rp, 0.0);
        assert_eq!(ex.intervals.len(), 1);
        assert_relative_eq!(ex.intervals[0].start, 0.5, epsilon = 1e-12);
        assert_relative_eq!(ex.intervals[0].end, 1.5, epsilon = 1e-9);
        assert_relative_eq!(ex.lengths.largest(), 1.0, epsilon = 1e-9);
        assert_eq!(ex.jump_started, 1);
        assert_eq!(ex.open_at_horizon, None);
    }

    #[test]
    fn open_excursion_is_reported_not_counted() {
        // at t = 1 the path is flat after the jump and never comes back
        let p = one_jump(0.5, 1.0);
        let ex = limit_excursions(&reflect(&p), 0.0);
        assert!(ex.lengths.is_empty());
        assert_relative_eq!(ex.open_at_horizon.unwrap(), 2.5, epsilon = 1e-12);
        // the start must come back exactly, not as horizon - (horizon - start)
        let xi = 0.3472271662422718;
        let ex = limit_excursions(&reflect(&one_jump(xi, 1.0)), 0.0);
        assert_eq!(ex.intervals_with_open(), vec![Excursion { start: xi, end: 3.0 }]);
        let inner = limit_excursions(&reflect(&one_jump(xi, 0.0)), 0.0);
        assert!(intervals_nested(&inner.intervals, &ex.intervals_with_open()));
    }

    #[test]
    fn decreasing_path_has_no_excursions() {
        let params = ParamTriple::new(0.0, 0.0, vec![]).unwrap();
        let p = simulate_levy(&params, -1.0, 0.1, 5.0, &mut stream_rng(1, 0)).unwrap();
        let rp = reflect(&p);
        assert!(rp.reflected.iter().all(|&b| b == 0.0));
        assert!(limit_excursions(&rp, 0.0).lengths.is_empty());
    }

    #[test]
    fn reflection_ignores_constant_shift() {
        let params = ParamTriple::new(1.0, 0.0, vec![1.0]).unwrap();
        let p = simulate_levy(&params, 0.0, 1e-3, 4.0, &mut stream_rng(2, 0)).unwrap();
        let a = reflect(&p);
        let shifted: Vec<Sample> = p.samples().iter().map(|s| Sample { value: s.value + 3.0, ..*s }).collect();
        let b = reflect_samples(shifted, p.horizon());
        for (x, y) in a.reflected.iter().zip(&b.reflected) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn drift_identity_and_reconstruction() {
        let params = ParamTriple::new(1.0, 0.3, vec![1.0, 0.5]).unwrap();
        let p = simulate_levy(&params, 0.0, 1e-3, 5.0, &mut stream_rng(3, 0)).unwrap();
        let q = p.with_t(1.5);
        for (a, b) in p.samples().iter().zip(q.samples()) {
            assert_eq!(a.s, b.s);
            assert!((b.value - a.value - 1.5 * a.s).abs() < 1e-9);
        }
        let mut k = 0;
        for (i, _) in p.timeline().iter().enumerate() {
            let smp = p.samples()[k];
            let value = p.value_at_timeline(i, !smp.left_limit);
            assert!((value - smp.value).abs() < 1e-9);
            k += if smp.left_limit { 2 } else { 1 };
        }
        let increments = p.brownian_increments();
        let rebuilt = compensated_sum(increments.iter().copied());
        assert!((rebuilt - p.brownian().last().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn timeline_contains_grid_and_jumps() {
        let params = ParamTriple::new(0.0, 0.0, vec![2.0, 1.0]).unwrap();
        let p = simulate_levy(&params, 0.0, 0.25, 100.0, &mut stream_rng(4, 0)).unwrap();
        assert!(p.timeline().windows(2).all(|w| w[0] < w[1]));
        for &(xi, _) in p.jumps() {
            assert!(p.timeline().contains(&xi));
        }
        assert_eq!(p.timeline().len(), 401 + 2);
        assert_eq!(*p.timeline().last().unwrap(), 100.0);
    }

    #[test]
    fn same_seed_same_path() {
        let params = ParamTriple::new(1.0, 0.0, vec![]).unwrap();
        let a = simulate_levy(&params, 0.0, 1e-3, 6.0, &mut stream_rng(5, 9)).unwrap();
        let b = simulate_levy(&params, 0.0, 1e-3, 6.0, &mut stream_rng(5, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn jump_part_mean_matches_exact_value() {
        // E[c 1{ξ ≤ s} - c² s] = c(1 - e^{-cs}) - c² s, negative for s > 0
        let c = [1.0, 0.5];
        let s = 1.0;
        let exact: f64 = c.iter().map(|&cj| cj * (1.0 - libm::exp(-cj * s)) - cj * cj * s).sum();
        let params = ParamTriple::new(0.0, 0.0, c.to_vec()).unwrap();
        let reps = 10_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for r in 0..reps {
            let p = simulate_levy(&params, 0.0, 0.5, 1.0, &mut stream_rng(6, r)).unwrap();
            let v = p.samples().last().unwrap().value;
            sum += v;
            sq += v * v;
        }
        let mean = sum / reps as f64;
        let se = sqrt((sq / reps as f64 - mean * mean) / reps as f64);
        assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
    }

    #[test]
    fn brownian_part_variance() {
        let params = ParamTriple::new(2.0, 0.0, vec![]).unwrap();
        let reps = 10_000;
        let s = 1.5;
        let mut vals = Vec::with_capacity(reps);
        for r in 0..reps {
            let p = simulate_levy(&params, 0.0, 0.1, s, &mut stream_rng(7, r as u64)).unwrap();
            // remove the deterministic drift -κs²/2
            vals.push(p.samples().last().unwrap().value + s * s);
        }
        let n = reps as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        // Var of the sample variance of a Gaussian is 2σ⁴/(n-1)
        let se = sqrt(2.0 / (n - 1.0)) * 3.0;
        assert!((var - 3.0).abs() < 3.0 * se, "{var}");
    }

    #[test]
    fn nesting_in_t() {
        let cases: [(f64, Vec<f64>); 3] = [(1.0, vec![]), (0.0, vec![1.0, 0.5]), (1.0, vec![1.0])];
        for (case, (kappa, c)) in cases.iter().enumerate() {
            let params = ParamTriple::new(*kappa, 0.0, c.clone()).unwrap();
            let h = default_horizon(&params, 1.0).unwrap();
            for seed in 0..10 {
                let p = simulate_levy(&params, 0.0, 1e-3, h, &mut stream_rng(8 + case as u64, seed)).unwrap();
                assert!(excursion_nesting_check(&p, 0.0, 1.0));
                assert!(excursion_nesting_check(&p, 0.5, 0.5));
                let e1 = limit_excursions(&reflect(&p), 0.0);
                let e2 = limit_excursions(&reflect(&p.with_t(1.0)), 0.0);
                assert!(intervals_nested(&e1.intervals, &e2.intervals_with_open()));
            }
        }
    }
}
