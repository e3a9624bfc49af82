//! Finite walks rescaled towards the Lévy-type limits.
//!
//! For a mass vector `x` with `σ₂ = Σ x_i²` small, the walk is taken at
//! `q_n(t) = t - τ + 1/σ₂` and divided by `σ₂` on the same time axis. The
//! first `m` (largest) blocks are split off into `R̄`, the rest form `Ȳ`:
//!
//! ```text
//! R̄(s) = Σ_{i<m} (x_i/σ₂ 1{ξ_i/q ≤ s} - x_i²/σ₂² s),    Ȳ = Z̄ - R̄
//! ```

use alloc::vec::Vec;

use libm::pow;

use crate::bfw::{build_walk, excursion_lengths, explore};
use crate::clocks::ClockFamily;
use crate::error::{Error, Result};
use crate::mass::{compensated_sum, MassVector};
use crate::path::JumpPath;

#[derive(Debug, Clone, PartialEq)]
pub enum ScalingSequence {
    /// `n` blocks of mass `n^{-2/3}`; limit `(κ, c) = (1, 0)`.
    Standard,
    /// Blocks `c_j n^{-1/3}` in front of `n` blocks of mass `n^{-2/3}`;
    /// limit `(1, c)`.
    Distinguished { c: Vec<f64> },
    /// The same vector for every `n`. Never satisfies `σ₂ → 0`.
    Constant { masses: Vec<f64> },
}

impl ScalingSequence {
    pub fn masses(&self, n: usize) -> Result<MassVector> {
        match self {
            ScalingSequence::Standard => MassVector::standard(n),
            ScalingSequence::Distinguished { c } => {
                let nf = n as f64;
                let big = pow(nf, -1.0 / 3.0);
                let dust = pow(nf, -2.0 / 3.0);
                let mut m: Vec<f64> = c.iter().map(|cj| cj * big).collect();
                m.extend(core::iter::repeat(dust).take(n));
                MassVector::from_unsorted(m)
            }
            ScalingSequence::Constant { masses } => MassVector::from_unsorted(masses.clone()),
        }
    }

    /// Target `(κ, c)`.
    pub fn target(&self) -> (f64, Vec<f64>) {
        match self {
            ScalingSequence::Distinguished { c } => (1.0, c.clone()),
            _ => (1.0, Vec::new()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisRow {
    pub n: usize,
    /// `|σ₃/σ₂³ - (κ + Σ c_j³)|`
    pub cubic: f64,
    /// `max_j |x_j/σ₂ - c_j|` over the listed `c_j` and the first block after them.
    pub blocks: f64,
    pub sigma2: f64,
}

impl HypothesisRow {
    fn worst(&self) -> f64 {
        self.cubic.max(self.blocks).max(self.sigma2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub rows: Vec<HypothesisRow>,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn hypothesis_residuals(x: &MassVector, kappa: f64, c: &[f64]) -> HypothesisRow {
    let st = x.moments();
    let target = kappa + compensated_sum(c.iter().map(|v| v * v * v));
    let blocks = (0..=c.len())
        .filter(|&j| j < x.len())
        .map(|j| (x.get(j) / st.sigma2 - c.get(j).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max);
    HypothesisRow { n: x.len(), cubic: (st.cubic_ratio() - target).abs(), blocks, sigma2: st.sigma2 }
}

/// Residuals per `n`. Passes when every residual is non-increasing along
/// `n_list` (values below `1e-12` count as zero) and all are below
/// `tolerance` at the last `n`.
pub fn check_hypotheses(seq: &ScalingSequence, n_list: &[usize], tolerance: f64) -> Result<HypothesisReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n list must be non-empty and increasing"));
    }
    let (kappa, c) = seq.target();
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        rows.push(hypothesis_residuals(&seq.masses(n)?, kappa, &c));
    }
    let settles = |f: fn(&HypothesisRow) -> f64| rows.windows(2).all(|w| f(&w[1]) <= f(&w[0]) || f(&w[1]) < 1e-12);
    let monotone = settles(|r| r.cubic) && settles(|r| r.blocks) && settles(|r| r.sigma2);
    let pass = monotone && rows.last().is_some_and(|r| r.worst() < tolerance);
    Ok(HypothesisReport { rows, tolerance, pass })
}

/// The three quantities that must vanish for a good choice of `m`:
/// `|Σ_{i≤m} x_i²/σ₂² - Σ_{i≤m} c_i²|`, `|Σ_{i≤m} (x_i/σ₂ - c_i)³|` and
/// `σ₂ Σ_{i≤m} c_i²`, with `c_i = 0` past the end of `c`.
pub fn m_residuals(x: &MassVector, c: &[f64], m: usize) -> [f64; 3] {
    let s2 = x.moments().sigma2;
    let ci = |i: usize| c.get(i).copied().unwrap_or(0.0);
    let m = m.min(x.len());
    let sq = compensated_sum((0..m).map(|i| (x.get(i) / s2) * (x.get(i) / s2)));
    let csq = compensated_sum((0..m).map(|i| ci(i) * ci(i)));
    let cube = compensated_sum((0..m).map(|i| {
        let d = x.get(i) / s2 - ci(i);
        d * d * d
    }));
    [(sq - csq).abs(), cube.abs(), s2 * csq]
}

/// Largest `m ≤ ⌊n^{1/4}⌋` such that every `m' ≤ m` keeps all three
/// residuals below `tolerance`.
pub fn choose_m(x: &MassVector, c: &[f64], tolerance: f64) -> usize {
    let cap = libm::floor(pow(x.len() as f64, 0.25) + 1e-9) as usize;
    let mut m = 0;
    while m < cap && m_residuals(x, c, m + 1).iter().all(|&r| r < tolerance) {
        m += 1;
    }
    m
}

/// `Z̄`, `R̄` and `Ȳ` for one clock family.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledWalk {
    pub n: usize,
    pub m: usize,
    pub t: f64,
    pub tau: f64,
    pub q: f64,
    pub sigma2: f64,
    pub z_bar: JumpPath,
    pub r_bar: JumpPath,
    pub y_bar: JumpPath,
    /// Component masses at `q`, i.e. the excursion lengths of `Z̄`.
    pub excursion_lengths: Vec<f64>,
}

/// `t - τ + 1/σ₂`.
pub fn q_n(x: &MassVector, t: f64, tau: f64) -> f64 {
    t - tau + 1.0 / x.moments().sigma2
}

pub fn scaled_walk(x: &MassVector, clocks: &ClockFamily, t: f64, tau: f64, m: usize) -> Result<ScaledWalk> {
    let sigma2 = x.moments().sigma2;
    let q = q_n(x, t, tau);
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::NonPositiveQ(q));
    }
    let m = m.min(x.len());
    let walk = build_walk(x, clocks, q)?;
    let lengths = excursion_lengths(&explore(&walk)).into_vec();

    let times = walk.jump_times();
    let blocks = walk.jump_blocks();
    let scaled: Vec<f64> = walk.jump_sizes().iter().map(|h| h / sigma2).collect();
    let r_slope = -compensated_sum((0..m).map(|i| (x.get(i) / sigma2) * (x.get(i) / sigma2)));
    let z_slope = -1.0 / sigma2;

    let pick = |lead: bool| {
        let mut tt = Vec::new();
        let mut hh = Vec::new();
        for k in 0..times.len() {
            if (blocks[k] < m) == lead {
                tt.push(times[k]);
                hh.push(scaled[k]);
            }
        }
        (tt, hh)
    };
    let (rt, rh) = pick(true);
    let (yt, yh) = pick(false);
    Ok(ScaledWalk {
        n: x.len(),
        m,
        t,
        tau,
        q,
        sigma2,
        z_bar: JumpPath::new(times.to_vec(), scaled, z_slope),
        r_bar: JumpPath::new(rt, rh, r_slope),
        y_bar: JumpPath::new(yt, yh, z_slope - r_slope),
        excursion_lengths: lengths,
    })
}

impl ScaledWalk {
    pub fn value(&self, s: f64) -> f64 {
        self.z_bar.value_at(s)
    }

    pub fn running_min(&self, s: f64) -> f64 {
        self.z_bar.running_min(s)
    }

    pub fn largest_excursion(&self) -> f64 {
        self.excursion_lengths.first().copied().unwrap_or(0.0)
    }

    /// `x_{m+1}/σ₂`, zero when every block sits in `R̄`.
    pub fn largest_y_jump(&self) -> f64 {
        self.y_bar.sizes().iter().copied().fold(0.0, f64::max)
    }

    /// `max |Z̄(s) - Ȳ(s) - R̄(s)|` over all jump times of `Z̄`.
    pub fn decomposition_residual(&self) -> f64 {
        self.z_bar
            .times()
            .iter()
            .map(|&s| (self.z_bar.value_at(s) - self.y_bar.value_at(s) - self.r_bar.value_at(s)).abs())
            .fold(0.0, f64::max)
    }
}

/// Largest violation of
/// `Z̄^z(s q_n(t)/q_n(z)) = Z̄^t(s) + s (1 - q_n(t)/q_n(z)) / σ₂`
/// over the midpoints between consecutive jumps of `Z̄^t` (and one point past
/// the last jump), relative to `max(1, |Z̄^t(s)|)`.
///
/// Jump instants themselves are skipped: the rescaled argument can land a
/// rounding error away from a jump.
pub fn time_change_residual(x: &MassVector, clocks: &ClockFamily, t: f64, z: f64, tau: f64) -> Result<f64> {
    let a = scaled_walk(x, clocks, t, tau, 0)?;
    let b = scaled_walk(x, clocks, z, tau, 0)?;
    let ratio = a.q / b.q;
    let times = a.z_bar.times();
    let mut points: Vec<f64> = Vec::with_capacity(times.len() + 1);
    points.push(0.5 * times[0]);
    points.extend(times.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    points.push(times[times.len() - 1] + 1.0);
    let mut worst: f64 = 0.0;
    for s in points {
        let lhs = b.value(s * ratio);
        let zt = a.value(s);
        let rhs = zt + s * (1.0 - ratio) / a.sigma2;
        worst = worst.max((lhs - rhs).abs() / zt.abs().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bfw::lengths_at_q;
    use crate::clocks::draw_clocks;
    use crate::rng::stream_rng;
    use alloc::vec;
    use approx::assert_relative_eq;

    #[test]
    fn standard_sequence_hypotheses() {
        let r = check_hypotheses(&ScalingSequence::Standard, &[100, 1000, 10_000, 100_000], 0.05).unwrap();
        assert!(r.pass, "{r:?}");
        for row in &r.rows {
            assert!(row.cubic < 1e-9);
            assert_relative_eq!(row.blocks, pow(row.n as f64, -1.0 / 3.0), max_relative = 1e-9);
            assert_relative_eq!(row.sigma2, pow(row.n as f64, -1.0 / 3.0), max_relative = 1e-9);
        }
    }

    #[test]
    fn distinguished_block_converges() {
        let seq = ScalingSequence::Distinguished { c: vec![1.0] };
        let r = check_hypotheses(&seq, &[1000, 100_000, 10_000_000], 0.05).unwrap();
        assert!(r.pass, "{r:?}");
        let x = seq.masses(1_000_000).unwrap();
        assert!((x.get(0) / x.moments().sigma2 - 1.0).abs() < 0.02);
    }

    #[test]
    fn constant_sequence_fails() {
        let seq = ScalingSequence::Constant { masses: vec![1.0, 1.0] };
        let r = check_hypotheses(&seq, &[10, 100], 0.05).unwrap();
        assert!(!r.pass);
        assert!(check_hypotheses(&seq, &[100, 10], 0.05).is_err());
    }

    #[test]
    fn m_residuals_by_direct_summation() {
        let x = MassVector::new(vec![0.5, 0.3, 0.2, 0.1]).unwrap();
        let c = [1.0, 0.5];
        let s2 = 0.25 + 0.09 + 0.04 + 0.01;
        let y: Vec<f64> = x.as_slice().iter().map(|v| v / s2).collect();
        let r = m_residuals(&x, &c, 3);
        assert_relative_eq!(r[0], (y[0] * y[0] + y[1] * y[1] + y[2] * y[2] - 1.25).abs(), max_relative = 1e-12);
        let cube = (y[0] - 1.0).powi(3) + (y[1] - 0.5).powi(3) + y[2].powi(3);
        assert_relative_eq!(r[1], cube.abs(), max_relative = 1e-12);
        assert_relative_eq!(r[2], s2 * 1.25, max_relative = 1e-12);
        assert_eq!(m_residuals(&x, &c, 0), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn choose_m_cases() {
        // with no target jumps every m under the cap is acceptable
        let x = MassVector::standard(10_000).unwrap();
        assert_eq!(choose_m(&x, &[], 0.1), 10);
        assert_eq!(m_residuals(&x, &[], 0)[0], 0.0);
        // one distinguished block: m ≥ 1 once x₁/σ₂ is close to c₁
        let seq = ScalingSequence::Distinguished { c: vec![1.0] };
        let x = seq.masses(1_000_000).unwrap();
        assert!(choose_m(&x, &[1.0], 0.1) >= 1);
        let small = seq.masses(16).unwrap();
        assert_eq!(choose_m(&small, &[1.0], 1e-3), 0);
    }

    #[test]
    fn decomposition_and_jumps() {
        let seq = ScalingSequence::Distinguished { c: vec![1.0, 0.5] };
        let x = seq.masses(2000).unwrap();
        for seed in 0..20 {
            let clocks = draw_clocks(&x, &mut stream_rng(40, seed)).unwrap();
            for m in [0, 1, 2, 5] {
                let w = scaled_walk(&x, &clocks, 0.5, 0.0, m).unwrap();
                assert!(w.decomposition_residual() < 1e-9);
                assert_relative_eq!(w.largest_y_jump(), x.get(m) / w.sigma2, max_relative = 1e-12);
                if m == 0 {
                    assert!(w.r_bar.times().is_empty());
                    assert_eq!(w.r_bar.slope(), 0.0);
                }
            }
        }
    }

    #[test]
    fn excursions_are_component_masses() {
        let x = MassVector::standard(3000).unwrap();
        let clocks = draw_clocks(&x, &mut stream_rng(41, 0)).unwrap();
        let w = scaled_walk(&x, &clocks, 1.0, 0.5, 0).unwrap();
        let direct = lengths_at_q(&x, &clocks, q_n(&x, 1.0, 0.5)).unwrap();
        assert_eq!(w.excursion_lengths, direct.into_vec());
        let by_value = w.z_bar.excursions();
        assert_eq!(by_value.len(), w.excursion_lengths.len());
        let mut l: Vec<f64> = by_value.iter().map(|e| e.length()).collect();
        l.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in l.iter().zip(&w.excursion_lengths) {
            assert_relative_eq!(*a, *b, max_relative = 1e-9);
        }
    }

    #[test]
    fn nonpositive_q_rejected() {
        let x = MassVector::standard(1000).unwrap();
        let clocks = draw_clocks(&x, &mut stream_rng(42, 0)).unwrap();
        assert!(matches!(scaled_walk(&x, &clocks, -20.0, 0.0, 0), Err(Error::NonPositiveQ(_))));
    }

    #[test]
    fn time_change_identity() {
        let x = MassVector::standard(5000).unwrap();
        for seed in 0..20 {
            let clocks = draw_clocks(&x, &mut stream_rng(43, seed)).unwrap();
            let r = time_change_residual(&x, &clocks, -1.0, 2.0, 0.3).unwrap();
            assert!(r < 1e-9, "{r}");
        }
    }
}
