//! Distributional checks comparing the constructions with each other and with
//! known laws.

use std::collections::BTreeMap;

use mcoal_core::bfw::{build_walk, excursion_lengths, explore, merge_history};
use mcoal_core::limit::{default_horizon, limit_excursions, reflect, simulate_levy, ParamTriple};
use mcoal_core::scaling::{q_n, scaled_walk};
use mcoal_core::uribe::{mass_process, sample_coalescent};
use mcoal_core::{draw_clocks, simulate_direct, MassVector, Partition, StreamRng};
use serde::Serialize;

use crate::replicate::replicate;
use crate::stats::{
    chi_square_homogeneity, chi_square_independence, ks_one_sample, ks_two_sample, StatsError, TestReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Direct,
    Bfw,
    Uribe,
}

impl Generator {
    pub const ALL: [Generator; 3] = [Generator::Direct, Generator::Bfw, Generator::Uribe];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Direct => "direct",
            Generator::Bfw => "bfw",
            Generator::Uribe => "uribe",
        }
    }
}

/// Largest relative gap between the total of the component masses and
/// `σ₁(x)` seen over a batch of bfw and Uribe runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MassAudit {
    pub runs: usize,
    pub max_relative_error: f64,
}

impl MassAudit {
    pub fn record(&mut self, total: f64, sigma1: f64) {
        self.runs += 1;
        self.max_relative_error = self.max_relative_error.max((total - sigma1).abs() / sigma1);
    }

    pub fn merge(&mut self, other: &MassAudit) {
        self.runs += other.runs;
        self.max_relative_error = self.max_relative_error.max(other.max_relative_error);
    }

    pub fn ok(&self, tolerance: f64) -> bool {
        self.max_relative_error <= tolerance
    }
}

/// One partition at time `q` together with its audited mass total (bfw and
/// Uribe only).
pub fn sample_partition(
    g: Generator,
    x: &MassVector,
    q: f64,
    rng: &mut StreamRng,
) -> mcoal_core::Result<(Partition, Option<f64>)> {
    match g {
        Generator::Direct => Ok((simulate_direct(x, q, rng)?.final_partition(), None)),
        Generator::Bfw => {
            let clocks = draw_clocks(x, rng)?;
            if q == 0.0 {
                return Ok((Partition::trivial(x.len()), Some(x.total())));
            }
            let expl = explore(&build_walk(x, &clocks, q)?);
            Ok((expl.partition(x.len()), Some(excursion_lengths(&expl).total())))
        }
        Generator::Uribe => {
            let (_, uc) = sample_coalescent(x, rng)?;
            Ok((uc.partition_at(q)?, Some(mass_process(&uc, q)?.total())))
        }
    }
}

/// Time of the single merge for two blocks.
pub fn sample_merge_time(g: Generator, x: &MassVector, rng: &mut StreamRng) -> mcoal_core::Result<(f64, Option<f64>)> {
    match g {
        Generator::Direct => Ok((simulate_direct(x, f64::INFINITY, rng)?.events[0].time, None)),
        Generator::Bfw => {
            let clocks = draw_clocks(x, rng)?;
            let t = merge_history(x, &clocks)[0].time;
            let lengths = excursion_lengths(&explore(&build_walk(x, &clocks, t)?));
            Ok((t, Some(lengths.total())))
        }
        Generator::Uribe => {
            let (_, uc) = sample_coalescent(x, rng)?;
            let t = uc.first_event_time();
            Ok((t, Some(mass_process(&uc, t)?.total())))
        }
    }
}

/// Counts of each observed partition per generator, with the partitions as
/// shared category labels.
pub fn partition_counts(samples: &[Vec<Partition>]) -> (Vec<Partition>, Vec<Vec<u64>>) {
    let mut index: BTreeMap<&Partition, usize> = BTreeMap::new();
    for p in samples.iter().flatten() {
        let next = index.len();
        index.entry(p).or_insert(next);
    }
    let mut labels: Vec<Partition> = vec![Partition::trivial(0); index.len()];
    for (p, &i) in &index {
        labels[i] = (*p).clone();
    }
    let counts = samples
        .iter()
        .map(|batch| {
            let mut c = vec![0u64; labels.len()];
            for p in batch {
                c[index[p]] += 1;
            }
            c
        })
        .collect();
    (labels, counts)
}

#[derive(Debug, Clone, Serialize)]
pub struct LawEquality {
    pub reports: Vec<TestReport>,
    pub audit: MassAudit,
    pub categories: usize,
}

/// Pairwise comparison of the partition laws of the three generators at time
/// `q`. For `n ≤ 5` the test is chi-square over the partitions observed;
/// beyond that it is two-sample KS on the largest block mass.
pub fn partition_law_equality(
    x: &MassVector,
    q: f64,
    samples: usize,
    root: u64,
    base: u64,
    alpha: f64,
) -> mcoal_core::Result<LawEquality> {
    let mut audit = MassAudit::default();
    let mut batches = Vec::new();
    for (gi, g) in Generator::ALL.into_iter().enumerate() {
        let runs = replicate(root, base + ((gi as u64) << 28), samples, |rng| sample_partition(g, x, q, rng));
        let mut parts = Vec::with_capacity(samples);
        for r in runs {
            let (p, total) = r?;
            if let Some(total) = total {
                audit.record(total, x.total());
            }
            parts.push(p);
        }
        batches.push(parts);
    }
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut reports = Vec::new();
    let (labels, counts) = partition_counts(&batches);
    for (a, b) in pairs {
        let name = format!("{}~{} q={q}", Generator::ALL[a].name(), Generator::ALL[b].name());
        let report = if x.len() <= 5 {
            chi_square_homogeneity(&name, &[counts[a].clone(), counts[b].clone()], alpha)
        } else {
            let largest = |batch: &Vec<Partition>| -> Vec<f64> {
                batch.iter().map(|p| p.masses(x).into_iter().fold(0.0, f64::max)).collect()
            };
            ks_two_sample(&name, &largest(&batches[a]), &largest(&batches[b]), alpha)
        };
        reports.push(report.expect("non-empty samples"));
    }
    Ok(LawEquality { reports, audit, categories: labels.len() })
}

#[derive(Debug, Clone, Serialize)]
pub struct SPiReport {
    pub independence: TestReport,
    pub exponential: TestReport,
    pub audit: MassAudit,
}

/// `S` (first event of Uribe's coalescent) is independent of the clock order
/// `π` and exponential with rate `Σ_{i<j} x_i x_j`.
pub fn s_pi_independence(
    x: &MassVector,
    samples: usize,
    root: u64,
    base: u64,
    alpha: f64,
) -> mcoal_core::Result<SPiReport> {
    let s1 = x.total();
    let rate = 0.5 * (s1 * s1 - x.moments().sigma2);
    let bins = 5;
    let edges: Vec<f64> = (1..bins).map(|k| -(1.0 - k as f64 / bins as f64).ln() / rate).collect();
    let runs = replicate(root, base, samples, |rng| -> mcoal_core::Result<_> {
        let (clocks, uc) = sample_coalescent(x, rng)?;
        let s = uc.first_event_time();
        Ok((clocks.order().to_vec(), s, mass_process(&uc, s)?.total()))
    });
    let mut audit = MassAudit::default();
    let mut perms: BTreeMap<Vec<usize>, Vec<u64>> = BTreeMap::new();
    let mut times = Vec::with_capacity(samples);
    for r in runs {
        let (order, s, total) = r?;
        audit.record(total, s1);
        let bin = edges.partition_point(|&e| e < s);
        perms.entry(order).or_insert_with(|| vec![0; bins])[bin] += 1;
        times.push(s);
    }
    let table: Vec<Vec<u64>> = perms.into_values().collect();
    let independence = chi_square_independence("S independent of pi", &table, alpha).expect("counts");
    let exponential =
        ks_one_sample(&format!("S ~ Exp({rate})"), &times, |s| 1.0 - (-rate * s).exp(), alpha).expect("samples");
    Ok(SPiReport { independence, exponential, audit })
}

/// The root of `ρ = 1 - e^{-cρ}` in `(0, 1]`, zero for `c ≤ 1`.
pub fn giant_fraction(c: f64) -> f64 {
    if c <= 1.0 {
        return 0.0;
    }
    let mut rho: f64 = 1.0;
    for _ in 0..10_000 {
        let next = 1.0 - (-c * rho).exp();
        if (next - rho).abs() < 1e-15 {
            return next;
        }
        rho = next;
    }
    rho
}

#[derive(Debug, Clone, Serialize)]
pub struct GiantEstimate {
    pub n: usize,
    pub c: f64,
    pub fraction: f64,
    pub oracle: f64,
    pub subcritical: bool,
}

/// Largest excursion of the walk with `n` blocks of mass `1/n` at `q = cn`.
pub fn giant_component(n: usize, c: f64, rng: &mut StreamRng) -> mcoal_core::Result<GiantEstimate> {
    let x = MassVector::uniform(n, 1.0 / n as f64)?;
    let clocks = draw_clocks(&x, rng)?;
    let lengths = excursion_lengths(&explore(&build_walk(&x, &clocks, c * n as f64)?));
    Ok(GiantEstimate {
        n,
        c,
        fraction: lengths.largest() / x.total(),
        oracle: giant_fraction(c),
        subcritical: c <= 1.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GumbelReport {
    pub ks: TestReport,
    pub median: f64,
    pub median_se: f64,
}

/// `n T_conn - log n` for `n` unit masses against `P(G ≤ g) = e^{-e^{-g}}`.
pub fn gumbel_connectivity(
    n: usize,
    samples: usize,
    root: u64,
    base: u64,
    alpha: f64,
) -> mcoal_core::Result<GumbelReport> {
    let x = MassVector::uniform(n, 1.0)?;
    let nf = n as f64;
    let runs = replicate(root, base, samples, |rng| {
        sample_coalescent(&x, rng).map(|(_, uc)| nf * uc.connectivity_time() - nf.ln())
    });
    let mut g = runs.into_iter().collect::<mcoal_core::Result<Vec<f64>>>()?;
    let ks = ks_one_sample("Gumbel connectivity", &g, |v| (-(-v).exp()).exp(), alpha).expect("samples");
    g.sort_by(f64::total_cmp);
    let median = 0.5 * (g[(g.len() - 1) / 2] + g[g.len() / 2]);
    // density at the median is ln 2 / 2
    let median_se = 1.0 / (2.0 * (std::f64::consts::LN_2 / 2.0) * (g.len() as f64).sqrt());
    Ok(GumbelReport { ks, median, median_se })
}

/// Functionals of one scaled walk: `Z̄(s)`, `min_{u≤s} Z̄(u)`, largest
/// excursion length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Functionals {
    pub value: f64,
    pub running_min: f64,
    pub largest_excursion: f64,
}

pub fn finite_functionals(
    x: &MassVector,
    t: f64,
    tau: f64,
    s: f64,
    rng: &mut StreamRng,
) -> mcoal_core::Result<Functionals> {
    let clocks = draw_clocks(x, rng)?;
    let w = scaled_walk(x, &clocks, t, tau, 0)?;
    Ok(Functionals { value: w.value(s), running_min: w.running_min(s), largest_excursion: w.largest_excursion() })
}

pub fn limit_functionals(
    params: &ParamTriple,
    t: f64,
    s: f64,
    grid_step: f64,
    rng: &mut StreamRng,
) -> mcoal_core::Result<Functionals> {
    let horizon = default_horizon(params, t)?.max(s);
    let path = simulate_levy(params, t, grid_step, horizon, rng)?;
    let samples = path.samples();
    let k = samples.partition_point(|p| p.s <= s);
    let value = samples[k - 1].value;
    let running_min = samples[..k].iter().map(|p| p.value).fold(0.0, f64::min);
    let ex = limit_excursions(&reflect(&path), 0.0);
    Ok(Functionals { value, running_min, largest_excursion: ex.lengths.largest() })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub t: f64,
    pub functional: &'static str,
    pub ks_stat: f64,
    pub p_value: f64,
    pub n_samples: usize,
}

/// Two-sample KS between functionals of the scaled finite walk `x` and of
/// the limit path with parameters `params`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_test(
    x: &MassVector,
    params: &ParamTriple,
    t: f64,
    s: f64,
    samples: usize,
    grid_step: f64,
    root: u64,
    base: u64,
    alpha: f64,
) -> Result<Vec<ConvergenceRow>, ConvergenceError> {
    let tau = params.tau();
    if q_n(x, t, tau) <= 0.0 {
        return Err(ConvergenceError::Core(mcoal_core::Error::NonPositiveQ(q_n(x, t, tau))));
    }
    let finite: Vec<Functionals> = replicate(root, base, samples, |rng| finite_functionals(x, t, tau, s, rng))
        .into_iter()
        .collect::<mcoal_core::Result<_>>()?;
    let limit: Vec<Functionals> =
        replicate(root, base + (1 << 31), samples, |rng| limit_functionals(params, t, s, grid_step, rng))
            .into_iter()
            .collect::<mcoal_core::Result<_>>()?;
    type Pick = (&'static str, fn(&Functionals) -> f64);
    let picks: [Pick; 3] =
        [("value", |f| f.value), ("running_min", |f| f.running_min), ("largest_excursion", |f| f.largest_excursion)];
    let mut rows = Vec::new();
    for (name, pick) in picks {
        let a: Vec<f64> = finite.iter().map(pick).collect();
        let b: Vec<f64> = limit.iter().map(pick).collect();
        let r = ks_two_sample(name, &a, &b, alpha)?;
        rows.push(ConvergenceRow {
            n: x.len(),
            t,
            functional: name,
            ks_stat: r.statistic,
            p_value: r.p_value,
            n_samples: samples,
        });
    }
    Ok(rows)
}

#[derive(Debug, thiserror::Error)]
pub enum ConvergenceError {
    #[error(transparent)]
    Core(#[from] mcoal_core::Error),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use mcoal_core::stream_rng;

    #[test]
    fn giant_fraction_oracle() {
        // frozen values of the fixed point, computed independently
        assert_relative_eq!(giant_fraction(2.0), 0.796_812_130_020_019_9, max_relative = 1e-12);
        assert_relative_eq!(giant_fraction(1.2), 0.313_698_331_041_218, max_relative = 1e-9);
        assert_eq!(giant_fraction(0.8), 0.0);
    }

    #[test]
    fn two_blocks_law_equality() {
        let x = MassVector::new(vec![1.0, 1.0]).unwrap();
        let r = partition_law_equality(&x, 0.8, 5000, 1, 0, 0.001).unwrap();
        assert!(r.reports.iter().all(|r| r.pass), "{:?}", r.reports);
        assert_eq!(r.categories, 2);
        assert!(r.audit.ok(1e-12));
    }

    #[test]
    fn zero_time_is_vacuous() {
        let x = MassVector::new(vec![1.0, 0.5, 0.5]).unwrap();
        let r = partition_law_equality(&x, 0.0, 200, 1, 0, 0.001).unwrap();
        assert_eq!(r.categories, 1);
        assert!(r.reports.iter().all(|r| r.pass && r.p_value == 1.0));
    }

    #[test]
    fn s_pi_two_unequal_blocks() {
        let x = MassVector::new(vec![2.0, 1.0]).unwrap();
        let r = s_pi_independence(&x, 20_000, 2, 0, 0.001).unwrap();
        assert!(r.independence.pass && r.exponential.pass);
    }

    #[test]
    fn subcritical_has_no_giant() {
        let g = giant_component(100_000, 0.8, &mut stream_rng(3, 0)).unwrap();
        assert!(g.subcritical);
        assert!(g.fraction < 0.05);
    }

    #[test]
    fn partition_counts_share_labels() {
        let a = Partition::trivial(2);
        let b = Partition::from_blocks(2, vec![vec![0, 1]]).unwrap();
        let (labels, counts) = partition_counts(&[vec![a.clone(), b.clone(), b.clone()], vec![b.clone()]]);
        assert_eq!(labels.len(), 2);
        let ib = labels.iter().position(|p| *p == b).unwrap();
        assert_eq!(counts[0][ib], 2);
        assert_eq!(counts[1][ib], 1);
    }
}
