//! Goodness-of-fit primitives: Kolmogorov-Smirnov and chi-square tests.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sample `{0}` is empty")]
    EmptySample(&'static str),
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("contingency table has mismatched row lengths")]
    RaggedTable,
    #[error("probabilities must be nonnegative and sum to 1")]
    BadProbabilities,
}

/// Result of one hypothesis test. `pass` means `p_value > alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n_samples: usize,
    pub alpha: f64,
    pub pass: bool,
}

impl TestReport {
    pub fn new(name: impl Into<String>, statistic: f64, p_value: f64, n_samples: usize, alpha: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self { name: name.into(), statistic, p_value, n_samples, alpha, pass: p_value > alpha }
    }
}

/// `P(K > λ)` for the Kolmogorov distribution,
/// `2 Σ_{j≥1} (-1)^{j-1} exp(-2 j² λ²)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        // the alternating series converges too slowly here and the value is 1
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value for a KS distance `d` at effective sample size `ne`,
/// with Stephens' small-sample adjustment.
fn ks_p_value(d: f64, ne: f64) -> f64 {
    let root = ne.sqrt();
    kolmogorov_sf((root + 0.12 + 0.11 / root) * d)
}

fn sorted_finite(sample: &[f64], label: &'static str) -> Result<Vec<f64>, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::EmptySample(label));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

pub fn ks_two_sample(name: &str, a: &[f64], b: &[f64], alpha: f64) -> Result<TestReport, StatsError> {
    let a = sorted_finite(a, "a")?;
    let b = sorted_finite(b, "b")?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let p = ks_p_value(d, n * m / (n + m));
    Ok(TestReport::new(name, d, p, a.len() + b.len(), alpha))
}

pub fn ks_one_sample<F: Fn(f64) -> f64>(
    name: &str,
    sample: &[f64],
    cdf: F,
    alpha: f64,
) -> Result<TestReport, StatsError> {
    let v = sorted_finite(sample, "sample")?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - k as f64 / n).max((k + 1) as f64 / n - f);
    }
    Ok(TestReport::new(name, d, ks_p_value(d, n), v.len(), alpha))
}

/// Pearson chi-square on an `r × k` table of counts. Columns with zero total
/// are dropped, and columns whose smallest expected count is below 5 are
/// pooled together (and into their neighbour if the pool is still too small).
pub fn chi_square_table(name: &str, table: &[Vec<u64>], alpha: f64) -> Result<TestReport, StatsError> {
    let k = table.first().map_or(0, Vec::len);
    if table.iter().any(|r| r.len() != k) {
        return Err(StatsError::RaggedTable);
    }
    let total: u64 = table.iter().flatten().sum();
    if total == 0 {
        return Err(StatsError::EmptySample("table"));
    }
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let min_row = rows.iter().copied().fold(f64::INFINITY, f64::min);
    let col_total = |c: usize| table.iter().map(|r| r[c]).sum::<u64>();

    let mut cols: Vec<usize> = (0..k).filter(|&c| col_total(c) > 0).collect();
    cols.sort_by_key(|&c| col_total(c));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut pool: Vec<usize> = Vec::new();
    let mut pool_total = 0u64;
    for c in cols {
        let expected_min = |t: u64| t as f64 * min_row / total as f64;
        if expected_min(col_total(c)) >= 5.0 {
            groups.push(vec![c]);
        } else {
            pool.push(c);
            pool_total += col_total(c);
            if expected_min(pool_total) >= 5.0 {
                groups.push(std::mem::take(&mut pool));
                pool_total = 0;
            }
        }
    }
    if !pool.is_empty() {
        match groups.first_mut() {
            Some(g) => g.extend(pool),
            None => groups.push(pool),
        }
    }

    let rows_used = rows.iter().filter(|&&r| r > 0.0).count();
    if groups.len() < 2 || rows_used < 2 {
        return Ok(TestReport::new(name, 0.0, 1.0, total as usize, alpha));
    }
    let mut stat = 0.0;
    for (r, row) in table.iter().enumerate() {
        if rows[r] == 0.0 {
            continue;
        }
        for g in &groups {
            let observed: u64 = g.iter().map(|&c| row[c]).sum();
            let gt: u64 = g.iter().map(|&c| col_total(c)).sum();
            let expected = rows[r] * gt as f64 / total as f64;
            stat += (observed as f64 - expected).powi(2) / expected;
        }
    }
    let df = ((rows_used - 1) * (groups.len() - 1)) as f64;
    let p = ChiSquared::new(df).map(|d| d.sf(stat)).unwrap_or(0.0);
    Ok(TestReport::new(name, stat, p, total as usize, alpha))
}

/// Homogeneity of several samples over the same categories.
pub fn chi_square_homogeneity(name: &str, counts: &[Vec<u64>], alpha: f64) -> Result<TestReport, StatsError> {
    chi_square_table(name, counts, alpha)
}

/// Independence of two categorical variables given their contingency table.
pub fn chi_square_independence(name: &str, table: &[Vec<u64>], alpha: f64) -> Result<TestReport, StatsError> {
    chi_square_table(name, table, alpha)
}

/// Goodness of fit of counts to fixed probabilities. Cells with expected
/// count below 5 are pooled.
pub fn chi_square_gof(name: &str, observed: &[u64], probs: &[f64], alpha: f64) -> Result<TestReport, StatsError> {
    if observed.len() != probs.len() {
        return Err(StatsError::RaggedTable);
    }
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|p| p.is_nan() || *p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(StatsError::BadProbabilities);
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(StatsError::EmptySample("observed"));
    }
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut po, mut pe) = (0.0, 0.0);
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));
    for i in order {
        let e = probs[i] * n;
        if e >= 5.0 {
            cells.push((observed[i] as f64, e));
        } else {
            po += observed[i] as f64;
            pe += e;
            if pe >= 5.0 {
                cells.push((po, pe));
                po = 0.0;
                pe = 0.0;
            }
        }
    }
    if pe > 0.0 || po > 0.0 {
        match cells.first_mut() {
            Some(c) => {
                c.0 += po;
                c.1 += pe;
            }
            None => cells.push((po, pe)),
        }
    }
    if cells.len() < 2 {
        return Ok(TestReport::new(name, 0.0, 1.0, total as usize, alpha));
    }
    let stat: f64 = cells.iter().filter(|c| c.1 > 0.0).map(|(o, e)| (o - e).powi(2) / e).sum();
    let df = (cells.len() - 1) as f64;
    let p = ChiSquared::new(df).map(|d| d.sf(stat)).unwrap_or(0.0);
    Ok(TestReport::new(name, stat, p, total as usize, alpha))
}

/// Mean and its standard error.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample variance and its standard error `√((m₄ - s⁴)/n)`.
pub fn variance_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = v.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (var, ((m4 - var * var).max(0.0) / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use mcoal_core::stream_rng;
    use rand::Rng;

    #[test]
    fn kolmogorov_tail_values() {
        // classical critical values
        assert_relative_eq!(kolmogorov_sf(1.3581), 0.05, epsilon = 2e-4);
        assert_relative_eq!(kolmogorov_sf(1.9495), 0.001, epsilon = 2e-5);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn identical_samples() {
        let a = [0.3, 0.1, 0.7, 0.2];
        let r = ks_two_sample("same", &a, &a, 0.01).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.pass);
        assert_eq!(ks_two_sample("empty", &[], &a, 0.01), Err(StatsError::EmptySample("a")));
    }

    #[test]
    fn ks_null_calibration() {
        let mut ok = 0;
        for run in 0..40u64 {
            let mut rng = stream_rng(500, run);
            let a: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
            let b: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
            if ks_two_sample("u", &a, &b, 0.01).unwrap().pass {
                ok += 1;
            }
        }
        assert!(ok >= 38, "{ok}");
    }

    #[test]
    fn ks_power() {
        let mut rng = stream_rng(501, 0);
        let a: Vec<f64> = (0..10_000).map(|_| -rng.random::<f64>().ln()).collect();
        let b: Vec<f64> = (0..10_000).map(|_| -rng.random::<f64>().ln() / 2.0).collect();
        assert!(ks_two_sample("exp", &a, &b, 0.001).unwrap().p_value < 0.001);
        let r = ks_one_sample("exp1", &a, |x| 1.0 - (-x).exp(), 0.001).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn chi_square_reference_value() {
        // 2x2 table [[10, 20], [30, 40]] has X² = 0.7937 on 1 df
        let r = chi_square_table("t", &[vec![10, 20], vec![30, 40]], 0.01).unwrap();
        assert_relative_eq!(r.statistic, 0.793_650_793_650_793_6, max_relative = 1e-12);
        assert_relative_eq!(r.p_value, 0.372_998_483_613_486_9, max_relative = 1e-9);
    }

    #[test]
    fn gof_and_pooling() {
        let r = chi_square_gof("die", &[100, 100, 100, 100, 100, 100], &[1.0 / 6.0; 6], 0.01).unwrap();
        assert_eq!(r.statistic, 0.0);
        let r = chi_square_gof("rare", &[990, 9, 1], &[0.99, 0.008, 0.002], 0.01).unwrap();
        assert!(r.pass);
        assert!(chi_square_gof("bad", &[1, 2], &[0.5, 0.6], 0.01).is_err());
        // a single surviving category is a vacuous pass
        let r = chi_square_table("one", &[vec![10, 0], vec![20, 0]], 0.01).unwrap();
        assert_eq!(r.p_value, 1.0);
    }
}
