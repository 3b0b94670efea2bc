//! Wilcoxon signed-rank test for paired samples.
//!
//! Zero differences are dropped (classic Wilcoxon), tied absolute
//! differences share average ranks. For n <= 12 the two-sided p-value is
//! exact, from the full null distribution of the rank sum; above that a
//! normal approximation with tie and continuity corrections is used.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest n for which the null distribution is enumerated exactly.
pub const EXACT_LIMIT: usize = 12;

const MIN_NONZERO_DIFFS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of the ranks of positive differences (W+).
    pub w_statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// Pairs remaining after zero differences were dropped.
    pub n_used: usize,
}

/// Runs the test on paired observations `a[i]` vs `b[i]`.
pub fn wilcoxon_signed_rank(paired_a: &[f64], paired_b: &[f64]) -> Result<WilcoxonResult> {
    if paired_a.len() != paired_b.len() {
        return Err(Error::Schema(format!(
            "paired vectors of lengths {} and {}",
            paired_a.len(),
            paired_b.len()
        )));
    }
    let diffs: Vec<f64> = paired_a
        .iter()
        .zip(paired_b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::Validation("differences must be finite".into()));
    }
    if diffs.len() < MIN_NONZERO_DIFFS {
        return Err(Error::InsufficientData(format!(
            "need at least {MIN_NONZERO_DIFFS} nonzero differences, got {}",
            diffs.len()
        )));
    }

    let n = diffs.len();
    let doubled = doubled_average_ranks(&diffs);
    // doubled W+ keeps everything in integers despite .5 average ranks
    let w2: u64 = doubled
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| *r)
        .sum();
    let w_statistic = w2 as f64 / 2.0;

    let p_value = if n <= EXACT_LIMIT {
        exact_two_sided(&doubled, w2)
    } else {
        normal_two_sided(&diffs, &doubled, w_statistic)?
    };
    Ok(WilcoxonResult {
        w_statistic,
        p_value,
        n_used: n,
    })
}

/// Average ranks of |d|, doubled so ties like 2.5 stay integral. A tie
/// group occupying 1-based positions s..s+t-1 has doubled rank 2s + t - 1.
fn doubled_average_ranks(diffs: &[f64]) -> Vec<u64> {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diffs[i].abs().partial_cmp(&diffs[j].abs()).expect("finite"));
    let mut doubled = vec![0u64; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && diffs[order[j]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let t = (j - i) as u64;
        let s = (i + 1) as u64;
        for &idx in &order[i..j] {
            doubled[idx] = 2 * s + t - 1;
        }
        i = j;
    }
    doubled
}

/// Counts, over all 2^n equally likely sign assignments, those whose rank
/// sum deviates from the mean at least as much as observed. The subset-sum
/// distribution is built by dynamic programming, an independent route from
/// brute-force enumeration.
fn exact_two_sided(doubled: &[u64], w2: u64) -> f64 {
    let total: u64 = doubled.iter().sum();
    let mut dist = vec![0u64; total as usize + 1];
    dist[0] = 1;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        reach += r;
        for s in (0..=reach.saturating_sub(r)).rev() {
            if dist[s] > 0 {
                dist[s + r] += dist[s];
            }
        }
    }
    // deviations doubled once more so |2s - total| stays integral
    let observed = (2 * w2).abs_diff(total);
    let mut count = 0u64;
    for (s, &c) in dist.iter().enumerate() {
        if (2 * s as u64).abs_diff(total) >= observed {
            count += c;
        }
    }
    count as f64 / (1u64 << doubled.len()) as f64
}

fn normal_two_sided(diffs: &[f64], doubled: &[u64], w: f64) -> Result<f64> {
    let n = diffs.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    // tie correction: subtract sum(t^3 - t)/48 over tie groups
    let mut tie_term = 0.0;
    let mut sorted = doubled.to_vec();
    sorted.sort_unstable();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if variance <= 0.0 {
        return Err(Error::Validation("degenerate rank variance".into()));
    }
    let z = ((w - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok((2.0 * (1.0 - normal.cdf(z))).clamp(0.0, 1.0))
}
