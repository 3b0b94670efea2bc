//! Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.

use crate::error::{Error, Result};

/// Largest absolute gap between the two empirical CDFs,
/// `D = sup_x |F_a(x) - F_b(x)|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    sort_sample(&mut a)?;
    sort_sample(&mut b)?;
    Ok(ks_statistic_sorted(&a, &b))
}

/// `ks_statistic` for samples already sorted ascending.
pub(crate) fn ks_statistic_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < m && j < n {
        let x = a[i].min(b[j]);
        while i < m && a[i] <= x {
            i += 1;
        }
        while j < n && b[j] <= x {
            j += 1;
        }
        let gap = (i as f64 / m as f64 - j as f64 / n as f64).abs();
        if gap > d {
            d = gap;
        }
    }
    // once one sample is exhausted its CDF stays at 1 and the gap can only
    // shrink at later evaluation points
    d
}

fn sort_sample(v: &mut [f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InsufficientData(
            "KS statistic needs non-empty samples".into(),
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Validation("KS samples must be finite".into()));
    }
    v.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    Ok(())
}

/// Asymptotic two-sample p-value
/// `p = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)` with
/// `lambda = D sqrt(mn / (m + n))`, truncated when terms drop below 1e-12
/// and clamped to [0, 1]. An approximation; fine for the large windows this
/// pipeline compares.
pub fn ks_pvalue(d: f64, m: usize, n: usize) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::Validation("sample sizes must be positive".into()));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Validation(format!(
            "KS statistic {d} outside [0, 1]"
        )));
    }
    let lambda = d * ((m as f64 * n as f64) / (m + n) as f64).sqrt();
    if lambda < 1e-9 {
        return Ok(1.0);
    }
    let mut p = 0.0f64;
    let mut sign = 1.0f64;
    for k in 1..=100_000u64 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        p += sign * 2.0 * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    Ok(p.clamp(0.0, 1.0))
}
