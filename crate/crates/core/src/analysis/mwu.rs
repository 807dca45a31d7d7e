//! Mann-Whitney U rank test and the significance-gated speedup used for the
//! performance-gain objective.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::AnalysisError;

/// Total sample size at or below which p-values come from full enumeration.
pub const EXACT_MAX_TOTAL: usize = 16;
/// Upper bound on enumerated arrangements for the exact method.
pub const EXACT_MAX_ARRANGEMENTS: u64 = 1_000_000;
/// Default significance threshold for crediting a speedup.
pub const DEFAULT_ALPHA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UTestResult {
    /// `min(U1, U2)`.
    pub u_statistic: f64,
    /// Two-sided p-value in `(0, 1]`.
    pub p_value: f64,
    pub method: UMethod,
    pub n1: usize,
    pub n2: usize,
}

/// Midranks of the pooled sample, doubled so that every rank is an integer.
fn doubled_midranks(pooled: &[f64]) -> (Vec<i64>, Vec<usize>) {
    let n = pooled.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0i64; n];
    let mut tie_sizes = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end; doubled mean is start+1+end
        let doubled = (start + 1 + end) as i64;
        for &idx in &order[start..end] {
            ranks[idx] = doubled;
        }
        tie_sizes.push(end - start);
        start = end;
    }
    (ranks, tie_sizes)
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Counts subsets of size `k` whose doubled rank sum `s` satisfies
/// `|s - center| >= threshold`, returning (hits, total).
fn enumerate_tail(ranks: &[i64], k: usize, center: i64, threshold: i64) -> (u64, u64) {
    #[allow(clippy::too_many_arguments)]
    fn walk(
        ranks: &[i64],
        start: usize,
        left: usize,
        sum: i64,
        center: i64,
        threshold: i64,
        hits: &mut u64,
        total: &mut u64,
    ) {
        if left == 0 {
            *total += 1;
            if (sum - center).abs() >= threshold {
                *hits += 1;
            }
            return;
        }
        for i in start..=ranks.len() - left {
            walk(ranks, i + 1, left - 1, sum + ranks[i], center, threshold, hits, total);
        }
    }
    let (mut hits, mut total) = (0, 0);
    walk(ranks, 0, k, 0, center, threshold, &mut hits, &mut total);
    (hits, total)
}

/// Two-sided Mann-Whitney U test with midrank tie handling.
///
/// Small samples (`n1 + n2 <= 16`) get an exact p-value by enumerating every
/// assignment of the pooled midranks to the first group; larger samples use
/// the normal approximation with tie-corrected variance and a 0.5
/// continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<UTestResult, AnalysisError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::EmptySample);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, tie_sizes) = doubled_midranks(&pooled);

    // doubled rank sum of `a`; U1 = R1 - n1(n1+1)/2
    let r1_doubled: i64 = ranks[..n1].iter().sum();
    let u1 = r1_doubled as f64 / 2.0 - (n1 * (n1 + 1)) as f64 / 2.0;
    let u2 = (n1 * n2) as f64 - u1;
    let u_statistic = u1.min(u2);

    // doubled rank sum has mean n1(n+1)
    let center = (n1 * (n + 1)) as i64;
    let observed = (r1_doubled - center).abs();

    if n <= EXACT_MAX_TOTAL && binomial(n, n1) <= EXACT_MAX_ARRANGEMENTS {
        let (hits, total) = enumerate_tail(&ranks, n1, center, observed);
        let p_value = (hits as f64 / total as f64).min(1.0);
        return Ok(UTestResult {
            u_statistic,
            p_value,
            method: UMethod::Exact,
            n1,
            n2,
        });
    }

    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
    let tie_term: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let variance = n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    let p_value = if variance <= 0.0 {
        1.0
    } else {
        let mean = n1f * n2f / 2.0;
        let z = (((u1 - mean).abs() - 0.5) / variance.sqrt()).max(0.0);
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (2.0 * normal.sf(z)).clamp(f64::MIN_POSITIVE, 1.0)
    };
    Ok(UTestResult {
        u_statistic,
        p_value,
        method: UMethod::NormalApprox,
        n1,
        n2,
    })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Percent speedup of `patched` over `base`, credited only when the rank
/// test rejects at `alpha` and the patched mean is lower.
pub fn significant_gain(base: &[f64], patched: &[f64], alpha: f64) -> Result<f64, AnalysisError> {
    if base.len() < 2 || patched.len() < 2 {
        return Err(AnalysisError::TooFewMeasurements);
    }
    let base_mean = mean(base);
    if base_mean <= 0.0 {
        return Err(AnalysisError::NonPositiveBaseline(base_mean));
    }
    let patched_mean = mean(patched);
    if patched_mean >= base_mean {
        return Ok(0.0);
    }
    let test = mann_whitney_u(base, patched)?;
    if test.p_value < alpha {
        Ok(100.0 * (base_mean - patched_mean) / base_mean)
    } else {
        Ok(0.0)
    }
}
