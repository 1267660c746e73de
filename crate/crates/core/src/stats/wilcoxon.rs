use super::StatsError;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// Largest effective sample size for which the exact null distribution is
/// used.
pub const EXACT_MAX_N: usize = 25;
const CONTINUITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub n_effective: usize,
    /// min(W⁺, W⁻).
    pub w: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_two_sided: f64,
    pub method: Method,
    /// Continuity-corrected z score (normal approximation only).
    pub z: Option<f64>,
}

/// Ranks 1..=n of `values`, ties sharing their average rank. Returns the
/// ranks in input order and the sizes of the tie groups.
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        if end - start > 1 {
            ties.push(end - start);
        }
        start = end;
    }
    (ranks, ties)
}

/// Number of sign assignments of ranks 1..=n giving each value of W⁺.
fn exact_counts(n: usize) -> Vec<u64> {
    let max = n * (n + 1) / 2;
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    for r in 1..=n {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    counts
}

/// Two-sided signed-rank test of the paired differences `x − y`.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(StatsError::Empty);
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    if diffs.is_empty() {
        return Err(StatsError::DegeneratePairs);
    }
    let n = diffs.len();
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&magnitudes);
    let w_plus = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).fold(0.0, |acc, (_, r)| acc + r);
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let w = w_plus.min(w_minus);

    let (p, method, z) = if n <= EXACT_MAX_N && ties.is_empty() {
        let counts = exact_counts(n);
        // Without ties W is an integer.
        let tail: u64 = counts[..=(w as usize)].iter().sum();
        let p = 2.0 * tail as f64 / (1u64 << n) as f64;
        (p, Method::Exact, None)
    } else {
        let mean = total / 2.0;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let var = (n * (n + 1) * (2 * n + 1)) as f64 / 24.0 - tie_term;
        let z = ((w_plus - mean).abs() - CONTINUITY).max(0.0) / var.sqrt();
        (erfc(z / std::f64::consts::SQRT_2), Method::NormalApprox, Some(z))
    };
    Ok(WilcoxonResult {
        n_effective: n,
        w,
        w_plus,
        w_minus,
        // A p-value of exactly 0 is not attainable; underflow is clamped.
        p_two_sided: p.clamp(f64::MIN_POSITIVE, 1.0),
        method,
        z,
    })
}
