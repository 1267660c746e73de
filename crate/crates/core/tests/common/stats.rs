//! Brute-force references for the hypothesis test and the information
//! estimate.

/// Two-sided signed-rank p-value by walking all 2ⁿ sign patterns of the
/// ranks 1..=n: the share of patterns whose W⁺ is at least as far from its
/// mean as the observed one.
pub fn enumerate_signed_rank_p(diffs: &[f64]) -> f64 {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut observed = 0usize;
    for (rank0, &i) in order.iter().enumerate() {
        if diffs[i] > 0.0 {
            observed += rank0 + 1;
        }
    }
    let total = n * (n + 1);
    // Distances are compared as 2·|W⁺ − mean| to stay in integers.
    let dist = |w: usize| (2 * w).abs_diff(total / 2);
    let threshold = dist(observed);
    let mut extreme = 0u64;
    for mask in 0u64..(1 << n) {
        let w: usize = (0..n).filter(|r| mask >> r & 1 == 1).map(|r| r + 1).sum();
        if dist(w) >= threshold {
            extreme += 1;
        }
    }
    extreme as f64 / (1u64 << n) as f64
}

/// Σ p(x,y) log₂(p(x,y) / (p(x)p(y))) over a joint table.
pub fn mi_of_joint(joint: &[Vec<f64>]) -> f64 {
    let px: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let py: Vec<f64> = (0..joint[0].len()).map(|c| joint.iter().map(|r| r[c]).sum()).collect();
    let mut mi = 0.0;
    for (i, row) in joint.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (px[i] * py[j])).log2();
            }
        }
    }
    mi
}
