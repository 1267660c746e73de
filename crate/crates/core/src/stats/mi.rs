use super::StatsError;
use super::wilcoxon::average_ranks;
use crate::corpus::Label;

pub const DEFAULT_BINS: usize = 16;

/// Equal-frequency bin of every value. A value's bin is determined by its
/// average rank, so tied values always share a bin.
pub fn equal_frequency_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let n = values.len() as f64;
    let (ranks, _) = average_ranks(values);
    ranks
        .iter()
        .map(|r| (((r - 0.5) * bins as f64 / n).floor() as usize).min(bins - 1))
        .collect()
}

/// Plug-in mutual information (bits) between discretized `values` and a
/// binary label.
pub fn mutual_information(values: &[f64], labels: &[Label], bins: usize) -> Result<f64, StatsError> {
    if values.len() != labels.len() {
        return Err(StatsError::LengthMismatch(values.len(), labels.len()));
    }
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if bins < 2 {
        return Err(StatsError::InvalidBins(bins));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let cells = equal_frequency_bins(values, bins);
    let mut joint = vec![[0usize; 2]; bins];
    for (&b, label) in cells.iter().zip(labels) {
        joint[b][usize::from(*label == Label::Satire)] += 1;
    }
    let n = values.len() as f64;
    let label_totals = [0, 1].map(|k| joint.iter().map(|row| row[k]).sum::<usize>() as f64);
    let mut mi = 0.0;
    for row in &joint {
        let bin_total = (row[0] + row[1]) as f64;
        for k in 0..2 {
            if row[k] > 0 {
                let pxy = row[k] as f64 / n;
                mi += pxy * (pxy * n * n / (bin_total * label_totals[k])).log2();
            }
        }
    }
    // Rounding can leave a tiny negative value for independent data.
    Ok(mi.max(0.0))
}
