//! Wilcoxon signed-rank test, mutual-information feature analysis and
//! classification metrics.

mod metrics;
mod mi;
mod wilcoxon;

pub use metrics::{classification_metrics, Metrics};
pub use mi::{equal_frequency_bins, mutual_information, DEFAULT_BINS};
pub use wilcoxon::{average_ranks, wilcoxon_signed_rank, Method, WilcoxonResult, EXACT_MAX_N};

use crate::corpus::Label;
use crate::features::{FeatureVector, FEATURE_NAMES};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("all paired differences are zero")]
    DegeneratePairs,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty sample")]
    Empty,
    #[error("need at least 2 bins, got {0}")]
    InvalidBins(usize),
    #[error("non-finite value in sample")]
    NonFinite,
    #[error("unlabeled feature row {0}")]
    Unlabeled(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The statistics compared between the true-model and satire-model columns,
/// as (name, true column, satire column) of the feature vector.
pub const PAIRED_STATISTICS: [(&str, usize, usize); 4] =
    [("mean", 1, 5), ("median", 2, 6), ("variance", 3, 7), ("range", 4, 8)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTest {
    pub statistic: String,
    /// `None` when every pair was identical.
    pub result: Option<WilcoxonResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonGroup {
    pub label: Label,
    pub articles: usize,
    pub tests: Vec<PairedTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonReport {
    pub groups: Vec<WilcoxonGroup>,
}

/// Four paired tests (true-model vs satire-model column of each statistic)
/// run separately within each label group present in `features`.
pub fn paired_wilcoxon(features: &[FeatureVector]) -> Result<WilcoxonReport, StatsError> {
    let mut groups = Vec::new();
    for label in Label::ALL {
        let rows: Vec<&FeatureVector> = features.iter().filter(|f| f.label == Some(label)).collect();
        if rows.is_empty() {
            continue;
        }
        let mut tests = Vec::new();
        for (name, t, s) in PAIRED_STATISTICS {
            let x: Vec<f64> = rows.iter().map(|f| f.values[t]).collect();
            let y: Vec<f64> = rows.iter().map(|f| f.values[s]).collect();
            let result = match wilcoxon_signed_rank(&x, &y) {
                Ok(r) => Some(r),
                Err(StatsError::DegeneratePairs) => None,
                Err(e) => return Err(e),
            };
            tests.push(PairedTest {
                statistic: name.to_string(),
                result,
            });
        }
        groups.push(WilcoxonGroup {
            label,
            articles: rows.len(),
            tests,
        });
    }
    Ok(WilcoxonReport { groups })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMi {
    pub feature: String,
    pub mi_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiReport {
    pub binning: String,
    pub bins: usize,
    pub samples: usize,
    pub features: Vec<FeatureMi>,
}

pub fn mi_report(features: &[FeatureVector], bins: usize) -> Result<MiReport, StatsError> {
    let labels: Vec<Label> = features
        .iter()
        .map(|f| f.label.ok_or_else(|| StatsError::Unlabeled(f.id.clone())))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(FEATURE_NAMES.len());
    for (k, name) in FEATURE_NAMES.iter().enumerate() {
        let column: Vec<f64> = features.iter().map(|f| f.values[k]).collect();
        out.push(FeatureMi {
            feature: name.to_string(),
            mi_bits: mutual_information(&column, &labels, bins)?,
        });
    }
    Ok(MiReport {
        binning: "equal-frequency".into(),
        bins,
        samples: features.len(),
        features: out,
    })
}

pub fn write_mi_csv(path: &Path, report: &MiReport) -> Result<(), StatsError> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["feature", "mi_bits"])?;
    for f in &report.features {
        out.write_record([f.feature.clone(), f.mi_bits.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
