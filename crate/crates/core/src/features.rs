//! The nine-statistic article representation: sample size, then mean,
//! median, sample variance and range of each model's score sequence.

use crate::corpus::Label;
use crate::surprise::ArticleScorePair;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const NUM_FEATURES: usize = 9;

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "N", "mean_t", "median_t", "var_t", "range_t", "mean_s", "median_s", "var_s", "range_s",
];

/// Cumulative feature groups for the ablation: mean, + median, + variance,
/// + range, + N. Indices into the feature vector.
pub const ABLATION_GROUPS: [&[usize]; 5] = [
    &[1, 5],
    &[1, 2, 5, 6],
    &[1, 2, 3, 5, 6, 7],
    &[1, 2, 3, 4, 5, 6, 7, 8],
    &[0, 1, 2, 3, 4, 5, 6, 7, 8],
];

pub const ABLATION_NAMES: [&str; 5] = ["mean", "+median", "+variance", "+range", "+N"];

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("empty score sequence")]
    EmptyScores,
    #[error("article {id}: {true_len} true-model scores but {satire_len} satire-model scores")]
    LengthMismatch {
        id: String,
        true_len: usize,
        satire_len: usize,
    },
    #[error("article {0}: non-finite score")]
    NonFinite(String),
    #[error("feature file: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub sample_variance: f64,
    pub range: f64,
}

pub fn summarize(scores: &[f64]) -> Result<ScoreStats, FeatureError> {
    if scores.is_empty() {
        return Err(FeatureError::EmptyScores);
    }
    let n = scores.len();
    let mean = scores.iter().sum::<f64>() / n as f64;
    let sample_variance = if n == 1 {
        0.0
    } else {
        scores.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    };
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    Ok(ScoreStats {
        n,
        mean,
        median,
        sample_variance,
        range: sorted[n - 1] - sorted[0],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub id: String,
    pub label: Option<Label>,
    pub values: [f64; NUM_FEATURES],
}

impl FeatureVector {
    /// Values restricted to `columns`, in the given order.
    pub fn select(&self, columns: &[usize]) -> Vec<f64> {
        columns.iter().map(|&c| self.values[c]).collect()
    }
}

pub fn feature_vector(pair: &ArticleScorePair) -> Result<FeatureVector, FeatureError> {
    if pair.true_scores.len() != pair.satire_scores.len() {
        return Err(FeatureError::LengthMismatch {
            id: pair.article_id.clone(),
            true_len: pair.true_scores.len(),
            satire_len: pair.satire_scores.len(),
        });
    }
    let t = summarize(&pair.true_scores)?;
    let s = summarize(&pair.satire_scores)?;
    let values = [
        t.n as f64,
        t.mean,
        t.median,
        t.sample_variance,
        t.range,
        s.mean,
        s.median,
        s.sample_variance,
        s.range,
    ];
    if values.iter().any(|v| !v.is_finite()) {
        return Err(FeatureError::NonFinite(pair.article_id.clone()));
    }
    Ok(FeatureVector {
        id: pair.article_id.clone(),
        label: pair.label,
        values,
    })
}

pub fn write_features(path: &Path, features: &[FeatureVector]) -> Result<(), FeatureError> {
    let mut out = csv::Writer::from_path(path)?;
    let mut header = vec!["id", "label"];
    header.extend(FEATURE_NAMES);
    out.write_record(&header)?;
    for fv in features {
        let mut record = vec![fv.id.clone(), fv.label.map_or(String::new(), |l| l.to_string())];
        // `{}` on f64 prints the shortest representation that round-trips.
        record.extend(fv.values.iter().map(|v| v.to_string()));
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureVector>, FeatureError> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let expected: Vec<&str> = ["id", "label"].into_iter().chain(FEATURE_NAMES).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(FeatureError::Format(format!("unexpected header {:?}", header)));
    }
    let mut features = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 2;
        let label = match &record[1] {
            "" => None,
            s => Some(
                s.parse::<Label>()
                    .map_err(|_| FeatureError::Format(format!("line {row}: bad label {s:?}")))?,
            ),
        };
        let mut values = [0.0; NUM_FEATURES];
        for (k, slot) in values.iter_mut().enumerate() {
            *slot = record[k + 2]
                .parse()
                .map_err(|_| FeatureError::Format(format!("line {row}: bad value in column {}", FEATURE_NAMES[k])))?;
        }
        features.push(FeatureVector {
            id: record[0].to_string(),
            label,
            values,
        });
    }
    Ok(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(t: Vec<f64>, s: Vec<f64>) -> ArticleScorePair {
        ArticleScorePair {
            article_id: "a".into(),
            label: Some(Label::True),
            true_scores: t,
            satire_scores: s,
        }
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(
            s,
            ScoreStats {
                n: 5,
                mean: 3.0,
                median: 3.0,
                sample_variance: 2.5,
                range: 4.0
            }
        );
        let one = summarize(&[7.0]).unwrap();
        assert_eq!((one.mean, one.median, one.sample_variance, one.range), (7.0, 7.0, 0.0, 0.0));
        assert_eq!(summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap().median, 2.5);
        assert!(matches!(summarize(&[]), Err(FeatureError::EmptyScores)));
    }

    #[test]
    fn vector_layout() {
        let fv = feature_vector(&pair(vec![2.0, 2.0], vec![3.0, 5.0])).unwrap();
        assert_eq!(fv.values, [2.0, 2.0, 2.0, 0.0, 0.0, 4.0, 4.0, 2.0, 2.0]);
        let same = feature_vector(&pair(vec![1.0, 4.0, 2.5], vec![1.0, 4.0, 2.5])).unwrap();
        assert_eq!(same.values[1..5], same.values[5..9]);
        assert!(matches!(
            feature_vector(&pair(vec![1.0], vec![1.0, 2.0])),
            Err(FeatureError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn ablation_groups_are_cumulative() {
        for w in ABLATION_GROUPS.windows(2) {
            assert!(w[0].iter().all(|c| w[1].contains(c)));
            assert!(w[1].len() > w[0].len());
        }
        assert_eq!(ABLATION_GROUPS[4].len(), NUM_FEATURES);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let mut a = feature_vector(&pair(vec![0.1, 1.0 / 3.0, 7.25], vec![2.0, 1e-17, 3.5])).unwrap();
        a.id = "x,\"quoted\"".into();
        let mut b = a.clone();
        b.label = None;
        write_features(&path, &[a.clone(), b.clone()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("id,label,N,mean_t,median_t,var_t,range_t,mean_s,median_s,var_s,range_s\n"));
        assert_eq!(read_features(&path).unwrap(), vec![a, b]);
    }

    proptest! {
        #[test]
        fn shift_and_scale(xs in prop::collection::vec(-50.0f64..50.0, 1..30), c in -10.0f64..10.0, a in 0.01f64..10.0) {
            let base = summarize(&xs).unwrap();
            let shifted = summarize(&xs.iter().map(|x| x + c).collect::<Vec<_>>()).unwrap();
            let scaled = summarize(&xs.iter().map(|x| a * x).collect::<Vec<_>>()).unwrap();
            let tol = 1e-9 * (1.0 + base.mean.abs() + base.sample_variance + c.abs());
            prop_assert!((shifted.mean - base.mean - c).abs() < tol);
            prop_assert!((shifted.median - base.median - c).abs() < tol);
            prop_assert!((shifted.sample_variance - base.sample_variance).abs() < 1e-7 * (1.0 + base.sample_variance));
            prop_assert!((shifted.range - base.range).abs() < tol);
            prop_assert_eq!(shifted.n, base.n);
            prop_assert!((scaled.mean - a * base.mean).abs() < tol * a.max(1.0));
            prop_assert!((scaled.median - a * base.median).abs() < tol * a.max(1.0));
            prop_assert!((scaled.range - a * base.range).abs() < tol * a.max(1.0));
            prop_assert!((scaled.sample_variance - a * a * base.sample_variance).abs() < 1e-9 * (1.0 + a * a * base.sample_variance));
            prop_assert!(base.median >= xs.iter().cloned().fold(f64::INFINITY, f64::min));
            prop_assert!(base.sample_variance >= 0.0);
        }
    }
}
