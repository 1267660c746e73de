use super::StatsError;
use crate::corpus::Label;
use serde::{Deserialize, Serialize};

/// Binary classification metrics with Satire as the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    /// Set when a ratio had a zero denominator and was defined as 0.
    pub degenerate: bool,
}

pub fn classification_metrics(predictions: &[Label], gold: &[Label]) -> Result<Metrics, StatsError> {
    if predictions.len() != gold.len() {
        return Err(StatsError::LengthMismatch(predictions.len(), gold.len()));
    }
    if gold.is_empty() {
        return Err(StatsError::Empty);
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (p, g) in predictions.iter().zip(gold) {
        match (p, g) {
            (Label::Satire, Label::Satire) => tp += 1,
            (Label::Satire, Label::True) => fp += 1,
            (Label::True, Label::Satire) => fn_ += 1,
            (Label::True, Label::True) => tn += 1,
        }
    }
    let mut degenerate = false;
    let mut ratio = |num: usize, den: usize| {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        degenerate = true;
        0.0
    };
    Ok(Metrics {
        accuracy: (tp + tn) as f64 / gold.len() as f64,
        precision,
        recall,
        f1,
        tp,
        fp,
        fn_,
        tn,
        degenerate,
    })
}
