//! Per-sentence surprise scores of an article under the true-news and the
//! satire language models.

use crate::corpus::{Document, Label, Vocabulary};
use crate::lm::{LmError, LmModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error("vocabulary fingerprint mismatch: encoder {encoder}, {model} model {found}")]
    FingerprintMismatch {
        encoder: String,
        model: &'static str,
        found: String,
    },
    #[error("document {0} has no sentences")]
    EmptyDocument(String),
    #[error("{path}:{line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The two score sequences of one article, one entry per sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleScorePair {
    #[serde(rename = "id")]
    pub article_id: String,
    pub label: Option<Label>,
    pub true_scores: Vec<f64>,
    pub satire_scores: Vec<f64>,
}

impl ArticleScorePair {
    pub fn len(&self) -> usize {
        self.true_scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.true_scores.is_empty()
    }
}

/// Mean per-token loss (nats) of a sentence, `<eos>` prediction included.
pub fn surprise_score(model: &LmModel, sentence: &[usize]) -> Result<f64, LmError> {
    let losses = model.token_losses(sentence)?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Both domain models, checked against the vocabulary used for encoding.
#[derive(Debug, Clone)]
pub struct Scorer {
    true_lm: LmModel,
    satire_lm: LmModel,
}

impl Scorer {
    pub fn new(true_lm: LmModel, satire_lm: LmModel, vocab: &Vocabulary) -> Result<Self, ScoreError> {
        for (name, model) in [("true", &true_lm), ("satire", &satire_lm)] {
            if model.vocab_fingerprint() != vocab.fingerprint() {
                return Err(ScoreError::FingerprintMismatch {
                    encoder: vocab.fingerprint().to_string(),
                    model: name,
                    found: model.vocab_fingerprint().to_string(),
                });
            }
        }
        Ok(Scorer { true_lm, satire_lm })
    }

    pub fn true_lm(&self) -> &LmModel {
        &self.true_lm
    }

    pub fn satire_lm(&self) -> &LmModel {
        &self.satire_lm
    }

    pub fn score_article(&self, doc: &Document) -> Result<ArticleScorePair, ScoreError> {
        if doc.sentences.is_empty() {
            return Err(ScoreError::EmptyDocument(doc.id.clone()));
        }
        // All sentences of an article go through the model as one padded
        // batch; scores agree with `surprise_score` up to rounding.
        let sentences: Vec<&[usize]> = doc.sentences.iter().map(Vec::as_slice).collect();
        let score_all = |model: &LmModel| -> Result<Vec<f64>, LmError> {
            Ok(model
                .token_losses_many(&sentences)?
                .iter()
                .map(|losses| losses.iter().sum::<f64>() / losses.len() as f64)
                .collect())
        };
        Ok(ArticleScorePair {
            article_id: doc.id.clone(),
            label: doc.label,
            true_scores: score_all(&self.true_lm)?,
            satire_scores: score_all(&self.satire_lm)?,
        })
    }

    /// Score many articles on up to `jobs` threads. Output is ordered by
    /// article id regardless of scheduling.
    pub fn score_articles(&self, docs: &[Document], jobs: usize) -> Result<Vec<ArticleScorePair>, ScoreError> {
        let mut pairs: Vec<ArticleScorePair> = if jobs <= 1 {
            docs.iter().map(|d| self.score_article(d)).collect::<Result<_, _>>()?
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .expect("thread pool");
            pool.install(|| docs.par_iter().map(|d| self.score_article(d)).collect::<Result<_, _>>())?
        };
        pairs.sort_by(|a, b| a.article_id.cmp(&b.article_id));
        Ok(pairs)
    }
}

pub fn write_scores(path: &Path, pairs: &[ArticleScorePair]) -> Result<(), ScoreError> {
    let mut out = BufWriter::new(File::create(path)?);
    for pair in pairs {
        serde_json::to_writer(&mut out, pair).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_scores(path: &Path) -> Result<Vec<ArticleScorePair>, ScoreError> {
    let reader = BufReader::new(File::open(path)?);
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| ScoreError::Schema {
            path: path.display().to_string(),
            line: i + 1,
            message,
        };
        let pair: ArticleScorePair = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        if pair.true_scores.is_empty() || pair.true_scores.len() != pair.satire_scores.len() {
            return Err(schema("score sequences must be nonempty and of equal length".into()));
        }
        pairs.push(pair);
    }
    Ok(pairs)
}
