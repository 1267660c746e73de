//! Data ingestion: sentence segmentation, tokenization, vocabulary
//! construction and the LM/classifier training split.

mod io;
mod segment;
mod split;
mod tokenize;
mod vocab;

pub use io::{read_documents, write_documents, RawDocument};
pub use segment::{segment_paragraphs, segment_sentences};
pub use split::{split_lm_clf, Fraction, Labeled, SplitPlan};
pub use tokenize::tokenize;
pub use vocab::{build_vocab, Vocabulary, EOS_ID, EOS_TOKEN, UNK_ID, UNK_TOKEN};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("document is empty")]
    EmptyDocument,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("min_count must be at least 1")]
    InvalidMinCount,
    #[error("invalid split fraction {0}")]
    InvalidFraction(String),
    #[error("{path}:{line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },
    #[error("malformed vocabulary file: {0}")]
    MalformedVocab(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Binary news category. `Satire` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    True,
    Satire,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::True, Label::Satire];

    /// +1 for satire, -1 for true news.
    pub fn sign(self) -> f64 {
        match self {
            Label::True => -1.0,
            Label::Satire => 1.0,
        }
    }

    pub fn from_sign(value: f64) -> Label {
        if value > 0.0 {
            Label::Satire
        } else {
            Label::True
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::True => "true",
            Label::Satire => "satire",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "true" => Ok(Label::True),
            "satire" => Ok(Label::Satire),
            other => Err(format!("unknown label {other:?} (expected \"true\" or \"satire\")")),
        }
    }
}

/// How raw article text is cut into scoring units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Sentence,
    Paragraph,
}

impl FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sentence" => Ok(Unit::Sentence),
            "paragraph" => Ok(Unit::Paragraph),
            other => Err(format!("unknown unit {other:?} (expected sentence or paragraph)")),
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Sentence => "sentence",
            Unit::Paragraph => "paragraph",
        })
    }
}

/// An article after tokenization, before vocabulary lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedDocument {
    pub id: String,
    pub label: Option<Label>,
    pub sentences: Vec<Vec<String>>,
}

impl TokenizedDocument {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flatten().map(String::as_str)
    }
}

/// An article encoded against a [`Vocabulary`]: at least one sentence, each
/// with at least one token id.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub label: Option<Label>,
    pub sentences: Vec<Vec<usize>>,
}

impl Document {
    pub fn num_sentences(&self) -> usize {
        self.sentences.len()
    }
}

impl RawDocument {
    /// Segment (when given raw text) and tokenize. Sentences that tokenize to
    /// nothing are dropped; a document with no tokens left is an error.
    pub fn tokenize(&self, unit: Unit) -> Result<TokenizedDocument, CorpusError> {
        let pieces: Vec<String> = match (&self.sentences, &self.text) {
            (Some(sentences), _) => sentences.clone(),
            (None, Some(text)) => match unit {
                Unit::Sentence => segment_sentences(text)?,
                Unit::Paragraph => segment_paragraphs(text)?,
            },
            (None, None) => return Err(CorpusError::EmptyDocument),
        };
        let sentences: Vec<Vec<String>> = pieces
            .iter()
            .map(|s| tokenize(s))
            .filter(|toks| !toks.is_empty())
            .collect();
        if sentences.is_empty() {
            return Err(CorpusError::EmptyDocument);
        }
        Ok(TokenizedDocument {
            id: self.id.clone(),
            label: self.label,
            sentences,
        })
    }
}
