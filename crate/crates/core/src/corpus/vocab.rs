use super::{CorpusError, Document, TokenizedDocument};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fs;
use std::path::Path;

pub const UNK_TOKEN: &str = "<unk>";
pub const EOS_TOKEN: &str = "<eos>";
pub const UNK_ID: usize = 0;
pub const EOS_ID: usize = 1;

/// Dense token/id mapping. Ids 0 and 1 are `<unk>` and `<eos>`; the rest are
/// ordered by descending corpus frequency, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    min_count: Option<usize>,
    fingerprint: String,
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>, min_count: Option<usize>) -> Result<Self, CorpusError> {
        if tokens.len() < 2 || tokens[UNK_ID] != UNK_TOKEN || tokens[EOS_ID] != EOS_TOKEN {
            return Err(CorpusError::MalformedVocab(format!(
                "lines 0 and 1 must be {UNK_TOKEN} and {EOS_TOKEN}"
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(CorpusError::MalformedVocab(format!("invalid token on line {id}")));
            }
            if index.insert(tok.clone(), id).is_some() {
                return Err(CorpusError::MalformedVocab(format!("duplicate token {tok:?}")));
            }
        }
        let fingerprint = hex::encode(Sha256::digest(file_contents(&tokens).as_bytes()));
        Ok(Vocabulary {
            tokens,
            index,
            min_count,
            fingerprint,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_count(&self) -> Option<usize> {
        self.min_count
    }

    /// SHA-256 (hex) of the vocabulary file contents. Models record it so
    /// that scoring can refuse a mismatched encoder.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<&str> {
        ids.iter().map(|&id| self.token(id).unwrap_or(UNK_TOKEN)).collect()
    }

    pub fn encode_document(&self, doc: &TokenizedDocument) -> Document {
        Document {
            id: doc.id.clone(),
            label: doc.label,
            sentences: doc.sentences.iter().map(|s| self.encode(s)).collect(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        fs::write(path, file_contents(&self.tokens))?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, CorpusError> {
        let contents = fs::read_to_string(path)?;
        let tokens: Vec<String> = contents.lines().map(str::to_string).collect();
        Vocabulary::from_tokens(tokens, None)
    }
}

fn file_contents(tokens: &[String]) -> String {
    let mut out = String::with_capacity(tokens.iter().map(|t| t.len() + 1).sum());
    for tok in tokens {
        out.push_str(tok);
        out.push('\n');
    }
    out
}

/// Build a vocabulary keeping every token seen at least `min_count` times.
pub fn build_vocab(documents: &[TokenizedDocument], min_count: usize) -> Result<Vocabulary, CorpusError> {
    if min_count == 0 {
        return Err(CorpusError::InvalidMinCount);
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in documents {
        for tok in doc.tokens() {
            if tok != UNK_TOKEN && tok != EOS_TOKEN {
                *counts.entry(tok).or_default() += 1;
            }
        }
    }
    if counts.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut kept: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, n)| n >= min_count).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let tokens = [UNK_TOKEN, EOS_TOKEN]
        .into_iter()
        .chain(kept.into_iter().map(|(t, _)| t))
        .map(str::to_string)
        .collect();
    Vocabulary::from_tokens(tokens, Some(min_count))
}
