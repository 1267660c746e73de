use super::{CorpusError, Label};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// One line of the line-delimited JSON corpus format. Exactly one of `text`
/// (raw article) or `sentences` (pre-split) is expected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentences: Option<Vec<String>>,
}

/// Read a JSONL corpus. Blank lines are skipped; schema problems are reported
/// with their 1-based line number.
pub fn read_documents(path: &Path, require_label: bool) -> Result<Vec<RawDocument>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| CorpusError::Schema {
            path: path.display().to_string(),
            line: i + 1,
            message,
        };
        let doc: RawDocument = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        if require_label && doc.label.is_none() {
            return Err(schema("missing `label` field".into()));
        }
        match (&doc.text, &doc.sentences) {
            (None, None) => return Err(schema("document needs `text` or `sentences`".into())),
            (Some(_), Some(_)) => return Err(schema("document has both `text` and `sentences`".into())),
            _ => {}
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_documents(path: &Path, docs: &[RawDocument]) -> Result<(), CorpusError> {
    let mut out = BufWriter::new(File::create(path)?);
    for doc in docs {
        serde_json::to_writer(&mut out, doc).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
