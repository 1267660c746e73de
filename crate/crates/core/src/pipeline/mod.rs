//! Stage-by-stage orchestration over an output directory:
//!
//! ```text
//! split/{lm,clf,validation,test}.jsonl   documents
//! vocab.txt                              shared vocabulary
//! lm_true.lmd, lm_satire.lmd             language models (+ .train.json)
//! scores/<split>.jsonl                   per-sentence surprise scores
//! features/<split>.csv                   9-statistic feature vectors
//! svm.model                              classifier (+ svm.train.json)
//! metrics.json, ablation.json            evaluation
//! mi.csv, mi.json, wilcoxon.json         feature analysis
//! resolved_config.txt                    effective settings of the last run
//! ```
//!
//! Every stage reads only upstream files, so deleting an artifact and
//! rerunning its stage reproduces it.

mod config;

pub use config::PipelineConfig;

use crate::corpus::{
    build_vocab, read_documents, split_lm_clf, write_documents, CorpusError, Document, Label, RawDocument,
    SplitPlan, TokenizedDocument, Unit, Vocabulary,
};
use crate::features::{
    feature_vector, read_features, write_features, FeatureError, FeatureVector, ABLATION_GROUPS, ABLATION_NAMES,
    FEATURE_NAMES,
};
use crate::lm::{train, LmError, LmModel, TrainReport};
use crate::stats::{classification_metrics, mi_report, paired_wilcoxon, write_mi_csv, Metrics, MiReport, StatsError, WilcoxonReport};
use crate::surprise::{read_scores, write_scores, ScoreError, Scorer};
use crate::svm::{read_model, train_svm, write_model, SvmError, SvmModel, SvmParams};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("missing input {}: {hint}", path.display())]
    MissingInput { path: PathBuf, hint: String },
    #[error("document {id}: {source}")]
    Document { id: String, source: CorpusError },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Process exit status: 2 configuration, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        const CONFIG: i32 = 2;
        const DATA: i32 = 3;
        const NUMERIC: i32 = 4;
        let lm = |e: &LmError| match e {
            LmError::Config(_) => CONFIG,
            LmError::NumericalError(_) | LmError::NonFiniteLoss { .. } => NUMERIC,
            _ => DATA,
        };
        match self {
            PipelineError::Config(_) => CONFIG,
            PipelineError::Corpus(CorpusError::InvalidFraction(_) | CorpusError::InvalidMinCount) => CONFIG,
            PipelineError::Lm(e) | PipelineError::Score(ScoreError::Lm(e)) => lm(e),
            PipelineError::Feature(FeatureError::NonFinite(_)) => NUMERIC,
            PipelineError::Svm(SvmError::InvalidParameter(_)) => CONFIG,
            PipelineError::Svm(SvmError::NonFinite) | PipelineError::Stats(StatsError::NonFinite) => NUMERIC,
            _ => DATA,
        }
    }
}

/// Document sets produced by `split`; `clf` is the classifier-training part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Lm,
    Clf,
    Validation,
    Test,
}

impl Split {
    pub const SCORED: [Split; 3] = [Split::Clf, Split::Validation, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Lm => "lm",
            Split::Clf => "clf",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lm" => Ok(Split::Lm),
            "clf" => Ok(Split::Clf),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Artifact paths under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn documents(&self, split: Split) -> PathBuf {
        self.root.join("split").join(format!("{}.jsonl", split.name()))
    }

    pub fn vocab(&self) -> PathBuf {
        self.root.join("vocab.txt")
    }

    pub fn lm(&self, label: Label) -> PathBuf {
        self.root.join(format!("lm_{label}.lmd"))
    }

    pub fn lm_report(&self, label: Label) -> PathBuf {
        self.root.join(format!("lm_{label}.train.json"))
    }

    pub fn scores(&self, split: Split) -> PathBuf {
        self.root.join("scores").join(format!("{}.jsonl", split.name()))
    }

    pub fn features(&self, split: Split) -> PathBuf {
        self.root.join("features").join(format!("{}.csv", split.name()))
    }

    pub fn svm(&self) -> PathBuf {
        self.root.join("svm.model")
    }

    pub fn svm_report(&self) -> PathBuf {
        self.root.join("svm.train.json")
    }

    pub fn metrics(&self) -> PathBuf {
        self.root.join("metrics.json")
    }

    pub fn ablation(&self) -> PathBuf {
        self.root.join("ablation.json")
    }

    pub fn mi_csv(&self) -> PathBuf {
        self.root.join("mi.csv")
    }

    pub fn mi_json(&self) -> PathBuf {
        self.root.join("mi.json")
    }

    pub fn wilcoxon(&self) -> PathBuf {
        self.root.join("wilcoxon.json")
    }

    pub fn resolved_config(&self) -> PathBuf {
        self.root.join("resolved_config.txt")
    }
}

fn require(path: &Path, hint: &str) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::MissingInput {
            path: path.to_path_buf(),
            hint: hint.to_string(),
        })
    }
}

fn create_parent(path: &Path) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::from)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Validate the configuration and record it next to the outputs.
pub fn prepare(cfg: &PipelineConfig) -> Result<Layout, PipelineError> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let layout = Layout::new(&cfg.out_dir);
    std::fs::write(layout.resolved_config(), cfg.to_text())?;
    Ok(layout)
}

fn tokenize_all(docs: &[RawDocument], unit: Unit) -> Result<Vec<TokenizedDocument>, PipelineError> {
    docs.iter()
        .map(|d| {
            d.tokenize(unit).map_err(|source| PipelineError::Document {
                id: d.id.clone(),
                source,
            })
        })
        .collect()
}

fn load_split(layout: &Layout, split: Split) -> Result<Vec<RawDocument>, PipelineError> {
    let path = layout.documents(split);
    require(&path, "run `lmdiff split` first")?;
    Ok(read_documents(&path, false)?)
}

fn load_vocab(layout: &Layout) -> Result<Vocabulary, PipelineError> {
    let path = layout.vocab();
    require(&path, "run `lmdiff build-vocab` first")?;
    Ok(Vocabulary::read(&path)?)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub lm_true: usize,
    pub lm_satire: usize,
    pub clf_true: usize,
    pub clf_satire: usize,
    pub validation: Option<usize>,
    pub test: Option<usize>,
}

fn count(docs: &[RawDocument], label: Label) -> usize {
    docs.iter().filter(|d| d.label == Some(label)).count()
}

/// Stratified LM/classifier split of the training corpus; validation and
/// test corpora are copied alongside unchanged.
pub fn cmd_split(cfg: &PipelineConfig) -> Result<SplitCounts, PipelineError> {
    let layout = prepare(cfg)?;
    let train_path = cfg
        .train_path
        .as_ref()
        .ok_or_else(|| PipelineError::Config("train_path is not set".into()))?;
    require(train_path, "set train_path to a labeled JSONL corpus")?;
    let train_docs = read_documents(train_path, true)?;
    if train_docs.is_empty() {
        return Err(CorpusError::EmptyCorpus.into());
    }
    let plan = SplitPlan {
        lm_fraction: cfg.lm_fraction,
        seed: cfg.seed,
    };
    let (lm, clf) = split_lm_clf(&train_docs, &plan);
    create_parent(&layout.documents(Split::Lm))?;
    write_documents(&layout.documents(Split::Lm), &lm)?;
    write_documents(&layout.documents(Split::Clf), &clf)?;
    let mut counts = SplitCounts {
        lm_true: count(&lm, Label::True),
        lm_satire: count(&lm, Label::Satire),
        clf_true: count(&clf, Label::True),
        clf_satire: count(&clf, Label::Satire),
        ..Default::default()
    };
    for (split, source) in [(Split::Validation, &cfg.validation_path), (Split::Test, &cfg.test_path)] {
        let target = layout.documents(split);
        match source {
            Some(path) => {
                require(path, "check the configured corpus path")?;
                let docs = read_documents(path, false)?;
                write_documents(&target, &docs)?;
                let n = Some(docs.len());
                match split {
                    Split::Validation => counts.validation = n,
                    _ => counts.test = n,
                }
            }
            None => {
                // A stale copy from an earlier run must not be evaluated.
                if target.exists() {
                    std::fs::remove_file(&target)?;
                }
            }
        }
    }
    log::info!(
        "split: LM {} true / {} satire, classifier {} true / {} satire",
        counts.lm_true,
        counts.lm_satire,
        counts.clf_true,
        counts.clf_satire
    );
    Ok(counts)
}

/// Shared vocabulary from the LM-training documents of both domains.
pub fn cmd_build_vocab(cfg: &PipelineConfig) -> Result<Vocabulary, PipelineError> {
    let layout = prepare(cfg)?;
    let docs = tokenize_all(&load_split(&layout, Split::Lm)?, cfg.unit)?;
    let vocab = build_vocab(&docs, cfg.min_count)?;
    vocab.write(&layout.vocab())?;
    log::info!("vocabulary: {} types (min_count {})", vocab.len(), cfg.min_count);
    Ok(vocab)
}

fn encode(vocab: &Vocabulary, docs: &[TokenizedDocument]) -> Vec<Document> {
    docs.iter().map(|d| vocab.encode_document(d)).collect()
}

pub fn cmd_train_lm(cfg: &PipelineConfig, label: Label) -> Result<TrainReport, PipelineError> {
    let layout = prepare(cfg)?;
    let vocab = load_vocab(&layout)?;
    let raw: Vec<RawDocument> = load_split(&layout, Split::Lm)?
        .into_iter()
        .filter(|d| d.label == Some(label))
        .collect();
    if raw.is_empty() {
        return Err(PipelineError::Data(format!("no {label} documents in the LM split")));
    }
    let docs = encode(&vocab, &tokenize_all(&raw, cfg.unit)?);
    let lm_cfg = cfg.lm_config(label)?;
    log::info!("training {label} language model on {} documents", docs.len());
    let (model, report) = train(&docs, &vocab, &lm_cfg)?;
    model.save(&layout.lm(label), cfg.lm_precision)?;
    write_json(&layout.lm_report(label), &report)?;
    Ok(report)
}

fn load_lm(layout: &Layout, label: Label) -> Result<LmModel, PipelineError> {
    let path = layout.lm(label);
    require(&path, &format!("run `lmdiff train-lm --domain {label}` first"))?;
    Ok(LmModel::load(&path)?)
}

/// Surprise scores for the requested splits; splits without a document file
/// are skipped. Returns the splits that were scored.
pub fn cmd_score(cfg: &PipelineConfig, splits: &[Split]) -> Result<Vec<Split>, PipelineError> {
    let layout = prepare(cfg)?;
    let vocab = load_vocab(&layout)?;
    let scorer = Scorer::new(load_lm(&layout, Label::True)?, load_lm(&layout, Label::Satire)?, &vocab)?;
    let mut done = Vec::new();
    for &split in splits {
        let path = layout.documents(split);
        if !path.exists() {
            if split == Split::Clf {
                return Err(PipelineError::MissingInput {
                    path,
                    hint: "run `lmdiff split` first".into(),
                });
            }
            continue;
        }
        let raw = read_documents(&path, false)?;
        let docs = encode(&vocab, &tokenize_all(&raw, cfg.unit)?);
        let pairs = scorer.score_articles(&docs, cfg.jobs)?;
        create_parent(&layout.scores(split))?;
        write_scores(&layout.scores(split), &pairs)?;
        log::info!("scored {} {} documents", pairs.len(), split.name());
        done.push(split);
    }
    Ok(done)
}

/// Feature vectors for every split that has scores.
pub fn cmd_featurize(cfg: &PipelineConfig) -> Result<Vec<Split>, PipelineError> {
    let layout = prepare(cfg)?;
    let mut done = Vec::new();
    for split in Split::SCORED {
        let path = layout.scores(split);
        if !path.exists() {
            if split == Split::Clf {
                return Err(PipelineError::MissingInput {
                    path,
                    hint: "run `lmdiff score` first".into(),
                });
            }
            continue;
        }
        let features = read_scores(&path)?
            .iter()
            .map(feature_vector)
            .collect::<Result<Vec<_>, _>>()?;
        create_parent(&layout.features(split))?;
        write_features(&layout.features(split), &features)?;
        done.push(split);
    }
    Ok(done)
}

fn load_features(layout: &Layout, split: Split) -> Result<Vec<FeatureVector>, PipelineError> {
    let path = layout.features(split);
    require(&path, "run `lmdiff featurize` first")?;
    Ok(read_features(&path)?)
}

fn labels_of(features: &[FeatureVector], split: Split) -> Result<Vec<Label>, PipelineError> {
    features
        .iter()
        .map(|f| {
            f.label
                .ok_or_else(|| PipelineError::Data(format!("{} document {} has no label", split.name(), f.id)))
        })
        .collect()
}

fn fit(features: &[FeatureVector], columns: &[usize], params: &SvmParams) -> Result<(SvmModel, crate::svm::TrainReport), PipelineError> {
    let x: Vec<Vec<f64>> = features.iter().map(|f| f.select(columns)).collect();
    let y = labels_of(features, Split::Clf)?;
    Ok(train_svm(&x, &y, params)?)
}

pub fn cmd_train_clf(cfg: &PipelineConfig) -> Result<crate::svm::TrainReport, PipelineError> {
    let layout = prepare(cfg)?;
    let features = load_features(&layout, Split::Clf)?;
    let all: Vec<usize> = (0..FEATURE_NAMES.len()).collect();
    let (model, report) = fit(&features, &all, &cfg.svm)?;
    write_model(&layout.svm(), &model)?;
    write_json(&layout.svm_report(), &report)?;
    log::info!(
        "classifier: {} support vectors, {} iterations, converged {}",
        report.support_vectors,
        report.iterations,
        report.converged
    );
    Ok(report)
}

fn evaluate_split(model: &SvmModel, features: &[FeatureVector], columns: &[usize], split: Split) -> Result<Metrics, PipelineError> {
    let gold = labels_of(features, split)?;
    let predictions = features
        .iter()
        .map(|f| model.predict(&f.select(columns)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(classification_metrics(&predictions, &gold)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub validation: Option<Metrics>,
    pub test: Option<Metrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub group: String,
    pub features: Vec<String>,
    pub validation: Option<Metrics>,
    pub test: Option<Metrics>,
}

fn held_out(layout: &Layout) -> Result<Vec<(Split, Vec<FeatureVector>)>, PipelineError> {
    let mut out = Vec::new();
    for split in [Split::Validation, Split::Test] {
        if layout.features(split).exists() {
            out.push((split, load_features(layout, split)?));
        }
    }
    if out.is_empty() {
        return Err(PipelineError::MissingInput {
            path: layout.features(Split::Test),
            hint: "configure validation_path or test_path and rerun split, score and featurize".into(),
        });
    }
    Ok(out)
}

/// Metrics of the trained classifier on validation and test features.
pub fn cmd_evaluate(cfg: &PipelineConfig) -> Result<EvaluationReport, PipelineError> {
    let layout = prepare(cfg)?;
    require(&layout.svm(), "run `lmdiff train-clf` first")?;
    let model = read_model(&layout.svm())?;
    let all: Vec<usize> = (0..FEATURE_NAMES.len()).collect();
    let mut report = EvaluationReport {
        validation: None,
        test: None,
    };
    for (split, features) in held_out(&layout)? {
        let m = evaluate_split(&model, &features, &all, split)?;
        log::info!("{}: accuracy {:.4}, F1 {:.4}", split.name(), m.accuracy, m.f1);
        match split {
            Split::Validation => report.validation = Some(m),
            _ => report.test = Some(m),
        }
    }
    write_json(&layout.metrics(), &report)?;
    Ok(report)
}

/// One classifier per cumulative feature group (mean, then adding median,
/// variance, range and N), each trained on the classifier split and evaluated on the
/// held-out splits.
pub fn cmd_ablation(cfg: &PipelineConfig) -> Result<Vec<AblationRow>, PipelineError> {
    let layout = prepare(cfg)?;
    let train_features = load_features(&layout, Split::Clf)?;
    let held = held_out(&layout)?;
    let mut rows = Vec::new();
    for (name, columns) in ABLATION_NAMES.iter().zip(ABLATION_GROUPS) {
        let (model, _) = fit(&train_features, columns, &cfg.svm)?;
        let mut row = AblationRow {
            group: name.to_string(),
            features: columns.iter().map(|&c| FEATURE_NAMES[c].to_string()).collect(),
            validation: None,
            test: None,
        };
        for (split, features) in &held {
            let m = evaluate_split(&model, features, columns, *split)?;
            match split {
                Split::Validation => row.validation = Some(m),
                _ => row.test = Some(m),
            }
        }
        log::info!(
            "ablation {name}: validation F1 {}, test F1 {}",
            row.validation.as_ref().map_or("n/a".into(), |m| format!("{:.4}", m.f1)),
            row.test.as_ref().map_or("n/a".into(), |m| format!("{:.4}", m.f1))
        );
        rows.push(row);
    }
    write_json(&layout.ablation(), &rows)?;
    Ok(rows)
}

pub fn cmd_mi(cfg: &PipelineConfig, split: Split) -> Result<MiReport, PipelineError> {
    let layout = prepare(cfg)?;
    let report = mi_report(&load_features(&layout, split)?, cfg.mi_bins)?;
    write_mi_csv(&layout.mi_csv(), &report)?;
    write_json(&layout.mi_json(), &report)?;
    Ok(report)
}

pub fn cmd_wilcoxon(cfg: &PipelineConfig, split: Split) -> Result<WilcoxonReport, PipelineError> {
    let layout = prepare(cfg)?;
    let report = paired_wilcoxon(&load_features(&layout, split)?)?;
    write_json(&layout.wilcoxon(), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub split: SplitCounts,
    pub vocab_size: usize,
    pub evaluation: EvaluationReport,
    pub ablation: Option<Vec<AblationRow>>,
    pub mi: MiReport,
    pub wilcoxon: WilcoxonReport,
}

/// Every stage in order. Feature analysis runs on the classifier split.
pub fn run_all(cfg: &PipelineConfig, ablation: bool) -> Result<RunSummary, PipelineError> {
    let split = cmd_split(cfg)?;
    let vocab = cmd_build_vocab(cfg)?;
    for label in Label::ALL {
        cmd_train_lm(cfg, label)?;
    }
    cmd_score(cfg, &Split::SCORED)?;
    cmd_featurize(cfg)?;
    cmd_train_clf(cfg)?;
    let evaluation = cmd_evaluate(cfg)?;
    let ablation = if ablation { Some(cmd_ablation(cfg)?) } else { None };
    Ok(RunSummary {
        split,
        vocab_size: vocab.len(),
        evaluation,
        ablation,
        mi: cmd_mi(cfg, Split::Clf)?,
        wilcoxon: cmd_wilcoxon(cfg, Split::Clf)?,
    })
}
