use super::model::{BatchState, LmModel, LmParams, LmState, Mode};
use super::{LmConfig, LmError};
use crate::corpus::{Document, Vocabulary, EOS_ID};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Losses recorded after one pass over the training stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Token-weighted mean training loss (nats), dropout active.
    pub train_loss: f64,
    pub heldout_loss: Option<f64>,
    /// Learning rate used during this epoch.
    pub learning_rate: f64,
    pub tokens: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub train_documents: usize,
    pub heldout_documents: usize,
}

/// Flatten documents into one stream: `<eos>`, then each sentence followed
/// by `<eos>`.
pub fn token_stream(docs: &[Document]) -> Vec<usize> {
    let mut stream = vec![EOS_ID];
    for doc in docs {
        for sentence in &doc.sentences {
            stream.extend_from_slice(sentence);
            stream.push(EOS_ID);
        }
    }
    stream
}

fn holdout_count(config: &LmConfig, n_docs: usize) -> usize {
    if config.holdout_fraction == 0.0 || n_docs < 2 {
        return 0;
    }
    ((config.holdout_fraction * n_docs as f64).round() as usize).clamp(1, n_docs - 1)
}

/// The training stream cut into `batch` contiguous columns of `len`
/// predictions each. Column `b` predicts `stream[b·len + i + 1]` from
/// `stream[b·len + i]`; the fewer than `batch` tokens left over at the end
/// are dropped.
struct Columns<'a> {
    stream: &'a [usize],
    batch: usize,
    len: usize,
}

impl<'a> Columns<'a> {
    fn new(stream: &'a [usize], batch_size: usize) -> Self {
        let predictions = stream.len().saturating_sub(1);
        let batch = batch_size.min(predictions).max(1);
        Columns {
            stream,
            batch,
            len: predictions / batch,
        }
    }

    /// Time-major inputs and targets for steps `start..end`.
    fn chunk(&self, start: usize, end: usize) -> (Vec<usize>, Vec<usize>) {
        let n = (end - start) * self.batch;
        let (mut inputs, mut targets) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for t in start..end {
            for b in 0..self.batch {
                let at = b * self.len + t;
                inputs.push(self.stream[at]);
                targets.push(self.stream[at + 1]);
            }
        }
        (inputs, targets)
    }
}

pub fn train(docs: &[Document], vocab: &Vocabulary, config: &LmConfig) -> Result<(LmModel, TrainReport), LmError> {
    train_with_callback(docs, vocab, config, |_| {})
}

/// Truncated-BPTT SGD over the concatenated token stream of `docs`.
///
/// The tail `holdout_fraction` of the documents is kept out of training and
/// used to anneal the learning rate: whenever an epoch fails to improve the
/// best held-out loss, the rate is multiplied by `anneal_factor`.
pub fn train_with_callback(
    docs: &[Document],
    vocab: &Vocabulary,
    config: &LmConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(LmModel, TrainReport), LmError> {
    config.validate()?;
    if docs.iter().all(|d| d.sentences.iter().all(Vec::is_empty)) {
        return Err(LmError::EmptyCorpus);
    }
    let n_heldout = holdout_count(config, docs.len());
    let (train_docs, heldout_docs) = docs.split_at(docs.len() - n_heldout);
    let stream = token_stream(train_docs);
    let heldout = token_stream(heldout_docs);

    let mut model = LmModel::new(config.clone(), vocab)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut grads = LmParams::zeros(config, vocab.len());
    let mut lr = config.learning_rate;
    let mut best_heldout = f64::INFINITY;
    let mut report = TrainReport {
        epochs: Vec::with_capacity(config.epochs),
        train_documents: train_docs.len(),
        heldout_documents: heldout_docs.len(),
    };

    let columns = Columns::new(&stream, config.batch_size);
    for epoch in 1..=config.epochs {
        let mut state = BatchState::zeros(config, columns.batch);
        let mut total = 0.0;
        let mut tokens = 0usize;
        for (batch, start) in (0..columns.len).step_by(config.bptt_len).enumerate() {
            let end = (start + config.bptt_len).min(columns.len);
            let (inputs, targets) = columns.chunk(start, end);
            let abort = || LmError::NonFiniteLoss { epoch, batch };
            grads.fill_zero();
            let (loss, next) = model
                .accumulate_gradients_batch(&inputs, &targets, columns.batch, &state, Mode::Train(&mut rng), &mut grads)
                .map_err(|e| match e {
                    LmError::NumericalError(_) => abort(),
                    other => other,
                })?;
            let norm = grads.norm();
            if !loss.is_finite() || !norm.is_finite() {
                return Err(abort());
            }
            let clip = if norm > config.grad_clip { config.grad_clip / norm } else { 1.0 };
            model.params.add_scaled(-lr * clip, &grads);
            state = next;
            total += loss * inputs.len() as f64;
            tokens += inputs.len();
        }
        let heldout_loss = if heldout.len() > 1 {
            Some(stream_loss(&model, &heldout)?)
        } else {
            None
        };
        let stats = EpochStats {
            epoch,
            train_loss: total / tokens.max(1) as f64,
            heldout_loss,
            learning_rate: lr,
            tokens,
        };
        log::info!(
            "epoch {epoch}: train loss {:.4}, held-out loss {}, lr {lr}",
            stats.train_loss,
            heldout_loss.map_or("n/a".to_string(), |v| format!("{v:.4}"))
        );
        on_epoch(&stats);
        report.epochs.push(stats);
        let monitored = heldout_loss.unwrap_or(total / tokens.max(1) as f64);
        if monitored < best_heldout {
            best_heldout = monitored;
        } else {
            lr *= config.anneal_factor;
        }
    }
    Ok((model, report))
}

/// Token-weighted mean loss over a stream scored in evaluation mode with the
/// state carried across BPTT windows.
pub fn stream_loss(model: &LmModel, stream: &[usize]) -> Result<f64, LmError> {
    let last = stream.len().saturating_sub(1);
    let mut state: LmState = model.initial_state();
    let mut total = 0.0;
    for start in (0..last).step_by(model.config.bptt_len) {
        let end = (start + model.config.bptt_len).min(last);
        let (logits, next) = model.forward(&stream[start..end], &state, Mode::Eval)?;
        for (row, &target) in logits.outer_iter().zip(&stream[start + 1..end + 1]) {
            total += super::cross_entropy(row.as_slice().expect("standard layout"), target)?;
        }
        state = next;
    }
    Ok(total / last.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, TokenizedDocument};

    fn corpus() -> (Vec<Document>, Vocabulary) {
        let text = [
            vec!["the", "cat", "sat"],
            vec!["the", "dog", "ran"],
            vec!["a", "cat", "ran"],
            vec!["the", "cat", "sat", "down"],
        ];
        let docs: Vec<TokenizedDocument> = (0..6)
            .map(|i| TokenizedDocument {
                id: format!("d{i}"),
                label: None,
                sentences: text.iter().map(|s| s.iter().map(|w| w.to_string()).collect()).collect(),
            })
            .collect();
        let vocab = build_vocab(&docs, 1).unwrap();
        let encoded = docs.iter().map(|d| vocab.encode_document(d)).collect();
        (encoded, vocab)
    }

    fn small() -> LmConfig {
        LmConfig {
            embed_dim: 8,
            hidden_dim: 8,
            learning_rate: 2.0,
            epochs: 3,
            bptt_len: 5,
            ..Default::default()
        }
    }

    #[test]
    fn stream_layout() {
        let doc = Document {
            id: "x".into(),
            label: None,
            sentences: vec![vec![4, 5], vec![6]],
        };
        assert_eq!(token_stream(&[doc]), vec![EOS_ID, 4, 5, EOS_ID, 6, EOS_ID]);
    }

    #[test]
    fn columns_are_contiguous_and_time_major() {
        let stream: Vec<usize> = (0..12).collect();
        let cols = Columns::new(&stream, 3);
        // 11 predictions over 3 columns: 3 each, the last two dropped.
        assert_eq!((cols.batch, cols.len), (3, 3));
        assert_eq!(cols.chunk(0, 2), (vec![0, 3, 6, 1, 4, 7], vec![1, 4, 7, 2, 5, 8]));
        assert_eq!(cols.chunk(2, 3), (vec![2, 5, 8], vec![3, 6, 9]));
        let short = Columns::new(&stream[..3], 20);
        assert_eq!((short.batch, short.len), (2, 1));
    }

    #[test]
    fn runs_exactly_the_configured_epochs() {
        let (docs, vocab) = corpus();
        let mut seen = Vec::new();
        let (_, report) = train_with_callback(&docs, &vocab, &small(), |s| seen.push(s.epoch)).unwrap();
        assert_eq!(seen, vec![1, 2, 3]);
        assert_eq!(report.epochs.len(), 3);
        assert_eq!(report.heldout_documents, 1);
    }

    #[test]
    fn zero_epochs_is_config_error() {
        let (docs, vocab) = corpus();
        let cfg = LmConfig { epochs: 0, ..small() };
        assert!(matches!(train(&docs, &vocab, &cfg), Err(LmError::Config(_))));
    }

    #[test]
    fn empty_corpus_is_error() {
        let (_, vocab) = corpus();
        assert!(matches!(train(&[], &vocab, &small()), Err(LmError::EmptyCorpus)));
    }

    #[test]
    fn same_seed_gives_identical_parameters() {
        let (docs, vocab) = corpus();
        let (a, _) = train(&docs, &vocab, &small()).unwrap();
        let (b, _) = train(&docs, &vocab, &small()).unwrap();
        assert_eq!(a, b);
        let (c, _) = train(&docs, &vocab, &LmConfig { seed: 9, ..small() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn divergence_reports_epoch_and_batch() {
        let (docs, vocab) = corpus();
        let cfg = LmConfig {
            learning_rate: f64::MAX,
            grad_clip: f64::MAX,
            ..small()
        };
        match train(&docs, &vocab, &cfg) {
            Err(LmError::NonFiniteLoss { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
