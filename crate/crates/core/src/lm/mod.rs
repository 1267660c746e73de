//! Word-level LSTM language model: embedding lookup, stacked LSTM, linear
//! decoder, cross-entropy loss and truncated-BPTT training.

mod config;
mod io;
pub(crate) mod kernels;
mod model;
mod train;

pub use config::LmConfig;
pub use io::{Precision, LM_MAGIC};
pub use model::{cross_entropy, BatchState, LmModel, LmParams, LmState, LstmLayer, Mode};
pub use train::{stream_loss, token_stream, train, train_with_callback, EpochStats, TrainReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("invalid LM configuration: {0}")]
    Config(String),
    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),
    #[error("numerical error: {0}")]
    NumericalError(String),
    #[error("non-finite training loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("cannot score an empty sentence")]
    EmptySentence,
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
