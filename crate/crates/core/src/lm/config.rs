use super::LmError;
use serde::{Deserialize, Serialize};

/// Language model architecture and training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub num_layers: usize,
    /// Inverted dropout after the embedding and between LSTM layers.
    pub dropout: f64,
    pub epochs: usize,
    /// Truncated BPTT window, in tokens.
    pub bptt_len: usize,
    /// Parallel token streams per SGD step; the loss is averaged over all
    /// `bptt_len · batch_size` positions.
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Global gradient-norm clip.
    pub grad_clip: f64,
    /// Learning-rate multiplier applied when held-out loss stops improving.
    pub anneal_factor: f64,
    /// Tail fraction of the training documents held out for annealing.
    pub holdout_fraction: f64,
    pub seed: u64,
}

fn default_batch_size() -> usize {
    1
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            embed_dim: 200,
            hidden_dim: 200,
            num_layers: 2,
            dropout: 0.2,
            epochs: 6,
            bptt_len: 35,
            batch_size: 20,
            learning_rate: 20.0,
            grad_clip: 0.25,
            anneal_factor: 0.25,
            holdout_fraction: 0.05,
            seed: 1,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<(), LmError> {
        let bad = |msg: &str| Err(LmError::Config(msg.to_string()));
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.num_layers == 0 {
            return bad("embed_dim, hidden_dim and num_layers must be at least 1");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.bptt_len == 0 || self.batch_size == 0 {
            return bad("bptt_len and batch_size must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.grad_clip > 0.0) {
            return bad("grad_clip must be positive");
        }
        if !(self.anneal_factor > 0.0 && self.anneal_factor <= 1.0) {
            return bad("anneal_factor must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return bad("holdout_fraction must lie in [0, 1)");
        }
        Ok(())
    }
}
