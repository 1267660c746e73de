use super::kernels::{gemv_acc, gemv_t_acc, sigmoid};
use super::{LmConfig, LmError};
use crate::corpus::{Vocabulary, EOS_ID};
use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Weights of one LSTM layer. Gate blocks are stacked in the order
/// input, forget, cell candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    /// `(4·hidden, input)`
    pub w_ih: Array2<f64>,
    /// `(4·hidden, hidden)`
    pub w_hh: Array2<f64>,
    /// `(4·hidden)`
    pub bias: Array1<f64>,
}

/// Every trainable tensor of the model. Gradients use the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct LmParams {
    /// `(embed_dim, vocab)`: one column per token.
    pub embedding: Array2<f64>,
    pub layers: Vec<LstmLayer>,
    /// `(vocab, hidden)`
    pub decoder_w: Array2<f64>,
    /// `(vocab)`
    pub decoder_b: Array1<f64>,
}

impl LmParams {
    pub fn zeros(config: &LmConfig, vocab_size: usize) -> Self {
        let h = config.hidden_dim;
        let layers = (0..config.num_layers)
            .map(|l| {
                let input = if l == 0 { config.embed_dim } else { h };
                LstmLayer {
                    w_ih: Array2::zeros((4 * h, input)),
                    w_hh: Array2::zeros((4 * h, h)),
                    bias: Array1::zeros(4 * h),
                }
            })
            .collect();
        LmParams {
            embedding: Array2::zeros((config.embed_dim, vocab_size)),
            layers,
            decoder_w: Array2::zeros((vocab_size, h)),
            decoder_b: Array1::zeros(vocab_size),
        }
    }

    /// Name, shape and contents of each tensor, in serialization order.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let mut out = vec![(
            "embedding".to_string(),
            self.embedding.shape().to_vec(),
            self.embedding.as_slice().expect("standard layout"),
        )];
        for (l, layer) in self.layers.iter().enumerate() {
            out.push((format!("lstm.{l}.w_ih"), layer.w_ih.shape().to_vec(), layer.w_ih.as_slice().expect("standard layout")));
            out.push((format!("lstm.{l}.w_hh"), layer.w_hh.shape().to_vec(), layer.w_hh.as_slice().expect("standard layout")));
            out.push((format!("lstm.{l}.bias"), layer.bias.shape().to_vec(), layer.bias.as_slice().expect("standard layout")));
        }
        out.push(("decoder.weight".into(), self.decoder_w.shape().to_vec(), self.decoder_w.as_slice().expect("standard layout")));
        out.push(("decoder.bias".into(), self.decoder_b.shape().to_vec(), self.decoder_b.as_slice().expect("standard layout")));
        out
    }

    /// Mutable views in the same order as [`LmParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.embedding.as_slice_mut().expect("standard layout")];
        for layer in &mut self.layers {
            out.push(layer.w_ih.as_slice_mut().expect("standard layout"));
            out.push(layer.w_hh.as_slice_mut().expect("standard layout"));
            out.push(layer.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.decoder_w.as_slice_mut().expect("standard layout"));
        out.push(self.decoder_b.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, _, data)| data.len()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|(_, _, data)| data.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &LmParams) {
        for (dst, (_, _, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += alpha * s;
            }
        }
    }

    pub fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.fill(0.0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, _, data)| data.iter().all(|v| v.is_finite()))
    }
}

/// Recurrent state: one hidden and one cell vector per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LmState {
    pub h: Vec<Array1<f64>>,
    pub c: Vec<Array1<f64>>,
}

impl LmState {
    pub fn zeros(config: &LmConfig) -> Self {
        LmState {
            h: vec![Array1::zeros(config.hidden_dim); config.num_layers],
            c: vec![Array1::zeros(config.hidden_dim); config.num_layers],
        }
    }
}

/// State of `batch` independent sequences: `(batch, hidden)` per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchState {
    pub h: Vec<Array2<f64>>,
    pub c: Vec<Array2<f64>>,
}

impl BatchState {
    pub fn zeros(config: &LmConfig, batch: usize) -> Self {
        BatchState {
            h: vec![Array2::zeros((batch, config.hidden_dim)); config.num_layers],
            c: vec![Array2::zeros((batch, config.hidden_dim)); config.num_layers],
        }
    }

    pub fn batch(&self) -> usize {
        self.h.first().map_or(0, |h| h.nrows())
    }

    /// State of sequence `b`.
    pub fn column(&self, b: usize) -> LmState {
        LmState {
            h: self.h.iter().map(|h| h.row(b).to_owned()).collect(),
            c: self.c.iter().map(|c| c.row(b).to_owned()).collect(),
        }
    }
}

impl From<&LmState> for BatchState {
    fn from(state: &LmState) -> Self {
        let one = |v: &Array1<f64>| v.clone().insert_axis(Axis(0));
        BatchState {
            h: state.h.iter().map(one).collect(),
            c: state.c.iter().map(one).collect(),
        }
    }
}

/// Whether a forward pass samples dropout masks.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
}

/// Word-level encoder/decoder LSTM language model.
#[derive(Debug, Clone, PartialEq)]
pub struct LmModel {
    pub(crate) config: LmConfig,
    pub(crate) vocab_size: usize,
    pub(crate) vocab_fingerprint: String,
    pub(crate) params: LmParams,
}

/// Activations of one layer over a chunk. Rows are time-major: row
/// `t·batch + b` holds step `t` of sequence `b`.
struct LayerTape {
    /// Layer input after dropout, `(T·B, in)`.
    input: Array2<f64>,
    mask: Option<Array2<f64>>,
    /// Activated gates `(T·B, 4H)`.
    gates: Array2<f64>,
    cells: Array2<f64>,
    tanh_cells: Array2<f64>,
    hidden: Array2<f64>,
    h0: Array2<f64>,
    c0: Array2<f64>,
}

pub(crate) struct Tape {
    ids: Vec<usize>,
    batch: usize,
    layers: Vec<LayerTape>,
    pub(crate) logits: Array2<f64>,
}

impl LmModel {
    /// Fresh model with weights drawn from U(-0.1, 0.1) and zero biases.
    pub fn new(config: LmConfig, vocab: &Vocabulary) -> Result<Self, LmError> {
        config.validate()?;
        let mut params = LmParams::zeros(&config, vocab.len());
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut fill = |a: &mut Array2<f64>| a.mapv_inplace(|_| rng.gen_range(-0.1..0.1));
        fill(&mut params.embedding);
        for layer in &mut params.layers {
            fill(&mut layer.w_ih);
            fill(&mut layer.w_hh);
        }
        fill(&mut params.decoder_w);
        Ok(LmModel {
            config,
            vocab_size: vocab.len(),
            vocab_fingerprint: vocab.fingerprint().to_string(),
            params,
        })
    }

    /// Assemble a model from explicit parameters, checking every shape.
    pub fn from_parts(
        config: LmConfig,
        vocab_size: usize,
        vocab_fingerprint: impl Into<String>,
        params: LmParams,
    ) -> Result<Self, LmError> {
        config.validate()?;
        let expected = LmParams::zeros(&config, vocab_size);
        let shapes = |p: &LmParams| p.tensors().into_iter().map(|(n, s, _)| (n, s)).collect::<Vec<_>>();
        if shapes(&expected) != shapes(&params) {
            return Err(LmError::Format("parameter shapes do not match the configuration".into()));
        }
        if !params.is_finite() {
            return Err(LmError::NumericalError("non-finite parameter".into()));
        }
        Ok(LmModel {
            config,
            vocab_size,
            vocab_fingerprint: vocab_fingerprint.into(),
            params,
        })
    }

    pub fn config(&self) -> &LmConfig {
        &self.config
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn vocab_fingerprint(&self) -> &str {
        &self.vocab_fingerprint
    }

    pub fn params(&self) -> &LmParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut LmParams {
        &mut self.params
    }

    pub fn initial_state(&self) -> LmState {
        LmState::zeros(&self.config)
    }

    fn check_ids(&self, ids: &[usize]) -> Result<(), LmError> {
        match ids.iter().find(|&&id| id >= self.vocab_size) {
            Some(&id) => Err(LmError::VocabMismatch(format!(
                "token id {id} out of range for vocabulary of size {}",
                self.vocab_size
            ))),
            None => Ok(()),
        }
    }

    fn check_state(&self, state: &BatchState, batch: usize) -> Result<(), LmError> {
        let ok = state.h.len() == self.config.num_layers
            && state.c.len() == self.config.num_layers
            && state.h.iter().chain(&state.c).all(|v| v.dim() == (batch, self.config.hidden_dim));
        if ok {
            Ok(())
        } else {
            Err(LmError::Config("state dimensions do not match the model".into()))
        }
    }

    /// Logits `(T, |V|)` for every input position, plus the state after the
    /// last position.
    pub fn forward(&self, ids: &[usize], state: &LmState, mode: Mode<'_>) -> Result<(Array2<f64>, LmState), LmError> {
        let (tape, next) = self.run(ids, 1, &state.into(), mode)?;
        Ok((tape.logits, next.column(0)))
    }

    /// Forward pass over `batch` sequences advanced in lockstep. `ids` is
    /// time-major (`ids[t·batch + b]`), and so are the rows of the returned
    /// logits.
    pub fn forward_batch(
        &self,
        ids: &[usize],
        batch: usize,
        state: &BatchState,
        mode: Mode<'_>,
    ) -> Result<(Array2<f64>, BatchState), LmError> {
        let (tape, next) = self.run(ids, batch, state, mode)?;
        Ok((tape.logits, next))
    }

    pub(crate) fn run(&self, ids: &[usize], batch: usize, state: &BatchState, mode: Mode<'_>) -> Result<(Tape, BatchState), LmError> {
        if batch == 0 || !ids.len().is_multiple_of(batch) {
            return Err(LmError::Config(format!("{} ids do not form a batch of {batch}", ids.len())));
        }
        self.check_ids(ids)?;
        self.check_state(state, batch)?;
        let mut rng = match mode {
            Mode::Eval => None,
            Mode::Train(rng) if self.config.dropout > 0.0 => Some(rng),
            Mode::Train(_) => None,
        };
        let steps = ids.len() / batch;
        let hidden = self.config.hidden_dim;
        let mut input = Array2::zeros((ids.len(), self.config.embed_dim));
        for (r, &id) in ids.iter().enumerate() {
            input.row_mut(r).assign(&self.params.embedding.column(id));
        }
        let mut layers = Vec::with_capacity(self.config.num_layers);
        let mut next = state.clone();
        for (l, layer) in self.params.layers.iter().enumerate() {
            let mask = rng.as_deref_mut().map(|r| dropout_mask(input.dim(), self.config.dropout, r));
            if let Some(m) = &mask {
                input *= m;
            }
            let mut gates = Array2::zeros((ids.len(), 4 * hidden));
            general_mat_mul(1.0, &input, &layer.w_ih.t(), 0.0, &mut gates);
            gates += &layer.bias;
            let mut cells = Array2::zeros((ids.len(), hidden));
            let mut tanh_cells = Array2::zeros((ids.len(), hidden));
            let mut hs = Array2::zeros((ids.len(), hidden));
            let mut h = state.h[l].clone();
            let mut c = state.c[l].clone();
            let w_hh = layer.w_hh.as_slice().expect("standard layout");
            for t in 0..steps {
                let rows = s![t * batch..(t + 1) * batch, ..];
                let mut z = gates.slice_mut(rows);
                if batch == 1 {
                    let z = z.as_slice_mut().expect("standard layout");
                    gemv_acc(w_hh, h.as_slice().expect("standard layout"), z);
                } else {
                    general_mat_mul(1.0, &h, &layer.w_hh.t(), 1.0, &mut z);
                }
                for b in 0..batch {
                    let r = t * batch + b;
                    let mut row = gates.row_mut(r);
                    let z = row.as_slice_mut().expect("standard layout");
                    let (ifg, o) = z.split_at_mut(3 * hidden);
                    let (i_f, g) = ifg.split_at_mut(2 * hidden);
                    i_f.iter_mut().for_each(|v| *v = sigmoid(*v));
                    g.iter_mut().for_each(|v| *v = v.tanh());
                    o.iter_mut().for_each(|v| *v = sigmoid(*v));
                    let (i, f) = i_f.split_at(hidden);
                    let mut h_b = h.row_mut(b);
                    let mut c_b = c.row_mut(b);
                    let mut c_row = cells.row_mut(r);
                    let mut tc_row = tanh_cells.row_mut(r);
                    let mut h_row = hs.row_mut(r);
                    for k in 0..hidden {
                        c_b[k] = f[k] * c_b[k] + i[k] * g[k];
                        let tc = c_b[k].tanh();
                        h_b[k] = o[k] * tc;
                        c_row[k] = c_b[k];
                        tc_row[k] = tc;
                        h_row[k] = h_b[k];
                    }
                }
            }
            next.h[l] = h;
            next.c[l] = c;
            let layer_out = hs.clone();
            layers.push(LayerTape {
                input,
                mask,
                gates,
                cells,
                tanh_cells,
                hidden: hs,
                h0: state.h[l].clone(),
                c0: state.c[l].clone(),
            });
            input = layer_out;
        }
        let mut logits = Array2::zeros((ids.len(), self.vocab_size));
        general_mat_mul(1.0, &input, &self.params.decoder_w.t(), 0.0, &mut logits);
        logits += &self.params.decoder_b;
        Ok((
            Tape {
                ids: ids.to_vec(),
                batch,
                layers,
                logits,
            },
            next,
        ))
    }

    /// Accumulate parameter gradients given `d loss / d logits` for a tape.
    /// Gradient does not flow into the incoming state (truncated BPTT).
    pub(crate) fn backward(&self, tape: &Tape, dlogits: &Array2<f64>, grads: &mut LmParams) {
        let rows = tape.ids.len();
        if rows == 0 {
            return;
        }
        let batch = tape.batch;
        let steps = rows / batch;
        let hidden = self.config.hidden_dim;
        let top = &tape.layers.last().expect("at least one layer").hidden;
        general_mat_mul(1.0, &dlogits.t(), top, 1.0, &mut grads.decoder_w);
        grads.decoder_b += &dlogits.sum_axis(Axis(0));
        let mut d_out = dlogits.dot(&self.params.decoder_w);

        for (l, layer) in self.params.layers.iter().enumerate().rev() {
            let lt = &tape.layers[l];
            let w_hh = layer.w_hh.as_slice().expect("standard layout");
            let mut dz = Array2::<f64>::zeros((rows, 4 * hidden));
            let mut dh_next = Array2::<f64>::zeros((batch, hidden));
            let mut dc_next = Array2::<f64>::zeros((batch, hidden));
            for t in (0..steps).rev() {
                for b in 0..batch {
                    let r = t * batch + b;
                    let gates = lt.gates.row(r);
                    let c_prev: ArrayView1<f64> = if t == 0 { lt.c0.row(b) } else { lt.cells.row(r - batch) };
                    let tc = lt.tanh_cells.row(r);
                    let d_row = d_out.row(r);
                    let dh_b = dh_next.row(b);
                    let mut dc_b = dc_next.row_mut(b);
                    let mut dz_row = dz.row_mut(r);
                    for k in 0..hidden {
                        let (i, f, g, o) = (gates[k], gates[hidden + k], gates[2 * hidden + k], gates[3 * hidden + k]);
                        let dh = d_row[k] + dh_b[k];
                        let dc = dh * o * (1.0 - tc[k] * tc[k]) + dc_b[k];
                        dz_row[k] = dc * g * i * (1.0 - i);
                        dz_row[hidden + k] = dc * c_prev[k] * f * (1.0 - f);
                        dz_row[2 * hidden + k] = dc * i * (1.0 - g * g);
                        dz_row[3 * hidden + k] = dh * tc[k] * o * (1.0 - o);
                        dc_b[k] = dc * f;
                    }
                }
                let dz_t = dz.slice(s![t * batch..(t + 1) * batch, ..]);
                if batch == 1 {
                    let dh = dh_next.as_slice_mut().expect("standard layout");
                    dh.fill(0.0);
                    gemv_t_acc(w_hh, dz_t.as_slice().expect("standard layout"), dh);
                } else {
                    general_mat_mul(1.0, &dz_t, &layer.w_hh, 0.0, &mut dh_next);
                }
            }
            let mut h_prev = Array2::zeros((rows, hidden));
            h_prev.slice_mut(s![..batch, ..]).assign(&lt.h0);
            h_prev.slice_mut(s![batch.., ..]).assign(&lt.hidden.slice(s![..rows - batch, ..]));
            let g = &mut grads.layers[l];
            general_mat_mul(1.0, &dz.t(), &h_prev, 1.0, &mut g.w_hh);
            general_mat_mul(1.0, &dz.t(), &lt.input, 1.0, &mut g.w_ih);
            g.bias += &dz.sum_axis(Axis(0));
            let mut d_in = dz.dot(&layer.w_ih);
            if let Some(mask) = &lt.mask {
                d_in *= mask;
            }
            d_out = d_in;
        }
        for (r, &id) in tape.ids.iter().enumerate() {
            let mut col = grads.embedding.column_mut(id);
            col += &d_out.row(r);
        }
    }

    /// Mean cross-entropy of `targets` given `inputs`, and its gradient with
    /// respect to every parameter.
    pub fn loss_and_gradients(
        &self,
        inputs: &[usize],
        targets: &[usize],
        state: &LmState,
        mode: Mode<'_>,
    ) -> Result<(f64, LmParams, LmState), LmError> {
        let mut grads = LmParams::zeros(&self.config, self.vocab_size);
        let (loss, next) = self.accumulate_gradients(inputs, targets, state, mode, &mut grads)?;
        Ok((loss, grads, next))
    }

    /// Like [`LmModel::loss_and_gradients`], adding into an existing buffer.
    pub fn accumulate_gradients(
        &self,
        inputs: &[usize],
        targets: &[usize],
        state: &LmState,
        mode: Mode<'_>,
        grads: &mut LmParams,
    ) -> Result<(f64, LmState), LmError> {
        let (loss, next) = self.accumulate_gradients_batch(inputs, targets, 1, &state.into(), mode, grads)?;
        Ok((loss, next.column(0)))
    }

    /// Batched form of [`LmModel::accumulate_gradients`]: the loss is the mean
    /// over all `T·batch` time-major positions.
    pub fn accumulate_gradients_batch(
        &self,
        inputs: &[usize],
        targets: &[usize],
        batch: usize,
        state: &BatchState,
        mode: Mode<'_>,
        grads: &mut LmParams,
    ) -> Result<(f64, BatchState), LmError> {
        if inputs.len() != targets.len() {
            return Err(LmError::Config("inputs and targets differ in length".into()));
        }
        self.check_ids(targets)?;
        let (tape, next) = self.run(inputs, batch, state, mode)?;
        if inputs.is_empty() {
            return Ok((0.0, next));
        }
        let (total, mut dlogits) = softmax_cross_entropy(&tape.logits, targets)?;
        let scale = 1.0 / inputs.len() as f64;
        dlogits *= scale;
        self.backward(&tape, &dlogits, grads);
        Ok((total * scale, next))
    }

    /// Per-token losses (nats) for one sentence, scored from a fresh state
    /// with `<eos>` as the start symbol and as the final target. The result
    /// has `sentence.len() + 1` entries.
    pub fn token_losses(&self, sentence: &[usize]) -> Result<Vec<f64>, LmError> {
        Ok(self.token_losses_many(&[sentence])?.pop().expect("one sentence"))
    }

    /// [`LmModel::token_losses`] for several sentences at once. Shorter
    /// sentences are padded at the end; since every sentence starts from a
    /// fresh state, padding never reaches the positions that are kept.
    pub fn token_losses_many(&self, sentences: &[&[usize]]) -> Result<Vec<Vec<f64>>, LmError> {
        if sentences.iter().any(|s| s.is_empty()) {
            return Err(LmError::EmptySentence);
        }
        let batch = sentences.len();
        if batch == 0 {
            return Ok(Vec::new());
        }
        let steps = sentences.iter().map(|s| s.len()).max().expect("nonempty") + 1;
        let mut ids = vec![EOS_ID; steps * batch];
        for (b, sentence) in sentences.iter().enumerate() {
            for (t, &id) in sentence.iter().enumerate() {
                ids[(t + 1) * batch + b] = id;
            }
        }
        let (logits, _) = self.forward_batch(&ids, batch, &BatchState::zeros(&self.config, batch), Mode::Eval)?;
        sentences
            .iter()
            .enumerate()
            .map(|(b, sentence)| {
                (0..=sentence.len())
                    .map(|t| {
                        let target = sentence.get(t).copied().unwrap_or(EOS_ID);
                        let row = logits.row(t * batch + b);
                        cross_entropy(row.as_slice().expect("standard layout"), target)
                    })
                    .collect()
            })
            .collect()
    }
}

fn dropout_mask(dim: (usize, usize), rate: f64, rng: &mut dyn RngCore) -> Array2<f64> {
    let keep = 1.0 / (1.0 - rate);
    Array2::from_shape_simple_fn(dim, || if rng.gen::<f64>() < rate { 0.0 } else { keep })
}

/// `-log softmax(logits)[target]`, via the max-shifted log-sum-exp.
pub fn cross_entropy(logits: &[f64], target: usize) -> Result<f64, LmError> {
    if target >= logits.len() {
        return Err(LmError::VocabMismatch(format!(
            "target {target} out of range for {} logits",
            logits.len()
        )));
    }
    let lse = log_sum_exp(logits)?;
    Ok((lse - logits[target]).max(0.0))
}

pub(crate) fn log_sum_exp(logits: &[f64]) -> Result<f64, LmError> {
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(LmError::NumericalError("non-finite logit".into()));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|v| (v - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Summed loss over rows and `softmax - onehot` per row.
pub(crate) fn softmax_cross_entropy(logits: &Array2<f64>, targets: &[usize]) -> Result<(f64, Array2<f64>), LmError> {
    let mut grad = logits.clone();
    let mut total = 0.0;
    for (mut row, &target) in grad.outer_iter_mut().zip(targets) {
        let slice = row.as_slice_mut().expect("standard layout");
        let lse = log_sum_exp(slice)?;
        total += (lse - slice[target]).max(0.0);
        slice.iter_mut().for_each(|v| *v = (*v - lse).exp());
        slice[target] -= 1.0;
    }
    Ok((total, grad))
}
