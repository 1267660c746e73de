//! Independent oracles shared by the integration tests. Nothing here calls
//! back into the code path it checks.
#![allow(dead_code)]

pub mod qp;
pub mod stats;

use lmdiff::lm::{cross_entropy, LmConfig, LmModel, LmParams, LmState, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Model with every parameter drawn from U(-scale, scale).
pub fn random_model(config: LmConfig, vocab_size: usize, scale: f64, seed: u64) -> LmModel {
    let mut params = LmParams::zeros(&config, vocab_size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in params.tensors_mut() {
        t.iter_mut().for_each(|v| *v = rng.gen_range(-scale..scale));
    }
    LmModel::from_parts(config, vocab_size, "test", params).unwrap()
}

pub fn random_state(config: &LmConfig, seed: u64) -> LmState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = LmState::zeros(config);
    for v in state.h.iter_mut().chain(state.c.iter_mut()) {
        v.iter_mut().for_each(|x| *x = rng.gen_range(-0.5..0.5));
    }
    state
}

/// Mean loss computed from the forward pass alone. With `dropout_seed` the
/// forward runs in training mode with masks drawn from a freshly seeded RNG,
/// so every evaluation sees the same masks.
pub fn forward_loss(model: &LmModel, inputs: &[usize], targets: &[usize], state: &LmState, dropout_seed: Option<u64>) -> f64 {
    let logits = match dropout_seed {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            model.forward(inputs, state, Mode::Train(&mut rng)).unwrap().0
        }
        None => model.forward(inputs, state, Mode::Eval).unwrap().0,
    };
    let total: f64 = logits
        .outer_iter()
        .zip(targets)
        .map(|(row, &t)| cross_entropy(row.as_slice().unwrap(), t).unwrap())
        .sum();
    total / targets.len() as f64
}

pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst: String,
    pub checked: usize,
}

/// Compare analytic gradients against central differences for every
/// parameter. Relative error is `|a - n| / max(|a|, |n|, floor)`.
pub fn gradient_check(
    model: &LmModel,
    inputs: &[usize],
    targets: &[usize],
    state: &LmState,
    dropout_seed: Option<u64>,
    step: f64,
    floor: f64,
) -> GradCheck {
    let analytic = match dropout_seed {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            model.loss_and_gradients(inputs, targets, state, Mode::Train(&mut rng)).unwrap().1
        }
        None => model.loss_and_gradients(inputs, targets, state, Mode::Eval).unwrap().1,
    };
    let names: Vec<String> = analytic.tensors().into_iter().map(|(n, _, _)| n).collect();
    let analytic_values: Vec<Vec<f64>> = analytic.tensors().into_iter().map(|(_, _, d)| d.to_vec()).collect();
    let mut probe = model.clone();
    let mut result = GradCheck {
        max_rel_error: 0.0,
        worst: String::new(),
        checked: 0,
    };
    for (k, name) in names.iter().enumerate() {
        for i in 0..analytic_values[k].len() {
            let original = probe.params_mut().tensors_mut()[k][i];
            probe.params_mut().tensors_mut()[k][i] = original + step;
            let plus = forward_loss(&probe, inputs, targets, state, dropout_seed);
            probe.params_mut().tensors_mut()[k][i] = original - step;
            let minus = forward_loss(&probe, inputs, targets, state, dropout_seed);
            probe.params_mut().tensors_mut()[k][i] = original;
            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic_values[k][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            if rel > result.max_rel_error {
                result.max_rel_error = rel;
                result.worst = format!("{name}[{i}]: analytic {a:e}, numeric {numeric:e}");
            }
            result.checked += 1;
        }
    }
    result
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Scalar LSTM recurrence written from the textbook equations, reading the
/// model's parameters element by element. Returns logits per position.
pub fn reference_logits(model: &LmModel, ids: &[usize]) -> Vec<Vec<f64>> {
    let cfg = model.config();
    let p = model.params();
    let hd = cfg.hidden_dim;
    let mut h = vec![vec![0.0; hd]; cfg.num_layers];
    let mut c = vec![vec![0.0; hd]; cfg.num_layers];
    let mut out = Vec::new();
    for &id in ids {
        let mut x: Vec<f64> = (0..cfg.embed_dim).map(|d| p.embedding[[d, id]]).collect();
        for (l, layer) in p.layers.iter().enumerate() {
            let mut z = vec![0.0; 4 * hd];
            for (j, zj) in z.iter_mut().enumerate() {
                let mut acc = layer.bias[j];
                for (k, xk) in x.iter().enumerate() {
                    acc += layer.w_ih[[j, k]] * xk;
                }
                for k in 0..hd {
                    acc += layer.w_hh[[j, k]] * h[l][k];
                }
                *zj = acc;
            }
            for k in 0..hd {
                let i = sigmoid(z[k]);
                let f = sigmoid(z[hd + k]);
                let g = z[2 * hd + k].tanh();
                let o = sigmoid(z[3 * hd + k]);
                c[l][k] = f * c[l][k] + i * g;
                h[l][k] = o * c[l][k].tanh();
            }
            x = h[l].clone();
        }
        let logits = (0..model.vocab_size())
            .map(|v| p.decoder_b[v] + (0..hd).map(|k| p.decoder_w[[v, k]] * x[k]).sum::<f64>())
            .collect();
        out.push(logits);
    }
    out
}
