//! Synthetic two-domain corpus: order-2 Markov sources over a shared
//! vocabulary whose high-probability continuations are disjoint.
//!
//! Each context `(a, b)` of the previous two tokens has a small favored set
//! of next tokens carrying `favored_mass` of the probability; the remainder is
//! spread uniformly over the whole vocabulary. Both domains draw their
//! favored sets from the same per-context window, offset so that the two sets
//! never overlap. Unigram statistics are therefore similar across domains and
//! only the collocations differ.

use crate::corpus::{Label, RawDocument};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub docs_per_domain: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub vocab_size: usize,
    pub favored_per_context: usize,
    pub favored_mass: f64,
    /// Share of each domain's documents in the training split; the rest is
    /// divided evenly between validation and test.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            docs_per_domain: 2000,
            min_sentences: 5,
            max_sentences: 15,
            min_tokens: 5,
            max_tokens: 20,
            vocab_size: 500,
            favored_per_context: 4,
            favored_mass: 0.75,
            train_fraction: 0.5,
            seed: 7,
        }
    }
}

/// One domain's generating chain.
#[derive(Debug, Clone)]
pub struct MarkovSource {
    vocab_size: usize,
    favored: usize,
    favored_mass: f64,
    offset: usize,
    structure_seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl MarkovSource {
    /// `domain` selects which disjoint slice of each context's window is
    /// favored; sources sharing `structure_seed` share the windows.
    pub fn new(config: &SynthConfig, domain: usize) -> Self {
        assert!(2 * config.favored_per_context <= config.vocab_size);
        MarkovSource {
            vocab_size: config.vocab_size,
            favored: config.favored_per_context,
            favored_mass: config.favored_mass,
            offset: domain * config.favored_per_context,
            structure_seed: config.seed,
        }
    }

    pub fn word(id: usize) -> String {
        format!("w{id:03}")
    }

    /// Start of the favored window for context `(prev2, prev1)`. Sentence
    /// starts use `vocab_size` as the padding symbol.
    fn window(&self, prev2: usize, prev1: usize) -> usize {
        let key = (prev1 as u64) << 1 | (prev2 % 2) as u64;
        (splitmix64(key ^ splitmix64(self.structure_seed)) % self.vocab_size as u64) as usize
    }

    pub fn favored_set(&self, prev2: usize, prev1: usize) -> Vec<usize> {
        let base = self.window(prev2, prev1) + self.offset;
        (0..self.favored).map(|k| (base + k) % self.vocab_size).collect()
    }

    pub fn probability(&self, prev2: usize, prev1: usize, next: usize) -> f64 {
        let uniform = (1.0 - self.favored_mass) / self.vocab_size as f64;
        if self.favored_set(prev2, prev1).contains(&next) {
            uniform + self.favored_mass / self.favored as f64
        } else {
            uniform
        }
    }

    /// Entropy (nats) of the next-token distribution; identical for every
    /// context.
    pub fn token_entropy(&self) -> f64 {
        let uniform = (1.0 - self.favored_mass) / self.vocab_size as f64;
        let hot = uniform + self.favored_mass / self.favored as f64;
        let mut h = -(self.favored as f64) * hot * hot.ln();
        if uniform > 0.0 {
            h -= (self.vocab_size - self.favored) as f64 * uniform * uniform.ln();
        }
        h
    }

    pub fn sample_sentence(&self, len: usize, rng: &mut impl Rng) -> Vec<usize> {
        let pad = self.vocab_size;
        let (mut prev2, mut prev1) = (pad, pad);
        (0..len)
            .map(|_| {
                let next = if rng.gen::<f64>() < self.favored_mass {
                    self.favored_set(prev2, prev1)[rng.gen_range(0..self.favored)]
                } else {
                    rng.gen_range(0..self.vocab_size)
                };
                prev2 = prev1;
                prev1 = next;
                next
            })
            .collect()
    }
}

impl SynthConfig {
    /// Entropy per predicted symbol (tokens plus the end-of-sentence
    /// decision) of sentences drawn with uniform length. A language model's
    /// expected cross-entropy on this stream cannot fall below it.
    pub fn entropy_rate(&self, source: &MarkovSource) -> f64 {
        let lengths = (self.max_tokens - self.min_tokens + 1) as f64;
        let mean_len = (self.min_tokens + self.max_tokens) as f64 / 2.0;
        (lengths.ln() + mean_len * source.token_entropy()) / (mean_len + 1.0)
    }
}

/// Benchmark corpus split three ways; labels are interleaved by a seeded
/// shuffle within each split.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub train: Vec<RawDocument>,
    pub validation: Vec<RawDocument>,
    pub test: Vec<RawDocument>,
}

pub fn generate(config: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut corpus = SynthCorpus {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    let n_train = (config.train_fraction * config.docs_per_domain as f64).round() as usize;
    let n_val = (config.docs_per_domain - n_train) / 2;
    for (domain, label) in [Label::True, Label::Satire].into_iter().enumerate() {
        let source = MarkovSource::new(config, domain);
        for i in 0..config.docs_per_domain {
            let n_sentences = rng.gen_range(config.min_sentences..=config.max_sentences);
            let sentences = (0..n_sentences)
                .map(|_| {
                    let len = rng.gen_range(config.min_tokens..=config.max_tokens);
                    let words: Vec<String> =
                        source.sample_sentence(len, &mut rng).into_iter().map(MarkovSource::word).collect();
                    words.join(" ")
                })
                .collect();
            let doc = RawDocument {
                id: format!("{label}-{i:05}"),
                label: Some(label),
                text: None,
                sentences: Some(sentences),
            };
            let split = if i < n_train {
                &mut corpus.train
            } else if i < n_train + n_val {
                &mut corpus.validation
            } else {
                &mut corpus.test
            };
            split.push(doc);
        }
    }
    corpus.train.shuffle(&mut rng);
    corpus.validation.shuffle(&mut rng);
    corpus.test.shuffle(&mut rng);
    corpus
}
