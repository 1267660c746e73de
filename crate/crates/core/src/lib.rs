//! Satirical news detection by language model differentiation.
//!
//! Two word-level LSTM language models are trained, one on true news and one
//! on satire. Every sentence of an article is scored by both models (mean
//! per-token cross-entropy, the "surprise score"), the two score sequences
//! are summarized into a 9-dimensional feature vector, and a kernel SVM
//! classifies the article. The [`stats`] module carries the Wilcoxon
//! signed-rank test and mutual-information feature analysis used to validate
//! the features.

pub mod corpus;
pub mod features;
pub mod lm;
pub mod pipeline;
pub mod surprise;
pub mod stats;
pub mod svm;
pub mod synth;
