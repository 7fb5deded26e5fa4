//! Desk-scale reference models: a template memorizer and an n-gram
//! language model over query tokens.

mod memorizer;
mod ngram;

pub use memorizer::{train_memorizer, MemorizerModel, Prediction, PredictionSource};
pub use ngram::{lm_perplexity, train_ngram_lm, LmConfig, LmError, NGramLm, Smoothing, BOS, EOS, UNK};
