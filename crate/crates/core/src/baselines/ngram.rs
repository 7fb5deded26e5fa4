use std::collections::HashMap;

use indexmap::IndexSet;

use crate::metrics::{self, MetricsError};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

const BOS_ID: u32 = 0;
const EOS_ID: u32 = 1;
const UNK_ID: u32 = 2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LmError {
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// How observed contexts combine their counts with shorter contexts.
///
/// Both schemes fall back to the longest observed suffix when a context is
/// unseen and bottom out in add-k over the vocabulary plus `<unk>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    /// `(c(h,w) + k) / (c(h) + kV)` at the longest observed context.
    AddK,
    /// `(c(h,w) + T(h) P_lower(w)) / (c(h) + T(h))` with `T(h)` the number of
    /// distinct continuations of `h`, interpolated down to the add-k unigram.
    #[default]
    WittenBell,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmConfig {
    pub order: usize,
    /// Add-k constant.
    pub k: f64,
    /// Training tokens seen fewer times than this are counted as `<unk>`.
    pub min_count: usize,
    pub smoothing: Smoothing,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            order: 5,
            k: 0.1,
            min_count: 1,
            smoothing: Smoothing::WittenBell,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct ContextCounts {
    total: u64,
    next: HashMap<u32, u64>,
}

/// Smoothed n-gram model over formal-query tokens.
#[derive(Debug, Clone)]
pub struct NGramLm {
    config: LmConfig,
    /// Index 0 is `<s>`, which is never predicted and not part of the vocabulary.
    symbols: IndexSet<String>,
    contexts: HashMap<Vec<u32>, ContextCounts>,
}

pub fn train_ngram_lm<S: AsRef<str>>(sentences: &[Vec<S>], config: LmConfig) -> Result<NGramLm, LmError> {
    if config.order == 0 {
        return Err(LmError::Config("order must be at least 1".into()));
    }
    if !(config.k > 0.0 && config.k.is_finite()) {
        return Err(LmError::Config(format!("k must be positive, got {}", config.k)));
    }
    if sentences.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for s in sentences {
        for t in s {
            *freq.entry(t.as_ref()).or_insert(0) += 1;
        }
    }
    let mut symbols: IndexSet<String> = [BOS, EOS, UNK].into_iter().map(str::to_string).collect();
    let mut kept: Vec<&str> = freq
        .iter()
        .filter(|(t, c)| **c >= config.min_count && ![BOS, EOS, UNK].contains(*t))
        .map(|(t, _)| *t)
        .collect();
    kept.sort_unstable();
    symbols.extend(kept.into_iter().map(str::to_string));

    let mut lm = NGramLm {
        config,
        symbols,
        contexts: HashMap::new(),
    };
    for s in sentences {
        let seq = lm.padded(s);
        for i in config.order - 1..seq.len() {
            let w = seq[i];
            for m in 0..config.order {
                let cc = lm.contexts.entry(seq[i - m..i].to_vec()).or_default();
                cc.total += 1;
                *cc.next.entry(w).or_insert(0) += 1;
            }
        }
    }
    Ok(lm)
}

impl NGramLm {
    pub fn config(&self) -> LmConfig {
        self.config
    }

    /// Vocabulary size: kept tokens plus `</s>` and `<unk>`.
    pub fn vocab_size(&self) -> usize {
        self.symbols.len() - 1
    }

    fn id(&self, token: &str) -> u32 {
        match self.symbols.get_index_of(token) {
            Some(i) if i as u32 != BOS_ID => i as u32,
            _ => UNK_ID,
        }
    }

    fn padded<S: AsRef<str>>(&self, sentence: &[S]) -> Vec<u32> {
        let mut seq = vec![BOS_ID; self.config.order - 1];
        seq.extend(sentence.iter().map(|t| self.id(t.as_ref())));
        seq.push(EOS_ID);
        seq
    }

    fn prob_ids(&self, context: &[u32], w: u32) -> f64 {
        let v = self.vocab_size() as f64;
        let k = self.config.k;
        let max = self.config.order.min(context.len() + 1);
        let count = |cc: &ContextCounts| cc.next.get(&w).copied().unwrap_or(0) as f64;
        match self.config.smoothing {
            Smoothing::AddK => {
                for m in (0..max).rev() {
                    if let Some(cc) = self.contexts.get(&context[context.len() - m..]) {
                        return (count(cc) + k) / (cc.total as f64 + k * v);
                    }
                }
                1.0 / v
            }
            Smoothing::WittenBell => {
                // a seen context implies all its suffixes were seen
                let Some(root) = self.contexts.get(&context[context.len()..]) else {
                    return 1.0 / v;
                };
                let mut p = (count(root) + k) / (root.total as f64 + k * v);
                for m in 1..max {
                    let Some(cc) = self.contexts.get(&context[context.len() - m..]) else {
                        break;
                    };
                    let types = cc.next.len() as f64;
                    p = (count(cc) + types * p) / (cc.total as f64 + types);
                }
                p
            }
        }
    }

    /// `P(w | context)`; only the last `order - 1` context tokens matter.
    /// Unknown tokens are scored as `<unk>`.
    pub fn prob<S: AsRef<str>>(&self, context: &[S], token: &str) -> f64 {
        let ids: Vec<u32> = context
            .iter()
            .map(|t| if t.as_ref() == BOS { BOS_ID } else { self.id(t.as_ref()) })
            .collect();
        self.prob_ids(&ids, self.id(token))
    }

    /// Full conditional distribution over the vocabulary, in symbol order
    /// (`</s>`, `<unk>`, then kept tokens sorted).
    pub fn distribution<S: AsRef<str>>(&self, context: &[S]) -> Vec<(String, f64)> {
        self.symbols
            .iter()
            .skip(1)
            .map(|s| (s.clone(), self.prob(context, s)))
            .collect()
    }

    /// Natural-log probability of every token of the sentence plus `</s>`.
    pub fn sentence_log_probs<S: AsRef<str>>(&self, sentence: &[S]) -> Vec<f64> {
        let seq = self.padded(sentence);
        let n = self.config.order - 1;
        (n..seq.len())
            .map(|i| self.prob_ids(&seq[i - n..i], seq[i]).ln())
            .collect()
    }
}

/// Per-token perplexity of a corpus under the model.
pub fn lm_perplexity<S: AsRef<str>>(lm: &NGramLm, corpus: &[Vec<S>]) -> Result<f64, MetricsError> {
    let lps: Vec<Vec<f64>> = corpus.iter().map(|s| lm.sentence_log_probs(s)).collect();
    metrics::perplexity(&lps)
}
