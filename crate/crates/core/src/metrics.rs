//! Corpus BLEU, perplexity and template leakage statistics.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::attribution::AttributionIndex;
use crate::corpus::{Keyed, SplitName};
use crate::partitioner::Split3;

pub const MAX_ORDER: usize = 4;
/// Replaces zero precisions in sentence-level BLEU.
pub const SENTENCE_EPSILON: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("candidate and reference lists differ in length ({candidates} vs {references})")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("invalid log probability {value} in sentence {sentence}")]
    InvalidLogProb { sentence: usize, value: f64 },
    #[error("sentence {0} has no tokens")]
    EmptySentence(usize),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BleuReport {
    pub bleu: f64,
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub candidate_len: usize,
    pub reference_len: usize,
}

/// Clipped matches and candidate n-gram totals per order.
fn ngram_stats<S: AsRef<str> + Eq + std::hash::Hash>(cand: &[S], reference: &[S]) -> [(usize, usize); MAX_ORDER] {
    let mut out = [(0, 0); MAX_ORDER];
    for (n, slot) in (1..=MAX_ORDER).zip(out.iter_mut()) {
        if cand.len() < n {
            continue;
        }
        let mut ref_counts: HashMap<&[S], usize> = HashMap::new();
        for g in reference.windows(n) {
            *ref_counts.entry(g).or_insert(0) += 1;
        }
        let mut matched = 0;
        for g in cand.windows(n) {
            if let Some(c) = ref_counts.get_mut(g) {
                if *c > 0 {
                    *c -= 1;
                    matched += 1;
                }
            }
        }
        *slot = (matched, cand.len() + 1 - n);
    }
    out
}

fn report(stats: [(usize, usize); MAX_ORDER], c: usize, r: usize, epsilon: Option<f64>) -> BleuReport {
    let mut precisions = [0.0; MAX_ORDER];
    for (p, (m, t)) in precisions.iter_mut().zip(stats) {
        *p = if t == 0 { 0.0 } else { m as f64 / t as f64 };
    }
    let brevity_penalty = if c == 0 {
        0.0
    } else if c >= r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    let logs: Option<Vec<f64>> = precisions
        .iter()
        .map(|&p| match (p > 0.0, epsilon) {
            (true, _) => Some(p.ln()),
            (false, Some(e)) => Some(e.ln()),
            (false, None) => None,
        })
        .collect();
    let bleu = match logs {
        Some(l) if c > 0 => 100.0 * brevity_penalty * (l.iter().sum::<f64>() / MAX_ORDER as f64).exp(),
        _ => 0.0,
    };
    BleuReport {
        bleu,
        precisions,
        brevity_penalty,
        candidate_len: c,
        reference_len: r,
    }
}

/// Unsmoothed corpus BLEU on a 0-100 scale; one reference per candidate.
pub fn corpus_bleu<S>(candidates: &[Vec<S>], references: &[Vec<S>]) -> Result<BleuReport, MetricsError>
where
    S: AsRef<str> + Eq + std::hash::Hash,
{
    if candidates.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut totals = [(0, 0); MAX_ORDER];
    let (mut c, mut r) = (0, 0);
    for (cand, reference) in candidates.iter().zip(references) {
        for (t, s) in totals.iter_mut().zip(ngram_stats(cand, reference)) {
            t.0 += s.0;
            t.1 += s.1;
        }
        c += cand.len();
        r += reference.len();
    }
    Ok(report(totals, c, r, None))
}

/// Sentence BLEU with zero precisions replaced by [`SENTENCE_EPSILON`].
pub fn sentence_bleu<S: AsRef<str> + Eq + std::hash::Hash>(candidate: &[S], reference: &[S]) -> BleuReport {
    report(
        ngram_stats(candidate, reference),
        candidate.len(),
        reference.len(),
        Some(SENTENCE_EPSILON),
    )
}

/// `exp(-mean log p)` over all tokens of all sentences (natural log).
pub fn perplexity(log_probs: &[Vec<f64>]) -> Result<f64, MetricsError> {
    if log_probs.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, sentence) in log_probs.iter().enumerate() {
        if sentence.is_empty() {
            return Err(MetricsError::EmptySentence(i));
        }
        for &lp in sentence {
            if !lp.is_finite() || lp > 0.0 {
                return Err(MetricsError::InvalidLogProb { sentence: i, value: lp });
            }
            sum += lp;
        }
        n += sentence.len();
    }
    Ok((-sum / n as f64).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageStats {
    /// Test instances sharing an attributed template with train.
    pub test_seen_fraction: f64,
    pub valid_seen_fraction: f64,
    /// Split instances attributed to more than one template.
    pub ambiguous_count: usize,
    pub unattributed_count: usize,
    /// Set when the test split is empty and its fraction is 0 by convention.
    pub test_empty: bool,
}

/// Template overlap between train and the other two splits.
pub fn leakage_report<T: Keyed>(split: &Split3<T>, index: &AttributionIndex) -> LeakageStats {
    let seen: std::collections::HashSet<&str> = split
        .train
        .iter()
        .flat_map(|i| index.get(i.key()).iter().map(String::as_str))
        .collect();
    let fraction = |records: &[T]| {
        if records.is_empty() {
            return 0.0;
        }
        let hits = records
            .iter()
            .filter(|i| index.get(i.key()).iter().any(|t| seen.contains(t.as_str())))
            .count();
        hits as f64 / records.len() as f64
    };
    let (mut ambiguous_count, mut unattributed_count) = (0, 0);
    for (_, i) in split.iter() {
        match index.get(i.key()).len() {
            0 => unattributed_count += 1,
            1 => {}
            _ => ambiguous_count += 1,
        }
    }
    LeakageStats {
        test_seen_fraction: fraction(split.get(SplitName::Test)),
        valid_seen_fraction: fraction(split.get(SplitName::Valid)),
        ambiguous_count,
        unattributed_count,
        test_empty: split.test.is_empty(),
    }
}

fn read_text(path: &Path) -> Result<String, MetricsError> {
    std::fs::read_to_string(path).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Whitespace tokens per line of a `.ql` file.
pub fn read_query_tokens(path: &Path) -> Result<Vec<Vec<String>>, MetricsError> {
    Ok(read_text(path)?
        .lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect())
}

pub fn write_lines<I, S>(path: &Path, lines: I) -> Result<(), MetricsError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = String::new();
    for l in lines {
        out.push_str(l.as_ref());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `pred.logp`: space-separated natural-log probabilities, one sentence per line.
pub fn read_logp(path: &Path) -> Result<Vec<Vec<f64>>, MetricsError> {
    read_text(path)?
        .lines()
        .enumerate()
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|v| {
                    v.parse::<f64>().map_err(|e| MetricsError::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        reason: format!("{v}: {e}"),
                    })
                })
                .collect()
        })
        .collect()
}

pub fn logp_line(log_probs: &[f64]) -> String {
    log_probs.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ")
}
