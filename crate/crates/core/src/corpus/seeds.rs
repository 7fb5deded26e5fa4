//! `seeds.jsonl`: one seed per line.
//!
//! ```json
//! {"id": "s1", "nlq": "Is Peter Piper Pizza in the pizza industry?",
//!  "query": "ASK WHERE { ... }",
//!  "surface_forms": {"B": "Peter Piper Pizza", "A": {"span": [6, 7], "iri": "http://..."}}}
//! ```
//!
//! A surface form is either the mention text or an object with a `span`
//! (text or `[start, end)` token range) and an optional entity `iri`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, QaPair, Seed};
use crate::qlang::{tokenize_nlq, Span};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpanSpec {
    Text(String),
    Range([usize; 2]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SurfaceFormSpec {
    Text(String),
    Detailed {
        span: SpanSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        iri: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub id: String,
    pub nlq: String,
    pub query: String,
    #[serde(default)]
    pub surface_forms: BTreeMap<String, SurfaceFormSpec>,
}

fn find_span(nlq: &[String], mention: &[String], taken: &[Span]) -> Option<Span> {
    if mention.is_empty() || mention.len() > nlq.len() {
        return None;
    }
    (0..=nlq.len() - mention.len())
        .map(|start| Span::new(start, start + mention.len()))
        .find(|span| nlq[span.start..span.end] == *mention && !taken.iter().any(|t| t.overlaps(span)))
}

/// Resolves a JSON seed record into a validated [`Seed`].
///
/// Text mentions are located in the tokenized question, longest mention
/// first, taking the first occurrence that does not overlap a mention
/// already placed.
pub fn seed_from_record(rec: &SeedRecord) -> Result<Seed, CorpusError> {
    let pair = QaPair::parse(&rec.nlq, &rec.query).map_err(|e| CorpusError::Seed {
        id: rec.id.clone(),
        reason: e.to_string(),
    })?;
    let mut spans = BTreeMap::new();
    let mut iris = BTreeMap::new();
    let mut by_text: Vec<(&String, Vec<String>)> = Vec::new();
    for (label, sf) in &rec.surface_forms {
        let span_spec = match sf {
            SurfaceFormSpec::Text(t) => SpanSpec::Text(t.clone()),
            SurfaceFormSpec::Detailed { span, iri } => {
                if let Some(iri) = iri {
                    iris.insert(label.clone(), iri.clone());
                }
                span.clone()
            }
        };
        match span_spec {
            SpanSpec::Range([start, end]) => {
                spans.insert(label.clone(), Span::new(start, end));
            }
            SpanSpec::Text(text) => by_text.push((label, tokenize_nlq(&text))),
        }
    }
    by_text.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then_with(|| a.0.cmp(b.0)));
    let mut taken: Vec<Span> = spans.values().copied().collect();
    for (label, mention) in by_text {
        let span = find_span(&pair.nlq, &mention, &taken).ok_or_else(|| CorpusError::Seed {
            id: rec.id.clone(),
            reason: format!("surface form {label} ({}) not found in question", mention.join(" ")),
        })?;
        taken.push(span);
        spans.insert(label.clone(), span);
    }
    Seed::new(rec.id.clone(), pair, spans, iris)
}

/// Reads `seeds.jsonl`. Blank lines are ignored.
pub fn read_seeds(path: &Path) -> Result<Vec<Seed>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: SeedRecord = serde_json::from_str(line).map_err(|e| CorpusError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(seed_from_record(&rec)?);
    }
    Ok(out)
}
