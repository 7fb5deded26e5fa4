//! Corpus records, de-duplication and line-aligned file I/O.

mod io;
mod manifest;
mod seeds;

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::qlang::{self, ParseError, QueryAst, Span};

pub use io::{corpus_bytes, corpus_digest, read_corpus, read_parallel, write_corpus, write_split};
pub use manifest::{config_digest, PartitionManifest, Scheme, SplitLines};
pub use seeds::{read_seeds, seed_from_record, SeedRecord, SpanSpec, SurfaceFormSpec};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line count mismatch: {nlq_path} has {nlq_lines} lines, {query_path} has {query_lines}")]
    LineCountMismatch {
        nlq_path: PathBuf,
        query_path: PathBuf,
        nlq_lines: usize,
        query_lines: usize,
    },
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
    #[error("empty question")]
    EmptyNlq,
    #[error(transparent)]
    Query(#[from] ParseError),
    #[error("manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("seed {id}: {reason}")]
    Seed { id: String, reason: String },
    #[error("record {id} spans several lines and cannot be written to a line-aligned file")]
    MultilineRecord { id: String },
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            source,
        }
    }
}

/// A question paired with its formal query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaPair {
    pub nlq: Vec<String>,
    pub query_text: String,
    pub query_ast: QueryAst,
}

impl QaPair {
    /// Tokenizes `nlq` and parses `query_text`.
    pub fn parse(nlq: &str, query_text: &str) -> Result<Self, CorpusError> {
        let tokens = qlang::tokenize_nlq(nlq);
        if tokens.is_empty() {
            return Err(CorpusError::EmptyNlq);
        }
        let query_ast = qlang::parse_query(query_text)?;
        Ok(Self {
            nlq: tokens,
            query_text: query_text.to_string(),
            query_ast,
        })
    }

    /// Builds a pair whose query text is the canonical serialization of `ast`.
    pub fn from_ast(nlq: Vec<String>, ast: QueryAst) -> Result<Self, CorpusError> {
        if nlq.is_empty() {
            return Err(CorpusError::EmptyNlq);
        }
        Ok(Self {
            nlq,
            query_text: ast.serialize(),
            query_ast: ast,
        })
    }

    pub fn nlq_text(&self) -> String {
        qlang::join_tokens(&self.nlq)
    }

    /// Whitespace tokens of the query text.
    pub fn query_tokens(&self) -> Vec<String> {
        self.query_text.split_whitespace().map(str::to_string).collect()
    }

    /// Key under which two pairs count as duplicates.
    pub fn canonical_key(&self) -> String {
        let mut key = self.nlq.iter().map(|t| t.to_lowercase()).collect::<Vec<_>>().join(" ");
        key.push('\n');
        key.push_str(&normalize_whitespace(&self.query_text));
        key
    }
}

pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// A hand-curated pair with labelled entity mentions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    pub id: String,
    pub pair: QaPair,
    pub surface_forms: BTreeMap<String, Span>,
    /// Optional explicit IRI per label; otherwise located by local name.
    pub entity_iris: BTreeMap<String, String>,
}

impl Seed {
    pub fn new(
        id: impl Into<String>,
        pair: QaPair,
        surface_forms: BTreeMap<String, Span>,
        entity_iris: BTreeMap<String, String>,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        let bad = |reason: String| CorpusError::Seed { id: id.clone(), reason };
        let spans: Vec<(&String, &Span)> = surface_forms.iter().collect();
        for (i, (label, span)) in spans.iter().enumerate() {
            if span.is_empty() {
                return Err(bad(format!("surface form {label} is empty")));
            }
            if span.end > pair.nlq.len() {
                return Err(bad(format!("surface form {label} is out of bounds")));
            }
            if let Some((other, _)) = spans[i + 1..].iter().find(|(_, s)| s.overlaps(span)) {
                return Err(bad(format!("surface forms {label} and {other} overlap")));
            }
        }
        if let Some(l) = entity_iris.keys().find(|l| !surface_forms.contains_key(*l)) {
            return Err(bad(format!("IRI given for unknown label {l}")));
        }
        Ok(Self {
            id,
            pair,
            surface_forms,
            entity_iris,
        })
    }
}

/// A generated or observed corpus record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub pair: QaPair,
    pub origin_template_id: Option<String>,
    pub attributed_template_ids: Vec<String>,
}

impl Instance {
    pub fn new(id: impl Into<String>, pair: QaPair) -> Self {
        Self {
            id: id.into(),
            pair,
            origin_template_id: None,
            attributed_template_ids: Vec::new(),
        }
    }

    pub fn with_origin(mut self, template_id: impl Into<String>) -> Self {
        self.origin_template_id = Some(template_id.into());
        self
    }
}

/// Anything addressable by a stable string id.
pub trait Keyed {
    fn key(&self) -> &str;
}

impl Keyed for Instance {
    fn key(&self) -> &str {
        &self.id
    }
}

impl Keyed for String {
    fn key(&self) -> &str {
        self
    }
}

impl Keyed for Seed {
    fn key(&self) -> &str {
        &self.id
    }
}

/// Records carrying a question-query pair.
pub trait HasPair {
    fn pair(&self) -> &QaPair;
}

impl HasPair for QaPair {
    fn pair(&self) -> &QaPair {
        self
    }
}

impl HasPair for Instance {
    fn pair(&self) -> &QaPair {
        &self.pair
    }
}

impl HasPair for Seed {
    fn pair(&self) -> &QaPair {
        &self.pair
    }
}

/// Drops records whose canonical key was already seen; first occurrence wins.
pub fn dedup<T: HasPair>(records: Vec<T>) -> (Vec<T>, usize) {
    let before = records.len();
    let mut seen = HashSet::with_capacity(before);
    let kept: Vec<T> = records
        .into_iter()
        .filter(|r| seen.insert(r.pair().canonical_key()))
        .collect();
    let removed = before - kept.len();
    (kept, removed)
}

/// The three partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Valid,
    Test,
}

impl SplitName {
    pub const ALL: [SplitName; 3] = [SplitName::Train, SplitName::Valid, SplitName::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Valid => "valid",
            SplitName::Test => "test",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|n| n.as_str() == s)
    }
}

impl std::fmt::Display for SplitName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
