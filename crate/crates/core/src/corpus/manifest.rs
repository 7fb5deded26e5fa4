//! Partition manifests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CorpusError, Instance, SplitName};
use crate::partitioner::Split3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Leaky,
    Sanitized,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Leaky => "leaky",
            Scheme::Sanitized => "sanitized",
        })
    }
}

/// Instance ids of each split file, in line order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitLines {
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

impl SplitLines {
    pub fn get(&self, split: SplitName) -> &[String] {
        match split {
            SplitName::Train => &self.train,
            SplitName::Valid => &self.valid,
            SplitName::Test => &self.test,
        }
    }
}

/// Reproducible record of one partitioning. Contains no timestamps, so the
/// same inputs and seed always serialize to the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionManifest {
    pub scheme: Scheme,
    pub rng_seed: u64,
    pub ratios: [f64; 3],
    pub counts: [usize; 3],
    pub assignments: BTreeMap<String, SplitName>,
    pub config_digest: String,
    pub lines: SplitLines,
    /// Known generating template per instance id.
    #[serde(default)]
    pub origins: BTreeMap<String, String>,
}

impl PartitionManifest {
    pub fn new(
        scheme: Scheme,
        rng_seed: u64,
        ratios: [f64; 3],
        split: &Split3<Instance>,
        config_digest: String,
    ) -> Self {
        let ids = |v: &[Instance]| v.iter().map(|i| i.id.clone()).collect::<Vec<_>>();
        let mut assignments = BTreeMap::new();
        let mut origins = BTreeMap::new();
        for name in SplitName::ALL {
            for inst in split.get(name) {
                assignments.insert(inst.id.clone(), name);
                if let Some(o) = &inst.origin_template_id {
                    origins.insert(inst.id.clone(), o.clone());
                }
            }
        }
        Self {
            scheme,
            rng_seed,
            ratios,
            counts: split.counts(),
            assignments,
            config_digest,
            lines: SplitLines {
                train: ids(&split.train),
                valid: ids(&split.valid),
                test: ids(&split.test),
            },
            origins,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        let m: Self = serde_json::from_str(&text).map_err(|e| CorpusError::Manifest {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        m.validate().map_err(|reason| CorpusError::Manifest {
            path: path.to_path_buf(),
            reason,
        })?;
        Ok(m)
    }

    /// Checks counts and line lists against the assignment map.
    pub fn validate(&self) -> Result<(), String> {
        let total: usize = self.counts.iter().sum();
        if total != self.assignments.len() {
            return Err(format!(
                "counts sum to {total} but {} ids are assigned",
                self.assignments.len()
            ));
        }
        for (i, name) in SplitName::ALL.into_iter().enumerate() {
            let lines = self.lines.get(name);
            if lines.len() != self.counts[i] {
                return Err(format!(
                    "{name} lists {} ids but counts say {}",
                    lines.len(),
                    self.counts[i]
                ));
            }
            if let Some(id) = lines.iter().find(|id| self.assignments.get(*id) != Some(&name)) {
                return Err(format!("id {id} listed under {name} but not assigned there"));
            }
        }
        Ok(())
    }
}

/// Hex SHA-256 of the concatenation of `parts`.
pub fn config_digest<I, B>(parts: I) -> String
where
    I: IntoIterator<Item = B>,
    B: AsRef<[u8]>,
{
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_ref());
    }
    hex::encode(h.finalize())
}
