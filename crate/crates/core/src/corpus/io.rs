//! Line-aligned parallel files: `<name>.nlq` holds one tokenized question
//! per line and `<name>.ql` the matching query. LF line endings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{config_digest, CorpusError, Instance, PartitionManifest, QaPair, SplitName};
use crate::partitioner::Split3;
use crate::qlang::{parse_query, tokenize_nlq};

fn read_lines(path: &Path) -> Result<Vec<String>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CorpusError> {
    fs::write(path, contents).map_err(|e| CorpusError::io(path, e))
}

fn parse_lines(nlq_path: &Path, query_path: &Path) -> Result<Vec<QaPair>, CorpusError> {
    let nlqs = read_lines(nlq_path)?;
    let queries = read_lines(query_path)?;
    if nlqs.len() != queries.len() {
        return Err(CorpusError::LineCountMismatch {
            nlq_path: nlq_path.to_path_buf(),
            query_path: query_path.to_path_buf(),
            nlq_lines: nlqs.len(),
            query_lines: queries.len(),
        });
    }
    nlqs.iter()
        .zip(&queries)
        .enumerate()
        .map(|(i, (nlq, query))| {
            let tokens = tokenize_nlq(nlq);
            if tokens.is_empty() {
                return Err(CorpusError::Parse {
                    path: nlq_path.to_path_buf(),
                    line: i + 1,
                    reason: "empty question".into(),
                });
            }
            let ast = parse_query(query).map_err(|e| CorpusError::Parse {
                path: query_path.to_path_buf(),
                line: i + 1,
                reason: e.to_string(),
            })?;
            Ok(QaPair {
                nlq: tokens,
                query_text: query.clone(),
                query_ast: ast,
            })
        })
        .collect()
}

/// Reads a pair of parallel files. Line `i` becomes instance `i`.
///
/// With a manifest, ids and origins come from the manifest's line list for
/// the split named by the file stem (`test.nlq` -> `test`); otherwise ids
/// are `line-<i>`.
pub fn read_parallel(
    nlq_path: &Path,
    query_path: &Path,
    manifest_path: Option<&Path>,
) -> Result<Vec<Instance>, CorpusError> {
    let pairs = parse_lines(nlq_path, query_path)?;
    let Some(mpath) = manifest_path else {
        return Ok(pairs
            .into_iter()
            .enumerate()
            .map(|(i, p)| Instance::new(format!("line-{i}"), p))
            .collect());
    };
    let manifest = PartitionManifest::read(mpath)?;
    let stem = nlq_path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let split = SplitName::from_name(stem).ok_or_else(|| CorpusError::Manifest {
        path: mpath.to_path_buf(),
        reason: format!("file stem '{stem}' does not name a split"),
    })?;
    let ids = manifest.lines.get(split);
    if ids.len() != pairs.len() {
        return Err(CorpusError::Manifest {
            path: mpath.to_path_buf(),
            reason: format!(
                "{split} lists {} ids but {} has {} lines",
                ids.len(),
                nlq_path.display(),
                pairs.len()
            ),
        });
    }
    Ok(pairs
        .into_iter()
        .zip(ids)
        .map(|(p, id)| {
            let mut inst = Instance::new(id.clone(), p);
            inst.origin_template_id = manifest.origins.get(id).cloned();
            inst
        })
        .collect())
}

/// File contents `(nlq, ql)` for a list of instances.
pub fn corpus_bytes(instances: &[Instance]) -> Result<(String, String), CorpusError> {
    let mut nlq = String::new();
    let mut ql = String::new();
    for inst in instances {
        let q = &inst.pair.query_text;
        if q.contains(['\n', '\r']) || inst.pair.nlq.iter().any(|t| t.contains(['\n', '\r'])) {
            return Err(CorpusError::MultilineRecord { id: inst.id.clone() });
        }
        nlq.push_str(&inst.pair.nlq_text());
        nlq.push('\n');
        ql.push_str(q);
        ql.push('\n');
    }
    Ok((nlq, ql))
}

/// Digest of the parallel files that [`write_corpus`] would produce.
pub fn corpus_digest(instances: &[Instance]) -> Result<String, CorpusError> {
    let (nlq, ql) = corpus_bytes(instances)?;
    Ok(config_digest([nlq, ql]))
}

fn create_dir(dir: &Path) -> Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))
}

fn paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{name}.nlq")), dir.join(format!("{name}.ql")))
}

/// Writes `train`, `valid` and `test` parallel files plus `manifest.json`.
/// Empty splits still produce (empty) files.
pub fn write_split(dir: &Path, split: &Split3<Instance>, manifest: &PartitionManifest) -> Result<(), CorpusError> {
    create_dir(dir)?;
    for name in SplitName::ALL {
        let (nlq_path, ql_path) = paths(dir, name.as_str());
        let (nlq, ql) = corpus_bytes(split.get(name))?;
        write_file(&nlq_path, nlq.as_bytes())?;
        write_file(&ql_path, ql.as_bytes())?;
    }
    write_file(&dir.join("manifest.json"), manifest.to_json().as_bytes())
}

/// Writes `<name>.nlq`, `<name>.ql` and `<name>.ids`; the last holds
/// `id<TAB>origin` per line (origin empty when unknown).
pub fn write_corpus(dir: &Path, name: &str, instances: &[Instance]) -> Result<(), CorpusError> {
    create_dir(dir)?;
    let (nlq_path, ql_path) = paths(dir, name);
    let (nlq, ql) = corpus_bytes(instances)?;
    write_file(&nlq_path, nlq.as_bytes())?;
    write_file(&ql_path, ql.as_bytes())?;
    let mut ids = String::new();
    for inst in instances {
        ids.push_str(&inst.id);
        ids.push('\t');
        ids.push_str(inst.origin_template_id.as_deref().unwrap_or(""));
        ids.push('\n');
    }
    write_file(&dir.join(format!("{name}.ids")), ids.as_bytes())
}

/// Reads what [`write_corpus`] wrote. Without an `.ids` file, ids default to
/// `line-<i>`.
pub fn read_corpus(dir: &Path, name: &str) -> Result<Vec<Instance>, CorpusError> {
    let (nlq_path, ql_path) = paths(dir, name);
    let mut instances = read_parallel(&nlq_path, &ql_path, None)?;
    let ids_path = dir.join(format!("{name}.ids"));
    if !ids_path.exists() {
        return Ok(instances);
    }
    let rows = read_lines(&ids_path)?;
    if rows.len() != instances.len() {
        return Err(CorpusError::LineCountMismatch {
            nlq_path,
            query_path: ids_path,
            nlq_lines: instances.len(),
            query_lines: rows.len(),
        });
    }
    let mut seen = BTreeMap::new();
    for (i, (inst, row)) in instances.iter_mut().zip(&rows).enumerate() {
        let (id, origin) = row.split_once('\t').unwrap_or((row.as_str(), ""));
        if seen.insert(id.to_string(), i).is_some() {
            return Err(CorpusError::Parse {
                path: ids_path.clone(),
                line: i + 1,
                reason: format!("duplicate id {id}"),
            });
        }
        inst.id = id.to_string();
        inst.origin_template_id = (!origin.is_empty()).then(|| origin.to_string());
    }
    Ok(instances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Scheme;

    const Q1: &str = "ASK WHERE { <http://dbpedia.org/resource/Robot_Comics> \
                      <http://dbpedia.org/ontology/industry> <http://dbpedia.org/resource/Publishing> }";

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn default_ids_and_table_two_instance() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(
            dir.path(),
            "x.nlq",
            "Is robot comics in the publishing industry?\nwho ?\n",
        );
        let q = write(dir.path(), "x.ql", &format!("{Q1}\nASK WHERE {{ ?a <dbo:p> ?b }}\n"));
        let inst = read_parallel(&n, &q, None).unwrap();
        assert_eq!(inst.len(), 2);
        assert_eq!(inst[0].id, "line-0");
        assert_eq!(inst[1].id, "line-1");
        assert_eq!(
            inst[0].pair.query_ast.patterns[0].predicate.as_iri(),
            Some("http://dbpedia.org/ontology/industry")
        );
    }

    #[test]
    fn mismatched_lines() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "x.nlq", "a\nb\nc\n");
        let q = write(dir.path(), "x.ql", &format!("{Q1}\n{Q1}\n"));
        assert!(matches!(
            read_parallel(&n, &q, None),
            Err(CorpusError::LineCountMismatch {
                nlq_lines: 3,
                query_lines: 2,
                ..
            })
        ));
    }

    #[test]
    fn unparseable_query_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let n = write(dir.path(), "x.nlq", "a\nb\n");
        let q = write(dir.path(), "x.ql", &format!("{Q1}\nASK WHERE {{ }}\n"));
        match read_parallel(&n, &q, None) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    fn sample(n: usize) -> Vec<Instance> {
        (0..n)
            .map(|i| {
                Instance::new(
                    format!("t1-{i}"),
                    QaPair::parse(&format!("is thing {i} in it ?"), Q1).unwrap(),
                )
                .with_origin("t1")
            })
            .collect()
    }

    #[test]
    fn write_split_round_trips_with_empty_test() {
        let dir = tempfile::tempdir().unwrap();
        let mut all = sample(9);
        let valid = vec![all.pop().unwrap()];
        let split = Split3 {
            train: all,
            valid,
            test: vec![],
        };
        let m = PartitionManifest::new(Scheme::Leaky, 7, [0.8, 0.1, 0.1], &split, "d".into());
        assert_eq!(m.counts, [8, 1, 0]);
        write_split(dir.path(), &split, &m).unwrap();
        assert_eq!(fs::metadata(dir.path().join("test.nlq")).unwrap().len(), 0);
        assert_eq!(fs::metadata(dir.path().join("test.ql")).unwrap().len(), 0);
        let mpath = dir.path().join("manifest.json");
        for name in SplitName::ALL {
            let back = read_parallel(
                &dir.path().join(format!("{name}.nlq")),
                &dir.path().join(format!("{name}.ql")),
                Some(&mpath),
            )
            .unwrap();
            assert_eq!(back, split.get(name).to_vec());
        }
    }

    #[test]
    fn manifest_counts_follow_split() {
        let mut all = sample(10);
        let test = vec![all.pop().unwrap()];
        let valid = vec![all.pop().unwrap()];
        let split = Split3 {
            train: all,
            valid,
            test,
        };
        let m = PartitionManifest::new(Scheme::Leaky, 1, [0.8, 0.1, 0.1], &split, String::new());
        assert_eq!(m.counts, [8, 1, 1]);
        assert!(m.validate().is_ok());
    }

    #[test]
    fn corpus_round_trip_with_ids() {
        let dir = tempfile::tempdir().unwrap();
        let mut inst = sample(3);
        inst[1].origin_template_id = None;
        write_corpus(dir.path(), "corpus", &inst).unwrap();
        assert_eq!(read_corpus(dir.path(), "corpus").unwrap(), inst);
    }

    #[test]
    fn io_errors_carry_path() {
        let err = read_parallel(Path::new("/nonexistent/a.nlq"), Path::new("/nonexistent/a.ql"), None).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/a.nlq"), "{err}");
    }
}
