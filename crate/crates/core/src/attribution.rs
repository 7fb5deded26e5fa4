//! Rule-based recovery of the template(s) behind each instance.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::corpus::{Instance, QaPair, Seed};
use crate::qlang::{extract_predicates, match_nlq, predicates_subsequence, NlqPattern, PredicateMode, QueryAst};
use crate::synthesis::Template;

#[derive(Debug, thiserror::Error)]
pub enum AttributionError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
}

fn template_predicates(ast: &QueryAst) -> Vec<String> {
    extract_predicates(ast, PredicateMode::SkipPlaceholders).expect("skip mode is total")
}

fn concrete_predicates(ast: &QueryAst) -> Option<Vec<String>> {
    extract_predicates(ast, PredicateMode::Concrete).ok()
}

/// Seed rule: the template's question pattern matches the seed question and
/// both queries use the same predicates in the same order.
pub fn template_matches_seed(t: &Template, s: &Seed) -> bool {
    match_nlq(&t.nlq_pattern, &s.pair.nlq).is_some()
        && concrete_predicates(&s.pair.query_ast).is_some_and(|p| p == template_predicates(&t.query_pattern))
}

/// Templates prepared for repeated matching; sorted by id.
#[derive(Debug, Clone)]
pub struct TemplateMatcher {
    entries: Vec<(String, NlqPattern, Vec<String>)>,
}

impl TemplateMatcher {
    pub fn new<'a, I: IntoIterator<Item = &'a Template>>(templates: I) -> Self {
        let mut entries: Vec<_> = templates
            .into_iter()
            .map(|t| {
                (
                    t.id.clone(),
                    t.nlq_pattern.clone(),
                    template_predicates(&t.query_pattern),
                )
            })
            .collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        entries.dedup_by(|a, b| a.0 == b.0);
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Instance rule: question matches and the template's predicates form
    /// an ordered subsequence of the pair's predicates.
    pub fn attribute(&self, pair: &QaPair) -> Vec<String> {
        let Some(preds) = concrete_predicates(&pair.query_ast) else {
            return Vec::new();
        };
        self.entries
            .iter()
            .filter(|(_, pattern, tpreds)| {
                predicates_subsequence(tpreds, &preds) && match_nlq(pattern, &pair.nlq).is_some()
            })
            .map(|(id, _, _)| id.clone())
            .collect()
    }
}

/// Ids of all templates that could have produced `i`, ordered by id.
pub fn attribute_instance(i: &Instance, templates: &[Template]) -> Vec<String> {
    TemplateMatcher::new(templates).attribute(&i.pair)
}

/// Attribution results for a set of instances.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttributionIndex {
    /// Instance id -> attributed template ids (sorted).
    pub attributions: BTreeMap<String, Vec<String>>,
    /// Template id -> number of instances attributed to it (non-zero only).
    pub template_counts: BTreeMap<String, usize>,
    /// Instances attributed to two or more templates.
    pub ambiguous: BTreeSet<String>,
}

impl AttributionIndex {
    pub fn from_attributions(attributions: BTreeMap<String, Vec<String>>) -> Self {
        let mut template_counts = BTreeMap::new();
        let mut ambiguous = BTreeSet::new();
        for (id, tids) in &attributions {
            for t in tids {
                *template_counts.entry(t.clone()).or_insert(0) += 1;
            }
            if tids.len() > 1 {
                ambiguous.insert(id.clone());
            }
        }
        Self {
            attributions,
            template_counts,
            ambiguous,
        }
    }

    /// Attributed templates of an instance; empty when unknown.
    pub fn get(&self, instance_id: &str) -> &[String] {
        self.attributions.get(instance_id).map_or(&[], Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.attributions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributions.is_empty()
    }

    pub fn unattributed(&self) -> impl Iterator<Item = &str> {
        self.attributions
            .iter()
            .filter(|(_, t)| t.is_empty())
            .map(|(id, _)| id.as_str())
    }

    /// Copies attribution lists onto the instances.
    pub fn apply(&self, instances: &mut [Instance]) {
        for inst in instances {
            inst.attributed_template_ids = self.get(&inst.id).to_vec();
        }
    }

    /// `attribution.tsv` body, one line per instance in id order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (id, tids) in &self.attributions {
            out.push_str(id);
            out.push('\t');
            out.push_str(&tids.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str, path: &Path) -> Result<Self, AttributionError> {
        let mut attributions = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| AttributionError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: reason.to_string(),
            };
            let (id, tids) = line.split_once('\t').ok_or_else(|| bad("missing tab"))?;
            let mut tids: Vec<String> = tids.split(',').filter(|t| !t.is_empty()).map(str::to_string).collect();
            tids.sort();
            if attributions.insert(id.to_string(), tids).is_some() {
                return Err(bad("duplicate instance id"));
            }
        }
        Ok(Self::from_attributions(attributions))
    }

    pub fn write_tsv(&self, path: &Path) -> Result<(), AttributionError> {
        std::fs::write(path, self.to_tsv()).map_err(|source| AttributionError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read_tsv(path: &Path) -> Result<Self, AttributionError> {
        let text = std::fs::read_to_string(path).map_err(|source| AttributionError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_tsv(&text, path)
    }
}

/// Attributes every instance; result does not depend on thread count.
pub fn build_index(instances: &[Instance], templates: &[Template]) -> AttributionIndex {
    let matcher = TemplateMatcher::new(templates);
    let rows: Vec<(String, Vec<String>)> = instances
        .par_iter()
        .map(|i| (i.id.clone(), matcher.attribute(&i.pair)))
        .collect();
    AttributionIndex::from_attributions(rows.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{seed_from_record, SeedRecord};
    use crate::kgstore::Graph;
    use crate::synthesis::{extract_template, generate_instances};

    const IND: &str = "http://dbpedia.org/ontology/industry";

    fn r(name: &str) -> String {
        format!("http://dbpedia.org/resource/{name}")
    }

    fn seed(id: &str, nlq: &str, pred: &str, s: &str, o: &str, forms: &str) -> Seed {
        seed_from_record(&SeedRecord {
            id: id.into(),
            nlq: nlq.into(),
            query: format!("ASK WHERE {{ <{}> <{pred}> <{}> }}", r(s), r(o)),
            surface_forms: serde_json::from_str(forms).unwrap(),
        })
        .unwrap()
    }

    fn table_two() -> (Seed, Template) {
        let s = seed(
            "s1",
            "Is Peter Piper Pizza in the pizza industry?",
            IND,
            "Peter_Piper_Pizza",
            "Pizza",
            r#"{"B":"Peter Piper Pizza","A":"pizza"}"#,
        );
        let t = extract_template(&s).unwrap();
        (s, t)
    }

    fn inst(id: &str, nlq: &str, q: &str) -> Instance {
        Instance::new(id, QaPair::parse(nlq, q).unwrap())
    }

    #[test]
    fn seed_rule() {
        let (s, t) = table_two();
        assert!(template_matches_seed(&t, &s));
        let founder = seed(
            "s2",
            "Is Peter Piper Pizza in the pizza industry?",
            "http://dbpedia.org/ontology/founder",
            "Peter_Piper_Pizza",
            "Pizza",
            "{}",
        );
        assert!(!template_matches_seed(&t, &founder));
        let worded = seed(
            "s3",
            "Is Peter Piper Pizza in the pizza business?",
            IND,
            "Peter_Piper_Pizza",
            "Pizza",
            "{}",
        );
        assert!(!template_matches_seed(&t, &worded));
    }

    #[test]
    fn table_two_instance_two() {
        let (_, t) = table_two();
        let i = inst(
            "i2",
            "is tiger aircraft in the aerospace industry ?",
            &format!("ASK WHERE {{ <{}> <{IND}> <{}> }}", r("Tiger_Aircraft"), r("Aerospace")),
        );
        assert_eq!(attribute_instance(&i, std::slice::from_ref(&t)), vec![t.id.clone()]);
        assert!(attribute_instance(&i, &[]).is_empty());
    }

    #[test]
    fn index_counts_and_ambiguity() {
        let (_, t) = table_two();
        let q = format!("ASK WHERE {{ <{}> <{IND}> <{}> }}", r("Tiger_Aircraft"), r("Aerospace"));
        let i = inst("i", "is tiger aircraft in the aerospace industry ?", &q);
        let idx = build_index(std::slice::from_ref(&i), std::slice::from_ref(&t));
        assert_eq!(idx.template_counts, BTreeMap::from([(t.id.clone(), 1)]));
        assert!(idx.ambiguous.is_empty());

        let mut loose = t.clone();
        loose.id = "tpl-loose".into();
        loose.nlq_pattern = NlqPattern::parse("is <B> in the <A> ?").unwrap();
        loose.placeholder_labels = vec!["A".into(), "B".into()];
        let idx = build_index(std::slice::from_ref(&i), &[t.clone(), loose]);
        assert!(idx.ambiguous.contains("i"));
        assert_eq!(idx.get("i").len(), 2);
    }

    #[test]
    fn recovers_origins_and_counts_per_template() {
        // five templates over distinct predicates, twenty bindings each
        let preds = ["industry", "founder", "genre", "country", "author"];
        let mut g = Graph::new();
        let mut templates = Vec::new();
        for (k, p) in preds.iter().enumerate() {
            let iri = format!("http://dbpedia.org/ontology/{p}");
            for j in 0..20 {
                g.insert(&r(&format!("Subj_{k}_{j}")), &iri, &r(&format!("Obj_{j}")));
            }
            let s = seed(
                &format!("s{k}"),
                &format!("does Subj {k} 0 have {p} Obj 0 ?"),
                &iri,
                &format!("Subj_{k}_0"),
                "Obj_0",
                r#"{"A":"Subj 0 0","B":"Obj 0"}"#.replace("Subj 0 0", &format!("Subj {k} 0")).as_str(),
            );
            templates.push(extract_template(&s).unwrap());
        }
        let instances: Vec<Instance> = templates
            .iter()
            .flat_map(|t| generate_instances(t, &g, 100, 3).unwrap())
            .collect();
        let idx = build_index(&instances, &templates);
        // brute force over all template x instance pairs
        for i in &instances {
            let expected: Vec<String> = templates
                .iter()
                .filter(|t| !attribute_instance(i, std::slice::from_ref(*t)).is_empty())
                .map(|t| t.id.clone())
                .collect();
            assert_eq!(idx.get(&i.id), expected.as_slice());
            assert!(expected.contains(i.origin_template_id.as_ref().unwrap()));
        }
        for t in &templates {
            let brute = instances.iter().filter(|i| idx.get(&i.id).contains(&t.id)).count();
            assert_eq!(idx.template_counts[&t.id], brute);
            assert_eq!(brute, 20);
        }
    }

    #[test]
    fn tsv_round_trip() {
        let idx = AttributionIndex::from_attributions(BTreeMap::from([
            ("a".to_string(), vec!["t1".to_string(), "t2".to_string()]),
            ("b".to_string(), vec![]),
        ]));
        assert_eq!(idx.to_tsv(), "a\tt1,t2\nb\t\n");
        let back = AttributionIndex::from_tsv(&idx.to_tsv(), Path::new("x")).unwrap();
        assert_eq!(back, idx);
        assert_eq!(back.unattributed().collect::<Vec<_>>(), vec!["b"]);
    }
}
