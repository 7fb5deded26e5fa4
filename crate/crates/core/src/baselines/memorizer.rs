use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::attribution::AttributionIndex;
use crate::corpus::Instance;
use crate::qlang::{iri_from_label, match_nlq, Term};
use crate::synthesis::Template;

/// How a prediction was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictionSource {
    /// Question seen verbatim in training; carries the train instance id.
    Exact(String),
    /// Filled from a seen template.
    Template(String),
    /// Query of the most similar training question.
    Nearest(String),
    /// Empty model.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub query: String,
    pub source: PredictionSource,
}

impl Prediction {
    pub fn tokens(&self) -> Vec<String> {
        self.query.split_whitespace().map(str::to_string).collect()
    }
}

#[derive(Debug, Clone)]
struct Stored {
    id: String,
    tokens: Vec<String>,
    query: String,
}

/// Templates seen in training, a label-to-IRI index and all training pairs.
#[derive(Debug, Clone, Default)]
pub struct MemorizerModel {
    templates: Vec<Template>,
    label_index: BTreeMap<String, String>,
    exact: HashMap<String, usize>,
    stored: Vec<Stored>,
}

fn question_key<S: AsRef<str>>(nlq: &[S]) -> String {
    nlq.iter()
        .map(|t| t.as_ref().to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

fn sorted_unique<S: AsRef<str>>(nlq: &[S]) -> Vec<String> {
    let set: BTreeSet<String> = nlq.iter().map(|t| t.as_ref().to_lowercase()).collect();
    set.into_iter().collect()
}

fn jaccard(a: &[String], b: &[String]) -> f64 {
    let (mut i, mut j, mut both) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                both += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - both;
    if union == 0 {
        0.0
    } else {
        both as f64 / union as f64
    }
}

/// Slot text -> IRI pairs of one instance under one template, found by
/// aligning the template's query with the instance's query term by term.
fn harvest(t: &Template, inst: &Instance) -> Option<Vec<(String, String)>> {
    let bindings = match_nlq(&t.nlq_pattern, &inst.pair.nlq)?;
    let ours = &t.query_pattern.patterns;
    let theirs = &inst.pair.query_ast.patterns;
    if ours.len() != theirs.len() {
        return None;
    }
    let mut out = Vec::new();
    for (a, b) in ours.iter().zip(theirs) {
        for (ta, tb) in a.terms().into_iter().zip(b.terms()) {
            if let (Term::Placeholder(label), Term::Iri(iri)) = (ta, tb) {
                out.push((bindings.text(label, &inst.pair.nlq)?.to_lowercase(), iri.clone()));
            }
        }
    }
    Some(out)
}

/// Stores templates attributed to at least one training instance and
/// learns which IRI each slot text stood for (majority vote, ties to the
/// smaller IRI).
pub fn train_memorizer(train: &[Instance], templates: &[Template], index: &AttributionIndex) -> MemorizerModel {
    let by_id: BTreeMap<&str, &Template> = templates.iter().map(|t| (t.id.as_str(), t)).collect();
    let seen: BTreeSet<&str> = train
        .iter()
        .flat_map(|i| index.get(&i.id).iter().map(String::as_str))
        .filter(|id| by_id.contains_key(id))
        .collect();

    let mut votes: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for inst in train {
        let candidates: Vec<&Template> = match inst.origin_template_id.as_deref().and_then(|o| by_id.get(o)) {
            Some(t) => vec![*t],
            None => index
                .get(&inst.id)
                .iter()
                .filter_map(|id| by_id.get(id.as_str()).copied())
                .collect(),
        };
        if let Some(pairs) = candidates.iter().find_map(|t| harvest(t, inst)) {
            for (text, iri) in pairs {
                *votes.entry(text).or_default().entry(iri).or_insert(0) += 1;
            }
        }
    }
    let label_index = votes
        .into_iter()
        .map(|(text, iris)| {
            let best = iris
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
                .expect("at least one vote")
                .0;
            (text, best)
        })
        .collect();

    let mut sorted: Vec<&Instance> = train.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let stored: Vec<Stored> = sorted
        .iter()
        .map(|i| Stored {
            id: i.id.clone(),
            tokens: sorted_unique(&i.pair.nlq),
            query: i.pair.query_text.clone(),
        })
        .collect();
    let mut exact = HashMap::new();
    for (k, i) in sorted.iter().enumerate() {
        exact.entry(question_key(&i.pair.nlq)).or_insert(k);
    }
    MemorizerModel {
        templates: seen.iter().map(|id| by_id[id].clone()).collect(),
        label_index,
        exact,
        stored,
    }
}

impl MemorizerModel {
    pub fn seen_template_ids(&self) -> Vec<&str> {
        self.templates.iter().map(|t| t.id.as_str()).collect()
    }

    pub fn label_index(&self) -> &BTreeMap<String, String> {
        &self.label_index
    }

    pub fn is_empty(&self) -> bool {
        self.stored.is_empty() && self.templates.is_empty()
    }

    /// Predicts a query for a tokenized question.
    ///
    /// Order: verbatim training question, then the matching seen template
    /// with the fewest slot tokens (ties by id), then the query of the
    /// training question with the highest token Jaccard (ties by id).
    pub fn predict<S: AsRef<str>>(&self, nlq: &[S]) -> Prediction {
        if let Some(&k) = self.exact.get(&question_key(nlq)) {
            return Prediction {
                query: self.stored[k].query.clone(),
                source: PredictionSource::Exact(self.stored[k].id.clone()),
            };
        }
        let best = self
            .templates
            .iter()
            .filter_map(|t| match_nlq(&t.nlq_pattern, nlq).map(|b| (b.slot_tokens(), t, b)))
            .min_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
        if let Some((_, t, bindings)) = best {
            let iris: BTreeMap<String, String> = t
                .placeholder_labels
                .iter()
                .map(|l| {
                    let text = bindings.text(l, nlq).expect("label bound").to_lowercase();
                    let iri = self
                        .label_index
                        .get(&text)
                        .cloned()
                        .unwrap_or_else(|| iri_from_label(&text));
                    (l.clone(), iri)
                })
                .collect();
            let ast = t.instantiate_query(&iris).expect("every label bound");
            return Prediction {
                query: ast.serialize(),
                source: PredictionSource::Template(t.id.clone()),
            };
        }
        let tokens = sorted_unique(nlq);
        let mut best: Option<(f64, &Stored)> = None;
        for s in &self.stored {
            let score = jaccard(&tokens, &s.tokens);
            if best.is_none_or(|(b, _)| score > b) {
                best = Some((score, s));
            }
        }
        match best {
            Some((_, s)) => Prediction {
                query: s.query.clone(),
                source: PredictionSource::Nearest(s.id.clone()),
            },
            None => Prediction {
                query: String::new(),
                source: PredictionSource::Empty,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::build_index;
    use crate::corpus::{seed_from_record, QaPair, SeedRecord};
    use crate::qlang::NlqPattern;
    use crate::synthesis::extract_template;

    const IND: &str = "http://dbpedia.org/ontology/industry";

    fn r(name: &str) -> String {
        format!("http://dbpedia.org/resource/{name}")
    }

    fn ask(s: &str, o: &str) -> String {
        format!("ASK WHERE {{ <{}> <{IND}> <{}> }}", r(s), r(o))
    }

    fn table_two_template() -> Template {
        extract_template(
            &seed_from_record(&SeedRecord {
                id: "s1".into(),
                nlq: "Is Peter Piper Pizza in the pizza industry?".into(),
                query: ask("Peter_Piper_Pizza", "Pizza"),
                surface_forms: serde_json::from_str(r#"{"B":"Peter Piper Pizza","A":"pizza"}"#).unwrap(),
            })
            .unwrap(),
        )
        .unwrap()
    }

    fn inst(id: &str, nlq: &str, q: &str) -> Instance {
        Instance::new(id, QaPair::parse(nlq, q).unwrap())
    }

    #[test]
    fn table_two_memorization() {
        let t = table_two_template();
        let i1 = inst(
            "i1",
            "is robot comics in the publishing industry ?",
            &ask("Robot_Comics", "Publishing"),
        );
        let idx = build_index(std::slice::from_ref(&i1), std::slice::from_ref(&t));
        let m = train_memorizer(std::slice::from_ref(&i1), std::slice::from_ref(&t), &idx);
        assert_eq!(m.seen_template_ids(), vec![t.id.as_str()]);
        assert_eq!(
            m.label_index(),
            &BTreeMap::from([
                ("publishing".to_string(), r("Publishing")),
                ("robot comics".to_string(), r("Robot_Comics")),
            ])
        );
        let tokens = crate::qlang::tokenize_nlq("is tiger aircraft in the aerospace industry ?");
        let p = m.predict(&tokens);
        assert_eq!(p.source, PredictionSource::Template(t.id.clone()));
        let expected = QaPair::parse("x", &ask("Tiger_Aircraft", "Aerospace")).unwrap();
        assert_eq!(crate::qlang::parse_query(&p.query).unwrap(), expected.query_ast);
        let p = m.predict(&i1.pair.nlq);
        assert_eq!(p.query, i1.pair.query_text);
        assert_eq!(p.source, PredictionSource::Exact("i1".into()));
    }

    #[test]
    fn empty_and_partial_models() {
        let m = train_memorizer(&[], &[], &AttributionIndex::default());
        assert!(m.is_empty());
        assert_eq!(m.predict(&["hi"]).source, PredictionSource::Empty);

        let t = table_two_template();
        let mut t2 = t.clone();
        t2.id = "tpl-x".into();
        t2.nlq_pattern = NlqPattern::parse("does <B> work in <A> ?").unwrap();
        let mut t3 = t.clone();
        t3.id = "tpl-y".into();
        t3.nlq_pattern = NlqPattern::parse("<B> makes <A> ?").unwrap();
        let train = vec![
            inst(
                "a",
                "is robot comics in the publishing industry ?",
                &ask("Robot_Comics", "Publishing"),
            ),
            inst("b", "does acme work in mining ?", &ask("Acme", "Mining")),
        ];
        let templates = vec![t, t2, t3];
        let idx = build_index(&train, &templates);
        let m = train_memorizer(&train, &templates, &idx);
        assert_eq!(m.seen_template_ids().len(), 2);
    }

    #[test]
    fn nearest_fallback_matches_brute_force() {
        let train = vec![
            inst("a", "what is the capital of france ?", &ask("A", "B")),
            inst("b", "who wrote the hobbit ?", &ask("C", "D")),
            inst("c", "who wrote the book ?", &ask("E", "F")),
        ];
        let m = train_memorizer(&train, &[], &AttributionIndex::default());
        let q = crate::qlang::tokenize_nlq("who wrote dune ?");
        let p = m.predict(&q);
        let brute = train
            .iter()
            .map(|i| {
                let a: BTreeSet<&str> = q.iter().map(String::as_str).collect();
                let b: BTreeSet<&str> = i.pair.nlq.iter().map(String::as_str).collect();
                (a.intersection(&b).count() as f64 / a.union(&b).count() as f64, &i.id)
            })
            .fold(None::<(f64, &String)>, |acc, x| match acc {
                Some(a) if a.0 >= x.0 => Some(a),
                _ => Some(x),
            })
            .unwrap();
        assert_eq!(p.source, PredictionSource::Nearest(brute.1.clone()));
        assert_eq!(brute.1, "b");
    }
}
