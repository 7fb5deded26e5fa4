//! Question tokenization, the formal-query subset, and the two matching
//! rules used to relate seeds, templates and instances.

mod pattern;
mod query;
mod tokenize;

pub use pattern::{match_nlq, NlqPattern, PatternElement, PatternError, SlotBindings, Span};
pub use query::{
    expand_prefixed, extract_predicates, local_name, parse_query, predicates_subsequence, ParseError,
    PlaceholderPredicate, PredicateMode, QueryAst, QueryForm, Term, TriplePattern, PREFIXES,
};
pub use tokenize::{is_placeholder_marker, join_tokens, marker_label, tokenize_nlq};

/// Resource namespace used for entity IRIs built from labels.
pub const RESOURCE_NS: &str = "http://dbpedia.org/resource/";

/// Entity label for an IRI: local name, underscores as spaces, lowercased.
pub fn entity_label(iri: &str) -> String {
    local_name(iri).replace('_', " ").to_lowercase()
}

/// Label tokens for an IRI, as they appear inside a question.
pub fn entity_label_tokens(iri: &str) -> Vec<String> {
    entity_label(iri).split_whitespace().map(str::to_string).collect()
}

/// IRI guessed from label text: words capitalized and joined by underscores
/// in the resource namespace (`robot comics` -> `.../Robot_Comics`).
pub fn iri_from_label(label: &str) -> String {
    let local: Vec<String> = label
        .split_whitespace()
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect(),
                None => String::new(),
            }
        })
        .collect();
    format!("{RESOURCE_NS}{}", local.join("_"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_conventions() {
        let iri = "http://dbpedia.org/resource/Robot_Comics";
        assert_eq!(entity_label(iri), "robot comics");
        assert_eq!(entity_label_tokens(iri), vec!["robot", "comics"]);
        assert_eq!(iri_from_label("robot comics"), iri);
        assert_eq!(
            iri_from_label("tiger  aircraft"),
            "http://dbpedia.org/resource/Tiger_Aircraft"
        );
    }
}
