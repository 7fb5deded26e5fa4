//! Attributes generated instances back to templates and reports ambiguity.
//!
//! ```text
//! cargo run --example attribute
//! ```

use splithygiene::attribution::build_index;
use splithygiene::attribution::TemplateMatcher;
use splithygiene::corpus::{dedup, QaPair};
use splithygiene::synthesis::{extract_template, generate_corpus, Template};
use splithygiene::toy;

fn main() {
    let data = toy::load_bundled();
    let templates: Vec<Template> = data.seeds.iter().map(|s| extract_template(s).unwrap()).collect();
    let (instances, removed) = dedup(generate_corpus(&templates, &data.graph, 20, 0).unwrap());
    let index = build_index(&instances, &templates);
    let recovered = instances
        .iter()
        .filter(|i| {
            i.origin_template_id
                .as_ref()
                .is_some_and(|o| index.get(&i.id).contains(o))
        })
        .count();
    println!(
        "{} instances ({removed} duplicates), origin recovered for {recovered}, {} ambiguous, {} unattributed",
        instances.len(),
        index.ambiguous.len(),
        index.unattributed().count()
    );

    // a pair written by hand is attributed the same way
    let pair = QaPair::parse(
        "Is Tiger Aircraft in the aerospace industry?",
        "ASK WHERE { <http://dbpedia.org/resource/Tiger_Aircraft> <http://dbpedia.org/ontology/industry> <http://dbpedia.org/resource/Aerospace> }",
    )
    .unwrap();
    println!(
        "hand-written pair -> {:?}",
        TemplateMatcher::new(&templates).attribute(&pair)
    );
}
