//! Parses a query, prints its canonical form and predicates, and shows a
//! rejected construct.
//!
//! ```text
//! cargo run --example parse_query
//! ```

use splithygiene::qlang::{extract_predicates, parse_query, predicates_subsequence, PredicateMode};

fn main() {
    let text =
        "SELECT DISTINCT ?uri WHERE { ?x dbo:author <http://dbpedia.org/resource/Lena_Voss> . ?x dbo:publisher ?uri }";
    let ast = parse_query(text).expect("supported subset");
    println!("canonical: {}", ast.serialize());
    let preds = extract_predicates(&ast, PredicateMode::Concrete).expect("no placeholder predicates");
    println!("predicates: {preds:?}");
    println!(
        "publisher alone is a subsequence: {}",
        predicates_subsequence(&preds[1..], &preds)
    );

    let template = parse_query("ASK WHERE { <Placeholder:B> dbo:industry <Placeholder:A> }").unwrap();
    println!("placeholders: {:?}", template.placeholder_labels());

    match parse_query("SELECT DISTINCT ?x WHERE { ?x dbo:author ?y FILTER(?y) }") {
        Ok(_) => unreachable!(),
        Err(e) => println!("rejected: {e}"),
    }
}
