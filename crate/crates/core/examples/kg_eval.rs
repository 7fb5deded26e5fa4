//! Loads N-Triples into the in-memory store and evaluates basic graph
//! patterns against the bundled toy graph.
//!
//! ```text
//! cargo run --example kg_eval
//! ```

use splithygiene::kgstore::{eval, parse_ntriples};
use splithygiene::qlang::parse_query;
use splithygiene::toy;

fn main() {
    let summary = parse_ntriples(toy::KG_NT);
    let g = summary.graph;
    println!("{} triples, {} malformed lines", g.len(), summary.malformed_lines.len());

    let q = parse_query(
        "SELECT DISTINCT ?uri WHERE { ?uri <http://dbpedia.org/ontology/industry> <http://dbpedia.org/resource/Pizza> }",
    )
    .unwrap();
    for row in eval(&g, &q).unwrap().rows() {
        println!("  {}", row.get("uri").unwrap());
    }

    let ask = parse_query(
        "ASK WHERE { <http://dbpedia.org/resource/Peter_Piper_Pizza> <http://dbpedia.org/ontology/industry> <http://dbpedia.org/resource/Pizza> }",
    )
    .unwrap();
    println!("ask: {}", eval(&g, &ask).unwrap().is_truthy());
}
