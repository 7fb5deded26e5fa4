//! Extracts a template from a seed and instantiates it against the toy
//! graph.
//!
//! ```text
//! cargo run --example generate
//! ```

use splithygiene::synthesis::{binding_vars, derive_binding_query, extract_template, generate_instances};
use splithygiene::toy;

fn main() {
    let data = toy::load_bundled();
    let seed = &data.seeds[0];
    println!("seed {}: {}", seed.id, seed.pair.nlq_text());

    let t = extract_template(seed).expect("seed mentions resolve");
    println!("question pattern: {}", t.nlq_pattern);
    println!("query pattern:    {}", t.query_pattern.serialize());
    println!("binding vars:     {:?}", binding_vars(&t));
    println!("binding query:    {}", derive_binding_query(&t).serialize());

    let instances = generate_instances(&t, &data.graph, 5, 0).unwrap();
    for i in &instances {
        println!("  {}  {}", i.id, i.pair.nlq_text());
        println!("  {}  {}", " ".repeat(i.id.len()), i.pair.query_text);
    }
}
