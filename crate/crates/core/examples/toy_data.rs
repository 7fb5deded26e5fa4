//! Prints statistics of the bundled toy dataset; `write` regenerates the
//! committed files from the builder.
//!
//! ```text
//! cargo run --example toy_data
//! cargo run --example toy_data -- write
//! ```

use std::path::Path;

use splithygiene::toy;

fn main() -> std::io::Result<()> {
    let graph = toy::build_graph();
    let records = toy::build_seed_records(&graph);
    if std::env::args().nth(1).as_deref() == Some("write") {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");
        std::fs::write(dir.join("kg.nt"), graph.to_ntriples())?;
        std::fs::write(dir.join("seeds.jsonl"), toy::seeds_jsonl(&records))?;
        println!("wrote {}", dir.display());
    }
    println!(
        "{} triples, {} predicates, {} seeds",
        graph.len(),
        graph.predicates().len(),
        records.len()
    );
    for r in records.iter().take(5) {
        println!("  {}: {}", r.id, r.nlq);
    }
    Ok(())
}
