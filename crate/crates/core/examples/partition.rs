//! Leaky and sanitized partitions of the toy corpus and their template
//! leakage.
//!
//! ```text
//! cargo run --example partition
//! ```

use splithygiene::experiment::{prepare, RunConfig};
use splithygiene::metrics::leakage_report;
use splithygiene::partitioner::{
    leaky_partition, sanitized_partition, select_seed_test_ids, split_templates, DEFAULT_RATIOS,
};

fn main() {
    let p = prepare(&RunConfig::default()).expect("bundled data");
    let leaky = leaky_partition(&p.instances, DEFAULT_RATIOS, 1).unwrap();
    let stats = leakage_report(&leaky, &p.index);
    println!(
        "leaky     {:?}  test seen-template fraction {:.3}",
        leaky.counts(),
        stats.test_seen_fraction
    );

    let seed_test = select_seed_test_ids(&p.seeds, 0.2, 1).unwrap();
    let tsplit = split_templates(&p.templates, &p.seeds, &seed_test);
    let s = sanitized_partition(&p.instances, &tsplit, &p.index, 1).unwrap();
    let stats = leakage_report(&s.split, &p.index);
    println!(
        "sanitized {:?}  test seen-template fraction {:.3}",
        s.split.counts(),
        stats.test_seen_fraction
    );
    println!("held-out seeds: {:?}", seed_test);
    println!("diagnostics: {}", s.diagnostics.to_json());
}
