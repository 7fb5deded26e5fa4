//! Trains the template memorizer and shows where each prediction came from.
//!
//! ```text
//! cargo run --example memorizer
//! ```

use splithygiene::baselines::train_memorizer;
use splithygiene::experiment::{prepare, sanitized_split, RunConfig};
use splithygiene::metrics::corpus_bleu;
use splithygiene::partitioner::select_seed_test_ids;

fn main() {
    let p = prepare(&RunConfig::default()).expect("bundled data");
    let ids = select_seed_test_ids(&p.seeds, 0.2, 1).unwrap();
    let (split, _) = sanitized_split(&p, &ids, 1).unwrap();
    let model = train_memorizer(&split.train, &p.templates, &p.index);
    println!("{} templates seen in training", model.seen_template_ids().len());

    for (name, records) in [("valid", &split.valid), ("test", &split.test)] {
        let preds: Vec<_> = records.iter().map(|i| model.predict(&i.pair.nlq)).collect();
        let cands: Vec<Vec<String>> = preds.iter().map(|p| p.tokens()).collect();
        let refs: Vec<Vec<String>> = records.iter().map(|i| i.pair.query_tokens()).collect();
        println!("{name}: BLEU {:.2}", corpus_bleu(&cands, &refs).unwrap().bleu);
        if let (Some(i), Some(pred)) = (records.first(), preds.first()) {
            println!("  {} -> {} [{:?}]", i.pair.nlq_text(), pred.query, pred.source);
        }
    }
}
