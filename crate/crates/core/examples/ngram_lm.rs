//! Trains the n-gram model on toy queries and compares perplexity on seen
//! and held-out templates under both smoothing schemes.
//!
//! ```text
//! cargo run --example ngram_lm
//! ```

use splithygiene::baselines::{lm_perplexity, train_ngram_lm, LmConfig, Smoothing};
use splithygiene::experiment::{prepare, sanitized_split, RunConfig};
use splithygiene::partitioner::select_seed_test_ids;

fn main() {
    let p = prepare(&RunConfig::default()).expect("bundled data");
    let ids = select_seed_test_ids(&p.seeds, 0.2, 1).unwrap();
    let (split, _) = sanitized_split(&p, &ids, 1).unwrap();
    let tokens = |v: &[splithygiene::corpus::Instance]| v.iter().map(|i| i.pair.query_tokens()).collect::<Vec<_>>();
    let (train, valid, test) = (tokens(&split.train), tokens(&split.valid), tokens(&split.test));
    for smoothing in [Smoothing::WittenBell, Smoothing::AddK] {
        let lm = train_ngram_lm(
            &train,
            LmConfig {
                smoothing,
                ..LmConfig::default()
            },
        )
        .unwrap();
        println!(
            "{smoothing:?}: vocab {}, valid ppl {:.3}, test ppl {:.3}",
            lm.vocab_size(),
            lm_perplexity(&lm, &valid).unwrap(),
            lm_perplexity(&lm, &test).unwrap()
        );
    }
}
