//! Corpus and sentence BLEU on small token lists.
//!
//! ```text
//! cargo run --example bleu
//! ```

use splithygiene::metrics::{corpus_bleu, sentence_bleu};

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn main() {
    let refs = vec![
        toks("ASK WHERE { <a> <p> <b> }"),
        toks("SELECT DISTINCT ?uri WHERE { ?uri <p> <b> }"),
    ];
    let cands = vec![
        toks("ASK WHERE { <a> <p> <b> }"),
        toks("SELECT DISTINCT ?uri WHERE { <b> <p> ?uri }"),
    ];
    let r = corpus_bleu(&cands, &refs).unwrap();
    println!(
        "corpus BLEU {:.2}, precisions {:.3?}, BP {:.3}",
        r.bleu, r.precisions, r.brevity_penalty
    );

    let s = sentence_bleu(&toks("the the the cat"), &toks("the cat sat down"));
    println!("sentence BLEU {:.6}, clipped p1 {}", s.bleu, s.precisions[0]);
}
