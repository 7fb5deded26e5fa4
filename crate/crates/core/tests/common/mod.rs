//! Brute-force reference implementations and random input generators shared
//! by the property and acceptance suites.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splithygiene::attribution::AttributionIndex;
use splithygiene::kgstore::{EvalResult, Graph};
use splithygiene::partitioner::TemplateSplit;
use splithygiene::qlang::{NlqPattern, PatternElement, QueryAst, QueryForm, Term, TriplePattern};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- BLEU ----

fn ngram_multiset(tokens: &[String], n: usize) -> BTreeMap<Vec<String>, usize> {
    let mut out = BTreeMap::new();
    if tokens.len() >= n {
        for i in 0..=tokens.len() - n {
            *out.entry(tokens[i..i + n].to_vec()).or_insert(0) += 1;
        }
    }
    out
}

/// Corpus BLEU from explicit n-gram multiset intersections.
pub fn reference_bleu(candidates: &[Vec<String>], references: &[Vec<String>]) -> f64 {
    let mut matched = [0usize; 4];
    let mut total = [0usize; 4];
    let (mut c, mut r) = (0usize, 0usize);
    for (cand, refr) in candidates.iter().zip(references) {
        c += cand.len();
        r += refr.len();
        for n in 1..=4 {
            let cm = ngram_multiset(cand, n);
            let rm = ngram_multiset(refr, n);
            total[n - 1] += cm.values().sum::<usize>();
            matched[n - 1] += cm
                .iter()
                .map(|(g, k)| (*k).min(rm.get(g).copied().unwrap_or(0)))
                .sum::<usize>();
        }
    }
    if c == 0 || (0..4).any(|i| matched[i] == 0) {
        return 0.0;
    }
    let log_mean: f64 = (0..4).map(|i| (matched[i] as f64 / total[i] as f64).ln()).sum::<f64>() / 4.0;
    let bp = if c >= r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    100.0 * bp * log_mean.exp()
}

/// Random corpus of at most `max_pairs` pairs over a small vocabulary so that
/// higher-order matches occur.
pub fn random_bleu_corpus(
    rng: &mut ChaCha8Rng,
    max_pairs: usize,
    max_len: usize,
) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let vocab = ["a", "b", "c", "d", "e"];
    let n = rng.gen_range(1..=max_pairs);
    let sent = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let len = rng.gen_range(0..=max_len);
        (0..len)
            .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
            .collect()
    };
    let mut cands = Vec::with_capacity(n);
    let mut refs = Vec::with_capacity(n);
    for _ in 0..n {
        let r = sent(rng);
        // half of the candidates are perturbed copies of the reference
        let c = if rng.gen_bool(0.5) {
            let mut c = r.clone();
            for t in c.iter_mut() {
                if rng.gen_bool(0.2) {
                    *t = vocab[rng.gen_range(0..vocab.len())].to_string();
                }
            }
            c
        } else {
            sent(rng)
        };
        cands.push(c);
        refs.push(r);
    }
    (cands, refs)
}

// ---- BGP evaluation ----

/// Nested-loop join over every triple for every pattern, in pattern order.
pub fn reference_eval(graph: &Graph, ast: &QueryAst) -> EvalResult {
    let triples: Vec<(String, String, String)> = graph
        .triples()
        .map(|(s, p, o)| (s.to_string(), p.to_string(), o.to_string()))
        .collect();
    let mut solutions: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
    for pat in &ast.patterns {
        let mut next = Vec::new();
        for sol in &solutions {
            for (s, p, o) in &triples {
                let mut b = sol.clone();
                let ok = [(&pat.subject, s), (&pat.predicate, p), (&pat.object, o)]
                    .into_iter()
                    .all(|(term, value)| match term {
                        Term::Iri(iri) => iri == value,
                        Term::Var(v) => match b.get(v) {
                            Some(bound) => bound == value,
                            None => {
                                b.insert(v.clone(), value.clone());
                                true
                            }
                        },
                        Term::Placeholder(_) => false,
                    });
                if ok {
                    next.push(b);
                }
            }
        }
        solutions = next;
    }
    match &ast.form {
        QueryForm::Ask => EvalResult::Ask(!solutions.is_empty()),
        QueryForm::SelectDistinct(vars) => {
            let rows: BTreeSet<Vec<String>> = solutions
                .iter()
                .map(|b| vars.iter().map(|v| b[v].clone()).collect())
                .collect();
            EvalResult::Select(
                rows.into_iter()
                    .map(|vals| splithygiene::kgstore::BindingRow(vars.iter().cloned().zip(vals).collect()))
                    .collect(),
            )
        }
    }
}

pub fn random_graph(rng: &mut ChaCha8Rng, max_triples: usize) -> Graph {
    let n_entities = rng.gen_range(2..=12);
    let n_preds = rng.gen_range(1..=4);
    let n = rng.gen_range(0..=max_triples);
    let mut g = Graph::new();
    for _ in 0..n {
        let s = format!("http://ex.org/e{}", rng.gen_range(0..n_entities));
        let p = format!("http://ex.org/p{}", rng.gen_range(0..n_preds));
        let o = format!("http://ex.org/e{}", rng.gen_range(0..n_entities));
        g.insert(&s, &p, &o);
    }
    g
}

/// Query of 1..=`max_patterns` patterns mostly over the graph's vocabulary,
/// occasionally naming an IRI absent from it.
pub fn random_bgp(rng: &mut ChaCha8Rng, max_patterns: usize) -> QueryAst {
    let vars = ["x", "y", "z"];
    let n = rng.gen_range(1..=max_patterns);
    let term = |rng: &mut ChaCha8Rng| -> Term {
        if rng.gen_bool(0.6) {
            Term::var(vars[rng.gen_range(0..vars.len())])
        } else {
            Term::iri(format!("http://ex.org/e{}", rng.gen_range(0..13)))
        }
    };
    let patterns: Vec<TriplePattern> = (0..n)
        .map(|_| {
            let s = term(rng);
            let p = Term::iri(format!("http://ex.org/p{}", rng.gen_range(0..5)));
            let o = term(rng);
            TriplePattern::new(s, p, o)
        })
        .collect();
    let ast = QueryAst::ask(patterns.clone());
    let mut present: Vec<String> = ast.pattern_vars().into_iter().map(str::to_string).collect();
    if present.is_empty() || rng.gen_bool(0.25) {
        return ast;
    }
    present.shuffle(rng);
    let k = rng.gen_range(1..=present.len());
    present.truncate(k);
    QueryAst::select(present, patterns)
}

// ---- NLQ pattern matching ----

/// Every valid segmentation as slot lengths in slot order, enumerated
/// exhaustively; the matcher's answer is the lexicographically least.
pub fn reference_match(pattern: &NlqPattern, nlq: &[String]) -> Option<BTreeMap<String, (usize, usize)>> {
    fn go(
        elements: &[PatternElement],
        nlq: &[String],
        pos: usize,
        acc: &mut Vec<(String, (usize, usize))>,
        out: &mut Vec<Vec<(String, (usize, usize))>>,
    ) {
        match elements.split_first() {
            None => {
                if pos == nlq.len() {
                    out.push(acc.clone());
                }
            }
            Some((PatternElement::Word(w), rest)) => {
                if pos < nlq.len() && nlq[pos].to_lowercase() == w.to_lowercase() {
                    go(rest, nlq, pos + 1, acc, out);
                }
            }
            Some((PatternElement::Slot(l), rest)) => {
                for end in pos + 1..=nlq.len() {
                    acc.push((l.clone(), (pos, end)));
                    go(rest, nlq, end, acc, out);
                    acc.pop();
                }
            }
        }
    }
    let mut all = Vec::new();
    go(pattern.elements(), nlq, 0, &mut Vec::new(), &mut all);
    all.into_iter()
        .min_by_key(|seg| seg.iter().map(|(_, (s, e))| e - s).collect::<Vec<_>>())
        .map(|seg| seg.into_iter().collect())
}

pub fn bindings_as_ranges(b: &splithygiene::qlang::SlotBindings) -> BTreeMap<String, (usize, usize)> {
    b.spans.iter().map(|(l, s)| (l.clone(), (s.start, s.end))).collect()
}

/// Every element sequence over `words` and slots with at most `max_len`
/// elements and `max_slots` slots that forms a valid pattern.
pub fn all_patterns(words: &[&str], max_len: usize, max_slots: usize) -> Vec<NlqPattern> {
    let labels = ["A", "B", "C"];
    let mut out = Vec::new();
    let mut stack: Vec<Vec<PatternElement>> = vec![vec![]];
    while let Some(cur) = stack.pop() {
        if let Ok(p) = NlqPattern::new(cur.clone()) {
            out.push(p);
        }
        if cur.len() == max_len {
            continue;
        }
        for w in words {
            let mut next = cur.clone();
            next.push(PatternElement::Word(w.to_string()));
            stack.push(next);
        }
        let slots = cur.iter().filter(|e| matches!(e, PatternElement::Slot(_))).count();
        if slots < max_slots && !matches!(cur.last(), Some(PatternElement::Slot(_))) {
            let mut next = cur.clone();
            next.push(PatternElement::Slot(labels[slots].to_string()));
            stack.push(next);
        }
    }
    out
}

/// All token sequences over `alphabet` with length `0..=max_len`.
pub fn all_sequences(alphabet: &[&str], max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![vec![]];
    let mut frontier: Vec<Vec<String>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for a in alphabet {
                let mut t = s.clone();
                t.push(a.to_string());
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

// ---- sanitization ----

/// Random attributed corpus: ids, an attribution index with unattributed and
/// ambiguous instances, and a random template split.
pub struct RandomCorpus {
    pub ids: Vec<String>,
    pub index: AttributionIndex,
    pub tsplit: TemplateSplit,
}

pub fn random_attributed_corpus(rng: &mut ChaCha8Rng) -> RandomCorpus {
    let n_templates = rng.gen_range(1..=12);
    let templates: Vec<String> = (0..n_templates).map(|t| format!("tpl-{t:02}")).collect();
    let n = rng.gen_range(0..=200);
    let mut attributions = BTreeMap::new();
    let mut ids = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("i{i:04}");
        let roll: f64 = rng.gen();
        let attributed: Vec<String> = if roll < 0.05 {
            vec![]
        } else if roll < 0.2 {
            let k = rng.gen_range(2..=3.min(n_templates).max(2));
            let mut ts: Vec<String> = templates.choose_multiple(rng, k.min(n_templates)).cloned().collect();
            ts.sort();
            ts
        } else {
            vec![templates[rng.gen_range(0..n_templates)].clone()]
        };
        attributions.insert(id.clone(), attributed);
        ids.push(id);
    }
    ids.shuffle(rng);
    let mut tsplit = TemplateSplit::default();
    for t in &templates {
        if rng.gen_bool(0.3) {
            tsplit.test_template_ids.insert(t.clone());
        } else {
            tsplit.train_template_ids.insert(t.clone());
        }
    }
    RandomCorpus {
        ids,
        index: AttributionIndex::from_attributions(attributions),
        tsplit,
    }
}
