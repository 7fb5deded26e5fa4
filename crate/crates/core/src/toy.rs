//! Bundled toy dataset: a small synthetic knowledge graph and about fifty
//! seeds, built deterministically and committed under `data/toy/`.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{seed_from_record, Seed, SeedRecord, SurfaceFormSpec};
use crate::kgstore::{self, parse_ntriples, Graph};
use crate::qlang::{local_name, parse_query, tokenize_nlq, NlqPattern, RESOURCE_NS};
use crate::shuffle;
use crate::synthesis::{binding_vars, derive_binding_query, Template};

pub const SEEDS_JSONL: &str = include_str!("../data/toy/seeds.jsonl");
pub const KG_NT: &str = include_str!("../data/toy/kg.nt");

const RNG_SEED: u64 = 20_190_901;
const DBO: &str = "http://dbpedia.org/ontology/";

/// Seed families: question with slot markers, query with placeholders.
/// Subjects of two-slot questions are `<B>`, objects `<A>`.
const FAMILIES: &[(&str, &str)] = &[
    (
        "Is <B> in the <A> industry?",
        "ASK WHERE { <Placeholder:B> dbo:industry <Placeholder:A> }",
    ),
    (
        "Which companies operate in the <A> industry?",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:industry <Placeholder:A> }",
    ),
    (
        "What industry is <A> part of?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:industry ?uri }",
    ),
    (
        "Did <A> found <B>?",
        "ASK WHERE { <Placeholder:B> dbo:founder <Placeholder:A> }",
    ),
    (
        "Who founded <A>?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:founder ?uri }",
    ),
    (
        "Which firms were started by <A>?",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:founder <Placeholder:A> }",
    ),
    (
        "Is <B> a company from <A>?",
        "ASK WHERE { <Placeholder:B> dbo:country <Placeholder:A> }",
    ),
    (
        "Which country is <A> registered in?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:country ?uri }",
    ),
    (
        "List enterprises registered in <A>.",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:country <Placeholder:A> }",
    ),
    (
        "Is <B> headquartered in <A>?",
        "ASK WHERE { <Placeholder:B> dbo:locationCity <Placeholder:A> }",
    ),
    (
        "Where is <A> headquartered?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:locationCity ?uri }",
    ),
    (
        "Which businesses have offices in <A>?",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:locationCity <Placeholder:A> }",
    ),
    (
        "Was <B> born in <A>?",
        "ASK WHERE { <Placeholder:B> dbo:birthPlace <Placeholder:A> }",
    ),
    (
        "Where was <A> born?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:birthPlace ?uri }",
    ),
    (
        "Who is a native of <A>?",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:birthPlace <Placeholder:A> }",
    ),
    (
        "Did <B> study at <A>?",
        "ASK WHERE { <Placeholder:B> dbo:almaMater <Placeholder:A> }",
    ),
    (
        "Where did <A> study?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:almaMater ?uri }",
    ),
    (
        "Which people graduated from <A>?",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:almaMater <Placeholder:A> }",
    ),
    (
        "Is <B> a citizen of <A>?",
        "ASK WHERE { <Placeholder:B> dbo:nationality <Placeholder:A> }",
    ),
    (
        "What is the nationality of <A>?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:nationality ?uri }",
    ),
    (
        "Who holds a passport from <A>?",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:nationality <Placeholder:A> }",
    ),
    (
        "Does the town <B> lie in <A>?",
        "ASK WHERE { <Placeholder:B> dbo:country <Placeholder:A> }",
    ),
    (
        "In which nation lies the town <A>?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:country ?uri }",
    ),
    (
        "Name the towns situated in <A>.",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:country <Placeholder:A> }",
    ),
    (
        "Did <A> write <B>?",
        "ASK WHERE { <Placeholder:B> dbo:author <Placeholder:A> }",
    ),
    (
        "Who wrote <A>?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:author ?uri }",
    ),
    (
        "Give me the books authored by <A>.",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:author <Placeholder:A> }",
    ),
    (
        "Was <B> published by <A>?",
        "ASK WHERE { <Placeholder:B> dbo:publisher <Placeholder:A> }",
    ),
    (
        "Which house published <A>?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:publisher ?uri }",
    ),
    (
        "What titles did <A> release?",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:publisher <Placeholder:A> }",
    ),
    (
        "Is <B> a <A> novel?",
        "ASK WHERE { <Placeholder:B> dbo:literaryGenre <Placeholder:A> }",
    ),
    (
        "To what literary genre does <A> belong?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:literaryGenre ?uri }",
    ),
    (
        "Show novels of the <A> genre.",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:literaryGenre <Placeholder:A> }",
    ),
    (
        "Did <A> direct <B>?",
        "ASK WHERE { <Placeholder:B> dbo:director <Placeholder:A> }",
    ),
    (
        "Who directed <A>?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:director ?uri }",
    ),
    (
        "Which movies were made by filmmaker <A>?",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:director <Placeholder:A> }",
    ),
    (
        "Does <B> feature <A>?",
        "ASK WHERE { <Placeholder:B> dbo:starring <Placeholder:A> }",
    ),
    (
        "Who acts in <A>?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:starring ?uri }",
    ),
    (
        "In which pictures did <A> appear?",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:starring <Placeholder:A> }",
    ),
    (
        "Is <B> a <A> film?",
        "ASK WHERE { <Placeholder:B> dbo:genre <Placeholder:A> }",
    ),
    (
        "What kind of film is <A>?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:genre ?uri }",
    ),
    (
        "Enumerate <A> cinema releases.",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:genre <Placeholder:A> }",
    ),
    (
        "Name companies whose founders were born in <A>.",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:founder ?x . ?x dbo:birthPlace <Placeholder:A> }",
    ),
    (
        "Which directors made films starring <A>?",
        "SELECT DISTINCT ?uri WHERE { ?x dbo:starring <Placeholder:A> . ?x dbo:director ?uri }",
    ),
    (
        "List books by authors who studied at <A>.",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:author ?x . ?x dbo:almaMater <Placeholder:A> }",
    ),
    (
        "In what country was the founder of <A> born?",
        "SELECT DISTINCT ?uri WHERE { <Placeholder:A> dbo:founder ?x . ?x dbo:birthPlace ?y . ?y dbo:country ?uri }",
    ),
    (
        "Does <B> have a founder born in <A>?",
        "ASK WHERE { <Placeholder:B> dbo:founder ?x . ?x dbo:birthPlace <Placeholder:A> }",
    ),
    (
        "Which publishers released books by <A>?",
        "SELECT DISTINCT ?uri WHERE { ?x dbo:author <Placeholder:A> . ?x dbo:publisher ?uri }",
    ),
    (
        "Which films did <A> direct with <B> in the cast?",
        "SELECT DISTINCT ?uri WHERE { ?uri dbo:director <Placeholder:A> . ?uri dbo:starring <Placeholder:B> }",
    ),
    (
        "Which authors wrote <A> stories?",
        "SELECT DISTINCT ?uri WHERE { ?x dbo:literaryGenre <Placeholder:A> . ?x dbo:author ?uri }",
    ),
];

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ra", "ven", "tor", "sa", "zel", "dri", "mon", "quo", "ber", "fi", "nax", "ul", "tre", "gor",
    "pa", "shi", "vo", "len", "dar", "kis", "yul",
];
const INDUSTRIES: &[&str] = &[
    "Pizza",
    "Publishing",
    "Aerospace",
    "Mining",
    "Textiles",
    "Brewing",
    "Shipping",
    "Robotics",
    "Fishing",
    "Forestry",
    "Banking",
    "Ceramics",
];
const GENRES: &[&str] = &[
    "Noir", "Satire", "Fantasy", "Western", "Thriller", "Romance", "Horror", "Mystery", "Fable", "Epic", "Farce",
    "Gothic",
];
/// Companies fixed by name, with their industry.
const FIXED_COMPANIES: &[(&str, &str)] = &[
    ("Peter_Piper_Pizza", "Pizza"),
    ("Robot_Comics", "Publishing"),
    ("Tiger_Aircraft", "Aerospace"),
];

pub const N_COUNTRIES: usize = 10;
pub const N_CITIES: usize = 30;
pub const N_UNIVERSITIES: usize = 10;
pub const N_PERSONS: usize = 120;
pub const N_COMPANIES: usize = 90;
pub const N_PUBLISHERS: usize = 15;
pub const N_BOOKS: usize = 70;
pub const N_FILMS: usize = 70;

struct Names<'a> {
    rng: &'a mut ChaCha8Rng,
    used: BTreeSet<String>,
    banned: BTreeSet<String>,
}

impl Names<'_> {
    fn word(&mut self, syllables: usize) -> String {
        loop {
            let w: String = (0..syllables)
                .map(|_| *SYLLABLES.choose(self.rng).expect("non-empty"))
                .collect();
            if !self.banned.contains(&w) {
                let mut c = w.chars();
                let first = c.next().expect("non-empty").to_ascii_uppercase();
                return std::iter::once(first).chain(c).collect();
            }
        }
    }

    /// Unique local name of `words` syllable-built words, plus a fixed suffix.
    fn fresh(&mut self, words: usize, suffix: Option<&str>) -> String {
        loop {
            let mut parts: Vec<String> = (0..words)
                .map(|_| {
                    let n = self.rng.gen_range(2..=3);
                    self.word(n)
                })
                .collect();
            parts.extend(suffix.map(str::to_string));
            let name = parts.join("_");
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }
}

fn res(local: &str) -> String {
    format!("{RESOURCE_NS}{local}")
}

fn dbo(p: &str) -> String {
    format!("{DBO}{p}")
}

fn family_words() -> BTreeSet<String> {
    FAMILIES
        .iter()
        .flat_map(|(q, _)| tokenize_nlq(q))
        .filter(|t| !t.starts_with('<'))
        .collect()
}

/// The toy knowledge graph.
pub fn build_graph() -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(RNG_SEED);
    let banned = family_words();
    let mut names = Names {
        rng: &mut rng,
        used: INDUSTRIES
            .iter()
            .chain(GENRES)
            .map(|s| s.to_string())
            .chain(FIXED_COMPANIES.iter().map(|(c, _)| c.to_string()))
            .collect(),
        banned,
    };
    let countries: Vec<String> = (0..N_COUNTRIES).map(|_| names.fresh(1, None)).collect();
    let cities: Vec<String> = (0..N_CITIES).map(|_| names.fresh(1, None)).collect();
    let universities: Vec<String> = (0..N_UNIVERSITIES).map(|_| names.fresh(1, Some("Academy"))).collect();
    let persons: Vec<String> = (0..N_PERSONS).map(|_| names.fresh(2, None)).collect();
    let mut companies: Vec<String> = FIXED_COMPANIES.iter().map(|(c, _)| c.to_string()).collect();
    while companies.len() < N_COMPANIES {
        let words = if names.rng.gen_bool(0.5) { 1 } else { 2 };
        companies.push(names.fresh(words, None));
    }
    let books: Vec<String> = (0..N_BOOKS).map(|_| names.fresh(2, None)).collect();
    let films: Vec<String> = (0..N_FILMS).map(|_| names.fresh(2, None)).collect();
    let rng = names.rng;

    let mut g = Graph::new();
    let mut add = |s: &str, p: &str, o: &str| {
        g.insert(&res(s), &dbo(p), &res(o));
    };
    for c in &cities {
        add(c, "country", countries.choose(rng).expect("non-empty"));
    }
    for p in &persons {
        add(p, "birthPlace", cities.choose(rng).expect("non-empty"));
        add(p, "almaMater", universities.choose(rng).expect("non-empty"));
        add(p, "nationality", countries.choose(rng).expect("non-empty"));
    }
    for (i, c) in companies.iter().enumerate() {
        let industry = match FIXED_COMPANIES.get(i) {
            Some((_, ind)) => *ind,
            None => INDUSTRIES.choose(rng).expect("non-empty"),
        };
        add(c, "industry", industry);
        add(c, "founder", persons.choose(rng).expect("non-empty"));
        add(c, "country", countries.choose(rng).expect("non-empty"));
        add(c, "locationCity", cities.choose(rng).expect("non-empty"));
    }
    let publishers = &companies[1..=N_PUBLISHERS];
    for b in &books {
        add(b, "author", persons.choose(rng).expect("non-empty"));
        add(b, "publisher", publishers.choose(rng).expect("non-empty"));
        add(b, "literaryGenre", GENRES.choose(rng).expect("non-empty"));
    }
    for f in &films {
        add(f, "director", persons.choose(rng).expect("non-empty"));
        let cast = rng.gen_range(1..=2);
        for a in persons.choose_multiple(rng, cast).collect::<Vec<_>>() {
            add(f, "starring", a);
        }
        add(f, "genre", GENRES.choose(rng).expect("non-empty"));
    }
    g
}

fn mention(iri: &str) -> String {
    local_name(iri).replace('_', " ")
}

fn capitalize_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Seed records for the toy graph: one per family, each instantiated with
/// a seeded choice among the family's bindings.
pub fn build_seed_records(graph: &Graph) -> Vec<SeedRecord> {
    FAMILIES
        .iter()
        .enumerate()
        .map(|(i, (nlq, query))| {
            let id = format!("s{:02}", i + 1);
            let t = Template::new(
                format!("family-{id}"),
                NlqPattern::parse(nlq).expect("family question parses"),
                parse_query(query).expect("family query parses"),
                &id,
            )
            .expect("family is a valid template");
            let vars = binding_vars(&t);
            let result = kgstore::eval(graph, &derive_binding_query(&t)).expect("binding query evaluates");
            let rows = result.rows();
            assert!(!rows.is_empty(), "family {id} has no bindings");
            let keys: Vec<String> = rows
                .iter()
                .map(|r| {
                    vars.iter()
                        .map(|(_, v)| r.get(v).unwrap_or(""))
                        .collect::<Vec<_>>()
                        .join("\t")
                })
                .collect();
            let pick = if i == 0 {
                let want = format!("{}\t{}", res("Pizza"), res("Peter_Piper_Pizza"));
                keys.iter().position(|k| *k == want).expect("fixed company present")
            } else {
                shuffle::order(RNG_SEED, "toy-seed", keys.iter().map(String::as_str))[0]
            };
            let iris: BTreeMap<String, String> = vars
                .iter()
                .map(|(label, var)| (label.clone(), rows[pick].get(var).expect("bound").to_string()))
                .collect();
            let mut text = nlq.to_string();
            for (label, iri) in &iris {
                let m = if i == 0 && label == "A" {
                    mention(iri).to_lowercase()
                } else {
                    mention(iri)
                };
                text = text.replace(&format!("<{label}>"), &m);
            }
            let surface_forms = iris
                .iter()
                .map(|(label, iri)| {
                    let m = if i == 0 && label == "A" {
                        mention(iri).to_lowercase()
                    } else {
                        mention(iri)
                    };
                    (label.clone(), SurfaceFormSpec::Text(m))
                })
                .collect();
            SeedRecord {
                id,
                nlq: capitalize_first(&text),
                query: t.instantiate_query(&iris).expect("all labels bound").serialize(),
                surface_forms,
            }
        })
        .collect()
}

pub fn seeds_jsonl(records: &[SeedRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// The committed toy data, parsed.
#[derive(Debug, Clone)]
pub struct ToyData {
    pub graph: Graph,
    pub seeds: Vec<Seed>,
}

pub fn load_bundled() -> ToyData {
    let graph = parse_ntriples(KG_NT).graph;
    let seeds = SEEDS_JSONL
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            seed_from_record(&serde_json::from_str(l).expect("bundled seed parses")).expect("bundled seed is valid")
        })
        .collect();
    ToyData { graph, seeds }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn committed_files_match_builder() {
        let g = build_graph();
        assert_eq!(
            g.to_ntriples(),
            KG_NT,
            "regenerate with `cargo run --example toy_data -- write`"
        );
        assert_eq!(seeds_jsonl(&build_seed_records(&g)), SEEDS_JSONL);
    }

    #[test]
    fn bundled_sizes() {
        let toy = load_bundled();
        assert_eq!(toy.seeds.len(), FAMILIES.len());
        assert!((1_000..=1_400).contains(&toy.graph.len()), "{}", toy.graph.len());
    }

    #[test]
    fn seeds_hold_in_graph() {
        let toy = load_bundled();
        for s in &toy.seeds {
            assert!(
                kgstore::eval(&toy.graph, &s.pair.query_ast).unwrap().is_truthy(),
                "{}",
                s.id
            );
        }
        assert_eq!(
            toy.seeds[0].pair.nlq_text(),
            "is peter piper pizza in the pizza industry ?"
        );
    }
}
