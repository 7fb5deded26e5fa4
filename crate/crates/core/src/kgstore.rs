//! In-memory triple store with basic-graph-pattern evaluation.
//!
//! Only IRI-object triples are kept. The graph is built once and then
//! queried read-only, so a `&Graph` can be shared across threads.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use indexmap::IndexSet;

use crate::qlang::{QueryAst, QueryForm, Term};

type Id = u32;

#[derive(Debug, thiserror::Error)]
pub enum KgError {
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("select variable ?{0} does not occur in the pattern")]
    UnboundVariable(String),
    #[error("query still contains placeholder <Placeholder:{0}>")]
    PlaceholderTerm(String),
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    terms: IndexSet<String>,
    triples: BTreeSet<(Id, Id, Id)>,
    by_predicate: HashMap<Id, Vec<(Id, Id)>>,
    by_predicate_subject: HashMap<(Id, Id), Vec<Id>>,
    by_predicate_object: HashMap<(Id, Id), Vec<Id>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_triples<I, S>(triples: I) -> Self
    where
        I: IntoIterator<Item = (S, S, S)>,
        S: AsRef<str>,
    {
        let mut g = Self::new();
        for (s, p, o) in triples {
            g.insert(s.as_ref(), p.as_ref(), o.as_ref());
        }
        g
    }

    fn intern(&mut self, iri: &str) -> Id {
        match self.terms.get_index_of(iri) {
            Some(i) => i as Id,
            None => self.terms.insert_full(iri.to_string()).0 as Id,
        }
    }

    fn lookup(&self, iri: &str) -> Option<Id> {
        self.terms.get_index_of(iri).map(|i| i as Id)
    }

    fn term(&self, id: Id) -> &str {
        &self.terms[id as usize]
    }

    /// Adds a triple; returns false if it was already present.
    pub fn insert(&mut self, s: &str, p: &str, o: &str) -> bool {
        let (s, p, o) = (self.intern(s), self.intern(p), self.intern(o));
        if !self.triples.insert((s, p, o)) {
            return false;
        }
        self.by_predicate.entry(p).or_default().push((s, o));
        self.by_predicate_subject.entry((p, s)).or_default().push(o);
        self.by_predicate_object.entry((p, o)).or_default().push(s);
        true
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, s: &str, p: &str, o: &str) -> bool {
        match (self.lookup(s), self.lookup(p), self.lookup(o)) {
            (Some(s), Some(p), Some(o)) => self.triples.contains(&(s, p, o)),
            _ => false,
        }
    }

    /// All triples in sorted (interned) order.
    pub fn triples(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.triples
            .iter()
            .map(|&(s, p, o)| (self.term(s), self.term(p), self.term(o)))
    }

    /// Distinct predicates, sorted.
    pub fn predicates(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.by_predicate.keys().map(|&p| self.term(p)).collect();
        v.sort_unstable();
        v
    }

    /// Serializes as N-Triples, one triple per line, sorted.
    pub fn to_ntriples(&self) -> String {
        let mut lines: Vec<String> = self.triples().map(|(s, p, o)| format!("<{s}> <{p}> <{o}> .")).collect();
        lines.sort();
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }
}

/// Outcome of loading an N-Triples file.
#[derive(Debug, Clone, Default)]
pub struct LoadSummary {
    pub graph: Graph,
    /// Lines whose object is a literal or blank node.
    pub skipped_non_iri: usize,
    /// 1-based numbers of lines that could not be parsed.
    pub malformed_lines: Vec<usize>,
    pub duplicate_triples: usize,
}

fn take_iri(s: &str) -> Option<(&str, &str)> {
    let s = s.trim_start();
    let rest = s.strip_prefix('<')?;
    let end = rest.find('>')?;
    let iri = &rest[..end];
    if iri.is_empty() || iri.contains(char::is_whitespace) {
        return None;
    }
    Some((iri, &rest[end + 1..]))
}

enum Line<'a> {
    Blank,
    Triple(&'a str, &'a str, &'a str),
    NonIri,
    Malformed,
}

fn parse_line(line: &str) -> Line<'_> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Line::Blank;
    }
    let Some((s, rest)) = take_iri(line) else {
        return if line.starts_with("_:") {
            Line::NonIri
        } else {
            Line::Malformed
        };
    };
    let Some((p, rest)) = take_iri(rest) else {
        return Line::Malformed;
    };
    let Some(obj) = rest.trim().strip_suffix('.') else {
        return Line::Malformed;
    };
    let obj = obj.trim();
    if obj.starts_with('"') || obj.starts_with("_:") {
        return Line::NonIri;
    }
    match take_iri(obj) {
        Some((o, tail)) if tail.trim().is_empty() => Line::Triple(s, p, o),
        _ => Line::Malformed,
    }
}

/// Parses N-Triples text. Literal and blank-node lines are counted and
/// skipped; malformed lines are collected rather than failing the load.
pub fn parse_ntriples(text: &str) -> LoadSummary {
    let mut summary = LoadSummary::default();
    for (i, line) in text.lines().enumerate() {
        match parse_line(line) {
            Line::Blank => {}
            Line::Triple(s, p, o) => {
                if !summary.graph.insert(s, p, o) {
                    summary.duplicate_triples += 1;
                }
            }
            Line::NonIri => summary.skipped_non_iri += 1,
            Line::Malformed => summary.malformed_lines.push(i + 1),
        }
    }
    if summary.skipped_non_iri > 0 {
        log::warn!("skipped {} literal or blank-node triples", summary.skipped_non_iri);
    }
    if !summary.malformed_lines.is_empty() {
        log::warn!("{} malformed N-Triples lines", summary.malformed_lines.len());
    }
    summary
}

pub fn load_ntriples(path: &Path) -> Result<LoadSummary, KgError> {
    let text = std::fs::read_to_string(path).map_err(|source| KgError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_ntriples(&text))
}

/// One solution of a SELECT query: variable -> IRI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BindingRow(pub BTreeMap<String, String>);

impl BindingRow {
    pub fn get(&self, var: &str) -> Option<&str> {
        self.0.get(var).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalResult {
    Ask(bool),
    Select(Vec<BindingRow>),
}

impl EvalResult {
    /// ASK truth value, or whether SELECT returned any row.
    pub fn is_truthy(&self) -> bool {
        match self {
            EvalResult::Ask(b) => *b,
            EvalResult::Select(rows) => !rows.is_empty(),
        }
    }

    pub fn rows(&self) -> &[BindingRow] {
        match self {
            EvalResult::Ask(_) => &[],
            EvalResult::Select(rows) => rows,
        }
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Const(Id),
    Var(usize),
}

struct Compiled {
    patterns: Vec<[Slot; 3]>,
    var_names: Vec<String>,
}

/// Lowers the query to interned ids. `None` means some constant IRI is
/// absent from the graph, so no solution exists.
fn compile(graph: &Graph, ast: &QueryAst) -> Result<Option<Compiled>, KgError> {
    let mut var_names: Vec<String> = Vec::new();
    let mut patterns = Vec::with_capacity(ast.patterns.len());
    let mut missing = false;
    for p in &ast.patterns {
        let mut slots = [Slot::Var(0); 3];
        for (slot, term) in slots.iter_mut().zip(p.terms()) {
            *slot = match term {
                Term::Iri(iri) => match graph.lookup(iri) {
                    Some(id) => Slot::Const(id),
                    None => {
                        missing = true;
                        Slot::Const(Id::MAX)
                    }
                },
                Term::Var(v) => Slot::Var(match var_names.iter().position(|n| n == v) {
                    Some(i) => i,
                    None => {
                        var_names.push(v.clone());
                        var_names.len() - 1
                    }
                }),
                Term::Placeholder(l) => return Err(KgError::PlaceholderTerm(l.clone())),
            };
        }
        patterns.push(slots);
    }
    if let Some(v) = ast.select_vars().iter().find(|v| !var_names.contains(v)) {
        return Err(KgError::UnboundVariable(v.clone()));
    }
    Ok((!missing).then_some(Compiled { patterns, var_names }))
}

struct Matcher<'g> {
    graph: &'g Graph,
    patterns: Vec<[Slot; 3]>,
}

impl Matcher<'_> {
    fn resolve(slot: Slot, binding: &[Option<Id>]) -> Option<Id> {
        match slot {
            Slot::Const(id) => Some(id),
            Slot::Var(v) => binding[v],
        }
    }

    /// Upper bound on matches for a pattern under the current binding.
    fn cardinality(&self, pat: &[Slot; 3], binding: &[Option<Id>]) -> usize {
        let [s, p, o] = pat.map(|x| Self::resolve(x, binding));
        let g = self.graph;
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => usize::from(g.triples.contains(&(s, p, o))),
            (Some(s), Some(p), None) => g.by_predicate_subject.get(&(p, s)).map_or(0, Vec::len),
            (None, Some(p), Some(o)) => g.by_predicate_object.get(&(p, o)).map_or(0, Vec::len),
            (_, Some(p), _) => g.by_predicate.get(&p).map_or(0, Vec::len),
            (_, None, _) => g.triples.len(),
        }
    }

    fn candidates(&self, pat: &[Slot; 3], binding: &[Option<Id>]) -> Vec<(Id, Id, Id)> {
        let [s, p, o] = pat.map(|x| Self::resolve(x, binding));
        let g = self.graph;
        match (s, p, o) {
            (Some(s), Some(p), Some(o)) => {
                if g.triples.contains(&(s, p, o)) {
                    vec![(s, p, o)]
                } else {
                    vec![]
                }
            }
            (Some(s), Some(p), None) => g
                .by_predicate_subject
                .get(&(p, s))
                .map_or_else(Vec::new, |v| v.iter().map(|&o| (s, p, o)).collect()),
            (None, Some(p), Some(o)) => g
                .by_predicate_object
                .get(&(p, o))
                .map_or_else(Vec::new, |v| v.iter().map(|&s| (s, p, o)).collect()),
            (_, Some(p), _) => g
                .by_predicate
                .get(&p)
                .map_or_else(Vec::new, |v| v.iter().map(|&(s, o)| (s, p, o)).collect()),
            (_, None, _) => g.triples.iter().copied().collect(),
        }
    }

    /// Depth-first join, always expanding the remaining pattern with the
    /// fewest candidates. `emit` returns false to stop early.
    fn solve(
        &self,
        remaining: &mut Vec<usize>,
        binding: &mut Vec<Option<Id>>,
        emit: &mut dyn FnMut(&[Option<Id>]) -> bool,
    ) -> bool {
        if remaining.is_empty() {
            return emit(binding);
        }
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &pi)| (pos, self.cardinality(&self.patterns[pi], binding)))
            .min_by_key(|&(pos, c)| (c, pos))
            .expect("non-empty");
        let pi = remaining.swap_remove(pos);
        let pat = self.patterns[pi];
        let mut keep_going = true;
        for triple in self.candidates(&pat, binding) {
            let mut newly = Vec::new();
            let ok = [(pat[0], triple.0), (pat[1], triple.1), (pat[2], triple.2)]
                .into_iter()
                .all(|(slot, val)| match slot {
                    Slot::Const(c) => c == val,
                    Slot::Var(v) => match binding[v] {
                        Some(b) => b == val,
                        None => {
                            binding[v] = Some(val);
                            newly.push(v);
                            true
                        }
                    },
                });
            if ok {
                keep_going = self.solve(remaining, binding, emit);
            }
            for v in newly {
                binding[v] = None;
            }
            if !keep_going {
                break;
            }
        }
        remaining.push(pi);
        let last = remaining.len() - 1;
        remaining.swap(pos, last);
        keep_going
    }
}

/// Evaluates a query: ASK yields whether any solution exists; SELECT DISTINCT
/// yields the distinct projected rows ordered lexicographically by the bound
/// IRIs in select-variable order.
pub fn eval(graph: &Graph, ast: &QueryAst) -> Result<EvalResult, KgError> {
    let Some(compiled) = compile(graph, ast)? else {
        return Ok(match ast.form {
            QueryForm::Ask => EvalResult::Ask(false),
            QueryForm::SelectDistinct(_) => EvalResult::Select(vec![]),
        });
    };
    let matcher = Matcher {
        graph,
        patterns: compiled.patterns,
    };
    let mut remaining: Vec<usize> = (0..matcher.patterns.len()).collect();
    let mut binding = vec![None; compiled.var_names.len()];
    match &ast.form {
        QueryForm::Ask => {
            let mut found = false;
            matcher.solve(&mut remaining, &mut binding, &mut |_| {
                found = true;
                false
            });
            Ok(EvalResult::Ask(found))
        }
        QueryForm::SelectDistinct(vars) => {
            let idx: Vec<usize> = vars
                .iter()
                .map(|v| {
                    compiled
                        .var_names
                        .iter()
                        .position(|n| n == v)
                        .expect("checked in compile")
                })
                .collect();
            let mut distinct: BTreeSet<Vec<Id>> = BTreeSet::new();
            matcher.solve(&mut remaining, &mut binding, &mut |b| {
                distinct.insert(idx.iter().map(|&i| b[i].expect("all pattern vars bound")).collect());
                true
            });
            let mut rows: Vec<Vec<&str>> = distinct
                .into_iter()
                .map(|ids| ids.into_iter().map(|id| graph.term(id)).collect())
                .collect();
            rows.sort();
            Ok(EvalResult::Select(
                rows.into_iter()
                    .map(|vals| BindingRow(vars.iter().cloned().zip(vals.into_iter().map(str::to_string)).collect()))
                    .collect(),
            ))
        }
    }
}

/// Rows ordered by select-variable order (what [`eval`] guarantees).
pub fn row_values<'a>(row: &'a BindingRow, vars: &[String]) -> Vec<&'a str> {
    vars.iter().filter_map(|v| row.get(v)).collect()
}
