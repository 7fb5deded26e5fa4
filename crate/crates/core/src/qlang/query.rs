//! The formal-query subset: `ASK` and `SELECT DISTINCT` over a basic graph
//! pattern.
//!
//! ```text
//! query   := ASK [WHERE] group
//!          | SELECT DISTINCT var ([,] var)* [WHERE] group
//! group   := '{' triple ('.' triple)* ['.'] '}'
//! triple  := term term term
//! term    := '<' iri '>' | prefixed:name | '?' name | '<Placeholder:' LABEL '>'
//! ```
//!
//! Keywords are case-insensitive. Prefixed names (bare or in angle brackets)
//! are expanded through a fixed prefix table, so the AST always stores full
//! IRIs and serialization always writes them in angle brackets.

use std::fmt;

use super::tokenize::is_placeholder_marker;

/// Fixed prefix table.
pub const PREFIXES: &[(&str, &str)] = &[
    ("dbo", "http://dbpedia.org/ontology/"),
    ("dbr", "http://dbpedia.org/resource/"),
    ("dbp", "http://dbpedia.org/property/"),
    ("rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"),
    ("rdfs", "http://www.w3.org/2000/01/rdf-schema#"),
    ("owl", "http://www.w3.org/2002/07/owl#"),
    ("foaf", "http://xmlns.com/foaf/0.1/"),
];

const PLACEHOLDER_PREFIX: &str = "Placeholder:";

/// Expands `prefix:local` through [`PREFIXES`]; `None` for unknown prefixes.
pub fn expand_prefixed(name: &str) -> Option<String> {
    let (prefix, local) = name.split_once(':')?;
    PREFIXES
        .iter()
        .find(|(p, _)| *p == prefix)
        .map(|(_, ns)| format!("{ns}{local}"))
}

/// Local name of an IRI: the part after the last `/` or `#`.
pub fn local_name(iri: &str) -> &str {
    match iri.rfind(['/', '#']) {
        Some(i) => &iri[i + 1..],
        None => iri,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(String),
    Var(String),
    Placeholder(String),
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Self {
        Term::Iri(s.into())
    }

    pub fn var(s: impl Into<String>) -> Self {
        Term::Var(s.into())
    }

    pub fn placeholder(s: impl Into<String>) -> Self {
        Term::Placeholder(s.into())
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write!(f, "<{iri}>"),
            Term::Var(v) => write!(f, "?{v}"),
            Term::Placeholder(l) => write!(f, "<{PLACEHOLDER_PREFIX}{l}>"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl TriplePattern {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        Self {
            subject,
            predicate,
            object,
        }
    }

    pub fn terms(&self) -> [&Term; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn terms_mut(&mut self) -> [&mut Term; 3] {
        [&mut self.subject, &mut self.predicate, &mut self.object]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum QueryForm {
    Ask,
    SelectDistinct(Vec<String>),
}

/// Parsed query.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueryAst {
    pub form: QueryForm,
    pub patterns: Vec<TriplePattern>,
}

impl QueryAst {
    pub fn ask(patterns: Vec<TriplePattern>) -> Self {
        Self {
            form: QueryForm::Ask,
            patterns,
        }
    }

    pub fn select(vars: Vec<String>, patterns: Vec<TriplePattern>) -> Self {
        Self {
            form: QueryForm::SelectDistinct(vars),
            patterns,
        }
    }

    pub fn is_ask(&self) -> bool {
        matches!(self.form, QueryForm::Ask)
    }

    /// Selected variables; empty for `ASK`.
    pub fn select_vars(&self) -> &[String] {
        match &self.form {
            QueryForm::Ask => &[],
            QueryForm::SelectDistinct(v) => v,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.patterns.iter().flat_map(|p| p.terms())
    }

    /// Variables in order of first appearance.
    pub fn pattern_vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in self.terms() {
            if let Term::Var(v) = t {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Placeholder labels in order of first appearance.
    pub fn placeholder_labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in self.terms() {
            if let Term::Placeholder(l) = t {
                if !out.contains(&l.as_str()) {
                    out.push(l);
                }
            }
        }
        out
    }

    pub fn has_placeholders(&self) -> bool {
        self.terms().any(|t| matches!(t, Term::Placeholder(_)))
    }

    /// Canonical single-line text form.
    pub fn serialize(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            QueryForm::Ask => f.write_str("ASK WHERE {")?,
            QueryForm::SelectDistinct(vars) => {
                f.write_str("SELECT DISTINCT ")?;
                for (i, v) in vars.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "?{v}")?;
                }
                f.write_str(" WHERE {")?;
            }
        }
        for (i, p) in self.patterns.iter().enumerate() {
            if i > 0 {
                f.write_str(" .")?;
            }
            write!(f, " {} {} {}", p.subject, p.predicate, p.object)?;
        }
        f.write_str(" }")
    }
}

/// Rejection of text outside the supported subset.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        Self {
            offset,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Iri(String),
    Var(String),
    LBrace,
    RBrace,
    Dot,
    Comma,
    Punct(char),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Iri(i) => format!("<{i}>"),
            Tok::Var(v) => format!("?{v}"),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::Dot => "'.'".into(),
            Tok::Comma => "','".into(),
            Tok::Punct(c) => format!("'{c}'"),
        }
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '.')
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        match c {
            c if c.is_whitespace() => {
                it.next();
            }
            '{' => {
                it.next();
                out.push((pos, Tok::LBrace));
            }
            '}' => {
                it.next();
                out.push((pos, Tok::RBrace));
            }
            '.' => {
                it.next();
                out.push((pos, Tok::Dot));
            }
            ',' => {
                it.next();
                out.push((pos, Tok::Comma));
            }
            '<' => {
                it.next();
                let start = pos + 1;
                let mut end = None;
                for (p, ch) in it.by_ref() {
                    if ch == '>' {
                        end = Some(p);
                        break;
                    }
                    if ch.is_whitespace() || ch == '<' {
                        return Err(ParseError::new(p, "unterminated IRI: expected '>'"));
                    }
                }
                let end = end.ok_or_else(|| ParseError::new(text.len(), "unterminated IRI: expected '>'"))?;
                out.push((pos, Tok::Iri(text[start..end].to_string())));
            }
            '?' | '$' => {
                it.next();
                let start = pos + 1;
                let mut end = start;
                while let Some(&(p, ch)) = it.peek() {
                    if ch.is_alphanumeric() || ch == '_' {
                        end = p + ch.len_utf8();
                        it.next();
                    } else {
                        break;
                    }
                }
                if end == start {
                    return Err(ParseError::new(pos, "expected variable name after '?'"));
                }
                out.push((pos, Tok::Var(text[start..end].to_string())));
            }
            c if c.is_alphanumeric() || c == '_' => {
                let start = pos;
                let mut end = start;
                while let Some(&(p, ch)) = it.peek() {
                    if is_name_char(ch) {
                        end = p + ch.len_utf8();
                        it.next();
                    } else {
                        break;
                    }
                }
                // a trailing '.' terminates a triple rather than belonging to the name
                let mut word = &text[start..end];
                let mut dots = 0;
                while word.ends_with('.') {
                    word = &word[..word.len() - 1];
                    dots += 1;
                }
                out.push((start, Tok::Word(word.to_string())));
                for d in 0..dots {
                    out.push((start + word.len() + d, Tok::Dot));
                }
            }
            other => {
                it.next();
                out.push((pos, Tok::Punct(other)));
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

const UNSUPPORTED: &[&str] = &[
    "OPTIONAL",
    "FILTER",
    "UNION",
    "MINUS",
    "BIND",
    "VALUES",
    "GRAPH",
    "SERVICE",
    "ORDER",
    "LIMIT",
    "OFFSET",
    "GROUP",
    "HAVING",
    "CONSTRUCT",
    "DESCRIBE",
    "PREFIX",
    "BASE",
    "COUNT",
];

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(Tok::Word(w)) if UNSUPPORTED.iter().any(|k| k.eq_ignore_ascii_case(w)) => ParseError::new(
                self.offset(),
                format!("unsupported construct '{w}': expected {expected}"),
            ),
            Some(t) => ParseError::new(self.offset(), format!("expected {expected}, found {}", t.describe())),
            None => ParseError::new(self.offset(), format!("expected {expected}, found end of input")),
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        match self.peek() {
            Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw) => {
                self.pos += 1;
                true
            }
            _ => false,
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.keyword(kw) {
            Ok(())
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn query(&mut self) -> Result<QueryAst, ParseError> {
        let form = if self.keyword("ASK") {
            QueryForm::Ask
        } else if self.keyword("SELECT") {
            self.expect_keyword("DISTINCT")?;
            let mut vars = Vec::new();
            loop {
                let at = self.offset();
                match self.peek() {
                    Some(Tok::Var(v)) => {
                        if vars.contains(v) {
                            return Err(ParseError::new(at, format!("duplicate select variable ?{v}")));
                        }
                        vars.push(v.clone());
                        self.pos += 1;
                    }
                    _ if vars.is_empty() => return Err(self.unexpected("select variable")),
                    _ => break,
                }
                self.eat(&Tok::Comma);
            }
            QueryForm::SelectDistinct(vars)
        } else {
            return Err(self.unexpected("ASK or SELECT"));
        };
        self.keyword("WHERE");
        let group_at = self.offset();
        if !self.eat(&Tok::LBrace) {
            return Err(self.unexpected("'{'"));
        }
        let mut patterns = Vec::new();
        loop {
            if self.peek() == Some(&Tok::RBrace) {
                if patterns.is_empty() {
                    return Err(self.unexpected("triple pattern"));
                }
                self.pos += 1;
                break;
            }
            patterns.push(self.triple()?);
            if self.eat(&Tok::Dot) {
                continue;
            }
            if self.peek() != Some(&Tok::RBrace) {
                return Err(self.unexpected("'.' or '}'"));
            }
        }
        if self.pos < self.toks.len() {
            return Err(self.unexpected("end of query"));
        }
        let ast = QueryAst { form, patterns };
        let present = ast.pattern_vars();
        if let Some(missing) = ast.select_vars().iter().find(|v| !present.contains(&v.as_str())) {
            return Err(ParseError::new(
                group_at,
                format!("select variable ?{missing} does not occur in the pattern"),
            ));
        }
        Ok(ast)
    }

    fn triple(&mut self) -> Result<TriplePattern, ParseError> {
        let subject = self.term()?;
        let pred_at = self.offset();
        let predicate = self.term()?;
        if let Term::Var(v) = &predicate {
            return Err(ParseError::new(
                pred_at,
                format!("predicate must be an IRI or placeholder, found ?{v}"),
            ));
        }
        let object = self.term()?;
        Ok(TriplePattern {
            subject,
            predicate,
            object,
        })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let at = self.offset();
        let term = match self.peek() {
            Some(Tok::Var(v)) => Term::Var(v.clone()),
            Some(Tok::Iri(raw)) => {
                if let Some(label) = raw.strip_prefix(PLACEHOLDER_PREFIX) {
                    if !is_placeholder_marker(&format!("<{label}>")) {
                        return Err(ParseError::new(at, format!("invalid placeholder label '{label}'")));
                    }
                    Term::Placeholder(label.to_string())
                } else if raw.is_empty() {
                    return Err(ParseError::new(at, "empty IRI"));
                } else if raw.contains("://") {
                    Term::Iri(raw.clone())
                } else {
                    Term::Iri(expand_prefixed(raw).unwrap_or_else(|| raw.clone()))
                }
            }
            Some(Tok::Word(w)) if w.contains(':') => match expand_prefixed(w) {
                Some(iri) => Term::Iri(iri),
                None => return Err(ParseError::new(at, format!("unknown prefix in '{w}'"))),
            },
            _ => return Err(self.unexpected("term (IRI, variable or placeholder)")),
        };
        self.pos += 1;
        Ok(term)
    }
}

/// Parses a query in the supported subset.
pub fn parse_query(text: &str) -> Result<QueryAst, ParseError> {
    let toks = lex(text)?;
    Parser {
        toks,
        pos: 0,
        end: text.len(),
    }
    .query()
}

/// Whether placeholder predicates are an error or silently skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredicateMode {
    Concrete,
    SkipPlaceholders,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("triple pattern {index} has placeholder predicate <{PLACEHOLDER_PREFIX}{label}>")]
pub struct PlaceholderPredicate {
    pub index: usize,
    pub label: String,
}

/// Predicate IRIs in textual triple order, duplicates preserved.
pub fn extract_predicates(ast: &QueryAst, mode: PredicateMode) -> Result<Vec<String>, PlaceholderPredicate> {
    let mut out = Vec::with_capacity(ast.patterns.len());
    for (index, p) in ast.patterns.iter().enumerate() {
        match &p.predicate {
            Term::Iri(iri) => out.push(iri.clone()),
            Term::Placeholder(label) if mode == PredicateMode::Concrete => {
                return Err(PlaceholderPredicate {
                    index,
                    label: label.clone(),
                });
            }
            // variables never parse in predicate position; treat like placeholders
            _ => {}
        }
    }
    Ok(out)
}

/// True iff `needle` is an ordered, not necessarily contiguous, subsequence
/// of `haystack`.
pub fn predicates_subsequence<S: AsRef<str>>(needle: &[S], haystack: &[S]) -> bool {
    let mut rest = haystack.iter();
    needle.iter().all(|n| rest.any(|h| h.as_ref() == n.as_ref()))
}
