//! NLQ templates with slots, and the slot matcher.

use std::collections::BTreeMap;
use std::fmt;

use super::tokenize::{marker_label, tokenize_nlq};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternElement {
    Word(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    #[error("slots <{0}> and <{1}> are adjacent")]
    AdjacentSlots(String, String),
    #[error("pattern has no literal word")]
    NoWords,
    #[error("slot label <{0}> used twice")]
    DuplicateLabel(String),
}

/// A question pattern: literal words interleaved with labelled slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NlqPattern {
    elements: Vec<PatternElement>,
}

impl NlqPattern {
    pub fn new(elements: Vec<PatternElement>) -> Result<Self, PatternError> {
        let mut labels: Vec<&str> = Vec::new();
        let mut prev_slot: Option<&str> = None;
        for e in &elements {
            match e {
                PatternElement::Slot(l) => {
                    if let Some(p) = prev_slot {
                        return Err(PatternError::AdjacentSlots(p.to_string(), l.clone()));
                    }
                    if labels.contains(&l.as_str()) {
                        return Err(PatternError::DuplicateLabel(l.clone()));
                    }
                    labels.push(l);
                    prev_slot = Some(l);
                }
                PatternElement::Word(_) => prev_slot = None,
            }
        }
        if !elements.iter().any(|e| matches!(e, PatternElement::Word(_))) {
            return Err(PatternError::NoWords);
        }
        Ok(Self { elements })
    }

    /// Parses marker text such as `"Is <B> in the <A> industry?"`.
    pub fn parse(text: &str) -> Result<Self, PatternError> {
        Self::from_tokens(&tokenize_nlq(text))
    }

    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Result<Self, PatternError> {
        Self::new(
            tokens
                .iter()
                .map(|t| match marker_label(t.as_ref()) {
                    Some(l) => PatternElement::Slot(l.to_string()),
                    None => PatternElement::Word(t.as_ref().to_lowercase()),
                })
                .collect(),
        )
    }

    pub fn elements(&self) -> &[PatternElement] {
        &self.elements
    }

    /// Slot labels in pattern order.
    pub fn labels(&self) -> Vec<&str> {
        self.elements
            .iter()
            .filter_map(|e| match e {
                PatternElement::Slot(l) => Some(l.as_str()),
                PatternElement::Word(_) => None,
            })
            .collect()
    }

    pub fn slot_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, PatternElement::Slot(_)))
            .count()
    }

    /// Tokens of the marker form (`<A>` for slots).
    pub fn to_tokens(&self) -> Vec<String> {
        self.elements
            .iter()
            .map(|e| match e {
                PatternElement::Word(w) => w.clone(),
                PatternElement::Slot(l) => format!("<{l}>"),
            })
            .collect()
    }

    /// Replaces each slot with the tokens given for its label.
    pub fn fill<S: AsRef<str>>(&self, fillers: &BTreeMap<String, Vec<S>>) -> Option<Vec<String>> {
        let mut out = Vec::new();
        for e in &self.elements {
            match e {
                PatternElement::Word(w) => out.push(w.clone()),
                PatternElement::Slot(l) => out.extend(fillers.get(l)?.iter().map(|t| t.as_ref().to_string())),
            }
        }
        Some(out)
    }
}

impl fmt::Display for NlqPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_tokens().join(" "))
    }
}

/// Token span `[start, end)` of a matched question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// Slot label -> span of the matched question.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SlotBindings {
    pub spans: BTreeMap<String, Span>,
}

impl SlotBindings {
    /// Tokens bound to `label` in `nlq`.
    pub fn tokens<'a, S: AsRef<str>>(&self, label: &str, nlq: &'a [S]) -> Option<&'a [S]> {
        self.spans.get(label).map(|s| &nlq[s.start..s.end])
    }

    /// Bound text (tokens joined by single spaces).
    pub fn text<S: AsRef<str>>(&self, label: &str, nlq: &[S]) -> Option<String> {
        self.tokens(label, nlq)
            .map(|t| t.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" "))
    }

    /// Total number of tokens consumed by slots.
    pub fn slot_tokens(&self) -> usize {
        self.spans.values().map(Span::len).sum()
    }
}

fn word_eq(a: &str, b: &str) -> bool {
    a == b || a.to_lowercase() == b.to_lowercase()
}

/// Matches a question against a pattern.
///
/// Words must match case-insensitively; every slot absorbs one or more
/// contiguous tokens. Among all valid segmentations the leftmost-shortest
/// one is returned: the first slot is as short as possible, then the second,
/// and so on.
pub fn match_nlq<S: AsRef<str>>(pattern: &NlqPattern, nlq: &[S]) -> Option<SlotBindings> {
    let elements = pattern.elements();
    // literal words left to place after each element index; bounds slot growth
    let mut words_after = vec![0usize; elements.len() + 1];
    for i in (0..elements.len()).rev() {
        words_after[i] = words_after[i + 1] + usize::from(matches!(elements[i], PatternElement::Word(_)));
    }
    let mut slots_after = vec![0usize; elements.len() + 1];
    for i in (0..elements.len()).rev() {
        slots_after[i] = slots_after[i + 1] + usize::from(matches!(elements[i], PatternElement::Slot(_)));
    }
    if nlq.len() < words_after[0] + slots_after[0] {
        return None;
    }
    let mut spans = Vec::with_capacity(pattern.slot_count());
    if search(elements, nlq, 0, 0, &words_after, &slots_after, &mut spans) {
        Some(SlotBindings {
            spans: spans.into_iter().collect(),
        })
    } else {
        None
    }
}

fn search<S: AsRef<str>>(
    elements: &[PatternElement],
    nlq: &[S],
    ei: usize,
    ti: usize,
    words_after: &[usize],
    slots_after: &[usize],
    spans: &mut Vec<(String, Span)>,
) -> bool {
    if ei == elements.len() {
        return ti == nlq.len();
    }
    let remaining = nlq.len() - ti;
    if remaining < words_after[ei] + slots_after[ei] {
        return false;
    }
    match &elements[ei] {
        PatternElement::Word(w) => {
            word_eq(w, nlq[ti].as_ref()) && search(elements, nlq, ei + 1, ti + 1, words_after, slots_after, spans)
        }
        PatternElement::Slot(label) => {
            let reserve = words_after[ei + 1] + slots_after[ei + 1];
            let max_len = remaining - reserve;
            // a slot followed by a word can only end right before that word
            let next_word = match elements.get(ei + 1) {
                Some(PatternElement::Word(w)) => Some(w.as_str()),
                _ => None,
            };
            for len in 1..=max_len {
                let end = ti + len;
                if let Some(w) = next_word {
                    if !word_eq(w, nlq[end].as_ref()) {
                        continue;
                    }
                }
                spans.push((label.clone(), Span::new(ti, end)));
                if search(elements, nlq, ei + 1, end, words_after, slots_after, spans) {
                    return true;
                }
                spans.pop();
            }
            false
        }
    }
}
