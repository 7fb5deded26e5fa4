//! NLQ tokenization.

/// Returns true for NLQ placeholder markers such as `<A>` or `<A1>`.
pub fn is_placeholder_marker(token: &str) -> bool {
    let Some(inner) = token.strip_prefix('<').and_then(|t| t.strip_suffix('>')) else {
        return false;
    };
    let mut chars = inner.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
        && chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit())
}

/// Label carried by a placeholder marker (`<B>` -> `B`).
pub fn marker_label(token: &str) -> Option<&str> {
    if is_placeholder_marker(token) {
        Some(&token[1..token.len() - 1])
    } else {
        None
    }
}

fn is_sentence_punct(c: char) -> bool {
    matches!(c, '?' | '!' | '.')
}

/// Splits a natural-language question into lowercase word tokens.
///
/// Whitespace separates tokens. Trailing `?`, `!` and `.` characters are
/// split off into tokens of their own. Placeholder markers keep their case.
pub fn tokenize_nlq(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let body = raw.trim_end_matches(is_sentence_punct);
        let punct = &raw[body.len()..];
        if !body.is_empty() {
            if is_placeholder_marker(body) {
                out.push(body.to_string());
            } else {
                out.push(body.to_lowercase());
            }
        }
        out.extend(punct.chars().map(String::from));
    }
    out
}

/// Inverse of [`tokenize_nlq`] for already-tokenized text.
pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut s = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(t.as_ref());
    }
    s
}
