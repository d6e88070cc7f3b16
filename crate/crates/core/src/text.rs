//! Small tokenization helpers shared by the rule, retrieval, and validator code.

/// Lowercased alphanumeric runs.
pub fn alnum_tokens(s: &str) -> Vec<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// A word-like span in the original text with its byte range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

/// Words (alphanumerics plus inner apostrophes and hyphens) with byte offsets.
pub fn word_spans(s: &str) -> Vec<Span<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    for (k, &(i, c)) in chars.iter().enumerate() {
        let joiner = (c == '\'' || c == '’' || c == '-')
            && start.is_some()
            && chars.get(k + 1).is_some_and(|&(_, n)| n.is_alphanumeric());
        if c.is_alphanumeric() || joiner {
            start.get_or_insert(i);
        } else if let Some(b) = start.take() {
            out.push(Span { text: &s[b..i], start: b, end: i });
        }
    }
    if let Some(b) = start {
        out.push(Span { text: &s[b..], start: b, end: s.len() });
    }
    out
}

/// Copies the capitalization pattern of `model` onto `replacement`: all caps,
/// leading capital, or unchanged.
pub fn match_case(model: &str, replacement: &str) -> String {
    let letters: Vec<char> = model.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        return replacement.to_uppercase();
    }
    if letters.first().is_some_and(|c| c.is_uppercase()) {
        let mut cs = replacement.chars();
        return match cs.next() {
            Some(f) => f.to_uppercase().chain(cs).collect(),
            None => String::new(),
        };
    }
    replacement.to_string()
}

/// Common English function words, used to keep substitutions on content words.
pub const STOPWORDS: &[&str] = &[
    "a", "an", "the", "of", "in", "on", "at", "to", "for", "by", "with", "from", "and", "or",
    "is", "was", "are", "were", "be", "been", "did", "do", "does", "it", "its", "that", "this",
    "which", "who", "what", "when", "where", "how", "as", "than", "then", "there", "their",
];

pub fn is_stopword(w: &str) -> bool {
    STOPWORDS.contains(&w.to_lowercase().as_str())
}

/// Lowercased, whitespace-collapsed, trailing punctuation removed. Two
/// questions equal under this form count as unchanged.
pub fn normalize_question(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
        .trim_end_matches(['?', '.', '!', ' '])
        .to_string()
}
