use crate::text::alnum_tokens;

const PHRASES: &[&[&str]] = &[
    &["listed"],
    &["on", "the", "table"],
    &["first", "row"],
    &["last", "row"],
    &["top", "of", "the"],
    &["bottom", "of", "the"],
    &["comes", "first"],
    &["comes", "last"],
    &["above"],
    &["below"],
];

const ANCHORS: &[&str] = &["table", "tables", "list", "lists", "chart", "charts", "row", "rows"];

/// Maximum token distance between "first"/"last" and a layout anchor.
const WINDOW: usize = 4;

/// True when the question appears to depend on absolute row or column
/// position, which row and column shuffles would invalidate.
pub fn is_position_dependent(question: &str) -> bool {
    let toks = alnum_tokens(question);
    let has_phrase = PHRASES
        .iter()
        .any(|p| toks.windows(p.len()).any(|w| w.iter().zip(p.iter()).all(|(a, b)| a == b)));
    if has_phrase {
        return true;
    }
    toks.iter().enumerate().any(|(i, t)| {
        (t == "first" || t == "last")
            && toks
                .iter()
                .enumerate()
                .any(|(j, u)| i.abs_diff(j) <= WINDOW && ANCHORS.contains(&u.as_str()))
    })
}
