use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::lexicon::SynonymLexicon;
use crate::model::Table;
use crate::rng::SeededRng;
use crate::text::match_case;

/// Default per-header replacement probability.
pub const DEFAULT_RENAME_PROBABILITY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rename {
    pub column: usize,
    pub from: String,
    pub to: String,
}

fn collides(table: &Table, column: usize, name: &str) -> bool {
    let n = name.trim().to_lowercase();
    table
        .header
        .iter()
        .enumerate()
        .any(|(j, h)| j != column && h.trim().to_lowercase() == n)
}

/// Visits headers left to right. `pick` returns `None` for ineligible
/// headers, `Some(None)` when the draw declines, and `Some(Some(name))` to
/// rename. Renames that would collide with another column are dropped.
fn rename_headers<F>(table: &Table, seed: u64, mut pick: F) -> (Table, Vec<Rename>)
where
    F: FnMut(&str, &mut SeededRng) -> Option<Option<String>>,
{
    let mut rng = SeededRng::new(seed);
    let mut out = table.clone();
    let mut renames = Vec::new();
    for j in 0..out.header.len() {
        let from = out.header[j].clone();
        let Some(choice) = pick(&from, &mut rng) else {
            continue;
        };
        let Some(to) = choice else { continue };
        if to == from || collides(&out, j, &to) {
            continue;
        }
        out.header[j] = to.clone();
        renames.push(Rename { column: j, from, to });
    }
    (out, renames)
}

/// Replaces each header that has a lexicon entry with probability `p`.
pub fn rta_header_synonym(
    table: &Table,
    lexicon: &SynonymLexicon,
    seed: u64,
    p: f64,
) -> (Table, Vec<Rename>) {
    rename_headers(table, seed, |name, rng| {
        let alts = lexicon.get(name.trim())?;
        if !rng.chance(p) {
            return Some(None);
        }
        let alt = &alts[rng.below(alts.len())];
        Some(Some(match_case(name.trim(), alt)))
    })
}

/// Ordered abbreviation rules: exact map, initialism, vowel drop, truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbbreviationRules {
    exact: BTreeMap<String, String>,
    /// Single words need at least this many letters to be eligible.
    pub min_letters: usize,
    /// Truncation keeps this many characters and appends a period.
    pub truncate_to: usize,
}

impl Default for AbbreviationRules {
    fn default() -> Self {
        AbbreviationRules {
            exact: BTreeMap::new(),
            min_letters: 4,
            truncate_to: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbbreviationRule {
    Exact,
    Initialism,
    VowelDrop,
    Truncation,
}

impl AbbreviationRules {
    /// Exact map from `phrase<TAB>abbreviation` lines. Entries that are not
    /// strictly shorter than their phrase are rejected.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut rules = AbbreviationRules::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('\t')
                .ok_or_else(|| format!("line {}: expected `phrase<TAB>abbreviation`", i + 1))?;
            let (k, v) = (k.trim(), v.split('|').next().unwrap_or("").trim());
            if v.is_empty() || v.chars().count() >= k.chars().count() {
                return Err(format!("line {}: `{v}` is not shorter than `{k}`", i + 1));
            }
            rules.exact.insert(k.to_lowercase(), v.to_string());
        }
        Ok(rules)
    }

    pub fn with_exact(mut self, phrase: &str, abbrev: &str) -> Self {
        self.exact.insert(phrase.trim().to_lowercase(), abbrev.to_string());
        self
    }

    pub fn is_eligible(&self, name: &str) -> bool {
        let words = name.split_whitespace().count();
        let letters = name.chars().filter(|c| c.is_alphabetic()).count();
        words >= 2 || letters >= self.min_letters
    }

    /// First applicable rule's output; always strictly shorter and non-empty.
    pub fn abbreviate(&self, name: &str) -> Option<(String, AbbreviationRule)> {
        let name = name.trim();
        if !self.is_eligible(name) {
            return None;
        }
        let len = name.chars().count();
        let shorter = |s: &str| !s.is_empty() && s.chars().count() < len;
        if let Some(a) = self.exact.get(&name.to_lowercase()) {
            if shorter(a) {
                return Some((a.clone(), AbbreviationRule::Exact));
            }
        }
        let words: Vec<&str> = name.split_whitespace().collect();
        if words.len() >= 2 {
            let init: String = words
                .iter()
                .filter_map(|w| w.chars().find(|c| c.is_alphanumeric()))
                .flat_map(char::to_uppercase)
                .collect();
            if init.chars().count() >= 2 && shorter(&init) {
                return Some((init, AbbreviationRule::Initialism));
            }
        }
        let mut chars = name.chars();
        let first = chars.next()?;
        let dropped: String = std::iter::once(first)
            .chain(chars.filter(|c| !"aeiouAEIOU".contains(*c)))
            .collect();
        if dropped.chars().count() >= 2 && shorter(&dropped) {
            return Some((dropped, AbbreviationRule::VowelDrop));
        }
        let truncated: String = name.chars().take(self.truncate_to).collect::<String>() + ".";
        if shorter(&truncated) {
            return Some((truncated, AbbreviationRule::Truncation));
        }
        None
    }
}

/// Replaces each eligible header by its abbreviation with probability `p`.
pub fn rta_header_abbreviation(
    table: &Table,
    rules: &AbbreviationRules,
    seed: u64,
    p: f64,
) -> (Table, Vec<Rename>) {
    rename_headers(table, seed, |name, rng| {
        let (abbr, _) = rules.abbreviate(name)?;
        Some(rng.chance(p).then_some(abbr))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abbreviation_rules_in_order() {
        let r = AbbreviationRules::default().with_exact("Number", "No.");
        assert_eq!(r.abbreviate("Grand Prix").unwrap(), ("GP".into(), AbbreviationRule::Initialism));
        assert_eq!(r.abbreviate("Points").unwrap(), ("Pnts".into(), AbbreviationRule::VowelDrop));
        assert_eq!(r.abbreviate("Number").unwrap(), ("No.".into(), AbbreviationRule::Exact));
        assert_eq!(r.abbreviate("Age"), None);
        assert_eq!(
            r.abbreviate("Aeioua").unwrap(),
            ("Aeio.".into(), AbbreviationRule::Truncation)
        );
    }

    #[test]
    fn exact_entries_must_shrink() {
        assert!(AbbreviationRules::parse("Team\tTeams\n").is_err());
        assert!(AbbreviationRules::parse("Position\tPos.\n").is_ok());
    }

    #[test]
    fn empty_lexicon_is_identity() {
        let t = Table::new(["runner-up"], [["x"]]);
        let (out, map) = rta_header_synonym(&t, &SynonymLexicon::default(), 1, 1.0);
        assert_eq!(out, t);
        assert!(map.is_empty());
    }

    #[test]
    fn colliding_rename_is_dropped() {
        let lex = SynonymLexicon::parse("score\tresult\n", "t").unwrap();
        let t = Table::new(["Score", "Result"], [["1", "w"]]);
        let (out, map) = rta_header_synonym(&t, &lex, 3, 1.0);
        assert_eq!(out, t);
        assert!(map.is_empty());
    }
}
