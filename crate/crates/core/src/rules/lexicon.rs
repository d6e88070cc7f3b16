use std::collections::BTreeMap;

use crate::text::{is_stopword, word_spans};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("{source_tag} line {line}: {message}")]
    Line {
        source_tag: String,
        line: usize,
        message: String,
    },
}

/// Phrase → replacement phrases. Keys are lowercased; lookups are
/// case-insensitive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    entries: BTreeMap<String, Vec<String>>,
    source: String,
}

/// A lexicon phrase found in a text, with its byte range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseMatch {
    pub key: String,
    pub start: usize,
    pub end: usize,
    pub tokens: usize,
}

fn key_of(phrase: &str) -> String {
    phrase.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl SynonymLexicon {
    /// Parses `phrase<TAB>alt1|alt2|...` lines; `#` starts a comment line.
    pub fn parse(text: &str, source: &str) -> Result<Self, LexiconError> {
        let mut lex = SynonymLexicon {
            entries: BTreeMap::new(),
            source: source.to_string(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |message: String| LexiconError::Line {
                source_tag: source.to_string(),
                line: i + 1,
                message,
            };
            let (phrase, alts) = line
                .split_once('\t')
                .ok_or_else(|| err("expected `phrase<TAB>alternatives`".into()))?;
            let alts: Vec<String> = alts.split('|').map(|a| a.trim().to_string()).collect();
            lex.insert(phrase, alts).map_err(err)?;
        }
        Ok(lex)
    }

    pub fn from_pairs<'a>(
        source: &str,
        pairs: impl IntoIterator<Item = (&'a str, &'a [&'a str])>,
    ) -> Result<Self, String> {
        let mut lex = SynonymLexicon {
            entries: BTreeMap::new(),
            source: source.to_string(),
        };
        for (p, alts) in pairs {
            lex.insert(p, alts.iter().map(|s| s.to_string()).collect())?;
        }
        Ok(lex)
    }

    fn insert(&mut self, phrase: &str, alts: Vec<String>) -> Result<(), String> {
        let key = key_of(phrase);
        if key.is_empty() {
            return Err("empty phrase".into());
        }
        if alts.is_empty() || alts.iter().any(|a| a.is_empty()) {
            return Err(format!("`{key}` has an empty replacement"));
        }
        if alts.iter().any(|a| key_of(a) == key) {
            return Err(format!("`{key}` maps to itself"));
        }
        let slot = self.entries.entry(key).or_default();
        for a in alts {
            if !slot.contains(&a) {
                slot.push(a);
            }
        }
        Ok(())
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, phrase: &str) -> Option<&[String]> {
        self.entries.get(&key_of(phrase)).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    fn max_tokens(&self) -> usize {
        self.entries
            .keys()
            .map(|k| word_spans(k).len())
            .max()
            .unwrap_or(0)
    }

    /// At each word position, the longest lexicon phrase starting there.
    /// Single stopwords are never matched.
    pub fn find_phrases(&self, text: &str) -> Vec<PhraseMatch> {
        let spans = word_spans(text);
        let lower: Vec<String> = spans.iter().map(|s| s.text.to_lowercase()).collect();
        let longest = self.max_tokens();
        let mut out = Vec::new();
        for i in 0..spans.len() {
            let upto = longest.min(spans.len() - i);
            for n in (1..=upto).rev() {
                let key = lower[i..i + n].join(" ");
                if n == 1 && is_stopword(&key) {
                    continue;
                }
                if self.entries.contains_key(&key) {
                    out.push(PhraseMatch {
                        key,
                        start: spans[i].start,
                        end: spans[i + n - 1].end,
                        tokens: n,
                    });
                    break;
                }
            }
        }
        out
    }
}
