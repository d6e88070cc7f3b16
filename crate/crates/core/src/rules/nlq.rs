use serde::{Deserialize, Serialize};

use super::lexicon::SynonymLexicon;
use crate::adapters::{AdapterError, ModelAdapter};
use crate::metrics::predictions_agree;
use crate::model::Table;
use crate::text::match_case;

/// One phrase substitution in a question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    pub question: String,
    pub from: String,
    pub to: String,
    /// Candidates evaluated before this one was chosen, itself included.
    pub tried: usize,
}

/// Every single-phrase substitution in priority order: longer phrases
/// first, then earlier positions, then lexicon alternative order.
pub fn substitution_candidates(question: &str, lexicon: &SynonymLexicon) -> Vec<Substitution> {
    let mut matches = lexicon.find_phrases(question);
    matches.sort_by(|a, b| b.tokens.cmp(&a.tokens).then(a.start.cmp(&b.start)));
    let mut out = Vec::new();
    for m in matches {
        let original = &question[m.start..m.end];
        for alt in lexicon.get(&m.key).unwrap_or(&[]) {
            let to = match_case(original, alt);
            let q = format!("{}{}{}", &question[..m.start], to, &question[m.end..]);
            if q != question {
                out.push(Substitution {
                    question: q,
                    from: original.to_string(),
                    to,
                    tried: 0,
                });
            }
        }
    }
    out
}

/// Dictionary synonym attack. Without a model, returns the top-priority
/// substitution. With a model, tries up to `budget` candidates and returns
/// the first whose prediction differs from the prediction on the original
/// question; `None` if none flips.
pub fn rta_nlq_synonym_attack(
    question: &str,
    lexicon: &SynonymLexicon,
    model: Option<(&dyn ModelAdapter, &Table)>,
    budget: usize,
) -> Result<Option<Substitution>, AdapterError> {
    let candidates = substitution_candidates(question, lexicon);
    let Some((adapter, table)) = model else {
        return Ok(candidates.into_iter().next().map(|mut s| {
            s.tried = 1;
            s
        }));
    };
    if candidates.is_empty() {
        return Ok(None);
    }
    let original = adapter.answer(table, question)?;
    for (k, mut cand) in candidates.into_iter().take(budget.max(1)).enumerate() {
        let pred = adapter.answer(table, &cand.question)?;
        if !predictions_agree(&pred, &original) {
            cand.tried = k + 1;
            return Ok(Some(cand));
        }
    }
    Ok(None)
}
