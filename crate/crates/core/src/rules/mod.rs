//! Rule-based generators: dictionary header renames, abbreviation rules,
//! compound-column splitting, inferable-column masking, and a dictionary
//! synonym attack on questions.

mod columns;
mod header;
mod lexicon;
mod nlq;

pub use columns::{
    detect_inferable_columns, mask_column, rta_column_extension, rta_column_extension_with,
    ColumnRejection, ColumnSplit, ExtensionReport, InferableColumn, InferenceKind, MaskError,
    DEFAULT_DELIMITERS,
};
pub use header::{
    rta_header_abbreviation, rta_header_synonym, AbbreviationRule, AbbreviationRules, Rename,
    DEFAULT_RENAME_PROBABILITY,
};
pub use lexicon::{LexiconError, PhraseMatch, SynonymLexicon};
pub use nlq::{rta_nlq_synonym_attack, substitution_candidates, Substitution};
