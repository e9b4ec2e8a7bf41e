//! Bundled offline data: a caption corpus, a demonstration pool for
//! caption style transfer, and a synonym dictionary.

use crate::scc::StaticDictionary;
use crate::skd::{pool_from_json, Demonstration};
use crate::text_model::{tokenize, Prompt};

/// One caption per line.
pub const CAPTIONS: &str = include_str!("../fixtures/captions.txt");
/// JSON list of `{"image_id", "alice", "bob"}`.
pub const DEMONSTRATIONS: &str = include_str!("../fixtures/demonstrations.json");
/// JSON object mapping a word to `[{"synonym", "p"}]`.
pub const SYNONYMS: &str = include_str!("../fixtures/synonyms.json");

/// Parses a corpus: one prompt per non-blank line.
pub fn parse_corpus(text: &str) -> Result<Vec<Prompt>, crate::text_model::TextError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(tokenize)
        .collect()
}

pub fn corpus() -> Vec<Prompt> {
    parse_corpus(CAPTIONS).expect("bundled corpus is valid")
}

pub fn demonstration_pool() -> Vec<Demonstration> {
    pool_from_json(DEMONSTRATIONS).expect("bundled demonstrations are valid")
}

pub fn synonym_dictionary() -> StaticDictionary {
    StaticDictionary::from_json(SYNONYMS).expect("bundled dictionary is valid")
}
