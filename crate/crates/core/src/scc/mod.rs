//! Synonym-based semantic channel coding.
//!
//! Each head word is swapped for the longest in-context synonym whose
//! probability reaches `p_c` and whose length stays within
//! `[|word|, |word| + expansion_cap]`. Longer words survive character
//! errors better because a few flipped characters rarely bring them closer
//! to another vocabulary word.

pub mod oracle;
pub mod survival;

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use oracle::{LlmSynonymOracle, StaticDictionary, SynonymOracle, MASK_TOKEN};
pub use survival::{survival_decode, Vocabulary};

use crate::text_model::{tokenize, Prompt, TextError, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SccError {
    #[error("synonym oracle unavailable: {0}")]
    OracleUnavailable(String),
    #[error("synonym dictionary: {0}")]
    Dictionary(String),
    #[error("word {word:?} is not at index {index} of the context")]
    WordNotInContext { word: String, index: usize },
    #[error("invalid SCC configuration: {0}")]
    InvalidConfig(String),
    #[error("survival vocabulary is empty")]
    EmptyVocabulary,
    #[error(transparent)]
    Text(#[from] TextError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynonymCandidate {
    pub text: String,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    StaticDictionary,
    LlmClient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SccConfig {
    /// Admission threshold on the oracle probability.
    pub p_c: f64,
    /// Most characters a substitution may add to a word.
    pub expansion_cap: usize,
    pub oracle: OracleKind,
}

impl Default for SccConfig {
    fn default() -> Self {
        SccConfig {
            p_c: 0.72,
            expansion_cap: 4,
            oracle: OracleKind::StaticDictionary,
        }
    }
}

impl SccConfig {
    pub fn validate(&self) -> Result<(), SccError> {
        if self.p_c > 0.0 && self.p_c <= 1.0 {
            Ok(())
        } else {
            Err(SccError::InvalidConfig(format!(
                "p_c must lie in (0, 1], got {}",
                self.p_c
            )))
        }
    }
}

/// How one head word was encoded.
#[derive(Debug, Clone, PartialEq)]
pub struct SccEncoding {
    pub head_word: Word,
    /// Every well-formed oracle proposal, `S`.
    pub candidates: Vec<SynonymCandidate>,
    /// Proposals with probability at least `p_c`, `Ŝ`.
    pub admitted: Vec<SynonymCandidate>,
    /// Admitted lengths between `|head_word|` and `L_c`.
    pub levels: BTreeSet<usize>,
    /// `L_c`, the longest admitted length.
    pub max_level: Option<usize>,
    pub chosen: SynonymCandidate,
    /// No admitted synonym fit the length window; the word is sent as is.
    pub identity: bool,
}

impl SccEncoding {
    /// Characters added by the substitution.
    pub fn expansion(&self) -> usize {
        self.chosen.text.len() - self.head_word.char_count()
    }
}

/// A proposal usable as a single transmitted word.
fn well_formed(candidate: &SynonymCandidate) -> bool {
    candidate.probability.is_finite()
        && tokenize(&candidate.text)
            .map(|p| p.len() == 1 && p.words()[0].text() == candidate.text)
            .unwrap_or(false)
}

/// Longest first, then more probable, then lexicographically smaller.
fn preference(a: &SynonymCandidate, b: &SynonymCandidate) -> Ordering {
    a.text
        .len()
        .cmp(&b.text.len())
        .then_with(|| a.probability.total_cmp(&b.probability))
        .then_with(|| b.text.cmp(&a.text))
}

/// Encodes `word`, which must sit at `word.index()` in `context`. The
/// oracle sees `context` with the word masked.
pub fn encode_word(
    word: &Word,
    context: &Prompt,
    cfg: &SccConfig,
    oracle: &dyn SynonymOracle,
) -> Result<SccEncoding, SccError> {
    cfg.validate()?;
    if context.word(word.index()).map(Word::text) != Some(word.text()) {
        return Err(SccError::WordNotInContext {
            word: word.text().to_owned(),
            index: word.index(),
        });
    }
    let masked = context.masked(word.index(), MASK_TOKEN);
    let candidates: Vec<SynonymCandidate> = oracle
        .candidates(&masked, word.text())?
        .into_iter()
        .filter(well_formed)
        .map(|c| SynonymCandidate {
            probability: c.probability.clamp(0.0, 1.0),
            ..c
        })
        .collect();
    let admitted: Vec<SynonymCandidate> = candidates
        .iter()
        .filter(|c| c.probability >= cfg.p_c)
        .cloned()
        .collect();

    let base = word.char_count();
    let max_level = admitted.iter().map(|c| c.text.len()).max();
    let levels: BTreeSet<usize> = admitted
        .iter()
        .map(|c| c.text.len())
        .filter(|&len| len >= base)
        .collect();
    let best = admitted
        .iter()
        .filter(|c| c.text.len() >= base && c.text.len() <= base + cfg.expansion_cap)
        .max_by(|a, b| preference(a, b))
        .cloned();

    let identity = best.is_none();
    let chosen = best.unwrap_or_else(|| SynonymCandidate {
        text: word.text().to_owned(),
        probability: 1.0,
    });
    Ok(SccEncoding {
        head_word: word.clone(),
        candidates,
        admitted,
        levels,
        max_level,
        chosen,
        identity,
    })
}

/// Encodes every word of an SSC output. Word `t` is encoded against the
/// accumulated prompt `h(t)` (the first `t` words). Oracle queries run in
/// parallel; results keep word order.
pub fn encode_prompt(
    compressed: &Prompt,
    cfg: &SccConfig,
    oracle: &dyn SynonymOracle,
) -> Result<(Prompt, Vec<SccEncoding>), SccError> {
    cfg.validate()?;
    let encodings = compressed
        .words()
        .par_iter()
        .map(|word| {
            let context = compressed.prefix(word.index() + 1)?;
            encode_word(word, &context, cfg, oracle)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let encoded = Prompt::from_words(encodings.iter().map(|e| e.chosen.text.as_str()))?;
    Ok((encoded, encodings))
}
