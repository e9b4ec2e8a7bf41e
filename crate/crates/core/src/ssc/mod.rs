//! Head-based semantic source coding.
//!
//! A prompt is compressed to its head words, kept in order of appearance.
//! Non-head positions are simply not transmitted, and the receiver rejoins
//! the words with single spaces, so character ratios count word characters
//! only.

mod baseline;
pub mod external;
pub mod rules;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baseline::{shuffle_baseline, BaselineMode};
pub use external::ExternalParser;
pub use rules::RuleBased;

use crate::text_model::{Prompt, TextError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SscError {
    #[error("head parser unavailable: {0}")]
    ParserUnavailable(String),
    #[error("malformed parser response: {0}")]
    MalformedParse(String),
    #[error("every word of {0:?} was pruned")]
    EmptySelection(String),
    #[error("invalid head selection: {0}")]
    InvalidSelection(String),
    #[error(transparent)]
    Text(#[from] TextError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadSource {
    RuleBased,
    ExternalParser,
    Manual,
}

/// Decides which words of a prompt are heads.
pub trait HeadIdentifier: Send + Sync {
    fn source(&self) -> HeadSource;

    /// Head word indices, in any order; may be empty.
    fn head_indices(&self, prompt: &Prompt) -> Result<Vec<usize>, SscError>;
}

/// The head words `H` of a prompt, as ascending word indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadSelection {
    prompt: Prompt,
    head_indices: Vec<usize>,
    source: HeadSource,
}

impl HeadSelection {
    /// Sorts and deduplicates `indices`; rejects out-of-range and empty sets.
    pub fn new(
        prompt: Prompt,
        mut indices: Vec<usize>,
        source: HeadSource,
    ) -> Result<HeadSelection, SscError> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&bad) = indices.iter().find(|&&i| i >= prompt.len()) {
            return Err(SscError::InvalidSelection(format!(
                "index {bad} outside a {}-word prompt",
                prompt.len()
            )));
        }
        if indices.is_empty() {
            return Err(SscError::EmptySelection(prompt.source_text().to_owned()));
        }
        Ok(HeadSelection {
            prompt,
            head_indices: indices,
            source,
        })
    }

    /// Every word is a head (the uncompressed baseline).
    pub fn all(prompt: Prompt) -> HeadSelection {
        let indices = (0..prompt.len()).collect();
        HeadSelection {
            prompt,
            head_indices: indices,
            source: HeadSource::Manual,
        }
    }

    pub fn prompt(&self) -> &Prompt {
        &self.prompt
    }

    pub fn head_indices(&self) -> &[usize] {
        &self.head_indices
    }

    pub fn source(&self) -> HeadSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.head_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.head_indices.is_empty()
    }

    pub fn head_words(&self) -> impl Iterator<Item = &str> {
        self.head_indices
            .iter()
            .map(|&i| self.prompt.words()[i].text())
    }

    /// Selection with one more index added.
    pub fn with_index(&self, index: usize) -> Result<HeadSelection, SscError> {
        let mut indices = self.head_indices.clone();
        indices.push(index);
        HeadSelection::new(self.prompt.clone(), indices, self.source)
    }
}

/// Exact non-negative rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    numer: u64,
    denom: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ratio {
    /// Reduced `numer / denom`.
    ///
    /// # Panics
    ///
    /// If `denom` is zero.
    pub fn new(numer: u64, denom: u64) -> Ratio {
        assert!(denom > 0, "zero denominator");
        let g = gcd(numer, denom).max(1);
        Ratio {
            numer: numer / g,
            denom: denom / g,
        }
    }

    pub fn numer(&self) -> u64 {
        self.numer
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn value(&self) -> f64 {
        self.numer as f64 / self.denom as f64
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (u128::from(self.numer) * u128::from(other.denom))
            .cmp(&(u128::from(other.numer) * u128::from(self.denom)))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer, self.denom)
    }
}

/// Word ratio `|H| / |X|` and character ratio `Σ_H |x_i| / Σ_X |x_i|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub word_ratio: Ratio,
    pub char_ratio: Ratio,
}

impl CompressionReport {
    /// Ratios of `sent` against the `source` prompt it was derived from.
    pub fn between(source: &Prompt, sent: &Prompt) -> CompressionReport {
        CompressionReport {
            word_ratio: Ratio::new(sent.len() as u64, source.len() as u64),
            char_ratio: Ratio::new(sent.char_count() as u64, source.char_count() as u64),
        }
    }
}

/// Runs `identifier` over `prompt`.
pub fn identify_heads(
    prompt: &Prompt,
    identifier: &dyn HeadIdentifier,
) -> Result<HeadSelection, SscError> {
    let indices = identifier.head_indices(prompt)?;
    HeadSelection::new(prompt.clone(), indices, identifier.source())
}

/// Keeps exactly the head words, in their original order.
pub fn compress(selection: &HeadSelection) -> (Prompt, CompressionReport) {
    let compressed = Prompt::from_words(selection.head_words())
        .expect("head words of a valid prompt retokenize");
    let report = CompressionReport::between(selection.prompt(), &compressed);
    (compressed, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text_model::tokenize;

    fn select(text: &str) -> HeadSelection {
        identify_heads(&tokenize(text).unwrap(), &RuleBased).unwrap()
    }

    #[test]
    fn determiner_pruned() {
        let sel = select("a dog runs");
        assert_eq!(sel.head_indices(), [1, 2]);
        let (compressed, report) = compress(&sel);
        assert_eq!(compressed.joined(), "dog runs");
        assert_eq!(report.word_ratio, Ratio::new(2, 3));
        assert!((report.word_ratio.value() - 0.667).abs() < 1e-3);
        assert_eq!(report.char_ratio, Ratio::new(7, 8));
    }

    #[test]
    fn single_content_word() {
        let (compressed, report) = compress(&select("dog"));
        assert_eq!(compressed.joined(), "dog");
        assert_eq!(report.word_ratio, Ratio::new(1, 1));
    }

    #[test]
    fn all_selected_is_identity() {
        let p = tokenize("the cat sat on the mat").unwrap();
        let (compressed, report) = compress(&HeadSelection::all(p.clone()));
        assert_eq!(compressed.joined(), p.joined());
        assert_eq!(report.word_ratio.value(), 1.0);
        assert_eq!(report.char_ratio.value(), 1.0);
    }

    #[test]
    fn empty_selection_is_error() {
        let p = tokenize("the a of").unwrap();
        assert!(matches!(
            identify_heads(&p, &RuleBased),
            Err(SscError::EmptySelection(_))
        ));
    }

    #[test]
    fn selection_validation() {
        let p = tokenize("a dog runs").unwrap();
        assert!(HeadSelection::new(p.clone(), vec![3], HeadSource::Manual).is_err());
        let sel = HeadSelection::new(p, vec![2, 1, 2], HeadSource::Manual).unwrap();
        assert_eq!(sel.head_indices(), [1, 2]);
    }

    #[test]
    fn ratio_arithmetic() {
        assert_eq!(Ratio::new(4, 6), Ratio::new(2, 3));
        assert_eq!(Ratio::new(0, 5), Ratio::new(0, 1));
        assert!(Ratio::new(1, 3) < Ratio::new(1, 2));
        assert_eq!(Ratio::new(7, 8).to_string(), "7/8");
    }
}
