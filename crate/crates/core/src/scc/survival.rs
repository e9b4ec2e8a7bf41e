//! Nearest-word decoding of corrupted words.
//!
//! A received word "survives" when the closest vocabulary word (Levenshtein
//! distance) is the word that was sent.

use super::SccError;

/// Non-empty, deduplicated word list ordered by (length, text), which is
/// also the tie-break order of [`survival_decode`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
}

impl Vocabulary {
    pub fn new<I, S>(words: I) -> Result<Vocabulary, SccError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut words: Vec<String> = words.into_iter().map(Into::into).collect();
        words.sort_unstable_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        words.dedup();
        if words.is_empty() {
            return Err(SccError::EmptyVocabulary);
        }
        Ok(Vocabulary { words })
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words
            .binary_search_by(|w| w.len().cmp(&word.len()).then_with(|| w.as_str().cmp(word)))
            .is_ok()
    }
}

/// Closest vocabulary word to `received` and its edit distance. Ties go to
/// the shorter word, then the lexicographically smaller one.
pub fn survival_decode<'v>(received: &str, vocabulary: &'v Vocabulary) -> (&'v str, usize) {
    let mut best: Option<(&str, usize)> = None;
    for word in &vocabulary.words {
        let bound = word.len().abs_diff(received.len());
        if best.is_some_and(|(_, d)| bound >= d) {
            continue;
        }
        let d = strsim::levenshtein(received, word);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((word, d));
            if d == 0 {
                break;
            }
        }
    }
    best.expect("vocabulary is non-empty")
}
