//! Control baselines for head extraction and ordering.

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::HeadSelection;
use crate::seed::stream_rng;
use crate::text_model::Prompt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    /// `|H|` words drawn uniformly without replacement from the whole
    /// prompt, sent in order of appearance.
    RandomWords,
    /// The head words in a uniformly random order.
    RandomOrder,
}

/// Seeded baseline prompt for `selection`. Draws come from stream 0 of
/// `seed`.
pub fn shuffle_baseline(selection: &HeadSelection, seed: u64, mode: BaselineMode) -> Prompt {
    let mut rng = stream_rng(seed, 0);
    let words: Vec<&str> = match mode {
        BaselineMode::RandomWords => {
            let prompt = selection.prompt();
            let mut picked = index::sample(&mut rng, prompt.len(), selection.len()).into_vec();
            picked.sort_unstable();
            picked
                .into_iter()
                .map(|i| prompt.words()[i].text())
                .collect()
        }
        BaselineMode::RandomOrder => {
            let mut heads: Vec<&str> = selection.head_words().collect();
            heads.shuffle(&mut rng);
            heads
        }
    };
    Prompt::from_words(words).expect("words of a valid prompt retokenize")
}
