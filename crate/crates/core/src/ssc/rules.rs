//! Offline head identification: a lexicon plus suffix-rule POS tagger.
//!
//! Content words (nouns, main verbs, adjectives, numerals, adverbs) are
//! heads. Determiners, pronouns, adpositions, conjunctions, auxiliaries and
//! particles are pruned.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{HeadIdentifier, HeadSource, SscError};
use crate::text_model::Prompt;

const LEXICON: &str = include_str!("../../assets/lexicon.tsv");

/// Universal part-of-speech tags used by the tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Noun,
    Propn,
    Verb,
    Adj,
    Adv,
    Num,
    Det,
    Pron,
    Adp,
    Cconj,
    Sconj,
    Aux,
    Part,
}

impl Pos {
    pub fn is_content(self) -> bool {
        matches!(
            self,
            Pos::Noun | Pos::Propn | Pos::Verb | Pos::Adj | Pos::Adv | Pos::Num
        )
    }

    fn parse(tag: &str) -> Option<Pos> {
        Some(match tag {
            "NOUN" => Pos::Noun,
            "PROPN" => Pos::Propn,
            "VERB" => Pos::Verb,
            "ADJ" => Pos::Adj,
            "ADV" => Pos::Adv,
            "NUM" => Pos::Num,
            "DET" => Pos::Det,
            "PRON" => Pos::Pron,
            "ADP" => Pos::Adp,
            "CCONJ" => Pos::Cconj,
            "SCONJ" => Pos::Sconj,
            "AUX" => Pos::Aux,
            "PART" => Pos::Part,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Entry {
    Fixed(Pos),
    /// Auxiliary before a participle, main verb otherwise.
    AuxOrVerb,
}

fn lexicon() -> &'static HashMap<&'static str, Entry> {
    static TABLE: OnceLock<HashMap<&'static str, Entry>> = OnceLock::new();
    TABLE.get_or_init(|| {
        LEXICON
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|line| {
                let (word, tag) = line.split_once('\t').expect("lexicon line has a tab");
                let entry = if tag == "AUX|VERB" {
                    Entry::AuxOrVerb
                } else {
                    Entry::Fixed(Pos::parse(tag).unwrap_or_else(|| panic!("bad lexicon tag {tag}")))
                };
                (word, entry)
            })
            .collect()
    })
}

fn is_participle(word: &str) -> bool {
    let w = word.to_ascii_lowercase();
    w.len() > 4 && (w.ends_with("ing") || w.ends_with("ed") || w.ends_with("en"))
}

fn guess(word: &str, sentence_initial: bool) -> Pos {
    let lower = word.to_ascii_lowercase();
    if word.bytes().any(|b| b.is_ascii_digit()) {
        return Pos::Num;
    }
    if !sentence_initial && word.starts_with(|c: char| c.is_ascii_uppercase()) {
        return Pos::Propn;
    }
    let n = lower.len();
    if n > 4 && lower.ends_with("ly") {
        Pos::Adv
    } else if n > 4 && (lower.ends_with("ing") || lower.ends_with("ed")) {
        Pos::Verb
    } else if n > 5
        && ["ful", "ous", "ive", "able", "ible", "ish", "less"]
            .iter()
            .any(|s| lower.ends_with(s))
    {
        Pos::Adj
    } else {
        Pos::Noun
    }
}

/// Tags every word of `prompt`.
pub fn tag(prompt: &Prompt) -> Vec<Pos> {
    let words = prompt.words();
    (0..words.len())
        .map(|i| {
            let lower = words[i].text().to_ascii_lowercase();
            match lexicon().get(lower.as_str()) {
                Some(Entry::Fixed(pos)) => *pos,
                Some(Entry::AuxOrVerb) => {
                    let next = words[i + 1..].iter().map(|w| w.text()).find(|w| {
                        !matches!(
                            lexicon().get(w.to_ascii_lowercase().as_str()),
                            Some(Entry::Fixed(Pos::Part))
                        )
                    });
                    if next.is_some_and(is_participle) {
                        Pos::Aux
                    } else {
                        Pos::Verb
                    }
                }
                None => guess(words[i].text(), i == 0),
            }
        })
        .collect()
}

/// Lexicon and suffix-rule head identifier; always available.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleBased;

impl HeadIdentifier for RuleBased {
    fn source(&self) -> HeadSource {
        HeadSource::RuleBased
    }

    fn head_indices(&self, prompt: &Prompt) -> Result<Vec<usize>, SscError> {
        Ok(tag(prompt)
            .into_iter()
            .enumerate()
            .filter(|(_, pos)| pos.is_content())
            .map(|(i, _)| i)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text_model::tokenize;

    fn heads(text: &str) -> Vec<String> {
        let p = tokenize(text).unwrap();
        RuleBased
            .head_indices(&p)
            .unwrap()
            .into_iter()
            .map(|i| p.words()[i].text().to_owned())
            .collect()
    }

    #[test]
    fn lexicon_parses() {
        assert!(lexicon().len() > 200);
        assert_eq!(lexicon().get("the"), Some(&Entry::Fixed(Pos::Det)));
        assert_eq!(lexicon().get("has"), Some(&Entry::AuxOrVerb));
    }

    #[test]
    fn function_words_pruned() {
        assert_eq!(heads("a dog runs"), ["dog", "runs"]);
        assert_eq!(heads("dog"), ["dog"]);
        assert_eq!(
            heads("a man in a blue shirt is skiing down a hill"),
            ["man", "blue", "shirt", "skiing", "hill"]
        );
    }

    #[test]
    fn have_as_auxiliary_or_main_verb() {
        assert_eq!(heads("a dog has a ball"), ["dog", "has", "ball"]);
        assert_eq!(
            heads("the dog has finished eating"),
            ["dog", "finished", "eating"]
        );
        assert_eq!(heads("the dog has not finished"), ["dog", "finished"]);
    }

    #[test]
    fn tags_for_guessed_words() {
        let p = tokenize("The boy quickly climbed near Paris with 3 colorful kites").unwrap();
        assert_eq!(
            tag(&p),
            [
                Pos::Det,
                Pos::Noun,
                Pos::Adv,
                Pos::Verb,
                Pos::Adp,
                Pos::Propn,
                Pos::Adp,
                Pos::Num,
                Pos::Adj,
                Pos::Noun
            ]
        );
    }

    #[test]
    fn case_insensitive_lookup() {
        assert_eq!(heads("The Dog"), ["Dog"]);
        assert!(heads("THE A OF").is_empty());
    }
}
