//! Randomized invariant checks shared by the property tests and the
//! acceptance suite.

use std::collections::BTreeMap;

use lsc::scc::{encode_word, SccConfig, SccError, SynonymCandidate, SynonymOracle};
use lsc::ssc::{
    compress, identify_heads, shuffle_baseline, BaselineMode, HeadSelection, Ratio, RuleBased,
    SscError,
};
use lsc::text_model::tokenize;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

const COMMON_WORDS: &[&str] = &[
    "a", "an", "the", "of", "in", "on", "with", "and", "is", "are", "his", "her", "their", "it",
    "to", "at", "by", "man", "woman", "dog", "cat", "red", "blue", "shirt", "running", "runs",
    "sits", "beach", "street", "holding", "two", "young", "playing", "ball", "grass", "water",
];

/// Caption-like text: common words mixed with random lowercase and
/// capitalized tokens, with optional sentence punctuation.
pub fn caption_text() -> impl Strategy<Value = String> {
    let word = prop_oneof![
        3 => proptest::sample::select(COMMON_WORDS).prop_map(str::to_owned),
        1 => "[a-z]{1,10}",
        1 => "[A-Z][a-z]{0,8}",
    ];
    (
        proptest::collection::vec(word, 1..16),
        proptest::option::of(proptest::sample::select(&[".", "!", ",", "?"][..])),
    )
        .prop_map(|(words, end)| {
            let mut text = words.join(" ");
            if let Some(p) = end {
                text.push_str(p);
            }
            text
        })
}

fn multiset<'a>(words: impl Iterator<Item = &'a str>) -> BTreeMap<&'a str, usize> {
    let mut m = BTreeMap::new();
    for w in words {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

fn check_prompt(text: &str, seed: u64) -> Result<(), TestCaseError> {
    let prompt = tokenize(text).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let selection = match identify_heads(&prompt, &RuleBased) {
        Ok(s) => s,
        Err(SscError::EmptySelection(_)) => return Ok(()),
        Err(e) => return Err(TestCaseError::fail(e.to_string())),
    };
    prop_assert_eq!(&identify_heads(&prompt, &RuleBased).unwrap(), &selection);
    let (compressed, report) = compress(&selection);

    // Subset and order: the output is the prompt's words at strictly
    // increasing indices.
    let idx = selection.head_indices();
    prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
    prop_assert!(idx.len() <= prompt.len());
    let picked: Vec<&str> = idx.iter().map(|&i| prompt.words()[i].text()).collect();
    prop_assert_eq!(compressed.texts().collect::<Vec<_>>(), picked);

    // Ratio formulas.
    let head_chars: usize = idx.iter().map(|&i| prompt.words()[i].char_count()).sum();
    prop_assert_eq!(
        report.word_ratio,
        Ratio::new(idx.len() as u64, prompt.len() as u64)
    );
    prop_assert_eq!(
        report.char_ratio,
        Ratio::new(head_chars as u64, prompt.char_count() as u64)
    );
    prop_assert!(report.word_ratio.value() <= 1.0 && report.char_ratio.value() <= 1.0);

    // Idempotence.
    let (again, again_report) = compress(&HeadSelection::all(compressed.clone()));
    prop_assert_eq!(&again, &compressed);
    prop_assert_eq!(again_report.word_ratio.value(), 1.0);

    // Monotonicity.
    for extra in 0..prompt.len() {
        let (_, grown) = compress(&selection.with_index(extra).unwrap());
        prop_assert!(grown.word_ratio >= report.word_ratio);
        prop_assert!(grown.char_ratio >= report.char_ratio);
    }

    // Baselines.
    let random_words = shuffle_baseline(&selection, seed, BaselineMode::RandomWords);
    prop_assert_eq!(random_words.len(), compressed.len());
    let positions: Vec<usize> = {
        let mut next = 0;
        random_words
            .texts()
            .map(|w| {
                let at = next
                    + prompt.words()[next..]
                        .iter()
                        .position(|p| p.text() == w)
                        .unwrap();
                next = at + 1;
                at
            })
            .collect()
    };
    prop_assert_eq!(positions.len(), random_words.len());
    let random_order = shuffle_baseline(&selection, seed, BaselineMode::RandomOrder);
    prop_assert_eq!(multiset(random_order.texts()), multiset(compressed.texts()));
    prop_assert_eq!(
        shuffle_baseline(&selection, seed, BaselineMode::RandomOrder),
        random_order
    );
    Ok(())
}

pub fn ssc_invariants(cases: u32) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&(caption_text(), any::<u64>()), |(text, seed)| {
            check_prompt(&text, seed)
        })
        .map_err(|e| e.to_string())
}

/// Oracle returning a fixed proposal list whatever it is asked.
pub struct FixedOracle(pub Vec<SynonymCandidate>);

impl SynonymOracle for FixedOracle {
    fn candidates(&self, _: &str, _: &str) -> Result<Vec<SynonymCandidate>, SccError> {
        Ok(self.0.clone())
    }
}

fn candidate() -> impl Strategy<Value = SynonymCandidate> {
    let text = prop_oneof![
        6 => "[a-z]{1,14}",
        1 => "[a-z]{1,4} [a-z]{1,4}",
        1 => Just(String::new()),
    ];
    let p = prop_oneof![
        8 => 0.0..=1.0f64,
        1 => -0.5..1.5f64,
        1 => Just(f64::NAN),
    ];
    (text, p).prop_map(|(text, probability)| SynonymCandidate { text, probability })
}

fn check_encoding(
    head: &str,
    proposals: Vec<SynonymCandidate>,
    p_c: f64,
    cap: usize,
) -> Result<(), TestCaseError> {
    let context = tokenize(&format!("the {head} here")).unwrap();
    let word = &context.words()[1];
    let cfg = SccConfig {
        p_c,
        expansion_cap: cap,
        ..SccConfig::default()
    };
    let oracle = FixedOracle(proposals);
    let enc = encode_word(word, &context, &cfg, &oracle).unwrap();
    prop_assert_eq!(&encode_word(word, &context, &cfg, &oracle).unwrap(), &enc);

    let base = head.len();
    let chosen = enc.chosen.text.len();
    prop_assert!(chosen >= base, "chosen shorter than the word");
    prop_assert!(chosen - base <= cap, "cap exceeded");
    prop_assert!(enc.admitted.iter().all(|c| c.probability >= p_c));
    prop_assert!(enc
        .candidates
        .iter()
        .all(|c| (0.0..=1.0).contains(&c.probability)));
    prop_assert_eq!(
        enc.max_level,
        enc.admitted.iter().map(|c| c.text.len()).max()
    );
    for &level in &enc.levels {
        prop_assert!(level >= base && Some(level) <= enc.max_level);
    }
    if enc.identity {
        prop_assert_eq!(&enc.chosen.text, head);
        prop_assert_eq!(enc.chosen.probability, 1.0);
        prop_assert!(!enc
            .admitted
            .iter()
            .any(|c| c.text.len() >= base && c.text.len() <= base + cap));
    } else {
        prop_assert!(enc.chosen.probability >= p_c);
        prop_assert!(enc.admitted.contains(&enc.chosen));
        prop_assert!(enc.levels.contains(&chosen));
        // Nothing admitted within the window is longer.
        prop_assert!(!enc
            .admitted
            .iter()
            .any(|c| c.text.len() > chosen && c.text.len() <= base + cap));
    }
    Ok(())
}

pub fn scc_invariants(cases: u32) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (
        "[a-z]{1,10}",
        proptest::collection::vec(candidate(), 0..10),
        prop_oneof![Just(0.72), 0.01..=1.0f64],
        0usize..7,
    );
    runner
        .run(&strategy, |(head, proposals, p_c, cap)| {
            check_encoding(&head, proposals, p_c, cap)
        })
        .map_err(|e| e.to_string())
}
