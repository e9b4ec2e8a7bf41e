use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;

use super::{Demonstration, SkdError};
use crate::llm::{ChatClient, ChatMessage};
use crate::text_model::Prompt;

pub const DEFAULT_TEMPLATE_ID: &str = "t2t-v1";

const TEMPLATES_TOML: &str = include_str!("../../assets/t2t_templates.toml");

/// Rewrites a sender caption given demonstrations. Returns raw text;
/// [`super::translate`] turns it into a prompt.
pub trait T2tTranslator: Send + Sync {
    fn translate(&self, alice: &Prompt, demos: &[Demonstration]) -> Result<String, SkdError>;
}

/// Offline translator: a word substitution table learned from the
/// demonstrations.
///
/// Each demonstration pair is aligned word by word with a minimum edit
/// alignment (substitutions preferred over insert/delete pairs, so pairs of
/// equal length align position by position). Every aligned pair, identical
/// or not, counts as one vote; a sender word maps to its most-voted receiver
/// word, ties going to the lexicographically smaller one. Words never seen
/// pass through unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockTranslator;

impl MockTranslator {
    pub fn substitution_table(demos: &[Demonstration]) -> BTreeMap<String, String> {
        let mut votes: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
        for demo in demos {
            let a: Vec<&str> = demo.alice.texts().collect();
            let b: Vec<&str> = demo.bob.texts().collect();
            for (i, j) in align(&a, &b) {
                *votes.entry(a[i]).or_default().entry(b[j]).or_default() += 1;
            }
        }
        votes
            .into_iter()
            .map(|(from, counts)| {
                // BTreeMap iterates in ascending order; `max_by_key` keeps the
                // last maximum, so reverse to keep the smallest word on ties.
                let to = counts
                    .into_iter()
                    .rev()
                    .max_by_key(|&(_, n)| n)
                    .map(|(w, _)| w)
                    .expect("non-empty vote");
                (from.to_owned(), to.to_owned())
            })
            .collect()
    }
}

impl T2tTranslator for MockTranslator {
    fn translate(&self, alice: &Prompt, demos: &[Demonstration]) -> Result<String, SkdError> {
        let table = MockTranslator::substitution_table(demos);
        Ok(alice
            .texts()
            .map(|w| table.get(w).map_or(w, String::as_str))
            .collect::<Vec<_>>()
            .join(" "))
    }
}

/// Index pairs `(i, j)` aligned by a minimum word edit script between `a`
/// and `b`.
fn align(a: &[&str], b: &[&str]) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    let mut cost = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in cost.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, c) in cost[0].iter_mut().enumerate() {
        *c = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = cost[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cost[i][j] = sub.min(cost[i - 1][j] + 1).min(cost[i][j - 1] + 1);
        }
    }
    let (mut i, mut j) = (n, m);
    let mut pairs = Vec::new();
    while i > 0 && j > 0 {
        let sub = cost[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
        if cost[i][j] == sub {
            pairs.push((i - 1, j - 1));
            i -= 1;
            j -= 1;
        } else if cost[i][j] == cost[i - 1][j] + 1 {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    pairs.reverse();
    pairs
}

/// A versioned chat template: the system instruction plus the user turn
/// pattern, in which `{prompt}` stands for a caption.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct T2tTemplate {
    #[serde(skip)]
    pub id: String,
    pub system: String,
    pub user: String,
}

fn builtin_templates() -> &'static BTreeMap<String, T2tTemplate> {
    static TEMPLATES: OnceLock<BTreeMap<String, T2tTemplate>> = OnceLock::new();
    TEMPLATES.get_or_init(|| {
        let mut parsed: BTreeMap<String, T2tTemplate> =
            toml::from_str(TEMPLATES_TOML).expect("bundled templates parse");
        for (id, template) in parsed.iter_mut() {
            template.id = id.clone();
        }
        parsed
    })
}

impl T2tTemplate {
    pub fn builtin(id: &str) -> Result<T2tTemplate, SkdError> {
        builtin_templates()
            .get(id)
            .cloned()
            .ok_or_else(|| SkdError::UnknownTemplate(id.to_owned()))
    }

    pub fn builtin_ids() -> impl Iterator<Item = &'static str> {
        builtin_templates().keys().map(String::as_str)
    }

    fn user_turn(&self, caption: &str) -> String {
        self.user.replace("{prompt}", caption)
    }

    /// System turn, one user/assistant exchange per demonstration, then the
    /// query caption.
    pub fn render(&self, alice: &Prompt, demos: &[Demonstration]) -> Vec<ChatMessage> {
        let mut messages = Vec::with_capacity(2 * demos.len() + 2);
        messages.push(ChatMessage::system(self.system.clone()));
        for demo in demos {
            messages.push(ChatMessage::user(self.user_turn(demo.alice.source_text())));
            messages.push(ChatMessage::assistant(demo.bob.source_text()));
        }
        messages.push(ChatMessage::user(self.user_turn(alice.source_text())));
        messages
    }
}

#[derive(Debug, Clone)]
pub struct LlmTranslator {
    client: ChatClient,
    template: T2tTemplate,
}

impl LlmTranslator {
    pub fn new(client: ChatClient, template_id: &str) -> Result<LlmTranslator, SkdError> {
        Ok(LlmTranslator {
            client,
            template: T2tTemplate::builtin(template_id)?,
        })
    }

    pub fn template(&self) -> &T2tTemplate {
        &self.template
    }
}

impl T2tTranslator for LlmTranslator {
    /// The first non-blank line of the completion.
    fn translate(&self, alice: &Prompt, demos: &[Demonstration]) -> Result<String, SkdError> {
        let completion = self
            .client
            .complete(&self.template.render(alice, demos))
            .map_err(|e| SkdError::TranslatorUnavailable(e.to_string()))?;
        let line = completion
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .unwrap_or_default();
        log::debug!("translated {:?} -> {line:?}", alice.source_text());
        Ok(line.to_owned())
    }
}
