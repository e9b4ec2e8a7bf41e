//! Client for a dependency-parse HTTP service.
//!
//! The request body is one JSON line `{"text": ...}`. The response body is
//! one JSON line `{"tokens": [{"word", "pos", "head"}, ...]}` where `head` is
//! the 1-based index of the governing token and `0` marks the root, as in
//! CoNLL-U. Heads are content-word tokens that govern at least one arc, plus
//! a content-word root.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{HeadIdentifier, HeadSource, SscError};
use crate::text_model::Prompt;

#[derive(Debug, Serialize)]
struct ParseRequest<'a> {
    text: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedToken {
    pub word: String,
    pub pos: String,
    pub head: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseResponse {
    pub tokens: Vec<ParsedToken>,
}

/// Accepts Universal Dependencies and Penn Treebank content tags.
pub fn is_content_pos(pos: &str) -> bool {
    matches!(
        pos,
        "NOUN" | "PROPN" | "VERB" | "ADJ" | "NUM" | "ADV" | "CD"
    ) || ["NN", "VB", "JJ", "RB"].iter().any(|p| pos.starts_with(p))
}

#[derive(Debug, Clone)]
pub struct ExternalParser {
    endpoint: String,
    agent: ureq::Agent,
}

impl ExternalParser {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> ExternalParser {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        ExternalParser {
            endpoint: endpoint.into(),
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn parse(&self, text: &str) -> Result<ParseResponse, SscError> {
        let mut body = serde_json::to_string(&ParseRequest { text }).expect("request serializes");
        body.push('\n');
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/x-ndjson")
            .send(body.as_str())
            .map_err(|e| SscError::ParserUnavailable(e.to_string()))?;
        let status = response.status().as_u16();
        if status != 200 {
            return Err(SscError::ParserUnavailable(format!("HTTP status {status}")));
        }
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| SscError::ParserUnavailable(e.to_string()))?;
        let line = text
            .lines()
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| SscError::MalformedParse("empty response".into()))?;
        serde_json::from_str(line).map_err(|e| SscError::MalformedParse(e.to_string()))
    }
}

/// Maps parser tokens onto prompt words and returns the prompt indices of
/// the heads. Tokens are aligned greedily in order by exact text; tokens
/// with no matching word (punctuation, split clitics) are skipped.
pub fn heads_from_parse(prompt: &Prompt, parse: &ParseResponse) -> Result<Vec<usize>, SscError> {
    let n = parse.tokens.len();
    let mut governs = vec![false; n];
    for (i, token) in parse.tokens.iter().enumerate() {
        if token.head > n {
            return Err(SscError::MalformedParse(format!(
                "token {} has head {} beyond {n} tokens",
                i + 1,
                token.head
            )));
        }
        if token.head > 0 {
            governs[token.head - 1] = true;
        }
    }

    let mut heads = Vec::new();
    let mut next_word = 0;
    for (i, token) in parse.tokens.iter().enumerate() {
        let Some(offset) = prompt.words()[next_word..]
            .iter()
            .position(|w| w.text() == token.word)
        else {
            continue;
        };
        let index = next_word + offset;
        next_word = index + 1;
        if is_content_pos(&token.pos) && (governs[i] || token.head == 0) {
            heads.push(index);
        }
        if next_word == prompt.len() {
            break;
        }
    }
    Ok(heads)
}

impl HeadIdentifier for ExternalParser {
    fn source(&self) -> HeadSource {
        HeadSource::ExternalParser
    }

    fn head_indices(&self, prompt: &Prompt) -> Result<Vec<usize>, SscError> {
        let parse = self.parse(prompt.source_text())?;
        heads_from_parse(prompt, &parse)
    }
}
