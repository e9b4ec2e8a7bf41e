//! Synonym oracles: who proposes in-context synonyms and how likely each is.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SccError, SynonymCandidate};
use crate::llm::{extract_json_object, ChatClient, ChatMessage};

/// Placeholder for the masked head word in oracle queries.
pub const MASK_TOKEN: &str = "[MASK]";

/// Proposes replacements for `target`, the word hidden behind
/// [`MASK_TOKEN`] in `masked_prompt`.
pub trait SynonymOracle: Send + Sync {
    fn candidates(
        &self,
        masked_prompt: &str,
        target: &str,
    ) -> Result<Vec<SynonymCandidate>, SccError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryEntry {
    pub synonym: String,
    pub p: f64,
}

/// Context-free synonym table loaded from JSON:
/// `{"word": [{"synonym": "...", "p": 0.9}, ...], ...}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StaticDictionary {
    entries: BTreeMap<String, Vec<DictionaryEntry>>,
}

impl StaticDictionary {
    pub fn from_json(json: &str) -> Result<StaticDictionary, SccError> {
        serde_json::from_str(json).map_err(|e| SccError::Dictionary(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<StaticDictionary, SccError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SccError::Dictionary(format!("{}: {e}", path.display())))?;
        StaticDictionary::from_json(&text)
    }

    pub fn insert(&mut self, word: impl Into<String>, synonym: impl Into<String>, p: f64) {
        self.entries
            .entry(word.into())
            .or_default()
            .push(DictionaryEntry {
                synonym: synonym.into(),
                p,
            });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[DictionaryEntry]> {
        self.entries.get(word).map(Vec::as_slice)
    }
}

impl SynonymOracle for StaticDictionary {
    fn candidates(&self, _masked: &str, target: &str) -> Result<Vec<SynonymCandidate>, SccError> {
        Ok(self
            .get(target)
            .unwrap_or_default()
            .iter()
            .map(|e| SynonymCandidate {
                text: e.synonym.clone(),
                probability: e.p,
            })
            .collect())
    }
}

/// Asks a chat model for synonyms and self-reported fit probabilities.
///
/// The reported confidence stands in for a masked-LM unmasking probability,
/// which chat APIs do not expose.
#[derive(Debug, Clone)]
pub struct LlmSynonymOracle {
    client: ChatClient,
    max_candidates: usize,
}

pub const SYNONYM_SYSTEM_PROMPT: &str = "You propose in-context synonyms for a masked word in an image caption. Answer with a single JSON object and nothing else.";

impl LlmSynonymOracle {
    pub fn new(client: ChatClient) -> LlmSynonymOracle {
        LlmSynonymOracle {
            client,
            max_candidates: 8,
        }
    }

    pub fn messages(&self, masked_prompt: &str, target: &str) -> Vec<ChatMessage> {
        vec![
            ChatMessage::system(SYNONYM_SYSTEM_PROMPT),
            ChatMessage::user(format!(
                "Caption: {masked_prompt}\n\
                 Masked word: {target}\n\
                 List up to {n} single-word synonyms of the masked word that keep the caption's meaning when placed at {MASK_TOKEN}. \
                 For each, give p, the probability between 0 and 1 that it fits that position.\n\
                 Format: {{\"synonyms\": [{{\"synonym\": \"...\", \"p\": 0.0}}]}}",
                n = self.max_candidates
            )),
        ]
    }
}

/// Reads `{"synonyms": [{"synonym", "p"}]}` from a completion. Entries with
/// a missing or non-string synonym or a non-numeric `p` are skipped;
/// probabilities are clamped to `[0, 1]`.
pub fn parse_synonym_completion(completion: &str) -> Vec<SynonymCandidate> {
    let Some(json) = extract_json_object(completion) else {
        return Vec::new();
    };
    let Ok(value) = serde_json::from_str::<serde_json::Value>(json) else {
        return Vec::new();
    };
    let Some(list) = value.get("synonyms").and_then(|v| v.as_array()) else {
        return Vec::new();
    };
    list.iter()
        .filter_map(|item| {
            let text = item.get("synonym")?.as_str()?.trim().to_owned();
            let p = item.get("p")?.as_f64()?;
            Some(SynonymCandidate {
                text,
                probability: p.clamp(0.0, 1.0),
            })
        })
        .collect()
}

impl SynonymOracle for LlmSynonymOracle {
    fn candidates(&self, masked: &str, target: &str) -> Result<Vec<SynonymCandidate>, SccError> {
        let completion = self
            .client
            .complete(&self.messages(masked, target))
            .map_err(|e| SccError::OracleUnavailable(e.to_string()))?;
        let parsed = parse_synonym_completion(&completion);
        log::debug!("oracle proposed {} synonym(s) for {target:?}", parsed.len());
        Ok(parsed)
    }
}
