//! Caption style transfer from a handful of demonstrations.
//!
//! A demonstration pairs the caption the sender wrote for an image with the
//! caption the receiver wrote for the same image. Given `k` of them, a
//! translator rewrites a new sender caption in the receiver's style. The
//! output feeds head-word compression.

mod translator;

use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use translator::{
    LlmTranslator, MockTranslator, T2tTemplate, T2tTranslator, DEFAULT_TEMPLATE_ID,
};

use crate::seed::stream_rng;
use crate::text_model::{tokenize, Prompt, TextError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SkdError {
    #[error("demonstration pool holds {pool} entries, {k} requested")]
    PoolTooSmall { k: usize, pool: usize },
    #[error("invalid SKD configuration: {0}")]
    InvalidConfig(String),
    #[error("demonstration pool: {0}")]
    Pool(String),
    #[error("unknown translator template {0:?}")]
    UnknownTemplate(String),
    #[error("translator unavailable: {0}")]
    TranslatorUnavailable(String),
    #[error("translator returned a blank caption")]
    EmptyTranslation,
    #[error("translated caption is not plain text: {0}")]
    Text(#[from] TextError),
}

/// Two captions of the same image, by the sender and by the receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Demonstration {
    pub image_id: String,
    pub alice: Prompt,
    pub bob: Prompt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct DemonstrationRecord {
    image_id: String,
    alice: String,
    bob: String,
}

impl Demonstration {
    pub fn new(
        image_id: impl Into<String>,
        alice: &str,
        bob: &str,
    ) -> Result<Demonstration, SkdError> {
        let image_id = image_id.into();
        let caption = |text: &str, who: &str| {
            tokenize(text).map_err(|e| SkdError::Pool(format!("{image_id}: {who} caption: {e}")))
        };
        Ok(Demonstration {
            alice: caption(alice, "alice")?,
            bob: caption(bob, "bob")?,
            image_id,
        })
    }
}

/// Parses a pool file: a JSON list of `{"image_id", "alice", "bob"}`.
pub fn pool_from_json(json: &str) -> Result<Vec<Demonstration>, SkdError> {
    let records: Vec<DemonstrationRecord> =
        serde_json::from_str(json).map_err(|e| SkdError::Pool(e.to_string()))?;
    records
        .into_iter()
        .map(|r| Demonstration::new(r.image_id, &r.alice, &r.bob))
        .collect()
}

pub fn load_pool(path: &Path) -> Result<Vec<Demonstration>, SkdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SkdError::Pool(format!("{}: {e}", path.display())))?;
    pool_from_json(&text)
}

pub fn pool_to_json(pool: &[Demonstration]) -> String {
    let records: Vec<DemonstrationRecord> = pool
        .iter()
        .map(|d| DemonstrationRecord {
            image_id: d.image_id.clone(),
            alice: d.alice.source_text().to_owned(),
            bob: d.bob.source_text().to_owned(),
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("records serialize")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslatorKind {
    MockTranslator,
    LlmClient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkdConfig {
    pub k_shots: usize,
    pub translator: TranslatorKind,
    pub template_id: String,
}

impl Default for SkdConfig {
    fn default() -> Self {
        SkdConfig {
            k_shots: 3,
            translator: TranslatorKind::MockTranslator,
            template_id: DEFAULT_TEMPLATE_ID.to_owned(),
        }
    }
}

impl SkdConfig {
    pub fn validate(&self, pool_len: usize) -> Result<(), SkdError> {
        if self.k_shots == 0 {
            return Err(SkdError::InvalidConfig("k_shots must be at least 1".into()));
        }
        if self.k_shots > pool_len {
            return Err(SkdError::PoolTooSmall {
                k: self.k_shots,
                pool: pool_len,
            });
        }
        Ok(())
    }
}

/// Draws `k` demonstrations without replacement and returns them in pool
/// order.
pub fn build_demonstrations(
    pool: &[Demonstration],
    k: usize,
    seed: u64,
) -> Result<Vec<Demonstration>, SkdError> {
    if k == 0 {
        return Err(SkdError::InvalidConfig("k must be at least 1".into()));
    }
    if pool.len() < k {
        return Err(SkdError::PoolTooSmall {
            k,
            pool: pool.len(),
        });
    }
    let mut rng = stream_rng(seed, 0);
    let mut picked = index::sample(&mut rng, pool.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| pool[i].clone()).collect())
}

/// Rewrites `alice` in the receiver's style. The raw translator output is
/// normalized and tokenized; a blank result is an error.
pub fn translate(
    alice: &Prompt,
    demos: &[Demonstration],
    translator: &dyn T2tTranslator,
) -> Result<Prompt, SkdError> {
    let raw = translator.translate(alice, demos)?;
    match tokenize(&raw) {
        Err(TextError::EmptyText) => Err(SkdError::EmptyTranslation),
        other => Ok(other?),
    }
}
