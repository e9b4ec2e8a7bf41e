//! Sender-side processing of one prompt: optional style transfer, then
//! head-word compression (or one of its random baselines), then optional
//! synonym hardening.
//!
//! Each stage consumes the output type of the one before it, so stages can
//! only run in that order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scc::{encode_prompt, SccConfig, SccEncoding, SccError, SynonymOracle};
use crate::skd::{translate, Demonstration, SkdError, T2tTranslator};
use crate::ssc::{
    compress, identify_heads, shuffle_baseline, BaselineMode, CompressionReport, HeadIdentifier,
    HeadSelection, SscError,
};
use crate::text_model::Prompt;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline {label:?}: {reason}")]
    InvalidSpec { label: String, reason: String },
    #[error("pipeline {0} needs a {1} stage but none was supplied")]
    MissingStage(PipelineSpec, &'static str),
    #[error(transparent)]
    Skd(#[from] SkdError),
    #[error(transparent)]
    Ssc(#[from] SscError),
    #[error(transparent)]
    Scc(#[from] SccError),
}

/// Which stages run. Written as a label such as `skd+ssc+scc`, `ssc`,
/// `random-order` or `full` (nothing removed or replaced).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PipelineSpec {
    skd: bool,
    ssc: bool,
    scc: bool,
    baseline: Option<BaselineMode>,
}

impl PipelineSpec {
    pub const FULL: PipelineSpec = PipelineSpec {
        skd: false,
        ssc: false,
        scc: false,
        baseline: None,
    };

    pub fn new(skd: bool, ssc: bool, scc: bool) -> Result<PipelineSpec, PipelineError> {
        let spec = PipelineSpec {
            skd,
            ssc,
            scc,
            baseline: None,
        };
        if scc && !ssc {
            return Err(PipelineError::InvalidSpec {
                label: spec.label(),
                reason: "synonym hardening operates on head words and needs ssc".into(),
            });
        }
        Ok(spec)
    }

    /// A random baseline in place of head-word compression.
    pub fn baseline(skd: bool, mode: BaselineMode) -> PipelineSpec {
        PipelineSpec {
            skd,
            ssc: true,
            scc: false,
            baseline: Some(mode),
        }
    }

    pub fn skd(&self) -> bool {
        self.skd
    }

    pub fn ssc(&self) -> bool {
        self.ssc
    }

    pub fn scc(&self) -> bool {
        self.scc
    }

    pub fn baseline_mode(&self) -> Option<BaselineMode> {
        self.baseline
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.skd {
            parts.push("skd");
        }
        match self.baseline {
            Some(BaselineMode::RandomWords) => parts.push("random-sc"),
            Some(BaselineMode::RandomOrder) => parts.push("random-order"),
            None if self.ssc => parts.push("ssc"),
            None => {}
        }
        if self.scc {
            parts.push("scc");
        }
        if parts.is_empty() {
            "full".to_owned()
        } else {
            parts.join("+")
        }
    }
}

impl fmt::Display for PipelineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for PipelineSpec {
    type Err = PipelineError;

    fn from_str(label: &str) -> Result<PipelineSpec, PipelineError> {
        let invalid = |reason: &str| PipelineError::InvalidSpec {
            label: label.to_owned(),
            reason: reason.to_owned(),
        };
        let label_lc = label.trim().to_ascii_lowercase();
        if label_lc == "full" {
            return Ok(PipelineSpec::FULL);
        }
        // Stage rank enforces the fixed order skd, compression, scc.
        let mut spec = PipelineSpec::FULL;
        let mut last_rank = 0;
        for part in label_lc.split('+').map(str::trim) {
            let rank = match part {
                "skd" => {
                    spec.skd = true;
                    1
                }
                "ssc" => {
                    spec.ssc = true;
                    2
                }
                "random-sc" | "random-order" => {
                    spec.ssc = true;
                    spec.baseline = Some(if part == "random-sc" {
                        BaselineMode::RandomWords
                    } else {
                        BaselineMode::RandomOrder
                    });
                    2
                }
                "scc" => {
                    spec.scc = true;
                    3
                }
                other => return Err(invalid(&format!("unknown stage {other:?}"))),
            };
            if rank <= last_rank {
                return Err(invalid(
                    "stages must appear once each, in the order skd, ssc, scc",
                ));
            }
            last_rank = rank;
        }
        if spec.scc && spec.baseline.is_some() {
            return Err(invalid("random baselines do not combine with scc"));
        }
        if spec.scc && !spec.ssc {
            return Err(invalid(
                "synonym hardening operates on head words and needs ssc",
            ));
        }
        Ok(spec)
    }
}

impl Serialize for PipelineSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for PipelineSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<PipelineSpec, D::Error> {
        let label = String::deserialize(d)?;
        label.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy)]
pub struct SkdStage<'a> {
    pub translator: &'a dyn T2tTranslator,
    pub demonstrations: &'a [Demonstration],
}

#[derive(Clone, Copy)]
pub struct SccStage<'a> {
    pub config: &'a SccConfig,
    pub oracle: &'a dyn SynonymOracle,
}

/// Everything the sender produced for one prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub source: Prompt,
    /// Output of style transfer, when it ran.
    pub translated: Option<Prompt>,
    /// Kept words, when compression ran.
    pub selection: Option<HeadSelection>,
    pub compressed: Prompt,
    pub scc: Vec<SccEncoding>,
    pub transmitted: Prompt,
    /// Transmitted size relative to `source`.
    pub report: CompressionReport,
}

struct Distilled {
    source: Prompt,
    translated: Option<Prompt>,
}

struct Compressed {
    distilled: Distilled,
    selection: Option<HeadSelection>,
    prompt: Prompt,
}

impl Distilled {
    fn input(&self) -> &Prompt {
        self.translated.as_ref().unwrap_or(&self.source)
    }

    fn compress(
        self,
        heads: &dyn HeadIdentifier,
        baseline: Option<BaselineMode>,
        seed: u64,
    ) -> Result<Compressed, PipelineError> {
        let selection = identify_heads(self.input(), heads)?;
        let prompt = match baseline {
            None => compress(&selection).0,
            Some(mode) => shuffle_baseline(&selection, seed, mode),
        };
        Ok(Compressed {
            distilled: self,
            selection: Some(selection),
            prompt,
        })
    }

    fn keep_all(self) -> Compressed {
        let prompt = self.input().clone();
        Compressed {
            distilled: self,
            selection: None,
            prompt,
        }
    }
}

impl Compressed {
    fn finish(self, scc: Option<SccStage<'_>>) -> Result<Encoded, PipelineError> {
        let (transmitted, encodings) = match scc {
            Some(stage) => encode_prompt(&self.prompt, stage.config, stage.oracle)?,
            None => (self.prompt.clone(), Vec::new()),
        };
        let report = CompressionReport::between(&self.distilled.source, &transmitted);
        Ok(Encoded {
            source: self.distilled.source,
            translated: self.distilled.translated,
            selection: self.selection,
            compressed: self.prompt,
            scc: encodings,
            transmitted,
            report,
        })
    }
}

/// A configured sender. Stages enabled by the [`PipelineSpec`] must be supplied before
/// [`Pipeline::run`]; other supplied stages are ignored.
#[derive(Clone, Copy)]
pub struct Pipeline<'a> {
    spec: PipelineSpec,
    heads: &'a dyn HeadIdentifier,
    skd: Option<SkdStage<'a>>,
    scc: Option<SccStage<'a>>,
}

impl<'a> Pipeline<'a> {
    pub fn new(spec: PipelineSpec, heads: &'a dyn HeadIdentifier) -> Pipeline<'a> {
        Pipeline {
            spec,
            heads,
            skd: None,
            scc: None,
        }
    }

    pub fn with_skd(mut self, stage: SkdStage<'a>) -> Pipeline<'a> {
        self.skd = Some(stage);
        self
    }

    pub fn with_scc(mut self, stage: SccStage<'a>) -> Pipeline<'a> {
        self.scc = Some(stage);
        self
    }

    pub fn spec(&self) -> PipelineSpec {
        self.spec
    }

    /// Encodes `source`. `seed` drives the random baselines only.
    pub fn run(&self, source: &Prompt, seed: u64) -> Result<Encoded, PipelineError> {
        let distilled = if self.spec.skd {
            let stage = self
                .skd
                .ok_or(PipelineError::MissingStage(self.spec, "skd"))?;
            let translated = translate(source, stage.demonstrations, stage.translator)?;
            Distilled {
                source: source.clone(),
                translated: Some(translated),
            }
        } else {
            Distilled {
                source: source.clone(),
                translated: None,
            }
        };
        let compressed = if self.spec.ssc {
            distilled.compress(self.heads, self.spec.baseline, seed)?
        } else {
            distilled.keep_all()
        };
        let scc = if self.spec.scc {
            Some(
                self.scc
                    .ok_or(PipelineError::MissingStage(self.spec, "scc"))?,
            )
        } else {
            None
        };
        compressed.finish(scc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scc::StaticDictionary;
    use crate::skd::MockTranslator;
    use crate::ssc::RuleBased;
    use crate::text_model::tokenize;

    #[test]
    fn labels_round_trip() {
        for label in [
            "full",
            "ssc",
            "ssc+scc",
            "skd",
            "skd+ssc",
            "skd+ssc+scc",
            "random-sc",
            "random-order",
            "skd+random-order",
        ] {
            let spec: PipelineSpec = label.parse().unwrap();
            assert_eq!(spec.label(), label);
            let json = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<PipelineSpec>(&json).unwrap(), spec);
        }
    }

    #[test]
    fn invalid_labels() {
        for label in [
            "scc",
            "skd+scc",
            "scc+ssc",
            "ssc+skd",
            "ssc+ssc",
            "random-sc+scc",
            "ssc+random-sc",
            "bogus",
            "",
        ] {
            assert!(label.parse::<PipelineSpec>().is_err(), "{label}");
        }
        assert!(PipelineSpec::new(false, false, true).is_err());
    }

    fn dictionary() -> StaticDictionary {
        let mut d = StaticDictionary::default();
        d.insert("dog", "canine", 0.9);
        d.insert("canine", "caninelike", 0.9);
        d.insert("runs", "sprints", 0.8);
        d
    }

    #[test]
    fn stages_run_in_order() {
        let demos = [Demonstration::new("1", "a dog on grass", "a canine on grass").unwrap()];
        let dict = dictionary();
        let cfg = SccConfig::default();
        let spec: PipelineSpec = "skd+ssc+scc".parse().unwrap();
        let pipeline = Pipeline::new(spec, &RuleBased)
            .with_skd(SkdStage {
                translator: &MockTranslator,
                demonstrations: &demos,
            })
            .with_scc(SccStage {
                config: &cfg,
                oracle: &dict,
            });
        let out = pipeline.run(&tokenize("the dog runs").unwrap(), 0).unwrap();
        assert_eq!(out.translated.as_ref().unwrap().joined(), "the canine runs");
        assert_eq!(out.compressed.joined(), "canine runs");
        // Hardening sees the translated head "canine", not the source "dog".
        assert_eq!(out.transmitted.joined(), "caninelike sprints");
        assert_eq!(out.report.word_ratio.to_string(), "2/3");
    }

    #[test]
    fn full_pipeline_sends_everything() {
        let p = tokenize("a dog runs").unwrap();
        let out = Pipeline::new(PipelineSpec::FULL, &RuleBased)
            .run(&p, 0)
            .unwrap();
        assert_eq!(out.transmitted, p);
        assert_eq!(out.report.word_ratio.value(), 1.0);
        assert_eq!(out.report.char_ratio.value(), 1.0);
    }

    #[test]
    fn missing_stage_reported() {
        let p = tokenize("a dog runs").unwrap();
        let spec: PipelineSpec = "ssc+scc".parse().unwrap();
        assert!(matches!(
            Pipeline::new(spec, &RuleBased).run(&p, 0),
            Err(PipelineError::MissingStage(_, "scc"))
        ));
    }

    #[test]
    fn random_order_keeps_heads() {
        let p = tokenize("a man in a blue shirt is skiing down a hill").unwrap();
        let spec: PipelineSpec = "random-order".parse().unwrap();
        let out = Pipeline::new(spec, &RuleBased).run(&p, 7).unwrap();
        let mut sent: Vec<&str> = out.transmitted.texts().collect();
        sent.sort_unstable();
        assert_eq!(sent, ["blue", "hill", "man", "shirt", "skiing"]);
    }
}
