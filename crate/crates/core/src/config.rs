//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 42
//! runs = 100
//! output_dir = "out"
//! variants = ["full", "ssc", "ssc+scc", "skd+ssc", "skd+ssc+scc"]
//!
//! [channel]
//! model = "waveform16qam"        # or "dmc", with epsilon = epsilon_of_snr(snr)
//! snr_db = [2.5, 5.0, 6.25, 7.5, 8.75]
//!
//! [scc]
//! p_c = 0.72
//! expansion_cap = 4
//! oracle = "static_dictionary"  # or "llm_client"
//! ```
//!
//! Every key is optional. Paths left unset fall back to the bundled
//! fixtures.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{epsilon_of_snr, ChannelSpec};
use crate::llm::LlmConfig;
use crate::pipeline::PipelineSpec;
use crate::scc::SccConfig;
use crate::skd::SkdConfig;

#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Waveform16qam,
    /// Discrete memoryless channel matched to each SNR point.
    Dmc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub model: ChannelKind,
    /// Es/N0 points in dB.
    pub snr_db: Vec<f64>,
    /// Fixed DMC crossover probability used at every point instead of the
    /// SNR-matched one.
    pub epsilon: Option<f64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            model: ChannelKind::Waveform16qam,
            snr_db: vec![2.5, 5.0, 6.25, 7.5, 8.75],
            epsilon: None,
        }
    }
}

impl ChannelConfig {
    /// Channel for one SNR point.
    pub fn at(&self, snr_db: f64, seed: u64) -> Result<ChannelSpec, ConfigError> {
        let spec = match (self.model, self.epsilon) {
            (ChannelKind::Waveform16qam, None) => ChannelSpec::waveform(snr_db, seed),
            (ChannelKind::Dmc, Some(eps)) => ChannelSpec::dmc(eps, seed),
            (ChannelKind::Dmc, None) => ChannelSpec::dmc(epsilon_of_snr(snr_db), seed),
            (ChannelKind::Waveform16qam, Some(_)) => {
                return Err(ConfigError(
                    "channel.epsilon applies to model = \"dmc\" only".into(),
                ))
            }
        };
        spec.map_err(|e| ConfigError(format!("channel at {snr_db} dB: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadSourceKind {
    RuleBased,
    ExternalParser,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadsConfig {
    pub source: HeadSourceKind,
    /// Parser endpoint, for `external_parser`.
    pub endpoint: Option<String>,
    pub timeout_secs: f64,
}

impl Default for HeadsConfig {
    fn default() -> Self {
        HeadsConfig {
            source: HeadSourceKind::RuleBased,
            endpoint: None,
            timeout_secs: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Character budget step of the transmitted-characters curves.
    pub chars_bin_width: usize,
    /// SNR of the transmitted-characters sweep.
    pub chars_snr_db: f64,
    /// Add the random-word and random-order baselines to that sweep.
    pub baselines: bool,
    /// Number of leading runs whose per-step traces are written out.
    pub trace_runs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            chars_bin_width: 5,
            chars_snr_db: 6.25,
            baselines: true,
            trace_runs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Passes over the corpus; each pass sends every prompt once.
    pub runs: usize,
    pub output_dir: PathBuf,
    pub corpus_path: Option<PathBuf>,
    pub synonyms_path: Option<PathBuf>,
    pub demonstrations_path: Option<PathBuf>,
    pub variants: Vec<PipelineSpec>,
    pub channel: ChannelConfig,
    pub heads: HeadsConfig,
    pub scc: SccConfig,
    pub skd: SkdConfig,
    pub llm: LlmConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            runs: 100,
            output_dir: PathBuf::from("out"),
            corpus_path: None,
            synonyms_path: None,
            demonstrations_path: None,
            variants: ["full", "ssc", "ssc+scc", "skd+ssc", "skd+ssc+scc"]
                .iter()
                .map(|l| l.parse().expect("valid label"))
                .collect(),
            channel: ChannelConfig::default(),
            heads: HeadsConfig::default(),
            scc: SccConfig::default(),
            skd: SkdConfig::default(),
            llm: LlmConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        ExperimentConfig::from_toml(&text)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks everything that does not need the corpus or pool loaded.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.runs == 0 {
            return Err(ConfigError("runs must be at least 1".into()));
        }
        if self.variants.is_empty() {
            return Err(ConfigError(
                "variants must name at least one pipeline".into(),
            ));
        }
        if self.channel.snr_db.is_empty() {
            return Err(ConfigError(
                "channel.snr_db must list at least one SNR".into(),
            ));
        }
        for &snr in self.channel.snr_db.iter().chain([&self.sweep.chars_snr_db]) {
            self.channel.at(snr, 0)?;
        }
        self.scc
            .validate()
            .map_err(|e| ConfigError(format!("scc: {e}")))?;
        if self.skd.k_shots == 0 {
            return Err(ConfigError("skd.k_shots must be at least 1".into()));
        }
        if self.sweep.chars_bin_width == 0 {
            return Err(ConfigError(
                "sweep.chars_bin_width must be at least 1".into(),
            ));
        }
        if self.heads.source == HeadSourceKind::ExternalParser && self.heads.endpoint.is_none() {
            return Err(ConfigError(
                "heads.endpoint is required with source = \"external_parser\"".into(),
            ));
        }
        Ok(())
    }

    pub fn uses_skd(&self) -> bool {
        self.variants.iter().any(PipelineSpec::skd)
    }
}
