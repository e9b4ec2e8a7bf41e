//! Corpus-level experiments: the compression table, survival and error
//! rates against SNR, and per-step curves against characters transmitted.
//!
//! Session `(run r, prompt p)` draws its channel noise (and random baseline
//! choices) from `derive_seed(derive_seed(seed, r), p)`. The same seed is
//! used for every variant and SNR point, so curves share their randomness.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, HeadSourceKind};
use crate::fixtures;
use crate::llm::ChatClient;
use crate::metrics::{
    chars_curve, mean_by_step, session_rows, write_rows, write_sweeps, ExportFormat, Metric,
    MetricsError, MetricsRow, SweepAxis, SweepPoint, SweepResult,
};
use crate::pipeline::{Encoded, Pipeline, PipelineError, PipelineSpec, SccStage, SkdStage};
use crate::protocol::{
    run_session, write_traces_jsonl, GenerationSink, NoopSink, ProtocolError, SessionHeader,
    TransmissionTrace,
};
use crate::scc::{LlmSynonymOracle, OracleKind, StaticDictionary, SynonymOracle, Vocabulary};
use crate::seed::derive_seed;
use crate::skd::{
    build_demonstrations, load_pool, Demonstration, LlmTranslator, MockTranslator, T2tTranslator,
    TranslatorKind,
};
use crate::ssc::{ExternalParser, HeadIdentifier, RuleBased};
use crate::text_model::Prompt;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("prompt {prompt} under {variant}: {source}")]
    Pipeline {
        prompt: usize,
        variant: PipelineSpec,
        source: PipelineError,
    },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// True for problems with the configuration or its input files, as
    /// opposed to failures while running.
    pub fn is_config_error(&self) -> bool {
        matches!(self, ExperimentError::Config(_))
    }
}

fn config_err(what: &str, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Config(ConfigError(format!("{what}: {e}")))
}

/// Mean compression of one variant over the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionRow {
    pub variant: String,
    pub prompts: usize,
    pub word_ratio: f64,
    pub word_ratio_se: f64,
    pub char_ratio: f64,
    pub char_ratio_se: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutput {
    pub sweeps: Vec<SweepResult>,
    /// Per-step means, one block per variant (transmitted-characters sweep
    /// only).
    pub steps: Vec<MetricsRow>,
    /// Per-step rows of the traced sessions.
    pub rows: Vec<MetricsRow>,
    pub traces: Vec<TransmissionTrace>,
}

/// Step rows of every session of one variant, and the traces kept.
type VariantSessions = (Vec<Vec<MetricsRow>>, Vec<TransmissionTrace>);

pub struct Experiment {
    config: ExperimentConfig,
    corpus: Vec<Prompt>,
    heads: Box<dyn HeadIdentifier>,
    oracle: Box<dyn SynonymOracle>,
    translator: Box<dyn T2tTranslator>,
    demonstrations: Vec<Demonstration>,
}

impl Experiment {
    /// Validates `config` and loads everything it names.
    pub fn new(config: ExperimentConfig) -> Result<Experiment, ExperimentError> {
        config.validate()?;
        let corpus = match &config.corpus_path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| config_err(&format!("corpus {}", path.display()), e))?;
                fixtures::parse_corpus(&text)
                    .map_err(|e| config_err(&format!("corpus {}", path.display()), e))?
            }
            None => fixtures::corpus(),
        };
        if corpus.is_empty() {
            return Err(config_err("corpus", "no prompts"));
        }
        let heads: Box<dyn HeadIdentifier> = match config.heads.source {
            HeadSourceKind::RuleBased => Box::new(RuleBased),
            HeadSourceKind::ExternalParser => Box::new(ExternalParser::new(
                config.heads.endpoint.clone().unwrap_or_default(),
                Duration::from_secs_f64(config.heads.timeout_secs),
            )),
        };
        let oracle: Box<dyn SynonymOracle> = match config.scc.oracle {
            OracleKind::StaticDictionary => Box::new(match &config.synonyms_path {
                Some(path) => {
                    StaticDictionary::load(path).map_err(|e| config_err("synonyms", e))?
                }
                None => fixtures::synonym_dictionary(),
            }),
            OracleKind::LlmClient => {
                Box::new(LlmSynonymOracle::new(ChatClient::new(config.llm.clone())))
            }
        };
        let translator: Box<dyn T2tTranslator> = match config.skd.translator {
            TranslatorKind::MockTranslator => Box::new(MockTranslator),
            TranslatorKind::LlmClient => Box::new(
                LlmTranslator::new(ChatClient::new(config.llm.clone()), &config.skd.template_id)
                    .map_err(|e| config_err("skd", e))?,
            ),
        };
        let demonstrations = if config.uses_skd() {
            let pool = match &config.demonstrations_path {
                Some(path) => load_pool(path).map_err(|e| config_err("demonstrations", e))?,
                None => fixtures::demonstration_pool(),
            };
            config
                .skd
                .validate(pool.len())
                .map_err(|e| config_err("skd", e))?;
            build_demonstrations(&pool, config.skd.k_shots, config.seed)
                .map_err(|e| config_err("skd", e))?
        } else {
            Vec::new()
        };
        Ok(Experiment {
            config,
            corpus,
            heads,
            oracle,
            translator,
            demonstrations,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn corpus(&self) -> &[Prompt] {
        &self.corpus
    }

    pub fn demonstrations(&self) -> &[Demonstration] {
        &self.demonstrations
    }

    pub fn session_seed(&self, run: usize, prompt: usize) -> u64 {
        derive_seed(derive_seed(self.config.seed, run as u64), prompt as u64)
    }

    fn pipeline(&self, spec: PipelineSpec) -> Pipeline<'_> {
        Pipeline::new(spec, self.heads.as_ref())
            .with_skd(SkdStage {
                translator: self.translator.as_ref(),
                demonstrations: &self.demonstrations,
            })
            .with_scc(SccStage {
                config: &self.config.scc,
                oracle: self.oracle.as_ref(),
            })
    }

    pub fn encode(
        &self,
        spec: PipelineSpec,
        prompt: &Prompt,
        seed: u64,
    ) -> Result<Encoded, PipelineError> {
        self.pipeline(spec).run(prompt, seed)
    }

    /// Encodes every corpus prompt with the seed of run `run`.
    pub fn encode_corpus(
        &self,
        spec: PipelineSpec,
        run: usize,
    ) -> Result<Vec<Encoded>, ExperimentError> {
        self.corpus
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                self.encode(spec, p, self.session_seed(run, i))
                    .map_err(|source| ExperimentError::Pipeline {
                        prompt: i,
                        variant: spec,
                        source,
                    })
            })
            .collect()
    }

    /// Every word a receiver could be meant to see under `variants`: the
    /// corpus, its translations and everything transmitted.
    pub fn vocabulary(&self, variants: &[PipelineSpec]) -> Result<Vocabulary, ExperimentError> {
        let mut words: BTreeSet<String> = self
            .corpus
            .iter()
            .flat_map(|p| p.texts().map(str::to_owned))
            .collect();
        for &spec in variants {
            // Random baselines resend words of the prompt they start from.
            let spec = match spec.baseline_mode() {
                Some(_) => PipelineSpec::new(spec.skd(), true, false).expect("valid"),
                None => spec,
            };
            for e in self.encode_corpus(spec, 0)? {
                words.extend(e.transmitted.texts().map(str::to_owned));
                if let Some(t) = &e.translated {
                    words.extend(t.texts().map(str::to_owned));
                }
            }
        }
        Ok(Vocabulary::new(words).expect("corpus is non-empty"))
    }

    /// Mean word and character ratios of each configured variant.
    pub fn compress(&self) -> Result<Vec<CompressionRow>, ExperimentError> {
        self.config
            .variants
            .iter()
            .map(|&spec| {
                let encoded = self.encode_corpus(spec, 0)?;
                let words: Vec<f64> = encoded
                    .iter()
                    .map(|e| e.report.word_ratio.value())
                    .collect();
                let chars: Vec<f64> = encoded
                    .iter()
                    .map(|e| e.report.char_ratio.value())
                    .collect();
                let w = SweepPoint::from_samples(0.0, &words).expect("non-empty corpus");
                let c = SweepPoint::from_samples(0.0, &chars).expect("non-empty corpus");
                Ok(CompressionRow {
                    variant: spec.label(),
                    prompts: encoded.len(),
                    word_ratio: w.mean,
                    word_ratio_se: w.std_error,
                    char_ratio: c.mean,
                    char_ratio_se: c.std_error,
                })
            })
            .collect()
    }

    /// Sends every prompt `runs` times under each variant at `snr_db`.
    /// Returns per-session step rows, grouped by variant, and the traces
    /// of sessions in the first `trace_runs` runs.
    fn run_sessions(
        &self,
        variants: &[PipelineSpec],
        snr_db: f64,
        vocabulary: &Vocabulary,
    ) -> Result<Vec<VariantSessions>, ExperimentError> {
        let runs = self.config.runs;
        let n = self.corpus.len();
        variants
            .iter()
            .map(|&spec| {
                let fixed = match spec.baseline_mode() {
                    None => Some(self.encode_corpus(spec, 0)?),
                    Some(_) => None,
                };
                let sessions: Vec<(Vec<MetricsRow>, Option<TransmissionTrace>)> = (0..runs * n)
                    .into_par_iter()
                    .map(|k| {
                        let (run, i) = (k / n, k % n);
                        let seed = self.session_seed(run, i);
                        let encoded = match &fixed {
                            Some(all) => all[i].clone(),
                            None => self.encode(spec, &self.corpus[i], seed).map_err(|source| {
                                ExperimentError::Pipeline {
                                    prompt: i,
                                    variant: spec,
                                    source,
                                }
                            })?,
                        };
                        let channel = self.config.channel.at(snr_db, seed)?;
                        let header = SessionHeader::new(
                            format!("{spec}/{snr_db}dB/r{run}/p{i}"),
                            spec.label(),
                            &encoded.source,
                        );
                        let trace =
                            run_session(header, &encoded.transmitted, &channel, &mut NoopSink)?;
                        let rows = session_rows(&trace, vocabulary)?;
                        let keep = run < self.config.sweep.trace_runs;
                        Ok((rows, keep.then_some(trace)))
                    })
                    .collect::<Result<_, ExperimentError>>()?;
                let (rows, traces): (Vec<_>, Vec<_>) = sessions.into_iter().unzip();
                Ok((rows, traces.into_iter().flatten().collect()))
            })
            .collect()
    }

    /// Survival and character error rates at every configured SNR, one
    /// curve per variant and metric.
    pub fn sweep_snr(&self) -> Result<SweepOutput, ExperimentError> {
        let variants = &self.config.variants;
        let vocabulary = self.vocabulary(variants)?;
        let metrics = [Metric::SurvivalRate, Metric::CharErrorRate];
        let mut points: Vec<Vec<Vec<SweepPoint>>> =
            vec![vec![Vec::new(); metrics.len()]; variants.len()];
        let mut out = SweepOutput::default();
        for &snr in &self.config.channel.snr_db {
            log::info!("sweep-snr: {snr} dB");
            let results = self.run_sessions(variants, snr, &vocabulary)?;
            for (v, (sessions, traces)) in results.into_iter().enumerate() {
                for (m, metric) in metrics.iter().enumerate() {
                    let finals: Vec<f64> = sessions
                        .iter()
                        .filter_map(|rows| rows.last().and_then(|r| metric.of(r)))
                        .collect();
                    points[v][m].extend(SweepPoint::from_samples(snr, &finals));
                }
                out.rows.extend(
                    traces
                        .iter()
                        .map(|t| session_rows(t, &vocabulary))
                        .collect::<Result<Vec<_>, _>>()?
                        .into_iter()
                        .flatten(),
                );
                out.traces.extend(traces);
            }
        }
        for (v, spec) in variants.iter().enumerate() {
            for (m, metric) in metrics.iter().enumerate() {
                out.sweeps.push(SweepResult::new(
                    SweepAxis::Snr,
                    spec.label(),
                    *metric,
                    std::mem::take(&mut points[v][m]),
                ));
            }
        }
        Ok(out)
    }

    /// Variants of the transmitted-characters sweep: the configured ones
    /// plus, when enabled, both random baselines of each compressing one.
    pub fn chars_variants(&self) -> Vec<PipelineSpec> {
        let mut out: Vec<PipelineSpec> = Vec::new();
        for &spec in &self.config.variants {
            if !out.contains(&spec) {
                out.push(spec);
            }
            if self.config.sweep.baselines
                && spec.ssc()
                && !spec.scc()
                && spec.baseline_mode().is_none()
            {
                for mode in [
                    crate::ssc::BaselineMode::RandomWords,
                    crate::ssc::BaselineMode::RandomOrder,
                ] {
                    let b = PipelineSpec::baseline(spec.skd(), mode);
                    if !out.contains(&b) {
                        out.push(b);
                    }
                }
            }
        }
        out
    }

    /// Per-step statistics at the configured characters-sweep SNR, against
    /// the number of characters transmitted so far.
    pub fn sweep_chars(&self) -> Result<SweepOutput, ExperimentError> {
        let variants = self.chars_variants();
        let vocabulary = self.vocabulary(&variants)?;
        let snr = self.config.sweep.chars_snr_db;
        let results = self.run_sessions(&variants, snr, &vocabulary)?;
        let mut out = SweepOutput::default();
        for (spec, (sessions, traces)) in variants.iter().zip(results) {
            let label = spec.label();
            for metric in [Metric::SurvivalRate, Metric::CharErrorRate] {
                out.sweeps.push(chars_curve(
                    &sessions,
                    &label,
                    metric,
                    self.config.sweep.chars_bin_width,
                ));
            }
            out.steps.extend(mean_by_step(sessions.iter().flatten()));
            for t in &traces {
                out.rows.extend(session_rows(t, &vocabulary)?);
            }
            out.traces.extend(traces);
        }
        Ok(out)
    }

    /// Encodes and sends a single prompt.
    pub fn trace_prompt(
        &self,
        prompt: &Prompt,
        spec: PipelineSpec,
        snr_db: f64,
        seed: u64,
        sink: &mut dyn GenerationSink,
    ) -> Result<(Encoded, TransmissionTrace), ExperimentError> {
        let encoded =
            self.encode(spec, prompt, seed)
                .map_err(|source| ExperimentError::Pipeline {
                    prompt: 0,
                    variant: spec,
                    source,
                })?;
        let channel = self.config.channel.at(snr_db, seed)?;
        let header = SessionHeader::new(
            format!("{spec}/{snr_db}dB/trace"),
            spec.label(),
            &encoded.source,
        );
        let trace = run_session(header, &encoded.transmitted, &channel, sink)?;
        Ok((encoded, trace))
    }
}

/// Files of one command, written into the output directory with a manifest.
pub struct OutputSet<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> OutputSet<'a> {
    pub fn create(dir: &'a Path) -> Result<OutputSet<'a>, ExperimentError> {
        std::fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
            path: dir.to_owned(),
            source,
        })?;
        Ok(OutputSet {
            dir,
            written: Vec::new(),
        })
    }

    fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<(), ExperimentError>,
    ) -> Result<(), ExperimentError> {
        let path = self.dir.join(name);
        let io = |source| ExperimentError::Io {
            path: path.clone(),
            source,
        };
        let file = std::fs::File::create(&path).map_err(io)?;
        let mut w = std::io::BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(io)?;
        self.written.push(name.to_owned());
        Ok(())
    }

    pub fn compression(&mut self, rows: &[CompressionRow]) -> Result<(), ExperimentError> {
        self.write_with("compression.csv", |w| {
            let mut csv = csv::Writer::from_writer(w);
            for row in rows {
                csv.serialize(row)
                    .map_err(|e| MetricsError::Format(e.to_string()))?;
            }
            csv.flush().map_err(MetricsError::from)?;
            Ok(())
        })
    }

    pub fn sweep(&mut self, name: &str, out: &SweepOutput) -> Result<(), ExperimentError> {
        self.write_with(&format!("{name}.csv"), |w| {
            Ok(write_sweeps(&out.sweeps, ExportFormat::Csv, w)?)
        })?;
        if !out.steps.is_empty() {
            self.write_with("steps.csv", |w| {
                Ok(write_rows(&out.steps, ExportFormat::Csv, w)?)
            })?;
        }
        self.write_with("rows.csv", |w| {
            Ok(write_rows(&out.rows, ExportFormat::Csv, w)?)
        })?;
        self.write_with("traces.jsonl", |w| Ok(write_traces_jsonl(&out.traces, w)?))
    }

    pub fn traces(
        &mut self,
        name: &str,
        traces: &[TransmissionTrace],
    ) -> Result<(), ExperimentError> {
        self.write_with(name, |w| Ok(write_traces_jsonl(traces, w)?))
    }

    /// Writes `manifest.json`: tool version, command, seed, the full
    /// configuration and the files written before it.
    pub fn finish(
        mut self,
        command: &str,
        config: &ExperimentConfig,
    ) -> Result<Vec<String>, ExperimentError> {
        let manifest = serde_json::json!({
            "tool": "lsc",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "seed": config.seed,
            "config": config,
            "outputs": self.written,
        });
        self.write_with("manifest.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &manifest)
                .map_err(std::io::Error::from)
                .map_err(MetricsError::from)?;
            w.write_all(b"\n").map_err(MetricsError::from)?;
            Ok(())
        })?;
        Ok(self.written)
    }
}
