use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lsc::config::{ChannelKind, ConfigError, ExperimentConfig, HeadSourceKind};
use lsc::experiment::{CompressionRow, Experiment, ExperimentError, OutputSet, SweepOutput};
use lsc::metrics::{ingest_lpips, read_rows, write_rows, ExportFormat};
use lsc::pipeline::PipelineSpec;
use lsc::protocol::NoopSink;
use lsc::scc::OracleKind;
use lsc::skd::TranslatorKind;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(
    name = "lsc",
    version,
    about = "Semantic text transmission experiments"
)]
struct Cli {
    /// More logging (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Word and character compression ratios of each variant over the corpus.
    Compress(Overrides),
    /// Survival and character error rates against SNR.
    SweepSnr {
        #[command(flatten)]
        overrides: Overrides,
        /// Leading runs whose traces are written out.
        #[arg(long)]
        trace_runs: Option<usize>,
    },
    /// Per-step metrics against characters transmitted.
    SweepChars {
        #[command(flatten)]
        overrides: Overrides,
        /// Character budget step.
        #[arg(long)]
        bin_width: Option<usize>,
        /// SNR of the sweep in dB.
        #[arg(long)]
        at_snr: Option<f64>,
        /// Leave out the random baselines.
        #[arg(long)]
        no_baselines: bool,
    },
    /// Encode and send one prompt, printing every step.
    Trace {
        /// Prompt text.
        text: String,
        #[command(flatten)]
        overrides: Overrides,
        /// Pipeline variant.
        #[arg(long, default_value = "ssc+scc")]
        variant: PipelineSpec,
        /// SNR in dB; defaults to the characters-sweep SNR.
        #[arg(long)]
        at_snr: Option<f64>,
    },
    /// Attach perceptual scores to a rows file.
    IngestLpips {
        /// Rows file (.csv or .jsonl).
        rows: PathBuf,
        /// Line-delimited JSON scores.
        scores: PathBuf,
        /// Output rows file (.csv or .jsonl).
        #[arg(short, long)]
        out: PathBuf,
    },
}

/// Configuration file plus per-key overrides.
#[derive(Args)]
struct Overrides {
    /// TOML configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Passes over the corpus.
    #[arg(long)]
    runs: Option<usize>,
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    /// Comma-separated pipeline variants, e.g. ssc,ssc+scc.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<PipelineSpec>>,
    /// Comma-separated SNR points in dB.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    channel: Option<ChannelArg>,
    /// Fixed DMC crossover probability.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    synonyms: Option<PathBuf>,
    #[arg(long)]
    demonstrations: Option<PathBuf>,
    /// Dependency-parse service; switches head identification to it.
    #[arg(long)]
    parser_endpoint: Option<String>,
    #[arg(long)]
    p_c: Option<f64>,
    #[arg(long)]
    expansion_cap: Option<usize>,
    /// Synonym oracle.
    #[arg(long, value_enum)]
    oracle: Option<BackendArg>,
    #[arg(long)]
    k_shots: Option<usize>,
    /// Style translator.
    #[arg(long, value_enum)]
    translator: Option<BackendArg>,
    /// Chat-completions URL for the LLM backends.
    #[arg(long)]
    llm_endpoint: Option<String>,
    #[arg(long)]
    llm_model: Option<String>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ChannelArg {
    Waveform16qam,
    Dmc,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum BackendArg {
    Offline,
    Llm,
}

impl Overrides {
    fn apply(self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        set!(cfg.seed, self.seed);
        set!(cfg.runs, self.runs);
        set!(cfg.output_dir, self.output_dir);
        set!(cfg.variants, self.variants);
        set!(cfg.channel.snr_db, self.snr);
        if let Some(c) = self.channel {
            cfg.channel.model = match c {
                ChannelArg::Waveform16qam => ChannelKind::Waveform16qam,
                ChannelArg::Dmc => ChannelKind::Dmc,
            };
        }
        if self.epsilon.is_some() {
            cfg.channel.epsilon = self.epsilon;
        }
        cfg.corpus_path = self.corpus.or(cfg.corpus_path);
        cfg.synonyms_path = self.synonyms.or(cfg.synonyms_path);
        cfg.demonstrations_path = self.demonstrations.or(cfg.demonstrations_path);
        if let Some(endpoint) = self.parser_endpoint {
            cfg.heads.source = HeadSourceKind::ExternalParser;
            cfg.heads.endpoint = Some(endpoint);
        }
        set!(cfg.scc.p_c, self.p_c);
        set!(cfg.scc.expansion_cap, self.expansion_cap);
        if let Some(b) = self.oracle {
            cfg.scc.oracle = match b {
                BackendArg::Offline => OracleKind::StaticDictionary,
                BackendArg::Llm => OracleKind::LlmClient,
            };
        }
        set!(cfg.skd.k_shots, self.k_shots);
        if let Some(b) = self.translator {
            cfg.skd.translator = match b {
                BackendArg::Offline => TranslatorKind::MockTranslator,
                BackendArg::Llm => TranslatorKind::LlmClient,
            };
        }
        set!(cfg.llm.endpoint, self.llm_endpoint);
        set!(cfg.llm.model, self.llm_model);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Failure {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Failure {
        Failure::Config(e.to_string())
    }
}

fn print_compression(rows: &[CompressionRow]) {
    println!(
        "{:<14} {:>7} {:>12} {:>9} {:>12} {:>9}",
        "variant", "prompts", "word_ratio", "se", "char_ratio", "se"
    );
    for r in rows {
        println!(
            "{:<14} {:>7} {:>12.4} {:>9.4} {:>12.4} {:>9.4}",
            r.variant, r.prompts, r.word_ratio, r.word_ratio_se, r.char_ratio, r.char_ratio_se
        );
    }
}

fn print_sweeps(out: &SweepOutput) {
    for s in &out.sweeps {
        println!("{} {} vs {}", s.variant, s.metric, s.axis);
        for p in &s.points {
            println!(
                "  {:>8.2} {:>10.4} ± {:.4}  (n = {})",
                p.axis_value, p.mean, p.std_error, p.n
            );
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Compress(overrides) => {
            let cfg = overrides.apply()?;
            let exp = Experiment::new(cfg)?;
            let rows = exp.compress()?;
            print_compression(&rows);
            let mut files = OutputSet::create(&exp.config().output_dir)?;
            files.compression(&rows)?;
            files.finish("compress", exp.config())?;
        }
        Command::SweepSnr {
            overrides,
            trace_runs,
        } => {
            let mut cfg = overrides.apply()?;
            if let Some(n) = trace_runs {
                cfg.sweep.trace_runs = n;
            }
            let exp = Experiment::new(cfg)?;
            let out = exp.sweep_snr()?;
            print_sweeps(&out);
            let mut files = OutputSet::create(&exp.config().output_dir)?;
            files.sweep("sweep_snr", &out)?;
            files.finish("sweep-snr", exp.config())?;
        }
        Command::SweepChars {
            overrides,
            bin_width,
            at_snr,
            no_baselines,
        } => {
            let mut cfg = overrides.apply()?;
            if let Some(w) = bin_width {
                cfg.sweep.chars_bin_width = w;
            }
            if let Some(s) = at_snr {
                cfg.sweep.chars_snr_db = s;
            }
            if no_baselines {
                cfg.sweep.baselines = false;
            }
            let exp = Experiment::new(cfg)?;
            let out = exp.sweep_chars()?;
            print_sweeps(&out);
            let mut files = OutputSet::create(&exp.config().output_dir)?;
            files.sweep("sweep_chars", &out)?;
            files.finish("sweep-chars", exp.config())?;
        }
        Command::Trace {
            text,
            overrides,
            variant,
            at_snr,
        } => {
            let mut cfg = overrides.apply()?;
            cfg.variants = vec![variant];
            let snr = at_snr.unwrap_or(cfg.sweep.chars_snr_db);
            let prompt =
                lsc::text_model::tokenize(&text).map_err(|e| Failure::Config(e.to_string()))?;
            let exp = Experiment::new(cfg)?;
            let (encoded, trace) =
                exp.trace_prompt(&prompt, variant, snr, exp.config().seed, &mut NoopSink)?;
            println!("source      {}", encoded.source.joined());
            if let Some(t) = &encoded.translated {
                println!("translated  {}", t.joined());
            }
            println!("transmitted {}", encoded.transmitted.joined());
            println!(
                "ratios      word {:.4}  char {:.4}",
                encoded.report.word_ratio.value(),
                encoded.report.char_ratio.value()
            );
            print!("{trace}");
            let mut files = OutputSet::create(&exp.config().output_dir)?;
            files.traces("trace.jsonl", std::slice::from_ref(&trace))?;
            files.finish("trace", exp.config())?;
        }
        Command::IngestLpips { rows, scores, out } => {
            let runtime = |e: lsc::metrics::MetricsError| Failure::Runtime(e.to_string());
            let input = std::fs::File::open(&rows)
                .map_err(|e| Failure::Config(format!("{}: {e}", rows.display())))?;
            let parsed = read_rows(
                ExportFormat::from_path(&rows),
                std::io::BufReader::new(input),
            )
            .map_err(|e| Failure::Config(format!("{}: {e}", rows.display())))?;
            let outcome = ingest_lpips(parsed, &scores)
                .map_err(|e| Failure::Config(format!("{}: {e}", scores.display())))?;
            let file = std::fs::File::create(&out)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
            write_rows(
                &outcome.rows,
                ExportFormat::from_path(&out),
                std::io::BufWriter::new(file),
            )
            .map_err(runtime)?;
            println!(
                "{} rows updated, {} score lines unmatched",
                outcome.updated,
                outcome.unmatched.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("lsc: configuration error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("lsc: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
