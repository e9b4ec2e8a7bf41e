//! Per-step statistics of transmission traces, sweep summaries, and their
//! flat-file formats.

mod export;
mod lpips;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use export::{
    read_rows, read_sweeps, write_rows, write_sweeps, ExportFormat, ROW_COLUMNS, SWEEP_COLUMNS,
};
pub use lpips::{ingest_lpips, ingest_lpips_from, IngestOutcome, ScoreLine};

use crate::protocol::TransmissionTrace;
use crate::scc::{survival_decode, Vocabulary};

/// Session id of rows averaged over sessions.
pub const AGGREGATE_ID: &str = "*";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no traces to aggregate")]
    NoTraces,
    #[error("traces disagree on {field}: {first} vs {other}")]
    InconsistentConfigs {
        field: &'static str,
        first: String,
        other: String,
    },
    #[error("transmitted word {0:?} is missing from the survival vocabulary")]
    WordOutsideVocabulary(String),
    #[error("score file line {line}: {message}")]
    MalformedScoreFile { line: usize, message: String },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Cumulative statistics after step `t` of one session, or their mean over
/// `sessions` sessions when `session_id` is [`AGGREGATE_ID`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub session_id: String,
    pub variant: String,
    pub t: usize,
    pub sessions: usize,
    pub words_sent: f64,
    pub chars_sent: f64,
    pub word_ratio: f64,
    pub char_ratio: f64,
    /// Corrupted over transmitted characters.
    pub char_error_rate: f64,
    /// Share of words so far that the survival decoder maps back to the
    /// word that was sent.
    pub survival_rate: f64,
    pub lpips: Option<f64>,
}

/// True when the nearest vocabulary word to `received` is `sent`, which
/// must itself be in the vocabulary.
pub fn word_survives(sent: &str, received: &str, vocabulary: &Vocabulary) -> bool {
    sent == received || survival_decode(received, vocabulary).0 == sent
}

/// One row per step of `trace`.
pub fn session_rows(
    trace: &TransmissionTrace,
    vocabulary: &Vocabulary,
) -> Result<Vec<MetricsRow>, MetricsError> {
    let mut survived = 0usize;
    let header = &trace.header;
    trace
        .steps
        .iter()
        .map(|step| {
            let sent = &step.frame_sent.payload;
            if !vocabulary.contains(sent) {
                return Err(MetricsError::WordOutsideVocabulary(sent.clone()));
            }
            survived += usize::from(word_survives(
                sent,
                &step.frame_received.payload,
                vocabulary,
            ));
            let t = step.t();
            let chars = step.metrics.cumulative_chars;
            Ok(MetricsRow {
                session_id: header.session_id.clone(),
                variant: header.variant.clone(),
                t,
                sessions: 1,
                words_sent: t as f64,
                chars_sent: chars as f64,
                word_ratio: t as f64 / header.source_words as f64,
                char_ratio: chars as f64 / header.source_chars as f64,
                char_error_rate: if chars == 0 {
                    0.0
                } else {
                    step.metrics.cumulative_char_errors as f64 / chars as f64
                },
                survival_rate: survived as f64 / t as f64,
                lpips: None,
            })
        })
        .collect()
}

fn check_consistent(traces: &[TransmissionTrace]) -> Result<(), MetricsError> {
    let first = traces.first().ok_or(MetricsError::NoTraces)?;
    for other in &traces[1..] {
        if other.header.variant != first.header.variant {
            return Err(MetricsError::InconsistentConfigs {
                field: "variant",
                first: first.header.variant.clone(),
                other: other.header.variant.clone(),
            });
        }
        if !other.channel.same_channel(&first.channel) {
            return Err(MetricsError::InconsistentConfigs {
                field: "channel",
                first: format!("{:?}", first.channel.model),
                other: format!("{:?}", other.channel.model),
            });
        }
    }
    Ok(())
}

/// Per-step means over sessions. Row `t` averages the sessions that
/// transmitted at least `t` words; its `sessions` field counts them.
///
/// All traces must share a pipeline variant and a channel (seeds may
/// differ).
pub fn aggregate(
    traces: &[TransmissionTrace],
    vocabulary: &Vocabulary,
) -> Result<Vec<MetricsRow>, MetricsError> {
    check_consistent(traces)?;
    let per_session: Vec<Vec<MetricsRow>> = traces
        .par_iter()
        .map(|trace| session_rows(trace, vocabulary))
        .collect::<Result<_, _>>()?;
    let mut rows = mean_by_step(per_session.iter().flatten());
    let variant = &traces[0].header.variant;
    for row in &mut rows {
        row.variant.clone_from(variant);
    }
    Ok(rows)
}

/// Averages rows sharing a step, weighting each by its `sessions` count.
/// LPIPS is averaged over the rows that carry it.
pub fn mean_by_step<'a, I>(rows: I) -> Vec<MetricsRow>
where
    I: IntoIterator<Item = &'a MetricsRow>,
{
    #[derive(Default)]
    struct Acc {
        n: usize,
        sums: [f64; 6],
        lpips_n: usize,
        lpips_sum: f64,
        variant: Option<String>,
    }
    let mut by_step: BTreeMap<usize, Acc> = BTreeMap::new();
    for row in rows {
        let acc = by_step.entry(row.t).or_default();
        let w = row.sessions as f64;
        acc.n += row.sessions;
        for (sum, v) in acc.sums.iter_mut().zip(row_values(row)) {
            *sum += w * v;
        }
        if let Some(l) = row.lpips {
            acc.lpips_n += row.sessions;
            acc.lpips_sum += w * l;
        }
        acc.variant.get_or_insert_with(|| row.variant.clone());
    }
    by_step
        .into_iter()
        .map(|(t, acc)| {
            let n = acc.n as f64;
            let [words, chars, wr, cr, cer, surv] = acc.sums.map(|s| s / n);
            MetricsRow {
                session_id: AGGREGATE_ID.to_owned(),
                variant: acc.variant.unwrap_or_default(),
                t,
                sessions: acc.n,
                words_sent: words,
                chars_sent: chars,
                word_ratio: wr,
                char_ratio: cr,
                char_error_rate: cer,
                survival_rate: surv,
                lpips: (acc.lpips_n > 0).then(|| acc.lpips_sum / acc.lpips_n as f64),
            }
        })
        .collect()
}

fn row_values(row: &MetricsRow) -> [f64; 6] {
    [
        row.words_sent,
        row.chars_sent,
        row.word_ratio,
        row.char_ratio,
        row.char_error_rate,
        row.survival_rate,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Snr,
    CharsTransmitted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SurvivalRate,
    CharErrorRate,
    WordRatio,
    CharRatio,
    Lpips,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Snr => "snr",
            SweepAxis::CharsTransmitted => "chars_transmitted",
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::SurvivalRate => "survival_rate",
            Metric::CharErrorRate => "char_error_rate",
            Metric::WordRatio => "word_ratio",
            Metric::CharRatio => "char_ratio",
            Metric::Lpips => "lpips",
        })
    }
}

impl Metric {
    pub fn of(self, row: &MetricsRow) -> Option<f64> {
        match self {
            Metric::SurvivalRate => Some(row.survival_rate),
            Metric::CharErrorRate => Some(row.char_error_rate),
            Metric::WordRatio => Some(row.word_ratio),
            Metric::CharRatio => Some(row.char_ratio),
            Metric::Lpips => row.lpips,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl SweepPoint {
    /// Mean and standard error of the mean of `samples`; `None` when empty.
    pub fn from_samples(axis_value: f64, samples: &[f64]) -> Option<SweepPoint> {
        let n = samples.len();
        if n == 0 {
            return None;
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n < 2 {
            0.0
        } else {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Some(SweepPoint {
            axis_value,
            mean,
            std_error,
            n,
        })
    }
}

/// One curve: a metric of one pipeline variant along an axis, points in
/// ascending axis order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub variant: String,
    pub metric: Metric,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn new(
        axis: SweepAxis,
        variant: impl Into<String>,
        metric: Metric,
        mut points: Vec<SweepPoint>,
    ) -> SweepResult {
        points.sort_by(|a, b| a.axis_value.total_cmp(&b.axis_value));
        SweepResult {
            axis,
            variant: variant.into(),
            metric,
            points,
        }
    }

    pub fn point_at(&self, axis_value: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.axis_value == axis_value)
    }
}

/// Curve of `metric` against characters transmitted. At each budget `c`
/// (multiples of `bin_width` up to the longest session), a session
/// contributes its row for the last word completed within `c` characters;
/// sessions that have not completed a word yet are left out.
pub fn chars_curve(
    per_session: &[Vec<MetricsRow>],
    variant: &str,
    metric: Metric,
    bin_width: usize,
) -> SweepResult {
    let bin_width = bin_width.max(1);
    let longest = per_session
        .iter()
        .filter_map(|rows| rows.last())
        .map(|r| r.chars_sent as usize)
        .max()
        .unwrap_or(0);
    let mut points = Vec::new();
    let mut budget = bin_width;
    while budget < longest + bin_width {
        let samples: Vec<f64> = per_session
            .iter()
            .filter_map(|rows| {
                rows.iter()
                    .take_while(|r| r.chars_sent <= budget as f64)
                    .last()
                    .and_then(|r| metric.of(r))
            })
            .collect();
        points.extend(SweepPoint::from_samples(budget as f64, &samples));
        budget += bin_width;
    }
    SweepResult::new(SweepAxis::CharsTransmitted, variant, metric, points)
}
