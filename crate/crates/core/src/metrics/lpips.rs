//! Ingest of externally computed perceptual distances.
//!
//! The score file is line-delimited JSON, one object per scored step:
//! `{"session_id": "...", "t": 3, "lpips": 0.71}`. Other keys (generator
//! and backbone identifiers) are ignored.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MetricsError, MetricsRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreLine {
    pub session_id: String,
    pub t: usize,
    pub lpips: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOutcome {
    pub rows: Vec<MetricsRow>,
    pub updated: usize,
    /// Score lines with no matching row, with their line numbers.
    pub unmatched: Vec<(usize, ScoreLine)>,
}

pub fn ingest_lpips(rows: Vec<MetricsRow>, scores: &Path) -> Result<IngestOutcome, MetricsError> {
    let file = std::fs::File::open(scores)?;
    ingest_lpips_from(rows, std::io::BufReader::new(file))
}

/// Attaches each score to the row with the same session id and step. No
/// rows are added; scores without a row are returned and logged.
pub fn ingest_lpips_from<R: BufRead>(
    mut rows: Vec<MetricsRow>,
    scores: R,
) -> Result<IngestOutcome, MetricsError> {
    let index: HashMap<(String, usize), usize> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| ((r.session_id.clone(), r.t), i))
        .collect();
    let mut updated = 0;
    let mut unmatched = Vec::new();
    for (i, line) in scores.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let score: ScoreLine =
            serde_json::from_str(&line).map_err(|e| MetricsError::MalformedScoreFile {
                line: line_no,
                message: e.to_string(),
            })?;
        if !score.lpips.is_finite() || score.lpips < 0.0 {
            return Err(MetricsError::MalformedScoreFile {
                line: line_no,
                message: format!("lpips must be finite and non-negative, got {}", score.lpips),
            });
        }
        match index.get(&(score.session_id.clone(), score.t)) {
            Some(&row) => {
                if rows[row].lpips.is_some() {
                    log::warn!(
                        "score line {line_no}: {} t={} scored twice, keeping the later value",
                        score.session_id,
                        score.t
                    );
                }
                rows[row].lpips = Some(score.lpips);
                updated += 1;
            }
            None => {
                log::warn!(
                    "score line {line_no}: no row for session {:?} step {}",
                    score.session_id,
                    score.t
                );
                unmatched.push((line_no, score));
            }
        }
    }
    Ok(IngestOutcome {
        rows,
        updated,
        unmatched,
    })
}
