use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Metric, MetricsError, MetricsRow, SweepAxis, SweepPoint, SweepResult};

pub const ROW_COLUMNS: [&str; 11] = [
    "session_id",
    "variant",
    "t",
    "sessions",
    "words_sent",
    "chars_sent",
    "word_ratio",
    "char_ratio",
    "char_error_rate",
    "survival_rate",
    "lpips",
];

pub const SWEEP_COLUMNS: [&str; 7] = [
    "axis",
    "variant",
    "metric",
    "axis_value",
    "mean",
    "std_error",
    "n",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Jsonl,
}

impl ExportFormat {
    /// `.jsonl` and `.ndjson` select JSONL; anything else CSV.
    pub fn from_path(path: &Path) -> ExportFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson") => ExportFormat::Jsonl,
            _ => ExportFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SweepRecord {
    axis: SweepAxis,
    variant: String,
    metric: Metric,
    axis_value: f64,
    mean: f64,
    std_error: f64,
    n: usize,
}

fn csv_error(e: csv::Error) -> MetricsError {
    MetricsError::Format(e.to_string())
}

fn write_csv<T: Serialize, W: Write>(
    columns: &[&str],
    items: impl IntoIterator<Item = T>,
    out: W,
) -> Result<(), MetricsError> {
    // Header written by hand so that empty input still yields one.
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(columns).map_err(csv_error)?;
    for item in items {
        w.serialize(item).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv<T: for<'de> Deserialize<'de>, R: BufRead>(
    columns: &[&str],
    input: R,
) -> Result<Vec<T>, MetricsError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_error)?;
    if headers.iter().ne(columns.iter().copied()) {
        return Err(MetricsError::Format(format!(
            "unexpected CSV header {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    r.deserialize().map(|rec| rec.map_err(csv_error)).collect()
}

fn write_jsonl<T: Serialize, W: Write>(
    items: impl IntoIterator<Item = T>,
    mut out: W,
) -> Result<(), MetricsError> {
    for item in items {
        serde_json::to_writer(&mut out, &item).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>, R: BufRead>(input: R) -> Result<Vec<T>, MetricsError> {
    let mut items = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(
            serde_json::from_str(&line)
                .map_err(|e| MetricsError::Format(format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(items)
}

pub fn write_rows<W: Write>(
    rows: &[MetricsRow],
    format: ExportFormat,
    out: W,
) -> Result<(), MetricsError> {
    match format {
        ExportFormat::Csv => write_csv(&ROW_COLUMNS, rows, out),
        ExportFormat::Jsonl => write_jsonl(rows, out),
    }
}

pub fn read_rows<R: BufRead>(
    format: ExportFormat,
    input: R,
) -> Result<Vec<MetricsRow>, MetricsError> {
    match format {
        ExportFormat::Csv => read_csv(&ROW_COLUMNS, input),
        ExportFormat::Jsonl => read_jsonl(input),
    }
}

fn records(sweeps: &[SweepResult]) -> impl Iterator<Item = SweepRecord> + '_ {
    sweeps.iter().flat_map(|s| {
        s.points.iter().map(|p| SweepRecord {
            axis: s.axis,
            variant: s.variant.clone(),
            metric: s.metric,
            axis_value: p.axis_value,
            mean: p.mean,
            std_error: p.std_error,
            n: p.n,
        })
    })
}

/// One line per point; the curve fields repeat on every line.
pub fn write_sweeps<W: Write>(
    sweeps: &[SweepResult],
    format: ExportFormat,
    out: W,
) -> Result<(), MetricsError> {
    match format {
        ExportFormat::Csv => write_csv(&SWEEP_COLUMNS, records(sweeps), out),
        ExportFormat::Jsonl => write_jsonl(records(sweeps), out),
    }
}

/// Consecutive points sharing axis, variant and metric form one curve.
pub fn read_sweeps<R: BufRead>(
    format: ExportFormat,
    input: R,
) -> Result<Vec<SweepResult>, MetricsError> {
    let records: Vec<SweepRecord> = match format {
        ExportFormat::Csv => read_csv(&SWEEP_COLUMNS, input)?,
        ExportFormat::Jsonl => read_jsonl(input)?,
    };
    let mut sweeps: Vec<SweepResult> = Vec::new();
    for r in records {
        let point = SweepPoint {
            axis_value: r.axis_value,
            mean: r.mean,
            std_error: r.std_error,
            n: r.n,
        };
        match sweeps.last_mut() {
            Some(s) if s.axis == r.axis && s.variant == r.variant && s.metric == r.metric => {
                s.points.push(point)
            }
            _ => sweeps.push(SweepResult {
                axis: r.axis,
                variant: r.variant,
                metric: r.metric,
                points: vec![point],
            }),
        }
    }
    Ok(sweeps)
}
