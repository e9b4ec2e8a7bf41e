//! Line-delimited JSON for transmission traces: one step per line, with the
//! session fields repeated on every line so each line stands alone.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Frame, ProtocolError, SessionHeader, StepMetrics, TraceStep, TransmissionTrace};
use crate::channel::ChannelSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub session_id: String,
    pub variant: String,
    pub channel: ChannelSpec,
    pub source_words: usize,
    pub source_chars: usize,
    pub t: usize,
    pub frame_sent: Frame,
    pub frame_received: Frame,
    pub receiver_prompt: String,
    #[serde(flatten)]
    pub metrics: StepMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sink_error: Option<String>,
}

impl TraceLine {
    fn header(&self) -> SessionHeader {
        SessionHeader {
            session_id: self.session_id.clone(),
            variant: self.variant.clone(),
            source_words: self.source_words,
            source_chars: self.source_chars,
        }
    }
}

pub fn write_traces_jsonl<W: Write>(
    traces: &[TransmissionTrace],
    mut out: W,
) -> Result<(), ProtocolError> {
    for trace in traces {
        for step in &trace.steps {
            let line = TraceLine {
                session_id: trace.header.session_id.clone(),
                variant: trace.header.variant.clone(),
                channel: trace.channel,
                source_words: trace.header.source_words,
                source_chars: trace.header.source_chars,
                t: step.t(),
                frame_sent: step.frame_sent.clone(),
                frame_received: step.frame_received.clone(),
                receiver_prompt: step.receiver_prompt.clone(),
                metrics: step.metrics,
                sink_error: step.sink_error.clone(),
            };
            serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads traces back. Consecutive lines sharing a session id form one
/// trace; their steps must be numbered 1, 2, 3, ...
pub fn read_traces_jsonl<R: BufRead>(input: R) -> Result<Vec<TransmissionTrace>, ProtocolError> {
    let mut traces: Vec<TransmissionTrace> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| ProtocolError::TraceFormat {
            line: line_no,
            message,
        };
        let parsed: TraceLine = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if parsed.t != usize::from(parsed.frame_sent.word_index) {
            return Err(bad(format!(
                "t = {} but frame_sent.word_index = {}",
                parsed.t, parsed.frame_sent.word_index
            )));
        }
        let continues = traces
            .last()
            .is_some_and(|tr| tr.header.session_id == parsed.session_id);
        if !continues {
            traces.push(TransmissionTrace {
                header: parsed.header(),
                channel: parsed.channel,
                steps: Vec::new(),
            });
        }
        let trace = traces.last_mut().expect("just pushed");
        if trace.header != parsed.header() || trace.channel != parsed.channel {
            return Err(bad(format!(
                "session {} changes its header mid-trace",
                parsed.session_id
            )));
        }
        if parsed.t != trace.steps.len() + 1 {
            return Err(bad(format!(
                "expected step {} of session {}, found {}",
                trace.steps.len() + 1,
                parsed.session_id,
                parsed.t
            )));
        }
        trace.steps.push(TraceStep {
            frame_sent: parsed.frame_sent,
            frame_received: parsed.frame_received,
            receiver_prompt: parsed.receiver_prompt,
            metrics: parsed.metrics,
            sink_error: parsed.sink_error,
        });
    }
    Ok(traces)
}
