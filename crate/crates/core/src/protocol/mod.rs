//! Progressive word-by-word transmission.
//!
//! Word `t` of the encoded prompt travels in its own [`Frame`]. Only the
//! payload crosses the noisy channel; the receiver appends whatever arrives
//! to its accumulated prompt `h(t)` and hands the snapshot to a
//! [`GenerationSink`].

mod frame;
mod trace_io;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use frame::{
    decode_frame, encode_frame, Frame, FrameError, FRAME_MAGIC, FRAME_VERSION, HEADER_LEN,
    MAX_PAYLOAD,
};
pub use trace_io::{read_traces_jsonl, write_traces_jsonl, TraceLine};

use crate::channel::{transmit_on_stream, ChannelError, ChannelSpec};
use crate::text_model::Prompt;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("frame {got} arrived after frame {last}")]
    OutOfOrder { last: u16, got: u16 },
    #[error("trace line {line}: {message}")]
    TraceFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct SinkError(pub String);

/// Notified once per received word with the accumulated prompt.
pub trait GenerationSink {
    fn on_prompt(&mut self, session_id: &str, t: usize, prompt: &str) -> Result<(), SinkError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoopSink;

impl GenerationSink for NoopSink {
    fn on_prompt(&mut self, _: &str, _: usize, _: &str) -> Result<(), SinkError> {
        Ok(())
    }
}

/// Keeps every snapshot it is shown.
#[derive(Debug, Clone, Default)]
pub struct RecordingSink {
    pub prompts: Vec<(String, usize, String)>,
}

impl GenerationSink for RecordingSink {
    fn on_prompt(&mut self, session_id: &str, t: usize, prompt: &str) -> Result<(), SinkError> {
        self.prompts
            .push((session_id.to_owned(), t, prompt.to_owned()));
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReceiverState {
    received_words: Vec<(u16, String)>,
    accumulated_prompt: String,
}

impl ReceiverState {
    pub fn new() -> ReceiverState {
        ReceiverState::default()
    }

    /// Appends the frame's payload. Frames must arrive with strictly
    /// increasing word indices.
    pub fn receive(&mut self, frame: &Frame) -> Result<&str, ProtocolError> {
        if let Some(&(last, _)) = self.received_words.last() {
            if frame.word_index <= last {
                return Err(ProtocolError::OutOfOrder {
                    last,
                    got: frame.word_index,
                });
            }
        }
        if !self.received_words.is_empty() {
            self.accumulated_prompt.push(' ');
        }
        self.accumulated_prompt.push_str(&frame.payload);
        self.received_words
            .push((frame.word_index, frame.payload.clone()));
        Ok(&self.accumulated_prompt)
    }

    pub fn received_words(&self) -> &[(u16, String)] {
        &self.received_words
    }

    pub fn accumulated_prompt(&self) -> &str {
        &self.accumulated_prompt
    }
}

/// Identifies a session and the size of the prompt it was derived from, the
/// denominators of the compression ratios.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub session_id: String,
    /// Pipeline label such as `ssc+scc`.
    pub variant: String,
    pub source_words: usize,
    pub source_chars: usize,
}

impl SessionHeader {
    pub fn new(
        session_id: impl Into<String>,
        variant: impl Into<String>,
        source: &Prompt,
    ) -> SessionHeader {
        SessionHeader {
            session_id: session_id.into(),
            variant: variant.into(),
            source_words: source.len(),
            source_chars: source.char_count(),
        }
    }
}

/// Running counts after a step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub char_errors: usize,
    pub symbol_errors: usize,
    pub cumulative_chars: usize,
    pub cumulative_char_errors: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub frame_sent: Frame,
    pub frame_received: Frame,
    pub receiver_prompt: String,
    pub metrics: StepMetrics,
    pub sink_error: Option<String>,
}

impl TraceStep {
    pub fn t(&self) -> usize {
        usize::from(self.frame_sent.word_index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionTrace {
    pub header: SessionHeader,
    pub channel: ChannelSpec,
    pub steps: Vec<TraceStep>,
}

impl TransmissionTrace {
    pub fn session_id(&self) -> &str {
        &self.header.session_id
    }

    pub fn final_prompt(&self) -> &str {
        self.steps.last().map_or("", |s| s.receiver_prompt.as_str())
    }

    pub fn chars_sent(&self) -> usize {
        self.steps.last().map_or(0, |s| s.metrics.cumulative_chars)
    }
}

impl fmt::Display for TransmissionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "session {} ({}), {} word(s) over {:?}",
            self.header.session_id,
            self.header.variant,
            self.steps.len(),
            self.channel.model
        )?;
        for step in &self.steps {
            write!(
                f,
                "  t={:<3} {:<16} -> {:<16} errors={} h(t)={:?}",
                step.t(),
                step.frame_sent.payload,
                step.frame_received.payload,
                step.metrics.char_errors,
                step.receiver_prompt
            )?;
            if let Some(e) = &step.sink_error {
                write!(f, " sink_error={e:?}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Sends `encoded` word by word. Word `t` (1-based) is corrupted on random
/// stream `t` of the channel seed. Sink failures are recorded in the step
/// and do not stop the session.
pub fn run_session(
    header: SessionHeader,
    encoded: &Prompt,
    spec: &ChannelSpec,
    sink: &mut dyn GenerationSink,
) -> Result<TransmissionTrace, ProtocolError> {
    spec.validate()?;
    let mut receiver = ReceiverState::new();
    let mut steps = Vec::with_capacity(encoded.len());
    let mut totals = StepMetrics::default();
    for word in encoded.words() {
        let t = word.index() + 1;
        let frame_sent = Frame::new(t, word.text())?;
        let record = transmit_on_stream(&frame_sent.payload, spec, t as u64)?;
        // Header bytes travel out of band; only the payload is replaced.
        let mut wire = frame_sent.encode();
        wire.truncate(HEADER_LEN);
        wire.extend_from_slice(record.received.as_bytes());
        let frame_received = decode_frame(&wire)?;

        let receiver_prompt = receiver.receive(&frame_received)?.to_owned();
        totals.char_errors = record.char_errors;
        totals.symbol_errors = record.symbol_errors;
        totals.cumulative_chars += frame_sent.payload.len();
        totals.cumulative_char_errors += record.char_errors;

        let sink_error = match sink.on_prompt(&header.session_id, t, &receiver_prompt) {
            Ok(()) => None,
            Err(e) => {
                log::warn!("sink failed at {} t={t}: {e}", header.session_id);
                Some(e.0)
            }
        };
        steps.push(TraceStep {
            frame_sent,
            frame_received,
            receiver_prompt,
            metrics: totals,
            sink_error,
        });
    }
    Ok(TransmissionTrace {
        header,
        channel: *spec,
        steps,
    })
}
