//! Character channel: 8-bit ASCII over 16QAM/AWGN, or an equivalent
//! discrete memoryless channel with crossover probability ε.
//!
//! SNR is Es/N0 per 16QAM symbol, in dB. Characters are never inserted or
//! deleted; a demodulated byte outside 7-bit ASCII is delivered as
//! [`REPLACEMENT_CHAR`].

mod analytic;
mod qam16;

pub use analytic::{
    epsilon_of_snr, es_n0_from_db, q_function, rail_error_probability, symbol_error_probability,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::stream_rng;
use crate::text_model::ALPHABET_SIZE;

/// Delivered in place of demodulated bytes 128..=255.
pub const REPLACEMENT_CHAR: u8 = b'?';

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("non-ASCII byte {byte:#04x} at offset {offset}")]
    NonAsciiInput { offset: usize, byte: u8 },
    #[error("SNR must be finite, got {0}")]
    InvalidSnr(f64),
    #[error("crossover probability must lie in [0, 1), got {0}")]
    InvalidEpsilon(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ChannelModel {
    #[serde(rename = "waveform16qam")]
    Waveform16Qam { snr_db: f64 },
    #[serde(rename = "dmc")]
    AnalyticDmc { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    #[serde(flatten)]
    pub model: ChannelModel,
    pub seed: u64,
}

impl ChannelSpec {
    pub fn waveform(snr_db: f64, seed: u64) -> Result<ChannelSpec, ChannelError> {
        let spec = ChannelSpec {
            model: ChannelModel::Waveform16Qam { snr_db },
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dmc(epsilon: f64, seed: u64) -> Result<ChannelSpec, ChannelError> {
        let spec = ChannelSpec {
            model: ChannelModel::AnalyticDmc { epsilon },
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A noiseless channel (DMC with ε = 0).
    pub fn noiseless() -> ChannelSpec {
        ChannelSpec {
            model: ChannelModel::AnalyticDmc { epsilon: 0.0 },
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        match self.model {
            ChannelModel::Waveform16Qam { snr_db } if !snr_db.is_finite() => {
                Err(ChannelError::InvalidSnr(snr_db))
            }
            ChannelModel::AnalyticDmc { epsilon } if !(0.0..1.0).contains(&epsilon) => {
                Err(ChannelError::InvalidEpsilon(epsilon))
            }
            _ => Ok(()),
        }
    }

    pub fn with_seed(self, seed: u64) -> ChannelSpec {
        ChannelSpec { seed, ..self }
    }

    /// Linear Es/N0 for the waveform channel.
    pub fn es_n0(&self) -> Option<f64> {
        match self.model {
            ChannelModel::Waveform16Qam { snr_db } => Some(es_n0_from_db(snr_db)),
            ChannelModel::AnalyticDmc { .. } => None,
        }
    }

    /// Expected character crossover probability of this channel.
    pub fn expected_epsilon(&self) -> f64 {
        match self.model {
            ChannelModel::Waveform16Qam { snr_db } => epsilon_of_snr(snr_db),
            ChannelModel::AnalyticDmc { epsilon } => epsilon,
        }
    }

    /// True when both specs describe the same channel, seeds aside.
    pub fn same_channel(&self, other: &ChannelSpec) -> bool {
        self.model == other.model
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionRecord {
    pub sent: String,
    pub received: String,
    pub char_errors: usize,
    /// Wrong 16QAM symbol decisions; for the DMC every character is one
    /// channel symbol, so this equals `char_errors`.
    pub symbol_errors: usize,
}

/// Sends `text` on stream 0 of the channel seed.
pub fn transmit(text: &str, spec: &ChannelSpec) -> Result<CorruptionRecord, ChannelError> {
    transmit_on_stream(text, spec, 0)
}

/// Sends `text` using random stream `stream` of the channel seed.
pub fn transmit_on_stream(
    text: &str,
    spec: &ChannelSpec,
    stream: u64,
) -> Result<CorruptionRecord, ChannelError> {
    spec.validate()?;
    if let Some((offset, &byte)) = text
        .as_bytes()
        .iter()
        .enumerate()
        .find(|(_, b)| !b.is_ascii())
    {
        return Err(ChannelError::NonAsciiInput { offset, byte });
    }
    let sent = text.as_bytes();
    let (received, symbol_errors) = match spec.model {
        ChannelModel::Waveform16Qam { snr_db } => {
            let raw = demodulate_bytes(sent, snr_db, spec.seed, stream);
            let received: Vec<u8> = raw
                .bytes
                .into_iter()
                .map(|b| if b.is_ascii() { b } else { REPLACEMENT_CHAR })
                .collect();
            (received, Some(raw.symbol_errors))
        }
        ChannelModel::AnalyticDmc { epsilon } => {
            let mut rng = stream_rng(spec.seed, stream);
            let received = sent
                .iter()
                .map(|&b| dmc_character(b, epsilon, &mut rng))
                .collect();
            (received, None)
        }
    };
    let char_errors = sent.iter().zip(&received).filter(|(a, b)| a != b).count();
    Ok(CorruptionRecord {
        sent: text.to_owned(),
        received: String::from_utf8(received).expect("channel output is ASCII"),
        char_errors,
        symbol_errors: symbol_errors.unwrap_or(char_errors),
    })
}

/// Raw output of the 16QAM physical layer, before the receiver maps
/// out-of-range bytes to [`REPLACEMENT_CHAR`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Demodulated {
    pub bytes: Vec<u8>,
    pub symbol_errors: usize,
}

/// Modulates each byte as two 16QAM symbols, adds AWGN at `snr_db` (Es/N0)
/// and hard-decides them. Uses the same random stream as
/// [`transmit_on_stream`], so the two agree draw for draw.
pub fn demodulate_bytes(bytes: &[u8], snr_db: f64, seed: u64, stream: u64) -> Demodulated {
    let mut rng = stream_rng(seed, stream);
    let awgn = qam16::Awgn::new(es_n0_from_db(snr_db));
    let mut symbol_errors = 0usize;
    let bytes = bytes
        .iter()
        .map(|&byte| {
            let (out, errs) = qam16::transmit_byte(byte, &awgn, &mut rng);
            symbol_errors += errs as usize;
            out
        })
        .collect();
    Demodulated {
        bytes,
        symbol_errors,
    }
}

/// With probability ε, replaces `byte` by one of the other 127 symbols,
/// chosen uniformly.
fn dmc_character<R: Rng + ?Sized>(byte: u8, epsilon: f64, rng: &mut R) -> u8 {
    if rng.random::<f64>() < epsilon {
        let other = rng.random_range(0..ALPHABET_SIZE as u8 - 1);
        if other >= byte {
            other + 1
        } else {
            other
        }
    } else {
        byte
    }
}
