//! Wire format of a word frame.
//!
//! ```text
//! +------+---------+------------+------------+-----------------+
//! | 0x4C | 0x01    | word_index | char_count | payload         |
//! | 1 B  | 1 B     | 2 B, BE    | 1 B        | char_count B    |
//! +------+---------+------------+------------+-----------------+
//! ```
//!
//! Only payload bytes are exposed to channel noise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FRAME_MAGIC: u8 = 0x4C;
pub const FRAME_VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 5;
pub const MAX_PAYLOAD: usize = 255;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("payload of {0} bytes exceeds {MAX_PAYLOAD}")]
    PayloadTooLong(usize),
    #[error("word index {0} does not fit in 16 bits")]
    WordIndexOutOfRange(usize),
    #[error("payload byte {byte:#04x} at offset {offset} is not ASCII")]
    NonAsciiPayload { offset: usize, byte: u8 },
    #[error("frame of {0} bytes is shorter than its header")]
    Truncated(usize),
    #[error("bad magic byte {0:#04x}")]
    BadMagic(u8),
    #[error("unsupported frame version {0:#04x}")]
    BadVersion(u8),
    #[error("header declares {declared} payload bytes, frame carries {actual}")]
    LengthMismatch { declared: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub word_index: u16,
    pub char_count: u8,
    pub payload: String,
}

impl Frame {
    pub fn new(word_index: usize, payload: &str) -> Result<Frame, FrameError> {
        let word_index =
            u16::try_from(word_index).map_err(|_| FrameError::WordIndexOutOfRange(word_index))?;
        let char_count =
            u8::try_from(payload.len()).map_err(|_| FrameError::PayloadTooLong(payload.len()))?;
        check_ascii(payload.as_bytes())?;
        Ok(Frame {
            word_index,
            char_count,
            payload: payload.to_owned(),
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.push(FRAME_MAGIC);
        out.push(FRAME_VERSION);
        out.extend_from_slice(&self.word_index.to_be_bytes());
        out.push(self.char_count);
        out.extend_from_slice(self.payload.as_bytes());
        out
    }
}

fn check_ascii(bytes: &[u8]) -> Result<(), FrameError> {
    match bytes.iter().position(|b| !b.is_ascii()) {
        Some(offset) => Err(FrameError::NonAsciiPayload {
            offset,
            byte: bytes[offset],
        }),
        None => Ok(()),
    }
}

pub fn encode_frame(word_index: usize, payload: &str) -> Result<Vec<u8>, FrameError> {
    Frame::new(word_index, payload).map(|f| f.encode())
}

pub fn decode_frame(bytes: &[u8]) -> Result<Frame, FrameError> {
    if bytes.len() < HEADER_LEN {
        return Err(FrameError::Truncated(bytes.len()));
    }
    if bytes[0] != FRAME_MAGIC {
        return Err(FrameError::BadMagic(bytes[0]));
    }
    if bytes[1] != FRAME_VERSION {
        return Err(FrameError::BadVersion(bytes[1]));
    }
    let word_index = u16::from_be_bytes([bytes[2], bytes[3]]);
    let char_count = bytes[4];
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != usize::from(char_count) {
        return Err(FrameError::LengthMismatch {
            declared: usize::from(char_count),
            actual: payload.len(),
        });
    }
    check_ascii(payload)?;
    Ok(Frame {
        word_index,
        char_count,
        payload: String::from_utf8(payload.to_vec()).expect("checked ASCII"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn byte_layout() {
        assert_eq!(
            encode_frame(1, "a").unwrap(),
            [0x4C, 0x01, 0x00, 0x01, 0x01, 0x61]
        );
        assert_eq!(
            encode_frame(0x1234, "").unwrap(),
            [0x4C, 0x01, 0x12, 0x34, 0x00]
        );
    }

    #[test]
    fn round_trip_example() {
        let frame = decode_frame(&encode_frame(3, "dog").unwrap()).unwrap();
        assert_eq!(
            frame,
            Frame {
                word_index: 3,
                char_count: 3,
                payload: "dog".into()
            }
        );
    }

    #[test]
    fn encode_bounds() {
        assert_eq!(
            encode_frame(1, &"x".repeat(256)),
            Err(FrameError::PayloadTooLong(256))
        );
        assert!(encode_frame(1, &"x".repeat(255)).is_ok());
        assert_eq!(
            encode_frame(65_536, "a"),
            Err(FrameError::WordIndexOutOfRange(65_536))
        );
        assert!(matches!(
            encode_frame(1, "caf\u{e9}"),
            Err(FrameError::NonAsciiPayload { offset: 3, .. })
        ));
    }

    #[test]
    fn malformed_frames() {
        assert_eq!(decode_frame(&[0x4C, 0x01]), Err(FrameError::Truncated(2)));
        assert_eq!(
            decode_frame(&[0x00, 0x01, 0, 1, 0]),
            Err(FrameError::BadMagic(0))
        );
        assert_eq!(
            decode_frame(&[0x4C, 0x02, 0, 1, 0]),
            Err(FrameError::BadVersion(2))
        );
        assert_eq!(
            decode_frame(&[0x4C, 0x01, 0, 1, 2, b'a']),
            Err(FrameError::LengthMismatch {
                declared: 2,
                actual: 1
            })
        );
        assert!(matches!(
            decode_frame(&[0x4C, 0x01, 0, 1, 1, 0xFF]),
            Err(FrameError::NonAsciiPayload { .. })
        ));
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(index in 0usize..=65_535, payload in "[\\x00-\\x7F]{0,255}") {
            let bytes = encode_frame(index, &payload).unwrap();
            prop_assert_eq!(bytes.len(), HEADER_LEN + payload.len());
            let frame = decode_frame(&bytes).unwrap();
            prop_assert_eq!(usize::from(frame.word_index), index);
            prop_assert_eq!(usize::from(frame.char_count), payload.len());
            prop_assert_eq!(frame.payload, payload);
        }
    }
}
