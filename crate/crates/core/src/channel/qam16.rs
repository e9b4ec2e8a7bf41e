//! Gray-coded square 16QAM over complex AWGN with hard decisions.
//!
//! A 4-bit symbol `b3 b2 b1 b0` puts `b3 b2` on the in-phase rail and
//! `b1 b0` on the quadrature rail. Each rail uses the reflected Gray code
//! `00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3`, scaled by `1/sqrt(10)` so the
//! constellation has unit average energy. A character is sent as its high
//! nibble followed by its low nibble.

use rand::Rng;
use rand_distr::StandardNormal;

/// `1/sqrt(10)`: unit average symbol energy.
const NORM: f64 = 0.316_227_766_016_837_94;

/// Rail level (in units of `NORM`) for each 2-bit Gray label.
const LEVEL_OF_BITS: [f64; 4] = [-3.0, -1.0, 3.0, 1.0];

/// Gray label for each level index `-3, -1, +1, +3`.
const BITS_OF_LEVEL: [u8; 4] = [0b00, 0b01, 0b11, 0b10];

/// In-phase / quadrature sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Iq {
    pub i: f64,
    pub q: f64,
}

pub(crate) fn modulate(symbol: u8) -> Iq {
    Iq {
        i: LEVEL_OF_BITS[usize::from((symbol >> 2) & 0b11)] * NORM,
        q: LEVEL_OF_BITS[usize::from(symbol & 0b11)] * NORM,
    }
}

fn decide_rail(x: f64) -> u8 {
    let level = x / NORM;
    let index = if level < -2.0 {
        0
    } else if level < 0.0 {
        1
    } else if level < 2.0 {
        2
    } else {
        3
    };
    BITS_OF_LEVEL[index]
}

/// Minimum-distance decision on the square grid.
pub(crate) fn demodulate(sample: Iq) -> u8 {
    (decide_rail(sample.i) << 2) | decide_rail(sample.q)
}

/// AWGN at a fixed Es/N0 for unit-energy symbols.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Awgn {
    sigma: f64,
}

impl Awgn {
    /// Per-dimension standard deviation is `sqrt(N0 / 2)` with `Es = 1`.
    pub(crate) fn new(es_n0: f64) -> Awgn {
        Awgn {
            sigma: (0.5 / es_n0).sqrt(),
        }
    }

    pub(crate) fn apply<R: Rng + ?Sized>(&self, x: Iq, rng: &mut R) -> Iq {
        let ni: f64 = rng.sample(StandardNormal);
        let nq: f64 = rng.sample(StandardNormal);
        Iq {
            i: x.i + self.sigma * ni,
            q: x.q + self.sigma * nq,
        }
    }
}

/// Sends one byte as two symbols; returns the demodulated byte and how many
/// of the two symbols were decided wrongly.
pub(crate) fn transmit_byte<R: Rng + ?Sized>(byte: u8, awgn: &Awgn, rng: &mut R) -> (u8, u32) {
    let mut out = 0u8;
    let mut symbol_errors = 0;
    for symbol in [byte >> 4, byte & 0x0F] {
        let decided = demodulate(awgn.apply(modulate(symbol), rng));
        if decided != symbol {
            symbol_errors += 1;
        }
        out = (out << 4) | decided;
    }
    (out, symbol_errors)
}
