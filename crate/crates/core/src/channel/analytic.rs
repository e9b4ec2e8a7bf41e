//! Closed-form error probabilities for uncoded Gray-mapped square 16QAM.

use std::f64::consts::SQRT_2;

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Linear Es/N0 from a value in dB.
pub fn es_n0_from_db(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// Per-rail decision error probability of unit-energy 16QAM, averaged over
/// the four equiprobable levels: `(3/2) Q(sqrt(Es/N0 / 5))`.
pub fn rail_error_probability(es_n0: f64) -> f64 {
    1.5 * q_function((es_n0 / 5.0).sqrt())
}

/// Exact symbol-error probability of unit-energy Gray square 16QAM.
pub fn symbol_error_probability(es_n0: f64) -> f64 {
    let p = rail_error_probability(es_n0);
    1.0 - (1.0 - p) * (1.0 - p)
}

/// Character crossover probability when each 8-bit character rides on two
/// independent 16QAM symbols, with SNR taken as Es/N0 in dB.
pub fn epsilon_of_snr(snr_db: f64) -> f64 {
    let ps = symbol_error_probability(es_n0_from_db(snr_db));
    1.0 - (1.0 - ps) * (1.0 - ps)
}
