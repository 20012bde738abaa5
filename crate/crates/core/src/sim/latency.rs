use std::fmt;

use crate::error::{Error, Result};

/// OFDM symbols per slot; one slot lasts 1 ms.
pub const SYMBOLS_PER_SLOT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    OneD,
    TwoD,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::OneD => "1D",
            Scheme::TwoD => "2D",
        })
    }
}

/// Slot count needed to send one codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatencyEstimate {
    pub scheme: Scheme,
    pub n: usize,
    pub s: usize,
    pub slots: usize,
    pub latency_ms: usize,
}

impl fmt::Display for LatencyEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} slots ({} ms)", self.scheme, self.slots, self.latency_ms)
    }
}

/// A 1-D code sends its `N` symbols in sequence; a 2-D code spreads them
/// over `S` streams, so only `N/S` time instants are needed.
pub fn latency_estimate(n: usize, s: usize) -> Result<(LatencyEstimate, LatencyEstimate)> {
    if n == 0 || s == 0 {
        return Err(Error::InvalidParameter(format!("N and S must be positive, got N = {n}, S = {s}")));
    }
    if n % s != 0 {
        return Err(Error::InvalidParameter(format!("S = {s} does not divide N = {n}")));
    }
    let one = n.div_ceil(SYMBOLS_PER_SLOT);
    let two = (n / s).div_ceil(SYMBOLS_PER_SLOT);
    Ok((
        LatencyEstimate { scheme: Scheme::OneD, n, s: 1, slots: one, latency_ms: one },
        LatencyEstimate { scheme: Scheme::TwoD, n, s, slots: two, latency_ms: two },
    ))
}
