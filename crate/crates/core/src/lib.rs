//! Spatiotemporal 2-D polar coding for massive-MIMO links with MMSE
//! detection.
//!
//! The crate is organized bottom-up:
//!
//! * [`kernel`] binary kernel, Kronecker powers and the butterfly encoder;
//! * [`ga`] Gaussian-approximation construction and reliability diagnostics;
//! * [`st2d`] the 2-D (stream x time) encoder and its 1-D equivalence;
//! * [`sc`] successive-cancellation and brute-force ML decoding;
//! * [`mimo`] quasi-static Rayleigh channel, MMSE filtering and LLRs;
//! * [`sim`] the reproducible Monte Carlo harness, configuration and CSV.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ga;
pub mod kernel;
pub mod mimo;
pub mod rng;
pub mod sc;
pub mod sim;
pub mod st2d;

pub use error::{Error, Result};
pub use ga::{
    bpsk_awgn_capacity, channel_ber_estimate, ga_evolve, phi, phi_inv, polarization_fraction,
    q_function, select_information_set, CodeSpec, ReliabilityProfile,
};
pub use kernel::{
    bit_reversal_permutation, encode_1d, generator_matrix, kernel, kron, BinaryMatrix, BitVector,
};
pub use mimo::{ChannelRealization, MmseOutput, SinrStats};
pub use sc::{ml_decode_bruteforce, sc_decode, DecodeResult, LlrFrame};
pub use sim::{latency_estimate, ChannelKind, DesignRule, LatencyEstimate, SimConfig, SimResult};
pub use st2d::{
    encode_2d, flatten_codeword, index_map, reshape_codeword, verify_equivalence, CodewordMatrix,
    CodingMode, IndexMap, MessageMatrix,
};
