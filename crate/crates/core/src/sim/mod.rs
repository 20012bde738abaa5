//! Monte Carlo BER/BLER harness.
//!
//! Every frame of SNR point `p` draws from its own counter-derived stream
//! `(seed, p, frame)`, so results do not depend on the worker count.
//! `snr_db = −10·log10(σ²)` with unit total transmit power; for AWGN `σ²`
//! is the real noise variance, for MIMO the variance of each complex noise
//! entry.

mod config;
mod engine;
mod latency;
mod results;

pub use config::{
    antennas_for_gamma, parse_snr_list, ChannelKind, ConfigLayer, DesignRule, SimConfig, CONFIG_KEYS,
    DEFAULT_MAX_FRAMES, DEFAULT_SEED, DEFAULT_TARGET_FRAME_ERRORS,
};
pub use engine::{
    design_mean_from_sinr, pilot_mean_sinr, quantize_design_mean, run, run_awgn_sim, run_mimo_sim,
    run_mimo_sim_with, sigma2_at, ChannelSource, ProfileCache, Rayleigh, PILOT_REALIZATIONS,
};
pub use latency::{latency_estimate, LatencyEstimate, Scheme, SYMBOLS_PER_SLOT};
pub use results::{
    export_results, read_results, results_to_csv, sorted_rows, write_rows, ResultRow, SimResult, CSV_HEADER,
};
