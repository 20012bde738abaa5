use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ga::{design_mean_from_sigma2, ga_evolve, CodeSpec};
use crate::kernel::{encode_in_place, log2_exact};
use crate::mimo::{self, ChannelRealization, LLR_PER_SINR};
use crate::rng::{Domain, StreamFactory};
use crate::sc::{clamp_llr, ScDecoder};
use crate::st2d::{encode_2d, MessageMatrix};

use super::config::{ChannelKind, DesignRule, SimConfig};
use super::results::SimResult;

/// Channel draws averaged to pick the MIMO design mean.
pub const PILOT_REALIZATIONS: usize = 500;

const FIRST_BATCH: u64 = 64;
const MAX_BATCH: u64 = 8192;

/// Noise variance at `snr_db` for unit signal power.
pub fn sigma2_at(snr_db: f64) -> f64 {
    mimo::sigma2_from_snr_db(snr_db)
}

/// Codes keyed by quantized design mean and length.
///
/// Design means are rounded to four significant digits and the rounded
/// value is what the construction uses, so a cache hit returns exactly the
/// code a fresh construction would.
type ProfileKey = (u64, usize, usize, usize);

#[derive(Debug, Default)]
pub struct ProfileCache {
    inner: Mutex<HashMap<ProfileKey, Arc<CodeSpec>>>,
}

/// Four-significant-digit representative of a design mean.
pub fn quantize_design_mean(m: f64) -> f64 {
    format!("{m:.3e}").parse().expect("formatted float parses")
}

impl ProfileCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Code for `cfg`'s geometry designed at (the bucket of) `design_mean`.
    pub fn code(&self, cfg: &SimConfig, design_mean: f64) -> Result<Arc<CodeSpec>> {
        let m = quantize_design_mean(design_mean);
        let key = (m.to_bits(), cfg.s, cfg.t, cfg.k);
        if let Some(c) = self.inner.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(c));
        }
        let n = log2_exact(cfg.n()).ok_or(Error::NotPowerOfTwo(cfg.n()))?;
        let profile = ga_evolve(m, n)?;
        let code = Arc::new(CodeSpec::from_profile(&profile, cfg.s, cfg.t, cfg.k, cfg.mode)?);
        self.inner.lock().expect("cache lock").insert(key, Arc::clone(&code));
        Ok(code)
    }
}

/// Error counts of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct FrameOutcome {
    bit_errors: u32,
}

/// Per-worker buffers.
struct Workspace {
    decoder: ScDecoder,
    info: Vec<u8>,
    word: Vec<u8>,
    llr: Vec<f64>,
    u_hat: Vec<u8>,
    dec_llr: Vec<f64>,
}

impl Workspace {
    fn new(cfg: &SimConfig) -> Self {
        let n = cfg.n();
        Workspace {
            decoder: ScDecoder::new(n, cfg.check_rule).expect("validated length"),
            info: vec![0; cfg.k],
            word: vec![0; n],
            llr: vec![0.0; n],
            u_hat: vec![0; n],
            dec_llr: vec![0.0; n],
        }
    }

    fn draw_info(&mut self, rng: &mut ChaCha8Rng) {
        let mut chunk = 0u64;
        for (i, b) in self.info.iter_mut().enumerate() {
            if i % 64 == 0 {
                chunk = rng.next_u64();
            }
            *b = (chunk & 1) as u8;
            chunk >>= 1;
        }
    }

    fn decode(&mut self, code: &CodeSpec) -> Result<FrameOutcome> {
        self.decoder.decode_into(&self.llr, code.frozen_mask(), &mut self.u_hat, &mut self.dec_llr)?;
        let bit_errors = code
            .info_set()
            .iter()
            .zip(&self.info)
            .filter(|(&pos, &b)| self.u_hat[pos] != b)
            .count() as u32;
        Ok(FrameOutcome { bit_errors })
    }
}

/// Runs frames of one point in deterministic order until a cap is hit.
///
/// Frames are evaluated in parallel batches but merged strictly in frame
/// order, so the stopping frame (and every count) is the same for any
/// number of workers.
fn run_point<F>(cfg: &SimConfig, frame: F) -> Result<(u64, u64, u64)>
where
    F: Fn(u64, &mut Workspace) -> Result<FrameOutcome> + Sync,
{
    let (mut frames, mut bit_errors, mut frame_errors) = (0u64, 0u64, 0u64);
    let mut batch = FIRST_BATCH;
    while frames < cfg.max_frames && frame_errors < cfg.target_frame_errors {
        let end = (frames + batch).min(cfg.max_frames);
        let outcomes: Vec<FrameOutcome> = (frames..end)
            .into_par_iter()
            .map_init(|| Workspace::new(cfg), |ws, f| frame(f, ws))
            .collect::<Result<_>>()?;
        for o in outcomes {
            frames += 1;
            bit_errors += u64::from(o.bit_errors);
            frame_errors += u64::from(o.bit_errors > 0);
            if frame_errors >= cfg.target_frame_errors {
                break;
            }
        }
        batch = (batch * 2).min(MAX_BATCH);
    }
    Ok((frames, bit_errors, frame_errors))
}

fn with_pool<T: Send>(cfg: &SimConfig, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    cfg.validate()?;
    match cfg.workers {
        None => job(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot start {w} workers: {e}")))?
            .install(job),
    }
}

fn result_for(cfg: &SimConfig, snr_db: f64, counts: (u64, u64, u64), design_mean: f64, start: Instant) -> SimResult {
    SimResult {
        snr_db,
        n: cfg.n(),
        s: cfg.s,
        t: cfg.t,
        k: cfg.k,
        channel: cfg.channel,
        mode: cfg.mode,
        frames: counts.0,
        bit_errors: counts.1,
        frame_errors: counts.2,
        seed: cfg.seed,
        design_mean,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    }
}

/// BPSK over real AWGN with the 1-D encoder, one result per SNR point.
pub fn run_awgn_sim(cfg: &SimConfig) -> Result<Vec<SimResult>> {
    if cfg.channel != ChannelKind::Awgn {
        return Err(Error::InvalidParameter("run_awgn_sim needs the awgn channel".into()));
    }
    with_pool(cfg, || {
        let streams = StreamFactory::new(cfg.seed);
        let cache = ProfileCache::new();
        let mut out = Vec::with_capacity(cfg.snr_db.len());
        for (p, &snr) in cfg.snr_db.iter().enumerate() {
            let start = Instant::now();
            let sigma2 = sigma2_at(snr);
            let design_mean = match cfg.design {
                DesignRule::Fixed(m) => m,
                DesignRule::Auto => design_mean_from_sigma2(sigma2),
            };
            let code = cache.code(cfg, design_mean)?;
            let sigma = sigma2.sqrt();
            let slope = 2.0 / sigma2;
            let counts = run_point(cfg, |f, ws| {
                let mut rng = streams.stream(Domain::Frames(p as u32), f);
                ws.draw_info(&mut rng);
                ws.word.iter_mut().for_each(|b| *b = 0);
                for (&pos, &b) in code.info_set().iter().zip(&ws.info) {
                    ws.word[pos] = b;
                }
                encode_in_place(&mut ws.word);
                for (l, &x) in ws.llr.iter_mut().zip(&ws.word) {
                    let noise: f64 = rng.sample(StandardNormal);
                    let y = 1.0 - 2.0 * f64::from(x) + sigma * noise;
                    *l = clamp_llr(slope * y);
                }
                ws.decode(&code)
            })?;
            out.push(result_for(cfg, snr, counts, design_mean, start));
        }
        Ok(out)
    })
}

/// Draws the channel of one frame: `(L, S, σ², rng)`.
pub trait ChannelSource: Sync {
    fn draw(&self, l: usize, s: usize, sigma2: f64, rng: &mut ChaCha8Rng) -> Result<ChannelRealization>;
}

/// i.i.d. Rayleigh fading.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayleigh;

impl ChannelSource for Rayleigh {
    fn draw(&self, l: usize, s: usize, sigma2: f64, rng: &mut ChaCha8Rng) -> Result<ChannelRealization> {
        mimo::sample_channel(l, s, sigma2, rng)
    }
}

impl<F> ChannelSource for F
where
    F: Fn(usize, usize, f64, &mut ChaCha8Rng) -> Result<ChannelRealization> + Sync,
{
    fn draw(&self, l: usize, s: usize, sigma2: f64, rng: &mut ChaCha8Rng) -> Result<ChannelRealization> {
        self(l, s, sigma2, rng)
    }
}

/// Draws channels until one has a well-conditioned MMSE system.
fn filtered_channel<C: ChannelSource + ?Sized>(
    source: &C,
    l: usize,
    s: usize,
    sigma2: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(ChannelRealization, mimo::MmseOutput)> {
    const ATTEMPTS: usize = 64;
    for _ in 0..ATTEMPTS {
        let ch = source.draw(l, s, sigma2, rng)?;
        match mimo::mmse_filter(&ch) {
            Ok(out) => return Ok((ch, out)),
            Err(Error::Singular) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Singular)
}

/// Pooled mean SINR over [`PILOT_REALIZATIONS`] draws of `source`.
pub fn pilot_mean_sinr<C: ChannelSource + ?Sized>(
    source: &C,
    l: usize,
    s: usize,
    sigma2: f64,
    streams: &StreamFactory,
    point: u32,
) -> Result<f64> {
    let sums: Vec<f64> = (0..PILOT_REALIZATIONS as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(Domain::Pilot(point), i);
            let (_, out) = filtered_channel(source, l, s, sigma2, &mut rng)?;
            Ok(out.sinr.iter().sum::<f64>())
        })
        .collect::<Result<_>>()?;
    Ok(sums.iter().sum::<f64>() / (PILOT_REALIZATIONS * s) as f64)
}

/// GA design mean for a stream with this SINR: the mean of its LLR.
pub fn design_mean_from_sinr(sinr: f64) -> f64 {
    LLR_PER_SINR * sinr
}

/// 2-D code over i.i.d. Rayleigh MIMO with MMSE detection.
pub fn run_mimo_sim(cfg: &SimConfig) -> Result<Vec<SimResult>> {
    run_mimo_sim_with(cfg, &Rayleigh)
}

/// [`run_mimo_sim`] with a caller-supplied channel distribution.
pub fn run_mimo_sim_with<C: ChannelSource + ?Sized>(cfg: &SimConfig, source: &C) -> Result<Vec<SimResult>> {
    let ChannelKind::Mimo { l } = cfg.channel else {
        return Err(Error::InvalidParameter("run_mimo_sim needs the mimo channel".into()));
    };
    with_pool(cfg, || {
        let (s, t) = (cfg.s, cfg.t);
        let streams = StreamFactory::new(cfg.seed);
        let cache = ProfileCache::new();
        let mut out = Vec::with_capacity(cfg.snr_db.len());
        for (p, &snr) in cfg.snr_db.iter().enumerate() {
            let start = Instant::now();
            let sigma2 = sigma2_at(snr);
            let design_mean = match cfg.design {
                DesignRule::Fixed(m) => m,
                DesignRule::Auto => {
                    design_mean_from_sinr(pilot_mean_sinr(source, l, s, sigma2, &streams, p as u32)?)
                }
            };
            let code = cache.code(cfg, design_mean)?;
            let counts = run_point(cfg, |f, ws| {
                let mut rng = streams.stream(Domain::Frames(p as u32), f);
                let (ch, mmse) = filtered_channel(source, l, s, sigma2, &mut rng)?;
                ws.draw_info(&mut rng);
                let u = code.embed(&ws.info)?;
                let x = encode_2d(&MessageMatrix::from_row_major(s, t, u)?, cfg.mode);
                let symbols: Vec<f64> = x.as_row_major().iter().map(|&b| 1.0 - 2.0 * f64::from(b)).collect();
                let y = mimo::transmit(&symbols, t, &ch, &mut rng)?;
                // Row-major (stream, time) order is the 1-D index order.
                ws.llr = mimo::detect_llr(&y, &mmse, &ch)?;
                ws.decode(&code)
            })?;
            out.push(result_for(cfg, snr, counts, design_mean, start));
        }
        Ok(out)
    })
}

/// Dispatches on the configured channel.
pub fn run(cfg: &SimConfig) -> Result<Vec<SimResult>> {
    match cfg.channel {
        ChannelKind::Awgn => run_awgn_sim(cfg),
        ChannelKind::Mimo { .. } => run_mimo_sim(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::ConfigLayer;

    fn cfg(text: &str) -> SimConfig {
        ConfigLayer::parse(text).unwrap().build().unwrap()
    }

    #[test]
    fn quantization() {
        assert_eq!(quantize_design_mean(1.23456), 1.235);
        assert_eq!(quantize_design_mean(123456.0), 123500.0);
        assert_eq!(quantize_design_mean(0.000123456), 0.0001235);
    }

    #[test]
    fn cache_reuses_codes() {
        let c = cfg("n = 16\nsnr_db = 0");
        let cache = ProfileCache::new();
        let a = cache.code(&c, 2.00001).unwrap();
        let b = cache.code(&c, 2.00002).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        cache.code(&c, 3.0).unwrap();
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn noiseless_awgn_has_no_errors() {
        let c = cfg("n = 64\nk = 32\nsnr_db = 40\nmax_frames = 1000");
        let r = run_awgn_sim(&c).unwrap();
        assert_eq!((r[0].frames, r[0].bit_errors), (1000, 0));
    }

    #[test]
    fn early_stop_respects_caps() {
        let c = cfg("n = 16\nk = 8\nsnr_db = -5, 0\nmax_frames = 5000\ntarget_frame_errors = 37");
        for r in run_awgn_sim(&c).unwrap() {
            assert!(r.frames <= 5000);
            assert!(r.frame_errors <= 37);
            assert!(r.frame_errors == 37 || r.frames == 5000);
        }
    }

    #[test]
    fn engine_channel_checks() {
        let awgn = cfg("n = 16\nsnr_db = 0");
        assert!(run_mimo_sim(&awgn).is_err());
        let mimo = cfg("s = 2\nt = 8\nchannel = mimo\nl = 4\nsnr_db = 0");
        assert!(run_awgn_sim(&mimo).is_err());
    }

    #[test]
    fn noiseless_mimo_has_no_errors() {
        let c = cfg("s = 4\nt = 8\nchannel = mimo\nl = 8\nsnr_db = 50\nmax_frames = 300");
        let r = run_mimo_sim(&c).unwrap();
        assert_eq!((r[0].frames, r[0].frame_errors), (300, 0));
    }
}
