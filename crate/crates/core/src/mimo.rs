//! Quasi-static Rayleigh MIMO channel with linear MMSE detection.
//!
//! Model: `Y = H·X/√S + Z` with `H` an `L x S` matrix of i.i.d. `CN(0,1)`
//! entries, held fixed for one codeword, BPSK symbols `X ∈ {±1}^{S x T}`
//! (unit total power per time instant) and `Z` i.i.d. `CN(0, σ²)`.
//!
//! With `A = I_S + H†H/(Sσ²)`, the per-stream MMSE is `[A⁻¹]_kk` and the
//! post-filter SINR is `1/[A⁻¹]_kk − 1`.

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{Domain, StreamFactory};
use crate::sc::clamp_llr;

/// Scale between the post-MMSE SINR and the LLR slope.
///
/// The unbiased filtered stream is `x + e` with complex `e` of variance
/// `1/sinr`; BPSK lives on the real axis, whose noise variance is
/// `1/(2·sinr)`, so the real-channel LLR `2r/σ_r²` becomes `4·sinr·r`.
pub const LLR_PER_SINR: f64 = 4.0;

/// `σ² = 10^{−snr_db/10}` for unit total transmit power.
pub fn sigma2_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Real-AWGN noise variance giving the same LLR statistics as a scalar
/// stream with this SINR (LLR mean `4·sinr`, variance twice that).
pub fn awgn_sigma2_for_sinr(sinr: f64) -> f64 {
    1.0 / (2.0 * sinr)
}

/// One fading realization plus its noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h: DMatrix<Complex64>,
    sigma2: f64,
}

impl ChannelRealization {
    /// Wraps a given `L x S` matrix.
    pub fn from_matrix(h: DMatrix<Complex64>, sigma2: f64) -> Result<Self> {
        if h.nrows() < h.ncols() || h.ncols() == 0 {
            return Err(Error::InvalidParameter(format!(
                "channel must be L x S with L >= S >= 1, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(ChannelRealization { h, sigma2 })
    }

    pub fn h(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    pub fn receive_antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn streams(&self) -> usize {
        self.h.ncols()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn snr_db(&self) -> f64 {
        -10.0 * self.sigma2.log10()
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Draws `H` with i.i.d. `CN(0,1)` entries.
pub fn sample_channel<R: Rng + ?Sized>(l: usize, s: usize, sigma2: f64, rng: &mut R) -> Result<ChannelRealization> {
    if s == 0 || l < s {
        return Err(Error::InvalidParameter(format!("need L >= S >= 1, got L = {l}, S = {s}")));
    }
    let h = DMatrix::from_fn(l, s, |_, _| complex_normal(rng, 1.0));
    ChannelRealization::from_matrix(h, sigma2)
}

/// Linear MMSE receiver for one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct MmseOutput {
    /// `S x L` filter `W = A⁻¹H†/(σ²√S)`, estimating the unit-power symbols.
    pub filter: DMatrix<Complex64>,
    pub sinr: Vec<f64>,
    /// Signal gain of each filtered stream, `1 − MMSE_k`.
    pub bias: Vec<f64>,
    /// `[A⁻¹]_kk`.
    pub mmse: Vec<f64>,
}

/// `A = I + H†H/(Sσ²)`.
pub fn regularized_gram(ch: &ChannelRealization) -> DMatrix<Complex64> {
    let s = ch.streams();
    let scale = 1.0 / (s as f64 * ch.sigma2);
    let mut a = ch.h.ad_mul(&ch.h) * Complex64::new(scale, 0.0);
    for k in 0..s {
        a[(k, k)] += Complex64::new(1.0, 0.0);
    }
    a
}

/// Computes the MMSE filter and per-stream SINR via a Cholesky factor of
/// `A`. Fails if `A` is not numerically positive definite.
pub fn mmse_filter(ch: &ChannelRealization) -> Result<MmseOutput> {
    let s = ch.streams();
    let a = regularized_gram(ch);
    let chol = Cholesky::new(a).ok_or(Error::Singular)?;
    let a_inv = chol.inverse();
    let mut sinr = Vec::with_capacity(s);
    let mut bias = Vec::with_capacity(s);
    let mut mmse = Vec::with_capacity(s);
    for k in 0..s {
        let m = a_inv[(k, k)].re;
        if !(m > 0.0 && m <= 1.0) {
            return Err(Error::Singular);
        }
        let gain = 1.0 - m;
        if !(gain > 0.0) {
            return Err(Error::Singular);
        }
        mmse.push(m);
        bias.push(gain);
        sinr.push(gain / m);
    }
    let scale = 1.0 / (ch.sigma2 * (s as f64).sqrt());
    let filter = a_inv * ch.h.adjoint() * Complex64::new(scale, 0.0);
    Ok(MmseOutput { filter, sinr, bias, mmse })
}

/// Sends an `S x T` BPSK block (row-major, entries ±1) through `ch`.
/// Returns the `L x T` received block.
pub fn transmit<R: Rng + ?Sized>(
    symbols: &[f64],
    t: usize,
    ch: &ChannelRealization,
    rng: &mut R,
) -> Result<DMatrix<Complex64>> {
    let s = ch.streams();
    if symbols.len() != s * t {
        return Err(Error::ShapeMismatch {
            expected: format!("{s}x{t} symbols"),
            actual: format!("{}", symbols.len()),
        });
    }
    let norm = 1.0 / (s as f64).sqrt();
    let x = DMatrix::from_fn(s, t, |i, j| Complex64::new(symbols[i * t + j] * norm, 0.0));
    let mut y = &ch.h * x;
    for v in y.iter_mut() {
        *v += complex_normal(rng, ch.sigma2);
    }
    Ok(y)
}

/// Per-bit LLRs (row-major `S x T`) from the received block: filter, remove
/// the bias, keep the real part `r` and emit `4·sinr_k·r`, clamped.
pub fn detect_llr(y: &DMatrix<Complex64>, out: &MmseOutput, ch: &ChannelRealization) -> Result<Vec<f64>> {
    let s = ch.streams();
    if y.nrows() != ch.receive_antennas() || out.filter.nrows() != s {
        return Err(Error::ShapeMismatch {
            expected: format!("{} receive rows", ch.receive_antennas()),
            actual: format!("{}", y.nrows()),
        });
    }
    let t = y.ncols();
    let est = &out.filter * y;
    let mut llrs = vec![0.0; s * t];
    for k in 0..s {
        let slope = LLR_PER_SINR * out.sinr[k] / out.bias[k];
        for j in 0..t {
            llrs[k * t + j] = clamp_llr(slope * est[(k, j)].re);
        }
    }
    Ok(llrs)
}

/// Sample moments of the per-stream SINR over channel realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrStats {
    pub l: usize,
    pub s: usize,
    pub sigma2: f64,
    pub trials: usize,
    pub stream_mean: Vec<f64>,
    /// Unbiased per-stream sample variance.
    pub stream_variance: Vec<f64>,
    pub pooled_mean: f64,
    /// Average of the per-stream variances.
    pub pooled_variance: f64,
}

impl SinrStats {
    /// Moments from `samples[trial][stream]`.
    pub fn from_samples(l: usize, s: usize, sigma2: f64, samples: &[Vec<f64>]) -> Result<Self> {
        let trials = samples.len();
        if trials < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 trials, got {trials}")));
        }
        if samples.iter().any(|row| row.len() != s) {
            return Err(Error::ShapeMismatch { expected: format!("{s} streams per trial"), actual: "ragged".into() });
        }
        let nt = trials as f64;
        let mut stream_mean = vec![0.0; s];
        for row in samples {
            for (m, &v) in stream_mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        stream_mean.iter_mut().for_each(|m| *m /= nt);
        let mut stream_variance = vec![0.0; s];
        for row in samples {
            for ((acc, &v), &m) in stream_variance.iter_mut().zip(row).zip(&stream_mean) {
                *acc += (v - m) * (v - m);
            }
        }
        stream_variance.iter_mut().for_each(|v| *v /= nt - 1.0);
        let pooled_mean = stream_mean.iter().sum::<f64>() / s as f64;
        let pooled_variance = stream_variance.iter().sum::<f64>() / s as f64;
        Ok(SinrStats { l, s, sigma2, trials, stream_mean, stream_variance, pooled_mean, pooled_variance })
    }

    /// `(max − min) / min` of the per-stream means.
    pub fn mean_spread(&self) -> f64 {
        let max = self.stream_mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.stream_mean.iter().copied().fold(f64::INFINITY, f64::min);
        (max - min) / min
    }

    /// `L,S,sigma2,stream,mean,variance,trials`, one row per stream and a
    /// final `pooled` row.
    pub fn to_table(&self) -> String {
        let mut out = String::from("L,S,sigma2,stream,mean,variance,trials\n");
        for k in 0..self.s {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.l,
                self.s,
                self.sigma2,
                k + 1,
                self.stream_mean[k],
                self.stream_variance[k],
                self.trials
            );
        }
        let _ = writeln!(
            out,
            "{},{},{},pooled,{},{},{}",
            self.l, self.s, self.sigma2, self.pooled_mean, self.pooled_variance, self.trials
        );
        out
    }
}

/// Draws `trials` independent channels (trial `i` uses stream `i` of
/// `domain`) and returns their SINR vectors in trial order.
pub fn sample_sinrs(
    l: usize,
    s: usize,
    sigma2: f64,
    trials: usize,
    streams: &StreamFactory,
    domain: Domain,
) -> Result<Vec<Vec<f64>>> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(domain, i as u64);
            loop {
                let ch = sample_channel(l, s, sigma2, &mut rng)?;
                match mmse_filter(&ch) {
                    Ok(out) => return Ok(out.sinr),
                    Err(Error::Singular) => continue,
                    Err(e) => return Err(e),
                }
            }
        })
        .collect()
}

/// Per-stream and pooled SINR moments over `trials` realizations.
pub fn sinr_statistics(l: usize, s: usize, sigma2: f64, trials: usize, streams: &StreamFactory) -> Result<SinrStats> {
    if trials < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 trials, got {trials}")));
    }
    let samples = sample_sinrs(l, s, sigma2, trials, streams, Domain::SinrStats)?;
    SinrStats::from_samples(l, s, sigma2, &samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn scalar_channel_sinr() {
        let h = DMatrix::from_element(1, 1, c(0.6, -0.8) * 1.5);
        let ch = ChannelRealization::from_matrix(h, 0.2).unwrap();
        let out = mmse_filter(&ch).unwrap();
        assert!((out.sinr[0] - 2.25 / 0.2).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_columns_sinr() {
        // Columns of a scaled DFT matrix: H†H = L·I.
        let (l, s, sigma2) = (4usize, 2usize, 0.3);
        let h = DMatrix::from_fn(l, s, |i, k| {
            let ang = 2.0 * std::f64::consts::PI * (i * k) as f64 / l as f64;
            c(ang.cos(), ang.sin())
        });
        let ch = ChannelRealization::from_matrix(h, sigma2).unwrap();
        let out = mmse_filter(&ch).unwrap();
        for &v in &out.sinr {
            assert!((v - l as f64 / (s as f64 * sigma2)).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn mmse_identity_and_monotonicity() {
        let f = StreamFactory::new(5);
        let mut rng = f.stream(Domain::User(0), 0);
        for _ in 0..20 {
            let ch = sample_channel(12, 6, 0.4, &mut rng).unwrap();
            let out = mmse_filter(&ch).unwrap();
            // Independent route: LU inverse of A.
            let inv = regularized_gram(&ch).lu().try_inverse().unwrap();
            for k in 0..6 {
                let diag = inv[(k, k)].re;
                assert!((1.0 / (1.0 + out.sinr[k]) - diag).abs() <= 1e-8 * diag);
            }
            let better = ChannelRealization::from_matrix(ch.h().clone(), 0.2).unwrap();
            let out2 = mmse_filter(&better).unwrap();
            assert!(out2.sinr.iter().zip(&out.sinr).all(|(a, b)| a > b));
        }
    }

    #[test]
    fn bias_matches_filter_gain() {
        let f = StreamFactory::new(11);
        let mut rng = f.stream(Domain::User(1), 0);
        let ch = sample_channel(8, 4, 0.5, &mut rng).unwrap();
        let out = mmse_filter(&ch).unwrap();
        let gain = &out.filter * ch.h() * Complex64::new(1.0 / 2.0, 0.0);
        for k in 0..4 {
            assert!((gain[(k, k)].re - out.bias[k]).abs() < 1e-10);
            assert!(gain[(k, k)].im.abs() < 1e-10);
        }
    }

    #[test]
    fn noiseless_identity_channel() {
        let s = 4;
        let h = DMatrix::from_fn(s, s, |i, j| if i == j { c((s as f64).sqrt(), 0.0) } else { c(0.0, 0.0) });
        let ch = ChannelRealization::from_matrix(h, 1e-12).unwrap();
        let symbols: Vec<f64> = (0..s * 3).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        let mut rng = StreamFactory::new(1).stream(Domain::User(2), 0);
        let y = transmit(&symbols, 3, &ch, &mut rng).unwrap();
        for i in 0..s {
            for j in 0..3 {
                assert!((y[(i, j)].re - symbols[i * 3 + j]).abs() < 1e-5);
            }
        }
        let out = mmse_filter(&ch).unwrap();
        let llr = detect_llr(&y, &out, &ch).unwrap();
        assert!(llr.iter().zip(&symbols).all(|(l, x)| l.signum() == x.signum()));
    }

    #[test]
    fn scalar_llr_reduces_to_real_awgn_rule() {
        // S = L = 1, H = 1: r = y, sinr = 1/σ², LLR = 2y/(σ²/2).
        let sigma2 = 0.5;
        let ch = ChannelRealization::from_matrix(DMatrix::from_element(1, 1, c(1.0, 0.0)), sigma2).unwrap();
        let out = mmse_filter(&ch).unwrap();
        let y = DMatrix::from_row_slice(1, 3, &[c(0.7, 0.2), c(-0.1, 1.0), c(0.0, -3.0)]);
        let llr = detect_llr(&y, &out, &ch).unwrap();
        for (j, l) in llr.iter().enumerate() {
            assert!((l - 2.0 * y[(0, j)].re / (sigma2 / 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn transmit_is_deterministic_and_unit_power() {
        let f = StreamFactory::new(77);
        let mut r1 = f.stream(Domain::User(3), 4);
        let mut r2 = f.stream(Domain::User(3), 4);
        let ch1 = sample_channel(8, 4, 0.1, &mut r1).unwrap();
        let ch2 = sample_channel(8, 4, 0.1, &mut r2).unwrap();
        assert_eq!(ch1, ch2);
        let sym = vec![1.0, -1.0, -1.0, 1.0, 1.0, 1.0, -1.0, -1.0];
        assert_eq!(transmit(&sym, 2, &ch1, &mut r1).unwrap(), transmit(&sym, 2, &ch2, &mut r2).unwrap());
        // Column power before the channel: S symbols of magnitude 1/√S.
        let col_norm: f64 = (0..4).map(|i| (sym[i * 2] / 2.0f64).powi(2)).sum::<f64>().sqrt();
        assert!((col_norm - 1.0).abs() < 1e-15);
        assert!(transmit(&sym[..6], 2, &ch1, &mut r1).is_err());
    }

    #[test]
    fn invalid_dimensions() {
        let mut rng = StreamFactory::new(0).stream(Domain::User(0), 0);
        assert!(sample_channel(2, 4, 1.0, &mut rng).is_err());
        assert!(sample_channel(2, 0, 1.0, &mut rng).is_err());
        assert!(sample_channel(4, 2, 0.0, &mut rng).is_err());
    }

    #[test]
    fn forced_channel_has_zero_variance() {
        let samples = vec![vec![3.0, 4.0]; 10];
        let st = SinrStats::from_samples(4, 2, 0.1, &samples).unwrap();
        assert_eq!(st.pooled_variance, 0.0);
        assert_eq!(st.stream_mean, vec![3.0, 4.0]);
        assert!(SinrStats::from_samples(4, 2, 0.1, &samples[..1]).is_err());
        let table = st.to_table();
        assert!(table.starts_with("L,S,sigma2,stream,mean,variance,trials\n"));
        assert_eq!(table.lines().count(), 4);
    }
}
