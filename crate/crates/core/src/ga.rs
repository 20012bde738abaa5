//! Gaussian-approximation (GA) code construction.
//!
//! Every synthesized subchannel is summarized by the mean of its LLR, under
//! the assumption that the LLR is Gaussian with variance twice its mean. The
//! means evolve through a binary tree: the check (odd, "minus") child
//! `φ⁻¹(1 − (1 − φ(m))²)` and the variable (even, "plus") child `2m`.
//!
//! `φ` itself uses the two-branch closed-form approximation with
//! `(a, b, c) = (−0.4527, 0.0218, 0.86)` and threshold 10. It is evaluated
//! in the log domain throughout, so means in the thousands never underflow.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::kernel::log2_exact;
use crate::st2d::CodingMode;

const PHI_A: f64 = -0.4527;
const PHI_B: f64 = 0.0218;
const PHI_C: f64 = 0.86;
/// Branch threshold of the φ approximation.
pub const PHI_THRESHOLD: f64 = 10.0;
/// Upper cap on subchannel means.
pub const M_SAT: f64 = 1.0e4;
/// Default polarization-fraction exponent (2.33 / 2).
pub const DEFAULT_POLARIZATION_EXPONENT: f64 = 1.165;
/// Largest supported stage count for a GA profile.
pub const MAX_STAGES: u32 = 24;

const MAX_NEWTON_ITERS: usize = 200;

fn ln_phi_exp_branch(gamma: f64) -> f64 {
    PHI_A * gamma.powf(PHI_C) + PHI_B
}

fn ln_phi_tail_branch(gamma: f64) -> f64 {
    0.5 * (std::f64::consts::PI / gamma).ln() - gamma / 4.0 + (1.0 - 10.0 / (7.0 * gamma)).ln()
}

fn d_ln_phi_tail_branch(gamma: f64) -> f64 {
    let k = 10.0 / (7.0 * gamma);
    -0.5 / gamma - 0.25 + (k / gamma) / (1.0 - k)
}

/// `ln φ(γ)` for `γ ≥ 0`.
pub fn ln_phi(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("phi requires gamma >= 0, got {gamma}")));
    }
    Ok(if gamma <= PHI_THRESHOLD {
        ln_phi_exp_branch(gamma)
    } else {
        ln_phi_tail_branch(gamma)
    })
}

/// The φ approximation. `φ(0) = e^{0.0218} ≈ 1.022`, slightly above one.
pub fn phi(gamma: f64) -> Result<f64> {
    ln_phi(gamma).map(f64::exp)
}

/// Inverse of φ given `ln y`.
///
/// When `y` is attainable on both sides of the threshold (φ jumps upward at
/// γ = 10), the exponential branch wins.
pub fn phi_inv_ln(ln_y: f64) -> Result<f64> {
    if ln_y.is_nan() || ln_y > PHI_B {
        return Err(Error::InvalidParameter(format!(
            "phi_inv argument e^{ln_y} outside (0, phi(0)]"
        )));
    }
    if ln_y == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter("phi_inv argument must be positive".into()));
    }
    if ln_y >= ln_phi_exp_branch(PHI_THRESHOLD) {
        let base = (ln_y - PHI_B) / PHI_A;
        return Ok(base.max(0.0).powf(1.0 / PHI_C));
    }
    invert_tail(ln_y)
}

/// Inverse of φ: returns γ with `φ(γ) = y` for `y ∈ (0, φ(0)]`.
pub fn phi_inv(y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::InvalidParameter(format!("phi_inv argument {y} outside (0, phi(0)]")));
    }
    phi_inv_ln(y.ln())
}

/// Solves `ln φ_tail(γ) = ln_y` on `γ > 10`, where the tail branch is
/// strictly decreasing. Bracketed Newton with bisection fallback.
fn invert_tail(ln_y: f64) -> Result<f64> {
    let h = |g: f64| ln_phi_tail_branch(g) - ln_y;
    let mut lo = PHI_THRESHOLD;
    let mut hi = 2.0 * PHI_THRESHOLD;
    while h(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoConvergence("phi_inv bracket overflow".into()));
        }
    }
    // h(lo) > 0 >= h(hi) from here on (h(10+) ≈ ln 0.0394 > ln_y).
    let mut g = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON_ITERS {
        let v = h(g);
        if v == 0.0 {
            return Ok(g);
        }
        if v > 0.0 {
            lo = g;
        } else {
            hi = g;
        }
        let step = v / d_ln_phi_tail_branch(g);
        let mut next = g - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - g).abs() <= 4.0 * f64::EPSILON * g || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        g = next;
    }
    Err(Error::NoConvergence(format!("phi_inv tail branch for ln y = {ln_y}")))
}

/// Mean of the check-node (odd) child of a channel with LLR mean `m`.
pub fn odd_child_mean(m: f64) -> Result<f64> {
    let lp = ln_phi(m)?;
    let p = lp.exp();
    // ln(1 − (1 − φ)²) = ln φ + ln(2 − φ)
    let ln_y = lp + (2.0 - p).ln();
    let child = phi_inv_ln(ln_y.min(PHI_B))?.min(M_SAT);
    // With φ(m) ≤ 1 the exact child never exceeds its parent. Profiles
    // settle on the fixed point φ = 1, where roundoff in either ln φ or the
    // inverse can land the child a few ulps above the parent.
    Ok(if lp <= 1e-12 { child.min(m) } else { child })
}

/// Mean of the variable-node (even) child.
pub fn even_child_mean(m: f64) -> f64 {
    (2.0 * m).min(M_SAT)
}

/// Per-subchannel LLR means in natural (non-bit-reversed) order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityProfile {
    n: u32,
    design_mean: f64,
    means: Vec<f64>,
}

impl ReliabilityProfile {
    /// Stage count `n`; the profile has `2^n` entries.
    pub fn stages(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn design_mean(&self) -> f64 {
        self.design_mean
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn ber_estimates(&self) -> Vec<f64> {
        self.means.iter().map(|&m| channel_ber_estimate(m)).collect()
    }

    /// Writes the `index,mean,ber_estimate` table (1-based index, 17
    /// significant digits).
    pub fn to_table(&self) -> String {
        let mut out = String::from("index,mean,ber_estimate\n");
        for (i, &m) in self.means.iter().enumerate() {
            let _ = writeln!(out, "{},{:.16e},{:.16e}", i + 1, m, channel_ber_estimate(m));
        }
        out
    }

    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_table().as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Runs the GA recursion `n` times from a single channel of mean
/// `design_mean`.
///
/// Index digits, most significant first, select the child at each stage:
/// 0 is the odd (check) child and 1 the even (variable) child. The most
/// significant digit is the first transform applied to the raw channel,
/// which is the natural order of `x = u · F^{⊗n}`.
pub fn ga_evolve(design_mean: f64, n: u32) -> Result<ReliabilityProfile> {
    if !(design_mean > 0.0) || !design_mean.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "design mean must be positive and finite, got {design_mean}"
        )));
    }
    if n > MAX_STAGES {
        return Err(Error::TooLarge { n, max: MAX_STAGES });
    }
    let mut means = vec![design_mean.min(M_SAT)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(means.len() * 2);
        for &m in &means {
            next.push(odd_child_mean(m)?);
            next.push(even_child_mean(m));
        }
        means = next;
    }
    Ok(ReliabilityProfile { n, design_mean, means })
}

/// Design mean for BPSK over real AWGN with noise variance `sigma2`: the
/// channel LLR is `N(2/σ², 4/σ²)`.
pub fn design_mean_from_sigma2(sigma2: f64) -> f64 {
    2.0 / sigma2
}

/// Gaussian tail probability `Q(x) = P(Z > x)`.
///
/// Underflows to zero above x ≈ 38.5; use [`ln_q_function`] there.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `ln Q(x)`, finite for all finite `x`.
pub fn ln_q_function(x: f64) -> f64 {
    if x < 30.0 {
        return q_function(x).ln();
    }
    // Asymptotic series Q(x) = φ(x)/x · (1 − 1/x² + 3/x⁴ − 15/x⁶ + 105/x⁸ − …)
    let x2 = x * x;
    let inv = 1.0 / x2;
    let series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv * (1.0 - 9.0 * inv))));
    -0.5 * x2 - (x * (2.0 * std::f64::consts::PI).sqrt()).ln() + series.ln()
}

/// Bit-error estimate `Q(√(m/2))` of a subchannel with LLR mean `m`.
pub fn channel_ber_estimate(mean: f64) -> f64 {
    q_function((mean.max(0.0) / 2.0).sqrt())
}

/// `ln` of [`channel_ber_estimate`], free of underflow.
pub fn ln_channel_ber_estimate(mean: f64) -> f64 {
    ln_q_function((mean.max(0.0) / 2.0).sqrt())
}

/// Indices (0-based, ascending) of the `k` largest means. Ties go to the
/// smaller index.
pub fn select_information_set(profile: &ReliabilityProfile, k: usize) -> Result<Vec<usize>> {
    let n = profile.len();
    if k > n {
        return Err(Error::InvalidParameter(format!("K = {k} exceeds N = {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let means = profile.means();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    let mut info: Vec<usize> = order.into_iter().take(k).collect();
    info.sort_unstable();
    Ok(info)
}

/// Fraction of subchannels whose BER estimate lies strictly below
/// `scale · N^{−exponent}`.
pub fn polarization_fraction(profile: &ReliabilityProfile, exponent: f64, scale: f64) -> f64 {
    let n = profile.len() as f64;
    let threshold = scale * n.powf(-exponent);
    if !(threshold > 0.0) {
        return 0.0;
    }
    let ln_th = threshold.ln();
    let good = profile
        .means()
        .iter()
        .filter(|&&m| ln_channel_ber_estimate(m) < ln_th)
        .count();
    good as f64 / n
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Capacity (bits per use) of BPSK over real AWGN with noise variance
/// `sigma2`: `1 − E[log2(1 + e^{−L})]` with `L = 2y/σ²`, `y ~ N(1, σ²)`.
///
/// Trapezoidal rule on the standard-normal variable over `[−12, 12]`; the
/// integrand is smooth, so the rule converges geometrically.
pub fn bpsk_awgn_capacity(sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
    }
    const HALF_WIDTH: f64 = 12.0;
    const STEP: f64 = 0.005;
    let sigma = sigma2.sqrt();
    let steps = (2.0 * HALF_WIDTH / STEP).round() as usize;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = 0.0;
    for i in 0..=steps {
        let z = -HALF_WIDTH + i as f64 * STEP;
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        let llr = 2.0 * (1.0 + sigma * z) / sigma2;
        acc += w * norm * (-0.5 * z * z).exp() * softplus(-llr);
    }
    let loss = acc * STEP / std::f64::consts::LN_2;
    Ok((1.0 - loss).clamp(0.0, 1.0))
}

/// Noise variance at which [`bpsk_awgn_capacity`] equals `capacity`, by
/// bisection on `ln σ²`.
pub fn sigma2_for_capacity(capacity: f64) -> Result<f64> {
    if !(capacity > 0.0 && capacity < 1.0) {
        return Err(Error::InvalidParameter(format!("capacity {capacity} outside (0,1)")));
    }
    let (mut lo, mut hi) = ((1e-4f64).ln(), (1e4f64).ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bpsk_awgn_capacity(mid.exp())? > capacity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Code geometry and information set.
///
/// `info_set` holds 0-based natural indices into the equivalent 1-D code;
/// all other positions are frozen to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    n: usize,
    s: usize,
    t: usize,
    mode: CodingMode,
    info_set: Vec<usize>,
    frozen: Vec<bool>,
}

impl CodeSpec {
    /// Builds an `S x T` code with the `k` most reliable positions of
    /// `profile` carrying information.
    pub fn from_profile(
        profile: &ReliabilityProfile,
        s: usize,
        t: usize,
        k: usize,
        mode: CodingMode,
    ) -> Result<Self> {
        if s * t != profile.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("S*T = {}", profile.len()),
                actual: format!("S*T = {}", s * t),
            });
        }
        let info = select_information_set(profile, k)?;
        Self::with_info_set(s, t, info, mode)
    }

    /// 1-D code of length `profile.len()`.
    pub fn one_d(profile: &ReliabilityProfile, k: usize) -> Result<Self> {
        Self::from_profile(profile, 1, profile.len(), k, CodingMode::TimeSpace)
    }

    /// Builds a code from an explicit information set (0-based indices).
    pub fn with_info_set(s: usize, t: usize, mut info_set: Vec<usize>, mode: CodingMode) -> Result<Self> {
        for (name, v) in [("S", s), ("T", t)] {
            if log2_exact(v).is_none() {
                return Err(Error::InvalidParameter(format!("{name} = {v} is not a power of two")));
            }
        }
        let n = s * t;
        info_set.sort_unstable();
        info_set.dedup();
        if let Some(&bad) = info_set.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidParameter(format!("information index {bad} out of range for N = {n}")));
        }
        let mut frozen = vec![true; n];
        for &i in &info_set {
            frozen[i] = false;
        }
        Ok(CodeSpec { n, s, t, mode, info_set, frozen })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn s(&self) -> usize {
        self.s
    }
    pub fn t(&self) -> usize {
        self.t
    }
    pub fn k(&self) -> usize {
        self.info_set.len()
    }
    pub fn mode(&self) -> CodingMode {
        self.mode
    }
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }
    /// `true` at frozen positions.
    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }
    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    /// Places `info` bits into an all-zero length-N message.
    pub fn embed(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} information bits", self.k()),
                actual: format!("{}", info.len()),
            });
        }
        let mut u = vec![0u8; self.n];
        for (&pos, &b) in self.info_set.iter().zip(info) {
            u[pos] = b;
        }
        Ok(u)
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    // Reference values below were produced with mpmath at 40 digits
    // (tests/oracle/gen_oracles.py).

    #[test]
    fn phi_reference_values() {
        let p0 = phi(0.0).unwrap();
        assert!((p0 - 1.022_039_356_157_056_9).abs() < 1e-15, "{p0}");
        let p10 = phi(10.0).unwrap();
        assert!((p10 / PHI_10_LOWER - 1.0).abs() < 1e-12, "{p10}");
        assert!(phi(-1e-9).is_err());
    }

    const PHI_10_LOWER: f64 = 0.038_475_962_194_743_282;

    #[test]
    fn phi_is_decreasing_within_branches() {
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.025).collect();
        for w in grid.windows(2) {
            assert!(phi(w[0]).unwrap() > phi(w[1]).unwrap());
        }
        let tail: Vec<f64> = (1..=400).map(|i| 10.0 + i as f64 * 0.5).collect();
        for w in tail.windows(2) {
            assert!(phi(w[0]).unwrap() > phi(w[1]).unwrap());
        }
    }

    #[test]
    fn phi_inv_round_trip() {
        for g in [0.1, 1.0, 5.0, 9.0, 10.0, 20.0, 100.0, 1000.0, 9000.0] {
            let back = phi_inv_ln(ln_phi(g).unwrap()).unwrap();
            assert!((back - g).abs() <= 1e-9 * g, "{g} -> {back}");
        }
        assert!(phi_inv(PHI_B.exp()).unwrap() < 1e-15);
        assert!(phi_inv(1.1).is_err());
        assert!(phi_inv(0.0).is_err());
    }

    #[test]
    fn phi_inv_branch_selection() {
        // Just above φ(10⁻) lands on the exponential branch, below it on the tail.
        let above = phi_inv(PHI_10_LOWER * (1.0 + 1e-9)).unwrap();
        assert!(above <= PHI_THRESHOLD);
        let below = phi_inv(PHI_10_LOWER * (1.0 - 1e-9)).unwrap();
        assert!(below > PHI_THRESHOLD);
        // Values reachable on both sides of the jump resolve to the exponential branch.
        let both = phi(10.0 + 1e-6).unwrap();
        assert!(both > PHI_10_LOWER);
        assert!(phi_inv(both).unwrap() < PHI_THRESHOLD);
    }

    #[test]
    fn ga_small_cases() {
        assert_eq!(ga_evolve(3.5, 0).unwrap().means(), &[3.5]);
        let p = ga_evolve(2.0, 3).unwrap();
        assert_eq!(p.means()[7], 16.0);
        let odd = ga_evolve(2.0, 1).unwrap().means()[0];
        assert!((odd - ODD_CHILD_OF_2).abs() < 1e-12 * ODD_CHILD_OF_2, "{odd}");
        assert!(ga_evolve(0.0, 3).is_err());
        assert!(ga_evolve(f64::NAN, 3).is_err());
    }

    const ODD_CHILD_OF_2: f64 = 0.823_364_232_329_113_29;

    #[test]
    fn ga_profile_n3_matches_reference() {
        let p = ga_evolve(2.0, 3).unwrap();
        for (got, want) in p.means().iter().zip(PROFILE_2_3) {
            assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
        }
        assert_eq!(select_information_set(&p, 4).unwrap(), TOP4_2_3);
    }

    const PROFILE_2_3: [f64; 8] = [
        0.043_071_537_604_422_178,
        0.419_727_735_181_178_39,
        0.611_118_987_892_717_16,
        3.293_456_929_316_453_2,
        1.005_560_953_932_110_4,
        4.564_146_444_198_270_3,
        5.785_458_045_659_926_3,
        16.0,
    ];
    // 1-based {4, 6, 7, 8}
    const TOP4_2_3: [usize; 4] = [3, 5, 6, 7];

    #[test]
    fn q_function_reference_values() {
        assert_eq!(q_function(0.0), 0.5);
        for (x, want) in Q_REFERENCE {
            let got = q_function(x);
            assert!((got / want - 1.0).abs() < 1e-10, "Q({x}) = {got}, want {want}");
        }
        for i in 1..400 {
            let x = 1.0 + i as f64 * 0.09;
            assert!(q_function(x) < (-x * x / 2.0).exp());
        }
        assert!((ln_q_function(60.0) - LN_Q_60).abs() < 1e-10 * LN_Q_60.abs());
        // The two ln Q routes agree where both are representable.
        for x in [30.0, 31.5, 33.0, 36.0] {
            let direct = q_function(x).ln();
            assert!((ln_q_function(x) - direct).abs() < 1e-9 * direct.abs());
        }
    }

    const Q_REFERENCE: [(f64, f64); 6] = [
        (1.0, 0.158_655_253_931_457_05),
        (3.0, 1.349_898_031_630_094_5e-3),
        (10.0, 7.619_853_024_160_526e-24),
        (-2.0, 0.977_249_868_051_820_79),
        (30.0, 4.906_713_927_148_187e-198),
        (37.0, 5.725_571_222_524_576_8e-300),
    ];
    const LN_Q_60: f64 = -1_805.013_560_680_567_1;

    #[test]
    fn ber_estimate_examples() {
        assert_eq!(channel_ber_estimate(0.0), 0.5);
        assert!((channel_ber_estimate(2.0) - q_function(1.0)).abs() < 1e-16);
        assert!(channel_ber_estimate(1.0) > channel_ber_estimate(1.5));
    }

    #[test]
    fn selection_rules() {
        let p = ga_evolve(4.0, 4).unwrap();
        assert_eq!(select_information_set(&p, 16).unwrap(), (0..16).collect::<Vec<_>>());
        assert_eq!(select_information_set(&p, 1).unwrap(), vec![15]);
        assert!(select_information_set(&p, 17).is_err());
        // Ties resolve to ascending index.
        let flat = ReliabilityProfile { n: 2, design_mean: 1.0, means: vec![1.0, 2.0, 2.0, 2.0] };
        assert_eq!(select_information_set(&flat, 2).unwrap(), vec![1, 2]);
    }

    #[test]
    fn polarization_fraction_limits() {
        let p = ga_evolve(4.0, 10).unwrap();
        assert_eq!(polarization_fraction(&p, 0.0, 0.51), 1.0);
        assert_eq!(polarization_fraction(&p, 1.165, 0.0), 0.0);
        let f = polarization_fraction(&p, DEFAULT_POLARIZATION_EXPONENT, 1.0);
        assert_eq!((f * 1024.0).round() as usize, POLFRAC_4_10_COUNT);
    }

    const POLFRAC_4_10_COUNT: usize = 546;

    #[test]
    fn capacity_reference_values() {
        for (s2, want) in CAPACITY_REFERENCE {
            let got = bpsk_awgn_capacity(s2).unwrap();
            assert!((got - want).abs() < 1e-6, "C({s2}) = {got}, want {want}");
        }
        assert!(bpsk_awgn_capacity(1e6).unwrap() < 1e-5);
        assert!(bpsk_awgn_capacity(1e-3).unwrap() > 1.0 - 1e-9);
        assert!(bpsk_awgn_capacity(0.0).is_err());
    }

    const CAPACITY_REFERENCE: [(f64, f64); 3] = [
        (1.0, 0.485_944_154_132_935_32),
        (0.25, 0.912_822_285_774_482_16),
        (4.0, 0.160_747_219_796_416_87),
    ];

    #[test]
    fn capacity_half_noise_level() {
        let s2 = sigma2_for_capacity(0.5).unwrap();
        assert!((s2 - 0.957_842_189_557_293_64).abs() < 1e-6, "{s2}");
    }
}
