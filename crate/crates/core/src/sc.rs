//! Successive-cancellation (SC) decoding over the natural-order factor graph
//! of `x = u · F^{⊗n}`, plus an exhaustive maximum-likelihood decoder used as
//! a test oracle for small codes.
//!
//! LLRs are `ln P(y|0)/P(y|1)`, so positive values favour bit 0.

use crate::error::{Error, Result};
use crate::ga::CodeSpec;
use crate::kernel::{encode_in_place, log2_exact, BitVector};

/// Decoder input clamp.
pub const L_CLAMP: f64 = 40.0;
/// Largest information-set size accepted by [`ml_decode_bruteforce`].
pub const ML_MAX_K: usize = 20;

/// Per-coded-bit LLRs in canonical 1-D order, clamped to `±L_CLAMP`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFrame(Vec<f64>);

impl LlrFrame {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if log2_exact(values.len()).is_none() {
            return Err(Error::NotPowerOfTwo(values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("LLRs must be finite".into()));
        }
        Ok(LlrFrame(values.into_iter().map(clamp_llr).collect()))
    }

    /// Noiseless frame for `codeword`: `+L_CLAMP` where the bit is 0.
    pub fn noiseless(codeword: &BitVector) -> Self {
        LlrFrame(codeword.as_slice().iter().map(|&b| if b == 0 { L_CLAMP } else { -L_CLAMP }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Hard decisions, zero LLR mapping to bit 0.
    pub fn hard_decisions(&self) -> Vec<u8> {
        self.0.iter().map(|&l| hard_decision(l)).collect()
    }
}

#[inline]
pub fn clamp_llr(v: f64) -> f64 {
    v.clamp(-L_CLAMP, L_CLAMP)
}

#[inline]
fn hard_decision(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

/// Check-node update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CheckRule {
    /// `2·atanh(tanh(a/2)·tanh(b/2))`.
    #[default]
    Exact,
    /// `sign(a)·sign(b)·min(|a|, |b|)`.
    MinSum,
}

fn ln1p_exp_neg(x: f64) -> f64 {
    // ln(1 + e^{-x}) for x >= 0
    (-x).exp().ln_1p()
}

/// Check-node combination of two LLRs.
///
/// The exact rule is evaluated as
/// `sgn(a)sgn(b)·min(|a|,|b|) + ln(1+e^{−|a+b|}) − ln(1+e^{−|a−b|})`,
/// an identity for `2·atanh(tanh(a/2)·tanh(b/2))` that needs no atanh.
#[inline]
pub fn f_combine(a: f64, b: f64, rule: CheckRule) -> f64 {
    let sign = if (a < 0.0) != (b < 0.0) { -1.0 } else { 1.0 };
    let min = a.abs().min(b.abs());
    match rule {
        CheckRule::MinSum => sign * min,
        CheckRule::Exact => {
            if a == 0.0 || b == 0.0 {
                return 0.0;
            }
            sign * min + ln1p_exp_neg((a + b).abs()) - ln1p_exp_neg((a - b).abs())
        }
    }
}

/// Variable-node combination: `b + a` if the partial-sum bit is 0, else `b − a`.
#[inline]
pub fn g_combine(a: f64, b: f64, u_partial: u8) -> f64 {
    if u_partial == 0 {
        b + a
    } else {
        b - a
    }
}

/// Output of a decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Length-N message estimate; frozen positions are 0.
    pub u_hat: BitVector,
    /// Values at the information positions, in ascending index order.
    pub info_bits: Vec<u8>,
    /// Decision LLR of every message position (diagnostic). Empty for ML.
    pub decision_llrs: Vec<f64>,
}

/// Reusable SC decoder with preallocated buffers for a fixed length.
#[derive(Debug, Clone)]
pub struct ScDecoder {
    n: usize,
    rule: CheckRule,
    scratch: Vec<f64>,
    partial: Vec<u8>,
    llr_in: Vec<f64>,
}

impl ScDecoder {
    pub fn new(n: usize, rule: CheckRule) -> Result<Self> {
        if log2_exact(n).is_none() {
            return Err(Error::NotPowerOfTwo(n));
        }
        Ok(ScDecoder { n, rule, scratch: vec![0.0; n], partial: vec![0; n], llr_in: vec![0.0; n] })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Decodes `llrs` (clamped on entry) into `u_hat` and `decision_llrs`.
    pub fn decode_into(
        &mut self,
        llrs: &[f64],
        frozen: &[bool],
        u_hat: &mut [u8],
        decision_llrs: &mut [f64],
    ) -> Result<()> {
        let n = self.n;
        for (name, len) in [("LLRs", llrs.len()), ("frozen mask", frozen.len()), ("u_hat", u_hat.len()), ("decision LLRs", decision_llrs.len())] {
            if len != n {
                return Err(Error::ShapeMismatch { expected: format!("{name} of length {n}"), actual: format!("{len}") });
            }
        }
        for (dst, &l) in self.llr_in.iter_mut().zip(llrs) {
            *dst = clamp_llr(l);
        }
        let llr_in = std::mem::take(&mut self.llr_in);
        decode_node(&llr_in, frozen, u_hat, &mut self.partial, decision_llrs, &mut self.scratch, self.rule);
        self.llr_in = llr_in;
        Ok(())
    }
}

/// One SC node. `llr` are the channel-side LLRs of this sub-code, `partial`
/// receives its re-encoded codeword.
fn decode_node(
    llr: &[f64],
    frozen: &[bool],
    u_hat: &mut [u8],
    partial: &mut [u8],
    dec: &mut [f64],
    scratch: &mut [f64],
    rule: CheckRule,
) {
    let n = llr.len();
    if n == 1 {
        let bit = if frozen[0] { 0 } else { hard_decision(llr[0]) };
        dec[0] = llr[0];
        u_hat[0] = bit;
        partial[0] = bit;
        return;
    }
    let half = n / 2;
    let (l_lo, l_hi) = llr.split_at(half);
    let (child, deeper) = scratch.split_at_mut(half);

    // Upper half of the message sees x_lo ⊕ x_hi.
    for ((c, &a), &b) in child.iter_mut().zip(l_lo).zip(l_hi) {
        *c = f_combine(a, b, rule);
    }
    let (p_lo, p_hi) = partial.split_at_mut(half);
    {
        let (u_lo, _) = u_hat.split_at_mut(half);
        let (d_lo, _) = dec.split_at_mut(half);
        decode_node(child, &frozen[..half], u_lo, p_lo, d_lo, deeper, rule);
    }

    for (((c, &a), &b), &p) in child.iter_mut().zip(l_lo).zip(l_hi).zip(p_lo.iter()) {
        *c = g_combine(a, b, p);
    }
    {
        let (_, u_hi) = u_hat.split_at_mut(half);
        let (_, d_hi) = dec.split_at_mut(half);
        decode_node(child, &frozen[half..], u_hi, p_hi, d_hi, deeper, rule);
    }

    for (a, &b) in p_lo.iter_mut().zip(p_hi.iter()) {
        *a ^= b;
    }
}

fn check_frame(llrs: &LlrFrame, spec: &CodeSpec) -> Result<()> {
    if llrs.len() != spec.n() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} LLRs", spec.n()),
            actual: format!("{}", llrs.len()),
        });
    }
    Ok(())
}

fn result_from(u_hat: Vec<u8>, spec: &CodeSpec, decision_llrs: Vec<f64>) -> DecodeResult {
    let info_bits = spec.info_set().iter().map(|&i| u_hat[i]).collect();
    DecodeResult { u_hat: BitVector::new(u_hat).expect("power-of-two length"), info_bits, decision_llrs }
}

/// SC decoding with the exact check-node rule.
pub fn sc_decode(llrs: &LlrFrame, spec: &CodeSpec) -> Result<DecodeResult> {
    sc_decode_with(llrs, spec, CheckRule::Exact)
}

/// SC decoding with a selectable check-node rule.
pub fn sc_decode_with(llrs: &LlrFrame, spec: &CodeSpec, rule: CheckRule) -> Result<DecodeResult> {
    check_frame(llrs, spec)?;
    let n = spec.n();
    let mut dec = ScDecoder::new(n, rule)?;
    let mut u_hat = vec![0u8; n];
    let mut dl = vec![0.0; n];
    dec.decode_into(llrs.values(), spec.frozen_mask(), &mut u_hat, &mut dl)?;
    Ok(result_from(u_hat, spec, dl))
}

/// Exhaustive ML decoding: maximizes `Σ (1 − 2x_k)·llr_k` over all `2^K`
/// codewords. Ties go to the smallest message value, reading the
/// information bits with the lowest index as most significant.
pub fn ml_decode_bruteforce(llrs: &LlrFrame, spec: &CodeSpec) -> Result<DecodeResult> {
    check_frame(llrs, spec)?;
    let k = spec.k();
    if k > ML_MAX_K {
        return Err(Error::InvalidParameter(format!("K = {k} exceeds the ML enumeration guard {ML_MAX_K}")));
    }
    let n = spec.n();
    let info = spec.info_set();
    let mut best: Option<(f64, u32)> = None;
    let mut u = vec![0u8; n];
    for m in 0u32..(1u32 << k) {
        u.iter_mut().for_each(|b| *b = 0);
        for (j, &pos) in info.iter().enumerate() {
            u[pos] = ((m >> (k - 1 - j)) & 1) as u8;
        }
        encode_in_place(&mut u);
        let score: f64 = u
            .iter()
            .zip(llrs.values())
            .map(|(&x, &l)| if x == 0 { l } else { -l })
            .sum();
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, m));
        }
    }
    let (_, m) = best.expect("at least one codeword");
    let mut u_hat = vec![0u8; n];
    for (j, &pos) in info.iter().enumerate() {
        u_hat[pos] = ((m >> (k - 1 - j)) & 1) as u8;
    }
    Ok(result_from(u_hat, spec, Vec::new()))
}
