//! Spatiotemporal 2-D polar encoding.
//!
//! A length-`N = S·T` message is reshaped row-major into an `S x T` matrix
//! (row = spatial stream, column = time instant). Each row is transformed by
//! `F_T` and each column by `F_S`, both as row vectors, in either order. The
//! result flattens row-major back to `u · F_N`, since `F_N = F_S ⊗ F_T`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ga::{even_child_mean, odd_child_mean};
use crate::kernel::{encode_1d, encode_in_place, log2_exact, parse_bits, BitVector};
use crate::rng::{Domain, StreamFactory};
use rand::RngCore;
use rayon::prelude::*;

/// Order in which the two transform stages are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CodingMode {
    /// Time-domain transform on every stream first, then across streams.
    #[default]
    TimeSpace,
    /// Spatial transform on every time instant first, then along time.
    SpaceTime,
}

impl CodingMode {
    pub const ALL: [CodingMode; 2] = [CodingMode::TimeSpace, CodingMode::SpaceTime];

    pub fn as_str(self) -> &'static str {
        match self {
            CodingMode::TimeSpace => "time-space",
            CodingMode::SpaceTime => "space-time",
        }
    }
}

impl fmt::Display for CodingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "time-space" | "ts" => Ok(CodingMode::TimeSpace),
            "space-time" | "st" => Ok(CodingMode::SpaceTime),
            other => Err(Error::Parse(format!(
                "unknown coding mode {other:?} (expected time-space or space-time)"
            ))),
        }
    }
}

fn check_dims(s: usize, t: usize) -> Result<()> {
    for (name, v) in [("S", s), ("T", t)] {
        if log2_exact(v).is_none() {
            return Err(Error::InvalidParameter(format!("{name} = {v} is not a power of two")));
        }
    }
    Ok(())
}

macro_rules! st_matrix {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, Hash)]
        pub struct $name {
            s: usize,
            t: usize,
            bits: Vec<u8>,
        }

        impl $name {
            /// Builds an `s x t` matrix from row-major bits.
            pub fn from_row_major(s: usize, t: usize, bits: Vec<u8>) -> Result<Self> {
                check_dims(s, t)?;
                if bits.len() != s * t {
                    return Err(Error::ShapeMismatch {
                        expected: format!("{} bits for {s}x{t}", s * t),
                        actual: format!("{} bits", bits.len()),
                    });
                }
                if bits.iter().any(|&b| b > 1) {
                    return Err(Error::InvalidParameter("entries must be 0 or 1".into()));
                }
                Ok($name { s, t, bits })
            }

            pub fn zeros(s: usize, t: usize) -> Result<Self> {
                Self::from_row_major(s, t, vec![0; s * t])
            }

            pub fn streams(&self) -> usize {
                self.s
            }

            pub fn time_len(&self) -> usize {
                self.t
            }

            /// Entry at stream `s`, time `t` (0-based).
            pub fn get(&self, s: usize, t: usize) -> u8 {
                self.bits[s * self.t + t]
            }

            pub fn row(&self, s: usize) -> &[u8] {
                &self.bits[s * self.t..(s + 1) * self.t]
            }

            pub fn as_row_major(&self) -> &[u8] {
                &self.bits
            }

            /// Parses rows of `'0'`/`'1'` characters, one stream per line.
            pub fn parse_rows(text: &str) -> Result<Self> {
                let rows: Vec<Vec<u8>> = text
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(parse_bits)
                    .collect::<Result<_>>()?;
                let s = rows.len();
                let t = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|r| r.len() != t) {
                    return Err(Error::Parse("rows have unequal lengths".into()));
                }
                Self::from_row_major(s, t, rows.concat())
            }
        }

        /// One stream per line, `'0'`/`'1'` per time instant.
        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                for s in 0..self.s {
                    for &b in self.row(s) {
                        f.write_str(if b == 0 { "0" } else { "1" })?;
                    }
                    f.write_str("\n")?;
                }
                Ok(())
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({}x{})\n{}", stringify!($name), self.s, self.t, self)
            }
        }
    };
}

st_matrix!(
    /// `S x T` information matrix; row `i` is the time block of stream `i`.
    MessageMatrix
);
st_matrix!(
    /// `S x T` codeword; entry `(s, t)` is sent on stream `s` at time `t`.
    CodewordMatrix
);

impl MessageMatrix {
    /// Row-major reshape of a 1-D message.
    pub fn reshape(u: &BitVector, s: usize, t: usize) -> Result<Self> {
        Self::from_row_major(s, t, u.as_slice().to_vec())
    }

    pub fn flatten(&self) -> BitVector {
        BitVector::new(self.bits.clone()).expect("S*T is a power of two")
    }
}

fn transform_rows(bits: &mut [u8], t: usize) {
    for row in bits.chunks_exact_mut(t) {
        encode_in_place(row);
    }
}

fn transform_columns(bits: &mut [u8], s: usize, t: usize) {
    let mut col = vec![0u8; s];
    for j in 0..t {
        for (i, c) in col.iter_mut().enumerate() {
            *c = bits[i * t + j];
        }
        encode_in_place(&mut col);
        for (i, &c) in col.iter().enumerate() {
            bits[i * t + j] = c;
        }
    }
}

/// Applies the 2-D transform `X = F_S-on-columns(F_T-on-rows(U))` in the
/// requested stage order. Both orders give the same codeword.
pub fn encode_2d(u: &MessageMatrix, mode: CodingMode) -> CodewordMatrix {
    let (s, t) = (u.s, u.t);
    let mut bits = u.bits.clone();
    match mode {
        CodingMode::TimeSpace => {
            transform_rows(&mut bits, t);
            transform_columns(&mut bits, s, t);
        }
        CodingMode::SpaceTime => {
            transform_columns(&mut bits, s, t);
            transform_rows(&mut bits, t);
        }
    }
    CodewordMatrix { s, t, bits }
}

/// Bijection between the 1-D index `k` and the `(stream, time)` position:
/// `k = s·T + t` (all 0-based; `k = (s−1)T + t` in 1-based terms).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexMap {
    s: usize,
    t: usize,
}

impl IndexMap {
    pub fn new(s: usize, t: usize) -> Result<Self> {
        check_dims(s, t)?;
        Ok(IndexMap { s, t })
    }

    pub fn len(&self) -> usize {
        self.s * self.t
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(stream, time)` of 1-D index `k`.
    pub fn position(&self, k: usize) -> (usize, usize) {
        debug_assert!(k < self.len());
        (k / self.t, k % self.t)
    }

    /// 1-D index of `(stream, time)`.
    pub fn index(&self, stream: usize, time: usize) -> usize {
        debug_assert!(stream < self.s && time < self.t);
        stream * self.t + time
    }
}

/// Shorthand for [`IndexMap::new`].
pub fn index_map(s: usize, t: usize) -> Result<IndexMap> {
    IndexMap::new(s, t)
}

/// 1-D codeword `x'` with `x'_k = X(position(k))`.
pub fn flatten_codeword(x: &CodewordMatrix) -> BitVector {
    BitVector::new(x.bits.clone()).expect("S*T is a power of two")
}

/// Inverse of [`flatten_codeword`].
pub fn reshape_codeword(x: &BitVector, s: usize, t: usize) -> Result<CodewordMatrix> {
    CodewordMatrix::from_row_major(s, t, x.as_slice().to_vec())
}

/// Which encoding route disagreed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mismatch {
    /// The 2-D encoding in this mode differs from `encode_1d` at 0-based index.
    Mode { mode: CodingMode, index: usize },
}

/// Outcome of [`verify_equivalence`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub s: usize,
    pub t: usize,
    pub first_mismatch: Option<Mismatch>,
}

impl EquivalenceReport {
    pub fn is_equivalent(&self) -> bool {
        self.first_mismatch.is_none()
    }
}

/// Checks that both 2-D modes reproduce `encode_1d(u)` after flattening.
pub fn verify_equivalence(u: &BitVector, s: usize, t: usize) -> Result<EquivalenceReport> {
    verify_equivalence_with(u, s, t, encode_2d)
}

/// [`verify_equivalence`] against an arbitrary 2-D encoder.
pub fn verify_equivalence_with<E>(u: &BitVector, s: usize, t: usize, encoder: E) -> Result<EquivalenceReport>
where
    E: Fn(&MessageMatrix, CodingMode) -> CodewordMatrix,
{
    if u.len() != s * t {
        return Err(Error::ShapeMismatch {
            expected: format!("length {} for {s}x{t}", s * t),
            actual: format!("length {}", u.len()),
        });
    }
    let reference = encode_1d(u);
    let msg = MessageMatrix::reshape(u, s, t)?;
    for mode in CodingMode::ALL {
        let x = flatten_codeword(&encoder(&msg, mode));
        if let Some(index) = first_difference(x.as_slice(), reference.as_slice()) {
            return Ok(EquivalenceReport { s, t, first_mismatch: Some(Mismatch::Mode { mode, index }) });
        }
    }
    Ok(EquivalenceReport { s, t, first_mismatch: None })
}

fn first_difference(a: &[u8], b: &[u8]) -> Option<usize> {
    a.iter().zip(b).position(|(x, y)| x != y)
}

/// Result of checking every split of one length against `encode_1d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSummary {
    pub n: usize,
    pub splits: usize,
    pub messages: u64,
    /// First failing message (in enumeration order) and its report.
    pub failure: Option<(BitVector, EquivalenceReport)>,
}

/// Largest length checked exhaustively.
pub const MAX_EXHAUSTIVE_LEN: usize = 24;

/// Checks all splits and both modes of length `n`: over every message when
/// `samples` is `None`, otherwise over `samples` uniform random messages
/// drawn from `seed`.
pub fn equivalence_sweep(n: usize, samples: Option<u64>, seed: u64) -> Result<SweepSummary> {
    let all = splits(n)?;
    let messages = match samples {
        Some(m) => m,
        None if n <= MAX_EXHAUSTIVE_LEN => 1u64 << n,
        None => {
            return Err(Error::InvalidParameter(format!(
                "exhaustive check limited to N <= {MAX_EXHAUSTIVE_LEN}, got {n}; pass a sample count"
            )));
        }
    };
    let streams = StreamFactory::new(seed);
    let message = |i: u64| -> BitVector {
        let bits = match samples {
            None => (0..n).map(|j| ((i >> (n - 1 - j)) & 1) as u8).collect(),
            Some(_) => {
                let mut rng = streams.stream(Domain::User(0), i);
                (0..n).map(|_| (rng.next_u32() & 1) as u8).collect()
            }
        };
        BitVector::new(bits).expect("power-of-two length")
    };
    let failure = (0..messages).into_par_iter().find_map_first(|i| {
        let u = message(i);
        all.iter().find_map(|&(s, t)| {
            let report = verify_equivalence(&u, s, t).expect("split matches length");
            (!report.is_equivalent()).then(|| (u.clone(), report))
        })
    });
    Ok(SweepSummary { n, splits: all.len(), messages, failure })
}

/// All power-of-two splits `(S, T)` of `n`, from `S = 1` up to `S = n`.
pub fn splits(n: usize) -> Result<Vec<(usize, usize)>> {
    let log = log2_exact(n).ok_or(Error::NotPowerOfTwo(n))?;
    Ok((0..=log).map(|s| (1usize << s, n >> s)).collect())
}

/// Domain of one polarization split in a 2-D construction schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitDomain {
    Time,
    Space,
}

/// GA means of an `S x T` subchannel array grown by a schedule of time and
/// space splits. A time split maps subchannel `(j, i)` to `(j, 2i)` and
/// `(j, 2i+1)` (odd then even child), a space split maps it to `(2j, i)`
/// and `(2j+1, i)`. Output is row-major `S x T`.
pub fn scheduled_means(design_mean: f64, schedule: &[SplitDomain]) -> Result<(usize, usize, Vec<f64>)> {
    let (mut s, mut t) = (1usize, 1usize);
    let mut means = vec![design_mean];
    for step in schedule {
        let mut next;
        match step {
            SplitDomain::Time => {
                next = vec![0.0; s * 2 * t];
                for j in 0..s {
                    for i in 0..t {
                        let m = means[j * t + i];
                        next[j * 2 * t + 2 * i] = odd_child_mean(m)?;
                        next[j * 2 * t + 2 * i + 1] = even_child_mean(m);
                    }
                }
                t *= 2;
            }
            SplitDomain::Space => {
                next = vec![0.0; 2 * s * t];
                for j in 0..s {
                    for i in 0..t {
                        let m = means[j * t + i];
                        next[2 * j * t + i] = odd_child_mean(m)?;
                        next[(2 * j + 1) * t + i] = even_child_mean(m);
                    }
                }
                s *= 2;
            }
        }
        means = next;
    }
    Ok((s, t, means))
}

/// Executable form of the split-order equivalence: every schedule of
/// `log2 S` space splits and `log2 T` time splits produces the same
/// subchannels as the 1-D recursion, relabelled by a permutation of index
/// digits. Returns the permutation (schedule layout position → 1-D index)
/// after checking the means agree bit-for-bit.
pub fn schedule_permutation(
    design_mean: f64,
    schedule: &[SplitDomain],
    profile_means: &[f64],
) -> Result<Vec<usize>> {
    let (s, t, means) = scheduled_means(design_mean, schedule)?;
    let n = schedule.len();
    if profile_means.len() != s * t {
        return Err(Error::ShapeMismatch {
            expected: format!("profile of length {}", s * t),
            actual: format!("{}", profile_means.len()),
        });
    }
    let t_bits = log2_exact(t).unwrap() as usize;
    let mut perm = vec![0usize; s * t];
    for (pos, slot) in perm.iter_mut().enumerate() {
        let (mut j, mut i) = (pos / t, pos % t);
        // Peel digits in reverse application order to recover the path.
        let mut path = Vec::with_capacity(n);
        for step in schedule.iter().rev() {
            match step {
                SplitDomain::Time => {
                    path.push(i & 1);
                    i >>= 1;
                }
                SplitDomain::Space => {
                    path.push(j & 1);
                    j >>= 1;
                }
            }
        }
        // The 1-D index has the first-applied digit most significant.
        *slot = path.iter().rev().fold(0usize, |acc, &d| (acc << 1) | d);
    }
    let _ = t_bits;
    for (pos, &k) in perm.iter().enumerate() {
        if means[pos].to_bits() != profile_means[k].to_bits() {
            return Err(Error::InvalidParameter(format!(
                "schedule subchannel {pos} has mean {} but 1-D index {k} has {}",
                means[pos], profile_means[k]
            )));
        }
    }
    Ok(perm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ga::ga_evolve;

    #[test]
    fn sweep_small_lengths() {
        let r = equivalence_sweep(8, None, 0).unwrap();
        assert_eq!((r.splits, r.messages), (4, 256));
        assert!(r.failure.is_none());
        let r = equivalence_sweep(64, Some(50), 3).unwrap();
        assert!(r.failure.is_none());
        assert!(equivalence_sweep(64, None, 0).is_err());
        assert!(equivalence_sweep(12, None, 0).is_err());
    }

    #[test]
    fn worked_example_2x2() {
        // u = [u1,u2,u3,u4] with a single 1 at each position in turn, so the
        // codeword columns read off the XOR formulas directly.
        let expect = |u: [u8; 4]| {
            let [u1, u2, u3, u4] = u;
            // x1 = u1^u2^u3^u4, x2 = u2^u4, x3 = u3^u4, x4 = u4
            [u1 ^ u2 ^ u3 ^ u4, u2 ^ u4, u3 ^ u4, u4]
        };
        for m in 0u8..16 {
            let u = [(m >> 3) & 1, (m >> 2) & 1, (m >> 1) & 1, m & 1];
            let msg = MessageMatrix::from_row_major(2, 2, u.to_vec()).unwrap();
            let x = expect(u);
            for mode in CodingMode::ALL {
                let cw = encode_2d(&msg, mode);
                // x1, x2 on stream 1; x3, x4 on stream 2.
                assert_eq!(cw.row(0), &x[0..2]);
                assert_eq!(cw.row(1), &x[2..4]);
            }
        }
    }

    #[test]
    fn index_map_examples() {
        let m = index_map(2, 2).unwrap();
        assert_eq!(m.position(2), (1, 0));
        let m = index_map(2, 4).unwrap();
        assert_eq!(m.position(4), (1, 0));
        let m = index_map(1, 8).unwrap();
        for k in 0..8 {
            assert_eq!(m.position(k), (0, k));
            assert_eq!(m.index(0, k), k);
        }
        assert!(index_map(3, 4).is_err());
    }

    #[test]
    fn degenerate_splits() {
        let u: BitVector = "10110010".parse().unwrap();
        let x1 = encode_1d(&u);
        let row = encode_2d(&MessageMatrix::reshape(&u, 1, 8).unwrap(), CodingMode::TimeSpace);
        assert_eq!(row.row(0), x1.as_slice());
        let col = encode_2d(&MessageMatrix::reshape(&u, 8, 1).unwrap(), CodingMode::SpaceTime);
        assert_eq!(flatten_codeword(&col), x1);
    }

    #[test]
    fn equivalence_negative_control() {
        let u: BitVector = "0000000100000000".parse().unwrap();
        let broken = |m: &MessageMatrix, mode: CodingMode| {
            let mut x = encode_2d(m, mode);
            if mode == CodingMode::SpaceTime {
                x.bits[3] ^= 1;
            }
            x
        };
        let report = verify_equivalence_with(&u, 4, 4, broken).unwrap();
        assert!(!report.is_equivalent());
        assert_eq!(
            report.first_mismatch,
            Some(Mismatch::Mode { mode: CodingMode::SpaceTime, index: 3 })
        );
        assert!(verify_equivalence(&u, 4, 4).unwrap().is_equivalent());
        assert!(verify_equivalence(&u, 4, 2).is_err());
    }

    #[test]
    fn text_round_trip() {
        let x = CodewordMatrix::from_row_major(2, 4, vec![1, 0, 1, 1, 0, 0, 1, 0]).unwrap();
        assert_eq!(x.to_string(), "1011\n0010\n");
        assert_eq!(CodewordMatrix::parse_rows(&x.to_string()).unwrap(), x);
        assert!(CodewordMatrix::parse_rows("101\n01\n").is_err());
    }

    #[test]
    fn schedules_are_digit_permutations_of_1d() {
        use SplitDomain::*;
        let profile = ga_evolve(1.7, 4).unwrap();
        let schedules: [&[SplitDomain]; 5] = [
            &[Space, Space, Time, Time],
            &[Time, Time, Space, Space],
            &[Time, Space, Time, Space],
            &[Space, Time, Space, Time],
            &[Time, Time, Time, Time],
        ];
        for sched in schedules {
            let perm = schedule_permutation(1.7, sched, profile.means()).unwrap();
            let mut sorted = perm.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..16).collect::<Vec<_>>());
        }
        // Space splits first, then time: the layout is exactly the index map.
        let perm = schedule_permutation(1.7, &[Space, Space, Time, Time], profile.means()).unwrap();
        assert_eq!(perm, (0..16).collect::<Vec<_>>());
    }
}
