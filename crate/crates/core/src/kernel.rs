//! Binary linear algebra for polar codes: the 2x2 kernel, Kronecker powers,
//! the butterfly encoder and the bit-reversal permutation.
//!
//! The canonical generator is `F_N = F^{⊗n}` with no bit-reversal stage, so
//! `x = u · F_N` over GF(2) with `u` and `x` as row vectors.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest `n` accepted by [`generator_matrix`]. Dense `2^n x 2^n` matrices
/// beyond this are never needed; encoding itself has no such limit.
pub const MAX_DENSE_LOG2: u32 = 12;

/// Returns `log2(len)` if `len` is a power of two.
pub fn log2_exact(len: usize) -> Option<u32> {
    if len.is_power_of_two() {
        Some(len.trailing_zeros())
    } else {
        None
    }
}

/// A sequence of bits whose length is a power of two.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVector(Vec<u8>);

impl BitVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if log2_exact(bits.len()).is_none() {
            return Err(Error::NotPowerOfTwo(bits.len()));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParameter(format!("bit value {b} is not 0 or 1")));
        }
        Ok(BitVector(bits))
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    pub fn xor(&self, other: &BitVector) -> Result<BitVector> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("length {}", self.len()),
                actual: format!("length {}", other.len()),
            });
        }
        Ok(BitVector(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

/// Contiguous `'0'`/`'1'` characters, index 1 first.
impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

impl FromStr for BitVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = parse_bits(s)?;
        BitVector::new(bits)
    }
}

/// Parses a string of `'0'`/`'1'` characters with no length restriction.
pub fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::Parse(format!("invalid bit character {other:?}"))),
        })
        .collect()
}

/// Dense row-major matrix over GF(2).
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u8>,
}

impl BinaryMatrix {
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch {
                expected: "non-empty rows of equal length".into(),
                actual: format!("{r} rows"),
            });
        }
        let entries: Vec<u8> = rows.iter().flat_map(|row| row.iter().copied()).collect();
        if entries.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter("matrix entries must be 0 or 1".into()));
        }
        Ok(BinaryMatrix { rows: r, cols: c, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        BinaryMatrix { rows: dim, cols: dim, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.entries[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, other: &BinaryMatrix) -> Result<BinaryMatrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                expected: format!("{} rows", self.cols),
                actual: format!("{} rows", other.rows),
            });
        }
        let mut entries = vec![0u8; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.get(i, k) == 1 {
                    let out = &mut entries[i * other.cols..(i + 1) * other.cols];
                    for (o, &b) in out.iter_mut().zip(other.row(k)) {
                        *o ^= b;
                    }
                }
            }
        }
        Ok(BinaryMatrix { rows: self.rows, cols: other.cols, entries })
    }

    /// Row vector times matrix over GF(2).
    pub fn left_mul_vec(&self, v: &[u8]) -> Result<Vec<u8>> {
        if v.len() != self.rows {
            return Err(Error::ShapeMismatch {
                expected: format!("length {}", self.rows),
                actual: format!("length {}", v.len()),
            });
        }
        let mut out = vec![0u8; self.cols];
        for (k, &bit) in v.iter().enumerate() {
            if bit == 1 {
                for (o, &b) in out.iter_mut().zip(self.row(k)) {
                    *o ^= b;
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let line: String = self.row(r).iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
            writeln!(f, "  {line}")?;
        }
        write!(f, "]")
    }
}

/// The polarization kernel `[[1,0],[1,1]]`.
pub fn kernel() -> BinaryMatrix {
    BinaryMatrix { rows: 2, cols: 2, entries: vec![1, 0, 1, 1] }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &BinaryMatrix, b: &BinaryMatrix) -> BinaryMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut entries = vec![0u8; rows * cols];
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            if a.get(ar, ac) == 0 {
                continue;
            }
            for br in 0..b.rows {
                let r = ar * b.rows + br;
                let dst = &mut entries[r * cols + ac * b.cols..r * cols + (ac + 1) * b.cols];
                dst.copy_from_slice(b.row(br));
            }
        }
    }
    BinaryMatrix { rows, cols, entries }
}

/// `F^{⊗n}`, dimension `2^n`.
pub fn generator_matrix(n: u32) -> Result<BinaryMatrix> {
    if n > MAX_DENSE_LOG2 {
        return Err(Error::TooLarge { n, max: MAX_DENSE_LOG2 });
    }
    let f = kernel();
    Ok((0..n).fold(BinaryMatrix::identity(1), |acc, _| kron(&acc, &f)))
}

/// In-place butterfly computing `x = u · F^{⊗n}`.
///
/// Each stage XORs the second half of every block into the first half; the
/// stages commute, so the order of `half` does not matter.
pub fn encode_in_place(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in bits.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, &b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= b;
            }
        }
        half *= 2;
    }
}

/// 1-D polar encoding `x = u · F_N` via the butterfly network.
pub fn encode_1d(u: &BitVector) -> BitVector {
    let mut bits = u.0.clone();
    encode_in_place(&mut bits);
    BitVector(bits)
}

/// Reference dense product `u · F_N`. Only meant for small oracles.
pub fn encode_dense(u: &BitVector) -> Result<BitVector> {
    let n = log2_exact(u.len()).ok_or(Error::NotPowerOfTwo(u.len()))?;
    let g = generator_matrix(n)?;
    Ok(BitVector(g.left_mul_vec(u.as_slice())?))
}

/// Bit-reversal permutation on `0..2^n` (0-based): `perm[i]` is `i` with its
/// `n`-bit binary expansion reversed.
pub fn bit_reversal_permutation(n: u32) -> Vec<usize> {
    let len = 1usize << n;
    if n == 0 {
        return vec![0];
    }
    (0..len).map(|i| i.reverse_bits() >> (usize::BITS - n)).collect()
}
