use proptest::prelude::*;
use stpolar::kernel::{encode_1d, BitVector};
use stpolar::st2d::{
    encode_2d, flatten_codeword, splits, verify_equivalence, CodingMode, CodewordMatrix, MessageMatrix,
};

fn message() -> impl Strategy<Value = (Vec<u8>, usize)> {
    (0u32..=10).prop_flat_map(|n| (proptest::collection::vec(0u8..=1, 1usize << n), 0..=n as usize))
}

fn xor(a: &CodewordMatrix, b: &CodewordMatrix) -> Vec<u8> {
    a.as_row_major().iter().zip(b.as_row_major()).map(|(x, y)| x ^ y).collect()
}

proptest! {
    #[test]
    fn every_split_and_mode_matches_1d((bits, split) in message()) {
        let n = bits.len();
        let s = 1usize << split;
        let u = BitVector::new(bits).unwrap();
        let report = verify_equivalence(&u, s, n / s).unwrap();
        prop_assert!(report.is_equivalent(), "{:?}", report);
    }

    #[test]
    fn modes_agree((bits, split) in message()) {
        let n = bits.len();
        let s = 1usize << split;
        let m = MessageMatrix::from_row_major(s, n / s, bits).unwrap();
        prop_assert_eq!(encode_2d(&m, CodingMode::TimeSpace), encode_2d(&m, CodingMode::SpaceTime));
    }

    #[test]
    fn encode_2d_is_linear((a, split) in message(), seed in any::<u64>()) {
        let n = a.len();
        let s = 1usize << split;
        let b: Vec<u8> = (0..n).map(|i| ((seed.rotate_left(i as u32 % 64) ^ i as u64) & 1) as u8).collect();
        let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        let enc = |v: Vec<u8>| encode_2d(&MessageMatrix::from_row_major(s, n / s, v).unwrap(), CodingMode::TimeSpace);
        let lhs = enc(sum);
        let rhs = xor(&enc(a), &enc(b));
        prop_assert_eq!(lhs.as_row_major(), &rhs[..]);
    }
}

#[test]
fn degenerate_splits_reduce_to_1d() {
    let u: BitVector = "1101001110100101".parse().unwrap();
    let x = encode_1d(&u);
    let one_stream = encode_2d(&MessageMatrix::reshape(&u, 1, 16).unwrap(), CodingMode::TimeSpace);
    assert_eq!(one_stream.row(0), x.as_slice());
    let one_time = encode_2d(&MessageMatrix::reshape(&u, 16, 1).unwrap(), CodingMode::SpaceTime);
    let column: Vec<u8> = (0..16).map(|s| one_time.get(s, 0)).collect();
    assert_eq!(column, x.as_slice());
}

#[test]
fn split_lists() {
    assert_eq!(splits(8).unwrap(), vec![(1, 8), (2, 4), (4, 2), (8, 1)]);
    assert_eq!(splits(1).unwrap(), vec![(1, 1)]);
    assert!(splits(6).is_err());
    let u: BitVector = "10110010".parse().unwrap();
    for (s, t) in splits(8).unwrap() {
        let x = encode_2d(&MessageMatrix::reshape(&u, s, t).unwrap(), CodingMode::SpaceTime);
        assert_eq!(flatten_codeword(&x), encode_1d(&u));
    }
}
