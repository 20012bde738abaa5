//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use stpolar::ga::{design_mean_from_sigma2, ga_evolve};
use stpolar::kernel::encode_in_place;
use stpolar::{CodeSpec, LlrFrame};

/// Random bits of length `n`.
pub fn random_bits(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<bool>() as u8).collect()
}

/// Rate-1/2 GA code of length `n` designed at `sigma2`, plus one noisy
/// received frame for a random message.
pub fn decode_fixture(n: usize, sigma2: f64, seed: u64) -> (CodeSpec, LlrFrame) {
    let stages = n.trailing_zeros();
    let profile = ga_evolve(design_mean_from_sigma2(sigma2), stages).expect("valid design");
    let code = CodeSpec::one_d(&profile, n / 2).expect("valid code");
    let mut word = code.embed(&random_bits(n / 2, seed)).expect("K bits");
    encode_in_place(&mut word);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let sigma = sigma2.sqrt();
    let llrs = word
        .iter()
        .map(|&b| {
            let noise: f64 = rng.sample(StandardNormal);
            2.0 * (1.0 - 2.0 * f64::from(b) + sigma * noise) / sigma2
        })
        .collect();
    (code, LlrFrame::new(llrs).expect("finite LLRs"))
}
