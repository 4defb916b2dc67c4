//! Counter-based random streams.
//!
//! Every random draw in a simulation is taken from a stream keyed by
//! `(seed, trial, symbol, purpose)`. Trials can therefore run in any order,
//! on any number of threads, and still produce identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::C64;

pub type Stream = ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Environment = 1,
    Pilots = 2,
    Fading = 3,
    Noise = 4,
    BmlFading = 5,
    BmlNoise = 6,
    Validation = 7,
}

/// Identifies one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub trial: u64,
    pub symbol: u64,
    pub purpose: Purpose,
}

impl StreamKey {
    pub fn new(seed: u64, trial: u64, symbol: u64, purpose: Purpose) -> Self {
        Self {
            seed,
            trial,
            symbol,
            purpose,
        }
    }

    pub fn stream(&self) -> Stream {
        let mut h = splitmix(self.seed ^ 0x6a09_e667_f3bc_c908);
        for word in [self.trial, self.symbol, self.purpose as u64] {
            h = splitmix(h ^ word.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        }
        ChaCha8Rng::seed_from_u64(h)
    }
}

/// Shorthand for `StreamKey::new(..).stream()`.
pub fn stream(seed: u64, trial: u64, symbol: u64, purpose: Purpose) -> Stream {
    StreamKey::new(seed, trial, symbol, purpose).stream()
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Circularly-symmetric complex Gaussian sample with `E|z|² = variance`.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * scale, im * scale)
}
