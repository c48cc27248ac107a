use rand::distr::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Seeded random stream. Same seed, same sequence, on every platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    drawn: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            drawn: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of draws taken so far.
    pub fn position(&self) -> u64 {
        self.drawn
    }

    /// Uniform draw from the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.drawn += 1;
        Open01.sample(&mut self.rng)
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.drawn += 1;
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// Fresh independent stream for sub-job `index`.
    pub fn fork(&self, index: u64) -> RngStream {
        RngStream::new(derive_seed(self.seed, index))
    }
}

/// Mixes a master seed with a job index (SplitMix64 finalizer), so per-job
/// streams do not depend on scheduling order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
