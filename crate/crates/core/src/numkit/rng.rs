use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::Matrix;

/// Seeded pseudo-random stream.
///
/// Backed by ChaCha8 (`rand_chacha`), seeded through `seed_from_u64`, so a
/// given seed produces the same stream on every platform. Uniform floats are
/// `(next_u64 >> 11) · 2⁻⁵³`, i.e. 53 random mantissa bits on `[0, 1)`.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// An independent stream derived from the same seed.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer on `0..=max`, drawn through `u64` so the result does
    /// not depend on the platform's pointer width.
    pub fn index_inclusive(&mut self, max: usize) -> usize {
        self.inner.gen_range(0..=max as u64) as usize
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index_inclusive(i);
            items.swap(i, j);
        }
    }
}

/// Glorot (Xavier) uniform initialization: entries i.i.d. on `[-s, s]` with
/// `s = sqrt(6 / (fan_in + fan_out))`. The result is `fan_out × fan_in`.
pub fn glorot_uniform(rng: &mut Rng, fan_in: usize, fan_out: usize) -> Matrix {
    let s = glorot_limit(fan_in, fan_out);
    let data = (0..fan_in * fan_out).map(|_| rng.uniform(-s, s)).collect();
    Matrix::from_vec(fan_out, fan_in, data).expect("sized by construction")
}

pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}
