use nalgebra::DMatrix;
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{FieldTag, Matrix, C64};

/// Seeded, reproducible scalar stream.
///
/// Streams are derived from `(seed, key...)` tuples so that independent
/// search attempts get independent generators regardless of the order in
/// which they run.
#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> RandomSource {
        RandomSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Generator for the sub-stream `keys` of `seed`.
    pub fn derived(seed: u64, keys: &[u64]) -> RandomSource {
        let mixed = keys
            .iter()
            .fold(splitmix64(seed), |h, &k| splitmix64(h ^ splitmix64(k)));
        RandomSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(mixed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform draw from the open interval (0, 1).
    pub fn uniform_open(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random()
    }
}

/// n x n matrix with i.i.d. standard normal entries; for `Complex` the real
/// and imaginary parts are drawn independently.
pub fn sample_gaussian(n: usize, field: FieldTag, rng: &mut RandomSource) -> Matrix {
    // Column-major fill so the draw order matches the storage order.
    let mut data = DMatrix::<C64>::zeros(n, n);
    for z in data.iter_mut() {
        let re = rng.gaussian();
        let im = match field {
            FieldTag::Real => 0.0,
            FieldTag::Complex => rng.gaussian(),
        };
        *z = C64::new(re, im);
    }
    Matrix::from_dmatrix(data, field)
}
