//! Portable, seedable random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 generator keyed by
//! a 64-bit seed, with independent substreams selected through the ChaCha stream
//! counter. The output sequence depends only on the seed and stream id, so
//! instances and experiments are bit-reproducible across platforms.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Substream for the constraint matrix, drawn in row-major order.
pub const STREAM_MATRIX: u64 = 0;
/// Substream for the objective vector.
pub const STREAM_OBJECTIVE: u64 = 1;
/// Substream for randomized variable selection inside branch-and-bound.
pub const STREAM_BRANCHING: u64 = 2;
/// Substream for dual samples and Monte-Carlo geometry.
pub const STREAM_GEOMETRY: u64 = 3;

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

/// A deterministic random stream.
#[derive(Debug, Clone)]
pub struct Stream {
    inner: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Stream { inner }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw on `[0, 1)` built from the top 53 bits of one 64-bit output.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Uniform index in `0..len`. `len` must be positive.
    pub fn index(&mut self, len: usize) -> usize {
        self.inner.random_range(0..len)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform direction on the unit sphere in `dim` dimensions.
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.normal()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-replica seed: `base_seed XOR splitmix64((n << 32) XOR replica)`.
pub fn derive_seed(base_seed: u64, n: usize, replica: usize) -> u64 {
    base_seed ^ splitmix64(((n as u64) << 32) ^ replica as u64)
}
