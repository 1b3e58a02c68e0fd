//! Seeded, splittable random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A `(seed, stream)` pair naming a reproducible ChaCha8 stream.
///
/// Parallel work derives one sub-stream per task index with [`StreamRng::substream`],
/// so results never depend on how tasks are scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamRng {
    pub seed: u64,
    pub stream: u64,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }

    /// Independent child stream for task `index`.
    pub fn substream(&self, index: u64) -> StreamRng {
        StreamRng {
            seed: splitmix64(self.seed ^ splitmix64(self.stream.wrapping_add(0x5851_f42d_4c95_7f2d))),
            stream: index,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mean and standard error of a Monte-Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl Estimate {
    /// Sample mean with the standard error from the unbiased sample variance.
    pub fn from_moments(sum: f64, sum_sq: f64, n: u64) -> Self {
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                samples: 0,
            };
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr: (var / nf).sqrt(),
            samples: n,
        }
    }
}

/// Samples per Monte-Carlo block. Blocks are the unit of parallelism and
/// each gets its own sub-stream, so the block size is part of the output contract.
pub const MC_BLOCK: u64 = 1024;

/// Splits `samples` into `(block index, block length)` pairs.
pub fn blocks(samples: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut idx = 0;
    while start < samples {
        let len = MC_BLOCK.min(samples - start);
        out.push((idx, len));
        start += len;
        idx += 1;
    }
    out
}
