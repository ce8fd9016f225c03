//! Named random substreams.
//!
//! Each purpose (UAC draws, back-off, preamble choice, traffic, ...) gets its
//! own ChaCha8 generator seeded from the run seed and a label. Adding draws
//! to one stream never shifts another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, b| (h ^ *b as u64).wrapping_mul(FNV_PRIME))
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the generator for `label` under `seed`.
pub fn substream(seed: u64, label: &str) -> Stream {
    let mut state = seed ^ fnv1a(label.as_bytes()).rotate_left(29);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    Stream(ChaCha8Rng::from_seed(key))
}

#[derive(Debug, Clone)]
pub struct Stream(ChaCha8Rng);

impl Stream {
    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    /// Uniform integer in [0, n). `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        self.0.random_range(0..n)
    }

    /// Exponential with the given rate (per second), in seconds.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -libm::log(1.0 - self.uniform()) / rate
    }

    /// Index drawn according to `weights`, which sum to 1.
    pub fn weighted(&mut self, weights: impl IntoIterator<Item = f64>) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, w) in weights.into_iter().enumerate() {
            acc += w;
            if w > 0.0 {
                last = i;
            }
            if u < acc {
                return i;
            }
        }
        last
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_independent() {
        let mut a = substream(7, "backoff/cell-1");
        let mut b = substream(7, "backoff/cell-1");
        let mut c = substream(7, "uac/cell-1");
        let xs: [f64; 4] = core::array::from_fn(|_| a.uniform());
        let ys: [f64; 4] = core::array::from_fn(|_| b.uniform());
        let zs: [f64; 4] = core::array::from_fn(|_| c.uniform());
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
        assert_ne!(substream(8, "backoff/cell-1").uniform(), xs[0]);
    }

    #[test]
    fn weighted_respects_zero_weights() {
        let mut s = substream(1, "w");
        for _ in 0..200 {
            assert_eq!(s.weighted([0.0, 1.0, 0.0]), 1);
        }
    }
}
