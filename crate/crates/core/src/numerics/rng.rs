use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic, splittable source of random generators.
///
/// A stream is identified by the master seed and the chain of indices used to
/// split it, so replica `i` of a run draws the same numbers regardless of how
/// many threads execute the run or in which order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomStream {
    seed: u64,
    key: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            key: splitmix64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream number `index`.
    pub fn split(&self, index: u64) -> Self {
        Self {
            seed: self.seed,
            key: splitmix64(self.key ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut bytes = [0u8; 32];
        let mut z = self.key;
        for chunk in bytes.chunks_mut(8) {
            z = splitmix64(z);
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        ChaCha8Rng::from_seed(bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_path_same_numbers() {
        let a: f64 = RandomStream::new(7).split(3).rng().random();
        let b: f64 = RandomStream::new(7).split(3).rng().random();
        assert_eq!(a, b);
    }

    #[test]
    fn different_paths_differ() {
        let s = RandomStream::new(7);
        let a: u64 = s.split(1).rng().random();
        let b: u64 = s.split(2).rng().random();
        let c: u64 = s.split(1).split(0).rng().random();
        let d: u64 = RandomStream::new(8).split(1).rng().random();
        assert!(a != b && a != c && a != d);
    }
}
