use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Named, independent RNG streams derived from one master seed.
///
/// Every stream shares the ChaCha key derived from the master seed and
/// differs only in its stream id: 0 for the environment, `i + 1` for agent
/// `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    master: u64,
}

impl SeedStreams {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(id);
        rng
    }

    pub fn environment(&self) -> ChaCha8Rng {
        self.stream(0)
    }

    pub fn agent(&self, agent: usize) -> ChaCha8Rng {
        self.stream(agent as u64 + 1)
    }
}

/// Inverse-CDF draw of a successor from a probability row.
pub fn sample_successor<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            cumulative += p;
            if u < cumulative {
                return i;
            }
        }
    }
    // rounding left u above the final cumulative sum
    last_positive
}
