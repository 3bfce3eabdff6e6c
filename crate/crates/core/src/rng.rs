//! Seeded noise streams.
//!
//! Every `(replication, noise kind, agent)` triple owns an independent
//! ChaCha8 stream derived from the master seed. Two runs that share a seed
//! therefore see the same initial positions, measurement noise and drift,
//! whatever policy they execute and however replications are scheduled on
//! threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::Scalar;

/// The three independent Gaussian sources of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    /// Initial position draw.
    Init = 0,
    /// Measurement noise `N_m`.
    Measurement = 1,
    /// Drift `N_d`.
    Drift = 2,
}

const KINDS: usize = 3;

/// Anything that can hand out standard normal draws per agent and noise kind.
///
/// The model operations take this instead of a concrete generator so tests
/// can script the noise.
pub trait NoiseSource {
    fn standard_normal<T: Scalar>(&mut self, kind: NoiseKind, agent: usize) -> T;
}

/// The streams of one replication.
#[derive(Clone)]
pub struct ReplicationStreams {
    n: usize,
    streams: Vec<ChaCha8Rng>,
}

impl ReplicationStreams {
    pub fn new(seed: u64, replication: u64, n: usize) -> Self {
        let base = ChaCha8Rng::seed_from_u64(seed);
        let first = replication.wrapping_mul((KINDS * n) as u64);
        let streams = (0..KINDS * n)
            .map(|offset| {
                let mut rng = base.clone();
                rng.set_stream(first.wrapping_add(offset as u64));
                rng
            })
            .collect();
        Self { n, streams }
    }

    pub fn agents(&self) -> usize {
        self.n
    }

    /// Direct access to the generator behind one stream.
    pub fn stream(&mut self, kind: NoiseKind, agent: usize) -> &mut ChaCha8Rng {
        assert!(agent < self.n, "agent {agent} out of range for n = {}", self.n);
        &mut self.streams[kind as usize * self.n + agent]
    }

    /// Fills `out[i]` with the next standard normal draw of agent `i`.
    pub fn fill<T: Scalar>(&mut self, kind: NoiseKind, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.n);
        let streams = &mut self.streams[kind as usize * self.n..(kind as usize + 1) * self.n];
        for (x, rng) in out.iter_mut().zip(streams) {
            *x = T::standard_normal(rng);
        }
    }
}

impl NoiseSource for ReplicationStreams {
    #[inline]
    fn standard_normal<T: Scalar>(&mut self, kind: NoiseKind, agent: usize) -> T {
        T::standard_normal(self.stream(kind, agent))
    }
}
