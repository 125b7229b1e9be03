//! Seeded random streams.
//!
//! A run is fully determined by one master seed. Independent streams are
//! derived from it by selecting a distinct ChaCha stream id, so that policy
//! sampling never perturbs the observation noise sequence and two policies
//! compared on the same seed see the same noise realisation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    ObservationNoise,
    PolicySampling,
    OracleSubsampling,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::ObservationNoise => 0,
            Stream::PolicySampling => 1,
            Stream::OracleSubsampling => 2,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}

/// The three per-run streams.
#[derive(Debug, Clone)]
pub struct RunStreams {
    pub noise: ChaCha8Rng,
    pub policy: ChaCha8Rng,
    pub subsample: ChaCha8Rng,
}

impl RunStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            noise: stream(seed, Stream::ObservationNoise),
            policy: stream(seed, Stream::PolicySampling),
            subsample: stream(seed, Stream::OracleSubsampling),
        }
    }

    pub fn get_mut(&mut self, which: Stream) -> &mut ChaCha8Rng {
        match which {
            Stream::ObservationNoise => &mut self.noise,
            Stream::PolicySampling => &mut self.policy,
            Stream::OracleSubsampling => &mut self.subsample,
        }
    }
}
