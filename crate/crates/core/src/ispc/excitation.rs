use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::frames::DqVector;

/// Seeded uniform white-noise source added to current references during identification.
#[derive(Debug, Clone)]
pub struct Exciter {
    rng: ChaCha8Rng,
    amplitude: f64,
}

impl Exciter {
    /// Noise is uniform on `[-amplitude, amplitude]` per channel.
    pub fn new(seed: u64, amplitude: f64) -> Self {
        assert!(amplitude >= 0.0 && amplitude.is_finite(), "excitation amplitude must be non-negative");
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            amplitude,
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// One zero-mean sample.
    pub fn sample(&mut self) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        self.rng.random_range(-self.amplitude..=self.amplitude)
    }

    pub fn excite(&mut self, u_nominal: DqVector) -> DqVector {
        excite(u_nominal, &mut self.rng, self.amplitude)
    }
}

/// `u_nominal` plus an independent uniform sample on each channel.
pub fn excite<R: Rng>(u_nominal: DqVector, rng: &mut R, amplitude: f64) -> DqVector {
    if amplitude == 0.0 {
        return u_nominal;
    }
    let d = rng.random_range(-amplitude..=amplitude);
    let q = rng.random_range(-amplitude..=amplitude);
    u_nominal + DqVector::new(d, q)
}
