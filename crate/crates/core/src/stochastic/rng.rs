use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Identifies one replica's random numbers.
///
/// Each `(master_seed, purpose)` pair keys a ChaCha8 generator (key expanded
/// from the seed by splitmix64); `stream_id` selects one of its 2^64
/// independent streams. Equal specs give bit-identical samples on every
/// platform, independent of how replicas are scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

/// Disjoint sources of randomness within one replica.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purpose {
    /// Wiener increments.
    Increments,
    /// Residual normals of the exact convolution step.
    Corrector,
    /// Random integrand ensembles.
    Integrand,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Increments => 0x57_49_45_4E_45_52_00_01,
            Purpose::Corrector => 0x43_4F_52_52_45_43_00_02,
            Purpose::Integrand => 0x49_4E_54_45_47_52_00_03,
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    pub fn with_stream(self, stream_id: u64) -> Self {
        Self { stream_id, ..self }
    }

    pub fn rng(self, purpose: Purpose) -> ChaCha8Rng {
        let mut state = self.master_seed ^ purpose.tag();
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Fills `out` with independent `N(0, scale^2)` samples.
pub(crate) fn fill_normals(rng: &mut ChaCha8Rng, out: &mut [f64], scale: f64) {
    for x in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *x = scale * z;
    }
}
