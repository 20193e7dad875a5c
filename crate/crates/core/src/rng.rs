//! Seeded randomness.
//!
//! Every random draw in the crate comes from [`Pcg64`] (PCG XSL RR 128/64)
//! seeded through `SeedableRng::seed_from_u64`. Its output sequence is fixed
//! by the algorithm definition, so a seed reproduces the same graphs,
//! objectives and partitions on every platform.
//!
//! One user seed drives several independent components; each component gets
//! its own stream via [`derive_seed`].

use rand::SeedableRng;

pub use rand_pcg::Pcg64;

/// Component salts for [`derive_seed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Topology,
    Objective,
    Partition,
    Data,
}

impl Stream {
    fn salt(self) -> u64 {
        match self {
            Stream::Topology => 0,
            Stream::Objective => 0x9E37_79B9_7F4A_7C15,
            Stream::Partition => 0xC2B2_AE3D_27D4_EB4F,
            Stream::Data => 0x1656_67B1_9E37_79F9,
        }
    }
}

/// Seed for one component. The topology stream uses the user seed as is.
pub fn derive_seed(seed: u64, stream: Stream) -> u64 {
    seed ^ stream.salt()
}

pub fn rng_from_seed(seed: u64) -> Pcg64 {
    Pcg64::seed_from_u64(seed)
}
