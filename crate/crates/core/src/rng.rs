//! Seeded random number generation.
//!
//! Every stochastic step (data split, α initialization, VQE initial angles,
//! cross-validation shuffles) draws from ChaCha8 seeded through
//! [`SeedableRng::seed_from_u64`]. ChaCha8's output stream is specified
//! independently of platform and word size, so a given seed reproduces the same
//! run everywhere.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng64;

pub fn seeded(seed: u64) -> Rng64 {
    Rng64::seed_from_u64(seed)
}

/// Derives an independent stream for a named sub-task from a run seed.
pub fn derive(seed: u64, stream: u64) -> Rng64 {
    let mut rng = Rng64::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
