//! Seeded, counter-based randomness. Every random draw in a run flows from a
//! single `SolverRng` so that runs are bit-reproducible from one seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SolverRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SolverRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream, e.g. one per rounding replication.
pub fn derive(seed: u64, stream: u64) -> SolverRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.wrapping_add(1));
    rng
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn fill_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for x in out {
        *x = rng.sample(StandardNormal);
    }
}
