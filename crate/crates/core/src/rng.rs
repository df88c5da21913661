//! Named RNG sub-streams derived from one user seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Items = 1,
    Abilities = 2,
    Responses = 3,
    Chain = 4,
    FreshAtoms = 5,
    Measure = 6,
    Prior = 7,
    Elicitation = 8,
}

/// Independent generator for `stream`; the same `(seed, stream)` always yields the same sequence.
pub fn substream(seed: u64, stream: Stream) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Sub-stream further split by an index (e.g. one per strategy in a bundle).
pub fn indexed_substream(seed: u64, stream: Stream, index: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(stream as u64);
    rng
}
