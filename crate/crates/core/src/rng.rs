//! Seeded random streams.
//!
//! Every random draw in the crate comes from a ChaCha20 generator keyed by the
//! user seed. Independent consumers get independent *streams* of the same key:
//! the 64-bit stream id is `(purpose << 48) | index`, where `purpose` names the
//! consumer kind and `index` the edge, agent or sample batch it belongs to.
//! ChaCha20 output is specified bit-for-bit, so a given `(seed, purpose, index)`
//! yields the same numbers on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// What a random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Purpose {
    /// Payoff entries of one edge (index = edge position).
    GameEdge = 1,
    /// Delay draws of one agent (index = player).
    Delay = 2,
    /// Pure-profile samples for the Monte-Carlo zero-sum check.
    ZeroSumCheck = 3,
    /// Random profiles and other test fixtures.
    Fixture = 4,
}

const INDEX_BITS: u32 = 48;

/// Returns the generator for `(seed, purpose, index)`.
pub fn substream(seed: u64, purpose: Purpose, index: u64) -> ChaCha20Rng {
    assert!(index < (1 << INDEX_BITS), "stream index {index} too large");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << INDEX_BITS) | index);
    rng
}
