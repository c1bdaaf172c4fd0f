//! Deterministic random streams.
//!
//! Every random draw in the crate comes from ChaCha8. A stream is identified
//! by `(master_seed, lane, replica)`: the lane (which part of the model draws
//! from it) selects the key and the replica index selects the ChaCha stream
//! number, so results do not depend on how replicas are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Which part of a simulation a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Lane {
    InitialState = 1,
    Tube = 2,
    TubeTransverse = 3,
    Jumps = 4,
    Direction = 5,
    Auxiliary = 6,
}

/// SplitMix64 finaliser, used to spread `(seed, lane)` into a 64-bit key.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream(master_seed: u64, lane: Lane, replica: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(master_seed ^ mix(lane as u64)));
    rng.set_stream(replica);
    rng
}
