//! Deterministic child-seed derivation for replicated experiments.
//!
//! Replication `r` of a batch keyed by `master` gets
//! `child_seed(master, r)`: a splitmix64 finalizer applied to the pair.
//! The mixing is pure integer arithmetic, so the derived seeds are stable
//! across platforms and independent of execution order, which keeps
//! parallel Monte Carlo runs reproducible.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 output function.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `r` under `master`.
#[inline]
pub fn child_seed(master: u64, r: u64) -> u64 {
    splitmix64(master ^ splitmix64(r.wrapping_mul(GOLDEN_GAMMA)))
}

/// Secondary stream within one replication (path noise vs. measurement
/// noise vs. tie-breaking, ...).
#[inline]
pub fn stream_seed(child: u64, stream: u64) -> u64 {
    child_seed(child, stream.wrapping_add(0x51A5))
}
