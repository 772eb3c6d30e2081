//! Sub-seed derivation.
//!
//! Every random draw hangs off one master seed through a path of counters:
//! `derive_seed(master, &[stream, i, j, ...])`. Each step mixes the running
//! value with a SplitMix64 hash of the next counter, so any sub-stream can be
//! regenerated without replaying the others.

/// Per-patch measurement sampling: `[STREAM_SAMPLING, config, patch]`.
pub const STREAM_SAMPLING: u64 = 1;
/// Random Hamiltonian draws: `[STREAM_HAMILTONIAN, repeat]`.
pub const STREAM_HAMILTONIAN: u64 = 2;
/// Protocol seeds of sweep runs: `[STREAM_PROTOCOL, point, repeat]`.
pub const STREAM_PROTOCOL: u64 = 3;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c.wrapping_mul(GAMMA))))
}
