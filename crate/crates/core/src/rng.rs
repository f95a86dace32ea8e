//! Counter-based randomness keyed by (seed, word).
//!
//! Every node of the labelled tree owns a 64-bit key derived from its parent's
//! key and its symbol, so the label of a node never depends on the order in
//! which nodes are visited. The child uniforms of a node are hashes of
//! `(key, child symbol)`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key of the root node for a given seed.
#[inline]
pub fn root_key(seed: u64) -> u64 {
    mix64(seed ^ 0x5DEE_CE66_D1CE_4E5B)
}

/// Key of child `symbol` of the node with key `parent`.
#[inline]
pub fn child_key(parent: u64, symbol: u32) -> u64 {
    mix64(parent.wrapping_add(GOLDEN.wrapping_mul(symbol as u64 + 1)) ^ 0xA076_1D64_78BD_642F)
}

/// Uniform variate in [0, 1) attached to child `symbol` of node `parent`.
#[inline]
pub fn child_uniform(parent: u64, symbol: u32) -> f64 {
    let bits = mix64(parent ^ mix64(GOLDEN.wrapping_mul(symbol as u64 + 0x51)));
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Independent per-trial seed derived from a master seed.
#[inline]
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    mix64(mix64(master) ^ GOLDEN.wrapping_mul(trial.wrapping_add(1)))
}

/// Seed for a sub-stream of one trial (e.g. the i-th factor of a product).
#[inline]
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed ^ mix64(stream.wrapping_add(0x2545_F491_4F6C_DD1D)))
}
