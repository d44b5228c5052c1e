//! Splittable, scheduling-independent RNG streams.
//!
//! Monte Carlo trials must be reproducible bit-for-bit no matter how many
//! workers run them, so no RNG state is ever shared: every (master seed,
//! trial, layer) tuple is hashed down to an independent ChaCha12 stream with
//! a SplitMix64-style key derivation. The mixer is not cryptographic; it only
//! needs to decorrelate nearby counter values, which SplitMix64's finalizer
//! was designed for.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::geometry::LayerKind;

/// SplitMix64 finalizer: a bijective avalanche mix on u64.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream tag for a layer, keeping the two layers' draws independent.
pub fn stream_tag(kind: LayerKind) -> u64 {
    match kind {
        LayerKind::Satellite => 0x5341_5445_4c4c_4954,  // "SATELLIT"
        LayerKind::Terrestrial => 0x5445_5252_4553_5452, // "TERRESTR"
    }
}

/// Collapse (master seed, path words) into a single well-mixed u64,
/// absorbing each word through the SplitMix64 finalizer.
pub fn mix_seed(master_seed: u64, path: &[u64]) -> u64 {
    let mut state = master_seed;
    let mut out = splitmix64(&mut state);
    for &word in path {
        state ^= word;
        out = splitmix64(&mut state);
    }
    out
}

/// Derive an independent ChaCha12 stream for the given key path.
///
/// The 256-bit ChaCha key is four successive SplitMix64 outputs seeded from
/// the mixed path, so distinct paths get (overwhelmingly) distinct keys and
/// nearby paths get unrelated streams.
pub fn derive_stream(master_seed: u64, path: &[u64]) -> ChaCha12Rng {
    let mut state = mix_seed(master_seed, path);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}
