//! Derivation of per-component seeds from one root seed.
//!
//! `derive_seed(root, tag, index)` hashes the tag with FNV-1a, folds in the
//! root and index, and finishes with the SplitMix64 mixer. Tags used in the
//! crate: `"synth"` (site index), `"forest"` (output step), `"cnn"`
//! (component index), `"cell"` (sweep cell index).

pub fn derive_seed(root: u64, tag: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(splitmix64(root ^ h).wrapping_add(index))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
