//! Deterministic sub-seed derivation (splitmix64 finalizer).
//!
//! Every randomized stage of a run draws from its own ChaCha stream seeded by
//! `sub_seed(base, TAG, index)`, so stages stay decoupled: inserting an extra
//! draw in one stage cannot shift any other stage's stream.

pub(crate) const TAG_DOWNSAMPLE: u64 = 1;
pub(crate) const TAG_SEARCH: u64 = 2;
pub(crate) const TAG_FOREST: u64 = 3;
pub(crate) const TAG_CANDIDATE: u64 = 4;
pub(crate) const TAG_DETECT: u64 = 5;

pub(crate) fn sub_seed(base: u64, tag: u64, index: u64) -> u64 {
    let mut z = base ^ tag.rotate_left(32) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
