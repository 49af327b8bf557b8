//! Deterministic sub-seed derivation.
//!
//! Every randomized operation in the toolkit takes a single master seed.
//! Independent random streams (per device, per feature, per repeat) are
//! derived by hashing a textual tag into the master seed, so adding a new
//! stream never perturbs existing ones.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Derive a sub-seed from `master` and a domain tag.
///
/// FNV-1a over the tag bytes, mixed with the master seed and finalized with
/// the splitmix64 avalanche so nearby tags yield unrelated seeds.
pub fn derive(master: u64, tag: &str) -> u64 {
    let mut h = FNV_OFFSET;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h ^ master)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
