use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded generator used everywhere randomness is needed.
pub(crate) fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream seed from a parent seed and a label.
///
/// SplitMix64 finalizer over `seed ^ hash(label)`; used so that sub-tasks
/// (placement sampling, per-fold training, per-cell crafting) get stable
/// seeds regardless of execution order.
pub(crate) fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
