//! Seed derivation.
//!
//! Every random stream in the crate is a function of a master seed and a
//! path of indices (cell, trial, user, ...), so work can be split across
//! threads without changing any drawn value.
use rand::rngs::SmallRng;
use rand::SeedableRng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One round of the SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a master seed together with a sequence of stream indices.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(master), |acc, &p| mix64(acc ^ mix64(p.wrapping_add(GOLDEN))))
}

/// Generator for an arbitrary derived stream.
pub fn rng_for(master: u64, path: &[u64]) -> SmallRng {
    SmallRng::seed_from_u64(derive(master, path))
}

/// Stream tags, so that e.g. user `i`'s noise never collides with row `i`
/// of the public design.
pub mod stream {
    pub const USER_NOISE: u64 = 1;
    pub const PRIVATE_DESIGN: u64 = 2;
    pub const PUBLIC_DESIGN: u64 = 3;
    pub const LABELS: u64 = 4;
    pub const MONTE_CARLO: u64 = 5;
}

/// Generator owned by private user `index` for its one release.
pub fn user_rng(master: u64, index: u64) -> SmallRng {
    rng_for(master, &[stream::USER_NOISE, index])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_depends_on_every_component() {
        let a = derive(7, &[1, 2, 3]);
        assert_ne!(a, derive(8, &[1, 2, 3]));
        assert_ne!(a, derive(7, &[1, 2, 4]));
        assert_ne!(a, derive(7, &[2, 1, 3]));
        assert_eq!(a, derive(7, &[1, 2, 3]));
    }
}
