//! Seedable 64-bit generator with fixed, documented stream semantics.
//!
//! xoshiro256++ seeded through splitmix64, hand-rolled so that emitted
//! instances and golden files can never drift with ecosystem versions.
//! Every consumer derives independent child streams with [`Rng::child_seed`];
//! the generator name recorded in run metadata is `"xoshiro256++"`.

/// splitmix64 step; also the seed expander for xoshiro.
#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xoshiro256++ by Blackman and Vigna.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
}

pub const GENERATOR_NAME: &str = "xoshiro256++";

impl Rng {
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { s }
    }

    /// Deterministic child stream: child k of seed s is seeded with
    /// splitmix64 applied k+1 times to s.
    pub fn child_seed(seed: u64, k: u64) -> u64 {
        let mut sm = seed;
        let mut out = 0;
        for _ in 0..=k {
            out = splitmix64(&mut sm);
        }
        out
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 significant bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in 0..bound via 128-bit multiply (bound > 0).
    #[inline]
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::seed_from_u64(42);
        let mut b = Rng::seed_from_u64(42);
        for _ in 0..64 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn unit_interval_range() {
        let mut rng = Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn below_stays_in_bounds_and_hits_all_residues() {
        let mut rng = Rng::seed_from_u64(11);
        let mut seen = [false; 5];
        for _ in 0..1_000 {
            seen[rng.below(5)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn stream_values_are_frozen() {
        // regression pins cross-checked against an independent
        // reimplementation of splitmix64 + xoshiro256++; emitted instances
        // and golden files depend on these exact streams
        let mut rng = Rng::seed_from_u64(42);
        assert_eq!(rng.next_u64(), 15021278609987233951);
        let mut rng = Rng::seed_from_u64(0);
        assert_eq!(rng.next_u64(), 5987356902031041503);
    }

    #[test]
    fn child_seeds_differ() {
        let a = Rng::child_seed(9, 0);
        let b = Rng::child_seed(9, 1);
        assert_ne!(a, b);
    }
}
