//! Counter-based random streams.
//!
//! Every random quantity in the crate is a pure function of a 64-bit key and a
//! draw counter. Keys are derived by folding labels into a seed with the
//! SplitMix64 finalizer, so a site kernel, a replica's environment or a walk
//! step can be regenerated without replaying anything else.
//!
//! Derivation rules (stable across releases):
//!
//! * `hash_words(seed, [w0, w1, ..])`: `h = mix(seed ^ SEED_SALT)`, then for
//!   each word `h = mix(h ^ mix(w ^ WORD_SALT))`.
//! * site key of `x` under environment seed `s`: `hash_words(s, [SITE_TAG, x_1 as u64, .., x_d as u64])`.
//! * replica seed: `hash_words(master, [replica, role])` with the role codes
//!   of [`Role`].
//! * [`Stream`] from key `k`: SplitMix64 with initial state `k`, so draw `i`
//!   (1-based) is `mix(k + i * 0x9E3779B97F4A7C15)`.

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Distribution, Gamma, OpenClosed01, StandardNormal};
use rand_xoshiro::SplitMix64;

const SEED_SALT: u64 = 0x243F_6A88_85A3_08D3;
const WORD_SALT: u64 = 0x1319_8A2E_0370_7344;
pub(crate) const SITE_TAG: u64 = 0x5349_5445; // "SITE"

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into a seed.
pub fn hash_words<I: IntoIterator<Item = u64>>(seed: u64, words: I) -> u64 {
    let mut h = mix64(seed ^ SEED_SALT);
    for w in words {
        h = mix64(h ^ mix64(w ^ WORD_SALT));
    }
    h
}

/// What a derived replica seed is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Role {
    Environment = 1,
    Walk = 2,
    /// Independent oracle streams used by verification code.
    Oracle = 3,
    /// Fixture generation (random chains, random paths).
    Fixture = 4,
}

/// Seed for `(master, replica, role)`.
pub fn derive_seed(master: u64, replica: u64, role: Role) -> u64 {
    hash_words(master, [replica, role as u64])
}

/// A SplitMix64 stream keyed by a derived seed; sampling is delegated to
/// `rand` and `rand_distr`.
#[derive(Debug, Clone)]
pub struct Stream {
    inner: SplitMix64,
}

impl Stream {
    pub fn new(key: u64) -> Self {
        // SplitMix64 state is the little-endian seed
        Self {
            inner: SplitMix64::from_seed(key.to_le_bytes()),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        self.inner.random()
    }

    /// Uniform in `(0, 1]`.
    #[inline]
    pub fn next_f64_open0(&mut self) -> f64 {
        self.inner.sample(OpenClosed01)
    }

    pub fn next_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform integer in `0..n`, `n > 0`.
    pub fn next_below(&mut self, n: u64) -> u64 {
        self.inner.random_range(0..n)
    }

    /// Gamma(shape, 1), `shape > 0`.
    pub fn next_gamma(&mut self, shape: f64) -> f64 {
        Gamma::new(shape, 1.0)
            .expect("positive finite shape")
            .sample(&mut self.inner)
    }
}

/// Key of the per-site stream for lattice site `x` under environment seed `seed`.
pub fn site_key(seed: u64, x: &[i64]) -> u64 {
    hash_words(seed, std::iter::once(SITE_TAG).chain(x.iter().map(|&c| c as u64)))
}
