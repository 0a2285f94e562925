//! Keyed deterministic random streams.
//!
//! Every stream is a ChaCha20 generator whose 256-bit key is the
//! little-endian concatenation of `(seed, a, b, domain)`, so a stream is a
//! pure function of its key and independent of evaluation order. Uniforms
//! use the top 53 bits of a `u64` draw; normals use the cosine branch of
//! Box-Muller on two such uniforms.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Stream domains. Distinct domains never share keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Synthesis = 1,
    KMeans = 2,
    DepthNoise = 3,
    Fixture = 4,
    Replicate = 5,
    TestSet = 6,
}

#[derive(Debug, Clone)]
pub struct KeyedRng {
    inner: ChaCha20Rng,
}

impl KeyedRng {
    pub fn new(domain: Domain, seed: u64, a: u64, b: u64) -> Self {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&a.to_le_bytes());
        key[16..24].copy_from_slice(&b.to_le_bytes());
        key[24..32].copy_from_slice(&(domain as u64).to_le_bytes());
        KeyedRng {
            inner: ChaCha20Rng::from_seed(key),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        // floor(u * n) with a 53-bit uniform; bias is below 2^-53 * n.
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }
}

/// Derives a child seed, e.g. a per-replicate seed from the global one.
pub fn derive_seed(domain: Domain, seed: u64, index: u64) -> u64 {
    KeyedRng::new(domain, seed, index, 0).next_u64()
}
