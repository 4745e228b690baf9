//! Seeded random streams and Dirichlet sampling.
//!
//! Every random draw in the crate comes from a [`stream`]: a ChaCha8
//! generator whose 32-byte key is the little-endian concatenation of
//! `seed`, the FNV-1a hash of a purpose tag, the stream index, and eight
//! zero bytes. Distinct `(seed, tag, index)` triples give independent
//! streams, and results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};

pub type StreamRng = ChaCha8Rng;

fn fnv1a(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn stream(seed: u64, tag: &str, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&fnv1a(tag).to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Symmetric Dirichlet(`alpha`) draw of length `k`, as normalized Gamma(`alpha`, 1) draws.
/// A one-state distribution consumes no randomness.
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, alpha: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    let gamma = Gamma::new(alpha, 1.0).expect("positive Dirichlet parameter");
    loop {
        let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            return draws.into_iter().map(|x| x / total).collect();
        }
    }
}

/// Flat Dirichlet (all parameters one) via exponential draws.
pub fn flat_dirichlet<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    loop {
        let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect::<Vec<f64>>();
        let total: f64 = draws.iter().sum();
        if total > 0.0 {
            return draws.into_iter().map(|x| x / total).collect();
        }
    }
}
