//! Named random streams derived from a master seed.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

/// Derive an independent stream from `(master, component, index)`.
///
/// The derivation hashes all three, so streams are stable across platforms
/// and unrelated to each other.
pub fn stream(master: u64, component: &str, index: u64) -> Rng {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((component.len() as u64).to_le_bytes());
    hasher.update(component.as_bytes());
    hasher.update(index.to_le_bytes());
    let seed: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(seed)
}

/// Sample an index from a probability vector. Mass that falls past the end
/// (rounding) goes to the last positive entry.
pub fn categorical(probs: &[f64], rng: &mut impl rand::RngCore) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Number of trials until the first success of a `Bernoulli(1 - gamma)`,
/// starting at 1. Mean is `1 / (1 - gamma)`.
pub fn geometric_stop(gamma: f64, rng: &mut impl rand::RngCore) -> usize {
    let mut k = 1;
    while rng.gen::<f64>() < gamma {
        k += 1;
    }
    k
}
