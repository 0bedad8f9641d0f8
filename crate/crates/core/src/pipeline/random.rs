use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Uniform draw in `[0, 1)` that depends only on `(seed, id, step)`.
///
/// The key is hashed into a ChaCha8 seed, so draws for different images or
/// steps are independent streams and need no shared state.
pub fn flip_draw(seed: u64, id: &str, step: usize) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((step as u64).to_le_bytes());
    h.update(id.as_bytes());
    let key: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(key).random::<f64>()
}

/// Bernoulli decision for a random step with the given probability.
pub fn flip_applies(seed: u64, id: &str, step: usize, probability: f64) -> bool {
    flip_draw(seed, id, step) < probability
}
