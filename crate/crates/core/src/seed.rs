//! Per-job random streams derived from one master seed.
//!
//! A job seed is the first 8 bytes (little endian) of
//! `SHA-256(master_seed_le ‖ circuit_id ‖ 0x00 ‖ layers_le ‖ metric)`, so
//! streams do not depend on scheduling order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type JobRng = ChaCha8Rng;

pub fn job_seed(master_seed: u64, circuit_id: &str, layers: usize, metric: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(circuit_id.as_bytes());
    h.update([0u8]);
    h.update((layers as u64).to_le_bytes());
    h.update(metric.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn rng_from_seed(seed: u64) -> JobRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}
