#![allow(dead_code)]

use std::sync::Arc;

use oblivroute::generate::random_connected;
use oblivroute::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Twenty random connected graphs with n spread over [4, 64].
pub fn test_graphs() -> Vec<Arc<Graph>> {
    (0..20u64)
        .map(|i| {
            let n = 4 + (i as usize * 60) / 19;
            let extra = n / 2 + (i as usize % 3) * n / 4;
            Arc::new(random_connected(n, extra, 1000 + i).unwrap())
        })
        .collect()
}

/// Twenty random connected graphs with n <= 32.
pub fn small_graphs() -> Vec<Arc<Graph>> {
    (0..20u64)
        .map(|i| {
            let n = 4 + (i as usize * 28) / 19;
            Arc::new(random_connected(n, n / 2 + 1, 2000 + i).unwrap())
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random mean-zero demand.
pub fn random_demand(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = v.iter().sum::<f64>() / n as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    v
}

/// Weights spread over two orders of magnitude.
pub fn random_weights(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..m).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}
