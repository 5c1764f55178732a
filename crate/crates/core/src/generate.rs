//! Random test graphs: connected graphs from a spanning tree plus extra edges,
//! random regular graphs, and cycles.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// How many full restarts the regular-graph sampler attempts.
const REGULAR_ATTEMPTS: usize = 1000;

/// A uniformly random recursive spanning tree on a shuffled vertex order, plus
/// `extra` distinct random non-edges (fewer if the graph becomes complete).
pub fn random_connected(n: usize, extra: usize, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = HashSet::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        let (a, b) = (order[i], order[j]);
        edges.insert((a.min(b), a.max(b)));
    }
    let target = (n * (n - 1) / 2).min(edges.len() + extra);
    while edges.len() < target {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort_unstable();
    Graph::new(n, edges)
}

/// A connected simple `d`-regular graph on `n` vertices, sampled by random
/// stub pairing that rejects loops and repeated edges as it goes and
/// restarts on a dead end.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if d == 0 || d >= n || !(n * d).is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "no simple {d}-regular graph on {n} vertices"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..REGULAR_ATTEMPTS {
        if let Some(edges) = try_pairing(n, d, &mut rng) {
            match Graph::new(n, edges) {
                Ok(g) => return Ok(g),
                Err(Error::Disconnected { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    Err(Error::InvalidParameter(format!(
        "failed to sample a connected {d}-regular graph on {n} vertices"
    )))
}

fn try_pairing(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Option<Vec<(usize, usize)>> {
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let mut edges = HashSet::with_capacity(n * d / 2);
    while !stubs.is_empty() {
        let a = stubs.swap_remove(rng.random_range(0..stubs.len()));
        let mut paired = false;
        for _ in 0..64 {
            let j = rng.random_range(0..stubs.len());
            let b = stubs[j];
            let key = (a.min(b), a.max(b));
            if a != b && !edges.contains(&key) {
                stubs.swap_remove(j);
                edges.insert(key);
                paired = true;
                break;
            }
        }
        if !paired {
            return None;
        }
    }
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort_unstable();
    Some(edges)
}

/// A uniformly random point of the probability simplex on `m` coordinates.
pub fn random_simplex(m: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..m).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total).collect()
}

pub fn cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("a cycle needs n >= 3, got {n}")));
    }
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn connected_graph_sizes() {
        let g = random_connected(20, 15, 1).unwrap();
        assert_eq!(g.n(), 20);
        assert_eq!(g.m(), 19 + 15);
        let complete = random_connected(5, 100, 2).unwrap();
        assert_eq!(complete.m(), 10);
        assert_eq!(random_connected(20, 15, 1).unwrap(), g);
    }

    #[test]
    fn regular_graphs_are_regular() {
        let g = random_regular(128, 4, 9).unwrap();
        assert_eq!(g.m(), 256);
        assert!((0..g.n()).all(|v| g.degree(v) == 4));
        assert!(random_regular(7, 3, 0).is_err());
        assert!(random_regular(4, 4, 0).is_err());
    }

    #[test]
    fn simplex_points_sum_to_one() {
        let p = random_simplex(50, 4);
        assert!(p.iter().all(|&v| v >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cycles() {
        let g = cycle(8).unwrap();
        assert_eq!(g.m(), 8);
        assert!((0..8).all(|v| g.degree(v) == 2));
        assert!(cycle(2).is_err());
    }
}
