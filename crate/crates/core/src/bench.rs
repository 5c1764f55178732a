//! Timing a size ladder of builds and fitting power laws to the results.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::mwu::{compute_routing, MwuConfig};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BenchRow {
    pub name: String,
    pub n: usize,
    pub m: usize,
    /// Components of the returned scheme.
    pub t: usize,
    pub restarts: usize,
    /// Iterations executed, including those of discarded attempts.
    pub iterations: usize,
    pub alpha_used: f64,
    pub wall_secs: f64,
    pub per_iter_secs: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BenchFit {
    pub t_exponent: f64,
    pub per_iter_exponent: f64,
    pub total_exponent: f64,
}

pub fn bench_graph(name: &str, graph: Arc<Graph>, cfg: &MwuConfig) -> Result<BenchRow> {
    let (n, m) = (graph.n(), graph.m());
    let start = Instant::now();
    let scheme = compute_routing(graph, cfg)?;
    let wall_secs = start.elapsed().as_secs_f64();
    let iterations = scheme.len() + scheme.restart_log.iter().map(|r| r.t).sum::<usize>();
    log::info!("{name}: m {m}, T {}, {wall_secs:.3}s", scheme.len());
    Ok(BenchRow {
        name: name.to_string(),
        n,
        m,
        t: scheme.len(),
        restarts: scheme.restarts,
        iterations,
        alpha_used: scheme.alpha_used,
        wall_secs,
        per_iter_secs: wall_secs / iterations as f64,
    })
}

/// Benchmarks each graph in order of increasing `m`.
pub fn run_ladder(graphs: Vec<(String, Arc<Graph>)>, cfg: &MwuConfig) -> Result<Vec<BenchRow>> {
    let mut graphs = graphs;
    graphs.sort_by_key(|(name, g)| (g.m(), name.clone()));
    graphs
        .into_iter()
        .map(|(name, g)| bench_graph(&name, g, cfg))
        .collect()
}

/// Loads every `*.el` file in `dir`, skipping unreadable ones with a warning.
pub fn load_ladder(dir: &Path) -> Result<Vec<(String, Arc<Graph>)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "el"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        match Graph::load_edge_list(&path) {
            Ok(g) => {
                let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                out.push((name, Arc::new(g)));
            }
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    if out.is_empty() {
        log::warn!("no graphs found in {}", dir.display());
    }
    Ok(out)
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// distinct `x` values or any nonpositive entry.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

pub fn fit(rows: &[BenchRow]) -> Option<BenchFit> {
    let ms: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
    let col = |f: fn(&BenchRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    Some(BenchFit {
        t_exponent: fit_exponent(&ms, &col(|r| r.t as f64))?,
        per_iter_exponent: fit_exponent(&ms, &col(|r| r.per_iter_secs))?,
        total_exponent: fit_exponent(&ms, &col(|r| r.wall_secs))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_of_a_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        assert!((fit_exponent(&xs, &ys).unwrap() - 1.5).abs() < 1e-12);
        assert!(fit_exponent(&[2.0], &[1.0]).is_none());
        assert!(fit_exponent(&[2.0, 2.0], &[1.0, 3.0]).is_none());
        assert!(fit_exponent(&[1.0, 2.0], &[0.0, 3.0]).is_none());
    }

    #[test]
    fn empty_dir_gives_empty_ladder() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_ladder(dir.path()).unwrap().is_empty());
        std::fs::write(dir.path().join("bad.el"), "0 0\n").unwrap();
        std::fs::write(dir.path().join("ok.el"), "0 1\n").unwrap();
        let ladder = load_ladder(dir.path()).unwrap();
        assert_eq!(ladder.len(), 1);
        assert_eq!(ladder[0].0, "ok");
    }
}
