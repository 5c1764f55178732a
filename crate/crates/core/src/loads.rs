//! Per-edge load and stretch of an electrical routing, exactly (dense oracle)
//! and via the Cauchy sketch, plus the impedance-matrix diagnostics.
//!
//! With transfer impedances `Z(e, f) = b_e L^+ b_f^T`:
//!
//! * `load_w(e) = w_e * sum_f |Z(e, f)|`
//! * `stretch_w(e) = sum_f w_f |Z(e, f)|`
//! * `Pi = W^{1/2} B L^+ B^T W^{1/2}`, so `Pi(e, f) = sqrt(w_e w_f) Z(e, f)`.

use std::borrow::Cow;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::graph::Graph;
use crate::lapsolve::{
    pseudoinverse_dense_capped, Block, EdgeWeights, LaplacianSolver, SolverConfig,
    DEFAULT_ORACLE_CAP,
};
use crate::sketch::{median_abs_into, SketchOperator};

/// Weights below this fraction of the maximum are clamped up.
pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadKind {
    Load,
    Stretch,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Exactness {
    Exact,
    Sketched { eps: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    pub values: Vec<f64>,
    pub kind: LoadKind,
    pub exactness: Exactness,
}

impl LoadVector {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `sum_e p_e * values_e`.
    pub fn weighted_sum(&self, p: &[f64]) -> f64 {
        self.values.iter().zip(p).map(|(v, pe)| v * pe).sum()
    }
}

pub(crate) fn sanitize_weights(w: &EdgeWeights) -> Cow<'_, EdgeWeights> {
    let floor = WEIGHT_FLOOR * w.max();
    if w.values().iter().all(|&x| x >= floor) {
        return Cow::Borrowed(w);
    }
    let clamped = w.values().iter().filter(|&&x| x < floor).count();
    log::warn!("clamping {clamped} edge weights below {floor:e} up to the floor");
    let values = w.values().iter().map(|&x| x.max(floor)).collect();
    Cow::Owned(EdgeWeights::new(values).expect("clamped weights are positive"))
}

/// Dense `L^+` for one weighted graph, reused for every pairwise quantity.
pub struct ImpedanceOracle<'g> {
    graph: &'g Graph,
    weights: EdgeWeights,
    pinv: DMatrix<f64>,
}

impl<'g> ImpedanceOracle<'g> {
    pub fn new(g: &'g Graph, w: &EdgeWeights) -> Result<Self> {
        Self::with_cap(g, w, DEFAULT_ORACLE_CAP)
    }

    pub fn with_cap(g: &'g Graph, w: &EdgeWeights, cap: usize) -> Result<Self> {
        check_len(g.m(), w.len())?;
        let weights = sanitize_weights(w).into_owned();
        let pinv = pseudoinverse_dense_capped(g, &weights, cap)?;
        Ok(ImpedanceOracle {
            graph: g,
            weights,
            pinv,
        })
    }

    pub fn pseudoinverse(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn weights(&self) -> &EdgeWeights {
        &self.weights
    }

    /// Row `e` of `B L^+ B^T`: `Z(e, f)` for every `f`.
    pub fn transfer_row(&self, e: usize) -> Vec<f64> {
        let (u, v) = self.graph.edge(e);
        let pu = self.pinv.column(u);
        let pv = self.pinv.column(v);
        self.graph
            .edges()
            .iter()
            .map(|&(a, b)| (pv[b] - pu[b]) - (pv[a] - pu[a]))
            .collect()
    }

    pub fn transfer(&self, e: usize, f: usize) -> f64 {
        let (u, v) = self.graph.edge(e);
        let (a, b) = self.graph.edge(f);
        let p = &self.pinv;
        p[(v, b)] - p[(v, a)] - p[(u, b)] + p[(u, a)]
    }

    fn map_rows<T: Send>(&self, f: impl Fn(usize, &[f64]) -> T + Sync) -> Vec<T> {
        (0..self.graph.m())
            .into_par_iter()
            .map(|e| f(e, &self.transfer_row(e)))
            .collect()
    }

    pub fn load(&self) -> LoadVector {
        let w = self.weights.values();
        let values = self.map_rows(|e, row| w[e] * row.iter().map(|z| z.abs()).sum::<f64>());
        LoadVector {
            values,
            kind: LoadKind::Load,
            exactness: Exactness::Exact,
        }
    }

    pub fn stretch(&self) -> LoadVector {
        let w = self.weights.values();
        let values = self.map_rows(|_, row| row.iter().zip(w).map(|(z, wf)| wf * z.abs()).sum());
        LoadVector {
            values,
            kind: LoadKind::Stretch,
            exactness: Exactness::Exact,
        }
    }

    pub fn evaluate(&self, kind: LoadKind) -> LoadVector {
        match kind {
            LoadKind::Load => self.load(),
            LoadKind::Stretch => self.stretch(),
        }
    }

    /// `sum_f w_e w_f Z(e, f)^2`, which equals `Pi^2(e, e)`.
    pub fn pi_square_diagonal(&self) -> Vec<f64> {
        let w = self.weights.values();
        self.map_rows(|e, row| {
            row.iter()
                .zip(w)
                .map(|(z, wf)| w[e] * wf * z * z)
                .sum()
        })
    }

    /// `sum_{e,f} |Z(e, f)|`.
    pub fn total_abs_transfer(&self) -> f64 {
        self.map_rows(|_, row| row.iter().map(|z| z.abs()).sum::<f64>())
            .into_iter()
            .sum()
    }

    /// `sum_{e,f} l_e l_f sqrt(w_e w_f) |Z(e, f)| / ||l||^2`, the smallest
    /// localization constant consistent with the vector `l`.
    pub fn localization_ratio(&self, ell: &[f64]) -> Result<f64> {
        check_len(self.graph.m(), ell.len())?;
        let w = self.weights.values();
        let norm2: f64 = ell.iter().map(|l| l * l).sum();
        if norm2 == 0.0 {
            return Ok(0.0);
        }
        let total: f64 = self
            .map_rows(|e, row| {
                let scale = ell[e] * w[e].sqrt();
                row.iter()
                    .zip(ell)
                    .zip(w)
                    .map(|((z, lf), wf)| scale * lf * wf.sqrt() * z.abs())
                    .sum::<f64>()
            })
            .into_iter()
            .sum();
        Ok(total / norm2)
    }

    pub fn pi_matrix(&self) -> Result<PiMatrix> {
        let m = self.graph.m();
        let cap = DEFAULT_ORACLE_CAP.max(self.graph.n());
        if m > cap {
            return Err(Error::CapExceeded { size: m, cap });
        }
        let sw: Vec<f64> = self.weights.values().iter().map(|w| w.sqrt()).collect();
        let rows = self.map_rows(|e, row| row.iter().zip(&sw).map(|(z, s)| sw[e] * s * z).collect::<Vec<_>>());
        Ok(PiMatrix {
            values: DMatrix::from_fn(m, m, |e, f| rows[e][f]),
        })
    }
}

/// The weighted impedance matrix `W^{1/2} B L^+ B^T W^{1/2}`.
#[derive(Debug, Clone)]
pub struct PiMatrix {
    pub values: DMatrix<f64>,
}

impl PiMatrix {
    /// `max |Pi^2 - Pi|`.
    pub fn idempotence_error(&self) -> f64 {
        let sq = &self.values * &self.values;
        (sq - &self.values).abs().max()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.values.diagonal().iter().copied().collect()
    }

    pub fn symmetry_error(&self) -> f64 {
        (&self.values - self.values.transpose()).abs().max()
    }
}

pub fn exact_load(g: &Graph, w: &EdgeWeights) -> Result<LoadVector> {
    Ok(ImpedanceOracle::new(g, w)?.load())
}

pub fn exact_stretch(g: &Graph, w: &EdgeWeights) -> Result<LoadVector> {
    Ok(ImpedanceOracle::new(g, w)?.stretch())
}

pub fn pi_matrix(g: &Graph, w: &EdgeWeights) -> Result<PiMatrix> {
    ImpedanceOracle::new(g, w)?.pi_matrix()
}

/// Sketched loads: solves `L U = B^T C^T` column by column and recovers
/// `load(e) ~ w_e * median |U^T b_e|`.
pub fn approx_load(
    g: &Graph,
    w: &EdgeWeights,
    eps: f64,
    sk: &SketchOperator,
    cfg: &SolverConfig,
) -> Result<LoadVector> {
    sketched(g, w, eps, sk, cfg, LoadKind::Load)
}

/// Sketched stretch: sketches `W B L^+ b_e` by solving against `B^T W C^T`.
pub fn approx_stretch(
    g: &Graph,
    w: &EdgeWeights,
    eps: f64,
    sk: &SketchOperator,
    cfg: &SolverConfig,
) -> Result<LoadVector> {
    sketched(g, w, eps, sk, cfg, LoadKind::Stretch)
}

pub fn approx(
    g: &Graph,
    w: &EdgeWeights,
    eps: f64,
    sk: &SketchOperator,
    cfg: &SolverConfig,
    kind: LoadKind,
) -> Result<LoadVector> {
    sketched(g, w, eps, sk, cfg, kind)
}

fn sketched(
    g: &Graph,
    w: &EdgeWeights,
    eps: f64,
    sk: &SketchOperator,
    cfg: &SolverConfig,
    kind: LoadKind,
) -> Result<LoadVector> {
    check_len(g.m(), w.len())?;
    check_len(g.m(), sk.m())?;
    let w = sanitize_weights(w);
    let wv = w.values();
    let ell = sk.ell();

    // rows of B^T C^T (or B^T W C^T): vertex u sums the sketch columns of its edges
    let mut rhs = Block::zeros(g.n(), ell);
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let scale = match kind {
            LoadKind::Load => 1.0,
            LoadKind::Stretch => wv[e],
        };
        let col = sk.column(e);
        for (x, c) in rhs.row_mut(v).iter_mut().zip(col) {
            *x += scale * c;
        }
        for (x, c) in rhs.row_mut(u).iter_mut().zip(col) {
            *x -= scale * c;
        }
    }

    let solver = LaplacianSolver::new(g, &w, cfg)?;
    let solved = solver.solve_batch(&rhs)?;
    log::debug!(
        "sketched {kind:?}: {ell} solves, {} iterations, residual {:e}",
        solved.iterations,
        solved.residual
    );
    let potentials = solved.x;

    let values = g
        .edges()
        .par_iter()
        .enumerate()
        .map_init(Vec::new, |scratch, (e, &(u, v))| {
            let diff = potentials.row(v).iter().zip(potentials.row(u)).map(|(a, b)| a - b);
            let norm = median_abs_into(diff, scratch);
            match kind {
                LoadKind::Load => wv[e] * norm,
                LoadKind::Stretch => norm,
            }
        })
        .collect();
    Ok(LoadVector {
        values,
        kind,
        exactness: Exactness::Sketched { eps },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::sketch_matrix;

    fn k2() -> Graph {
        Graph::parse_edge_list("0 1").unwrap()
    }

    fn triangle() -> Graph {
        Graph::parse_edge_list("0 1\n1 2\n0 2").unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-6 * b.abs().max(1.0)
    }

    #[test]
    fn exact_values_on_small_graphs() {
        let w1 = EdgeWeights::uniform(1, 1.0).unwrap();
        assert!(close(exact_load(&k2(), &w1).unwrap().values[0], 1.0));
        assert!(close(exact_stretch(&k2(), &w1).unwrap().values[0], 1.0));

        let g = triangle();
        let w = EdgeWeights::uniform(3, 1.0).unwrap();
        let load = exact_load(&g, &w).unwrap();
        let stretch = exact_stretch(&g, &w).unwrap();
        for e in 0..3 {
            assert!(close(load.values[e], 4.0 / 3.0));
            assert!(close(stretch.values[e], 4.0 / 3.0));
        }
        assert!(load.max() <= (6.0f64).sqrt());
        assert_eq!(load.exactness, Exactness::Exact);
    }

    #[test]
    fn transfer_entries_on_triangle() {
        let g = triangle();
        let oracle = ImpedanceOracle::new(&g, &EdgeWeights::uniform(3, 1.0).unwrap()).unwrap();
        let row = oracle.transfer_row(0);
        assert!(close(row[0], 2.0 / 3.0));
        for f in 0..3 {
            assert!(close(row[f], oracle.transfer(0, f)));
        }
        assert!(close(row[1].abs(), 1.0 / 3.0) && close(row[2].abs(), 1.0 / 3.0));
    }

    #[test]
    fn pi_matrix_small_cases() {
        let pi = pi_matrix(&k2(), &EdgeWeights::uniform(1, 1.0).unwrap()).unwrap();
        assert_eq!(pi.values.shape(), (1, 1));
        assert!(close(pi.values[(0, 0)], 1.0));
        let pi = pi_matrix(&triangle(), &EdgeWeights::uniform(3, 1.0).unwrap()).unwrap();
        for d in pi.diagonal() {
            assert!(close(d, 2.0 / 3.0));
        }
        assert!(pi.idempotence_error() < 1e-12);
    }

    #[test]
    fn uniform_weights_make_load_equal_stretch() {
        let g = Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]).unwrap();
        let w = EdgeWeights::uniform(6, 2.5).unwrap();
        let oracle = ImpedanceOracle::new(&g, &w).unwrap();
        for (a, b) in oracle.load().values.iter().zip(oracle.stretch().values) {
            assert!(close(*a, b));
        }
    }

    #[test]
    fn sketched_loads_bracket_the_truth() {
        let g = triangle();
        let w = EdgeWeights::uniform(3, 1.0).unwrap();
        let sk = sketch_matrix(3, 1e-3, 0.5, 11).unwrap();
        for cfg in [SolverConfig::exact(), SolverConfig::default()] {
            let apx = approx_load(&g, &w, 0.5, &sk, &cfg).unwrap();
            assert!(apx.values.iter().all(|v| (2.0 / 3.0..=2.0).contains(v)), "{:?}", apx.values);
            let st = approx_stretch(&g, &w, 0.5, &sk, &cfg).unwrap();
            assert!(st.values.iter().all(|v| (2.0 / 3.0..=2.0).contains(v)));
        }
        let sk1 = sketch_matrix(1, 1e-3, 0.5, 3).unwrap();
        let w1 = EdgeWeights::uniform(1, 1.0).unwrap();
        let apx = approx_load(&k2(), &w1, 0.5, &sk1, &SolverConfig::exact()).unwrap();
        assert!((0.5..=1.5).contains(&apx.values[0]));
        let st = approx_stretch(&k2(), &w1, 0.5, &sk1, &SolverConfig::exact()).unwrap();
        assert!((0.5..=1.5).contains(&st.values[0]));
    }

    #[test]
    fn sketch_dimension_must_match() {
        let sk = sketch_matrix(5, 1e-3, 0.5, 0).unwrap();
        let w = EdgeWeights::uniform(3, 1.0).unwrap();
        assert!(matches!(
            approx_load(&triangle(), &w, 0.5, &sk, &SolverConfig::exact()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tiny_weights_are_clamped() {
        let w = EdgeWeights::new(vec![1.0, 1e-20, 1.0]).unwrap();
        let clamped = sanitize_weights(&w);
        assert_eq!(clamped.values()[1], WEIGHT_FLOOR);
        let normal = EdgeWeights::uniform(3, 1.0).unwrap();
        assert!(matches!(sanitize_weights(&normal), Cow::Borrowed(_)));
    }

    #[test]
    fn localization_ratio_with_inverse_sqrt_weights_is_total_transfer() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        let w = EdgeWeights::new(vec![1.0, 2.0, 0.5, 3.0, 1.5]).unwrap();
        let oracle = ImpedanceOracle::new(&g, &w).unwrap();
        let ell: Vec<f64> = w.values().iter().map(|x| 1.0 / x.sqrt()).collect();
        let inv_sum: f64 = w.values().iter().map(|x| 1.0 / x).sum();
        let ratio = oracle.localization_ratio(&ell).unwrap();
        assert!(close(ratio * inv_sum, oracle.total_abs_transfer()));
    }
}
