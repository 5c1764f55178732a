//! Evaluating and querying a routing scheme: demand routing, exact worst-case
//! evaluation, and the per-target representation table.

mod format;

use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

pub use format::{file_checksum, load_scheme, load_table, save_scheme, save_table, SCHEME_HEADER, TABLE_HEADER};

use crate::error::{check_len, Error, Result};
use crate::graph::{Demand, Flow, Graph};
use crate::lapsolve::{Block, LaplacianSolver, SolverConfig, DEFAULT_ORACLE_CAP};
use crate::loads::{sanitize_weights, Exactness, ImpedanceOracle, LoadKind, LoadVector};
use crate::mwu::{NormMode, RoutingScheme};

/// One prepared Laplacian solver per scheme component.
pub struct Router<'s> {
    scheme: &'s RoutingScheme,
    solvers: Vec<LaplacianSolver>,
}

impl<'s> Router<'s> {
    pub fn new(scheme: &'s RoutingScheme, cfg: &SolverConfig) -> Result<Self> {
        let g = scheme.graph.as_ref();
        let solvers = scheme
            .components
            .par_iter()
            .map(|c| LaplacianSolver::new(g, &c.weights, cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(Router { scheme, solvers })
    }

    /// `f = sum_i lambda_i W_i B L_i^+ chi`.
    pub fn route(&self, chi: &Demand) -> Result<Flow> {
        let g = self.scheme.graph.as_ref();
        check_len(g.n(), chi.len())?;
        let rhs = Block::from_columns(g.n(), &[chi.to_vec()])?;
        let flows = self.route_block(&rhs)?;
        Ok(Flow(flows.column(0)))
    }

    /// Routes every column of an `n x k` demand block, returning an `m x k` block.
    pub fn route_block(&self, demands: &Block) -> Result<Block> {
        let g = self.scheme.graph.as_ref();
        check_len(g.n(), demands.rows())?;
        let k = demands.cols();
        let parts = self
            .solvers
            .par_iter()
            .zip(&self.scheme.components)
            .map(|(solver, c)| {
                let x = solver.solve_batch(demands)?.x;
                let mut f = Block::zeros(g.m(), k);
                for (e, &(u, v)) in g.edges().iter().enumerate() {
                    let scale = c.lambda * c.weights.values()[e];
                    for ((out, xv), xu) in f.row_mut(e).iter_mut().zip(x.row(v)).zip(x.row(u)) {
                        *out = scale * (xv - xu);
                    }
                }
                Ok(f)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut total = Block::zeros(g.m(), k);
        for part in parts {
            for e in 0..g.m() {
                for (t, p) in total.row_mut(e).iter_mut().zip(part.row(e)) {
                    *t += p;
                }
            }
        }
        Ok(total)
    }
}

pub fn route_demand(scheme: &RoutingScheme, chi: &Demand, cfg: &SolverConfig) -> Result<Flow> {
    Router::new(scheme, cfg)?.route(chi)
}

/// Dense `Q = sum_i lambda_i W_i B L_i^+ B^T`, so that column `f` is the
/// scheme's flow for the unit demand across edge `f`.
pub fn transfer_matrix(scheme: &RoutingScheme, cap: usize) -> Result<DMatrix<f64>> {
    let g = scheme.graph.as_ref();
    let m = g.m();
    let q = scheme
        .components
        .par_iter()
        .try_fold(
            || vec![0.0; m * m],
            |mut q, c| -> Result<Vec<f64>> {
                let oracle = ImpedanceOracle::with_cap(g, &c.weights, cap)?;
                let w = sanitize_weights(&c.weights);
                for e in 0..m {
                    let scale = c.lambda * w.values()[e];
                    for (out, z) in q[e * m..(e + 1) * m].iter_mut().zip(oracle.transfer_row(e)) {
                        *out += scale * z;
                    }
                }
                Ok(q)
            },
        )
        .try_reduce(
            || vec![0.0; m * m],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    Ok(DMatrix::from_row_slice(m, m, &q))
}

/// Worst-case per-edge load (row sums of `|Q|`) or stretch (column sums).
pub fn evaluate_exact(scheme: &RoutingScheme, kind: LoadKind) -> Result<LoadVector> {
    evaluate_exact_capped(scheme, kind, DEFAULT_ORACLE_CAP)
}

pub fn evaluate_exact_capped(scheme: &RoutingScheme, kind: LoadKind, cap: usize) -> Result<LoadVector> {
    let q = transfer_matrix(scheme, cap)?.abs();
    let values = match kind {
        LoadKind::Load => q.row_iter().map(|r| r.sum()).collect(),
        LoadKind::Stretch => q.column_iter().map(|c| c.sum()).collect(),
    };
    Ok(LoadVector {
        values,
        kind,
        exactness: Exactness::Exact,
    })
}

/// Maximum load (`linf`) or maximum stretch (`l1`) of the scheme.
pub fn competitive_ratio(scheme: &RoutingScheme) -> Result<f64> {
    competitive_ratio_capped(scheme, DEFAULT_ORACLE_CAP)
}

pub fn competitive_ratio_capped(scheme: &RoutingScheme, cap: usize) -> Result<f64> {
    let kind = match scheme.norm_mode {
        NormMode::Linf => LoadKind::Load,
        NormMode::L1 => LoadKind::Stretch,
    };
    Ok(evaluate_exact_capped(scheme, kind, cap)?.max())
}

/// Demand pairs `(s, t, d)`: `d` units shipped from `s` to `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemandPairList {
    pub entries: Vec<(usize, usize, f64)>,
}

impl DemandPairList {
    pub fn new(n: usize, entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for (i, &(s, t, d)) in entries.iter().enumerate() {
            if s >= n || t >= n {
                return Err(Error::InvalidDemand(format!(
                    "pair {i} ({s}, {t}) references a vertex outside 0..{n}"
                )));
            }
            if s == t {
                return Err(Error::InvalidDemand(format!("pair {i} has s = t = {s}")));
            }
            if !d.is_finite() {
                return Err(Error::InvalidDemand(format!("pair {i} has non-finite demand")));
            }
        }
        Ok(DemandPairList { entries })
    }

    /// Parses lines `s t d`; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let mut entries = Vec::new();
        for (index, line) in text.lines().enumerate() {
            let line_no = index + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            let bad = |message: String| Error::Parse { line: line_no, message };
            if tokens.len() != 3 {
                return Err(bad(format!("expected `s t d`, got {trimmed:?}")));
            }
            let s = tokens[0].parse::<usize>().map_err(|_| bad(format!("invalid vertex {:?}", tokens[0])))?;
            let t = tokens[1].parse::<usize>().map_err(|_| bad(format!("invalid vertex {:?}", tokens[1])))?;
            let d = tokens[2].parse::<f64>().map_err(|_| bad(format!("invalid demand {:?}", tokens[2])))?;
            if s >= n || t >= n {
                return Err(bad(format!("vertex out of range 0..{n}")));
            }
            if s == t {
                return Err(bad(format!("pair has s = t = {s}")));
            }
            if !d.is_finite() {
                return Err(bad("demand is not finite".into()));
            }
            entries.push((s, t, d));
        }
        Ok(DemandPairList { entries })
    }

    pub fn load(path: impl AsRef<Path>, n: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, n)
    }

    /// The vertex demand `sum d (e_t - e_s)`.
    pub fn to_demand(&self, n: usize) -> Result<Demand> {
        let mut chi = vec![0.0; n];
        for &(s, t, d) in &self.entries {
            if s >= n || t >= n {
                return Err(Error::InvalidDemand(format!("pair ({s}, {t}) outside 0..{n}")));
            }
            chi[s] -= d;
            chi[t] += d;
        }
        Demand::new(chi)
    }
}

/// Unit flows from every vertex to a fixed target `x`, stored dense `m x n`.
///
/// Column `u` routes one unit from `u` to `x`, so `B^T col_u = e_x - e_u`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationTable {
    pub target: usize,
    pub graph_hash: String,
    pub flows: Block,
}

impl RepresentationTable {
    pub fn m(&self) -> usize {
        self.flows.rows()
    }

    pub fn n(&self) -> usize {
        self.flows.cols()
    }

    pub fn column(&self, u: usize) -> Vec<f64> {
        self.flows.column(u)
    }
}

pub fn build_representation(scheme: &RoutingScheme, x: usize, cfg: &SolverConfig) -> Result<RepresentationTable> {
    let g = scheme.graph.as_ref();
    let n = g.n();
    if x >= n {
        return Err(Error::InvalidParameter(format!("target {x} outside 0..{n}")));
    }
    let mut demands = Block::zeros(n, n);
    for u in (0..n).filter(|&u| u != x) {
        demands.row_mut(u)[u] -= 1.0;
        demands.row_mut(x)[u] += 1.0;
    }
    let flows = Router::new(scheme, cfg)?.route_block(&demands)?;
    Ok(RepresentationTable {
        target: x,
        graph_hash: g.content_hash(),
        flows,
    })
}

/// `f_e = sum d (table[e][s] - table[e][t])`, without any solves.
pub fn query_flow(table: &RepresentationTable, pairs: &DemandPairList) -> Result<Flow> {
    let n = table.n();
    for &(s, t, _) in &pairs.entries {
        if s >= n || t >= n {
            return Err(Error::InvalidDemand(format!("pair ({s}, {t}) outside 0..{n}")));
        }
    }
    let values = (0..table.m())
        .map(|e| {
            let row = table.flows.row(e);
            pairs.entries.iter().map(|&(s, t, d)| d * (row[s] - row[t])).sum()
        })
        .collect();
    Ok(Flow(values))
}

/// Checks that `g` is the graph a scheme or table was built for.
pub fn check_graph(expected_hash: &str, g: &Graph) -> Result<()> {
    let found = g.content_hash();
    if found == expected_hash {
        Ok(())
    } else {
        Err(Error::GraphMismatch {
            expected: expected_hash.to_string(),
            found,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::lapsolve::EdgeWeights;
    use crate::loads::exact_load;
    use crate::mwu::Component;

    fn triangle() -> Arc<Graph> {
        Arc::new(Graph::parse_edge_list("0 1\n1 2\n0 2").unwrap())
    }

    fn k2() -> Arc<Graph> {
        Arc::new(Graph::parse_edge_list("0 1").unwrap())
    }

    fn uniform(g: &Arc<Graph>) -> RoutingScheme {
        RoutingScheme::single(g.clone(), EdgeWeights::uniform(g.m(), 1.0).unwrap(), NormMode::Linf).unwrap()
    }

    #[test]
    fn route_examples() {
        for cfg in [SolverConfig::exact(), SolverConfig::default()] {
            let s = uniform(&k2());
            let f = route_demand(&s, &Demand::new(vec![-1.0, 1.0]).unwrap(), &cfg).unwrap();
            assert!((f[0] - 1.0).abs() < 1e-9);

            let s = uniform(&triangle());
            let f = route_demand(&s, &Demand::pair(3, 0, 1, 1.0).unwrap(), &cfg).unwrap();
            // edges (0,1), (0,2), (1,2)
            assert!((f[0] - 2.0 / 3.0).abs() < 1e-9);
            assert!((f[1] - 1.0 / 3.0).abs() < 1e-9);
            assert!((f[2] + 1.0 / 3.0).abs() < 1e-9);

            let f = route_demand(&s, &Demand::new(vec![0.0; 3]).unwrap(), &cfg).unwrap();
            assert!(f.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn evaluation_examples() {
        assert!((competitive_ratio(&uniform(&k2())).unwrap() - 1.0).abs() < 1e-12);
        assert!((competitive_ratio(&uniform(&triangle())).unwrap() - 4.0 / 3.0).abs() < 1e-12);

        let g = Arc::new(Graph::new(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap());
        let w = EdgeWeights::new(vec![1.0, 2.0, 3.0, 0.5, 1.5]).unwrap();
        let single = RoutingScheme::single(g.clone(), w.clone(), NormMode::Linf).unwrap();
        let exact = exact_load(&g, &w).unwrap();
        let eval = evaluate_exact(&single, LoadKind::Load).unwrap();
        for (a, b) in eval.values.iter().zip(&exact.values) {
            assert!((a - b).abs() < 1e-9);
        }

        let mut doubled = single.clone();
        doubled.components = vec![
            Component { lambda: 0.5, weights: w.clone() },
            Component { lambda: 0.5, weights: w.clone() },
        ];
        let eval2 = evaluate_exact(&doubled, LoadKind::Load).unwrap();
        for (a, b) in eval.values.iter().zip(&eval2.values) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn table_examples() {
        let s = uniform(&k2());
        let table = build_representation(&s, 1, &SolverConfig::exact()).unwrap();
        assert!((table.column(0)[0] - 1.0).abs() < 1e-12);
        assert_eq!(table.column(1), vec![0.0]);

        let s = uniform(&triangle());
        let table = build_representation(&s, 2, &SolverConfig::default()).unwrap();
        let col = table.column(0);
        let anti = query_flow(&table, &DemandPairList::new(3, vec![(2, 0, 1.0)]).unwrap()).unwrap();
        for (a, b) in anti.iter().zip(&col) {
            assert!((a + b).abs() < 1e-12);
        }
        let cancel = query_flow(&table, &DemandPairList::new(3, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap()).unwrap();
        assert!(cancel.iter().all(|v| v.abs() < 1e-12));

        let pairs = DemandPairList::new(3, vec![(0, 1, 2.5)]).unwrap();
        let direct = route_demand(&s, &pairs.to_demand(3).unwrap(), &SolverConfig::default()).unwrap();
        let via_table = query_flow(&table, &pairs).unwrap();
        for (a, b) in direct.iter().zip(via_table.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn pair_parsing() {
        let p = DemandPairList::parse("# pairs\n0 1 1.0\n\n2 0 -0.5\n", 3).unwrap();
        assert_eq!(p.entries, vec![(0, 1, 1.0), (2, 0, -0.5)]);
        assert!(DemandPairList::parse("", 3).unwrap().entries.is_empty());
        assert!(matches!(DemandPairList::parse("0 3 1", 3), Err(Error::Parse { line: 1, .. })));
        assert!(DemandPairList::parse("1 1 1", 3).is_err());
        assert!(DemandPairList::parse("0 1", 3).is_err());
        assert!(DemandPairList::new(2, vec![(0, 2, 1.0)]).is_err());
    }
}
