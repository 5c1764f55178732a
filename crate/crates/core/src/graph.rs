//! Undirected graphs with a fixed edge orientation, the incidence operator, and
//! edge-list ingestion.
//!
//! Every edge is stored as `(u, v)` with `u < v` and its incidence row is
//! `b_e = e_v - e_u`. A positive flow value on `e` therefore moves flow from
//! `u` to `v`, and `B^T f` is the net inflow at each vertex.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Deref;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{check_len, Error, Result};

/// A connected simple graph on vertices `0..n` with canonically oriented edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    // (neighbor, edge id), grouped by vertex
    incident: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from an edge list, reordering endpoints so that `u < v`
    /// and sorting edges lexicographically.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut canonical = Vec::new();
        for (i, (a, b)) in edges.into_iter().enumerate() {
            if a == b {
                return Err(Error::InvalidGraph(format!("edge {i} is a self-loop on {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} = ({a}, {b}) references a vertex outside 0..{n}"
                )));
            }
            canonical.push((u, v));
        }
        canonical.sort_unstable();
        if let Some(w) = canonical.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Self::from_canonical(n, canonical)
    }

    fn from_canonical(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidGraph("graph has no edges".into()));
        }
        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut incident = vec![(0, 0); 2 * edges.len()];
        for (e, &(u, v)) in edges.iter().enumerate() {
            incident[cursor[u]] = (v, e);
            cursor[u] += 1;
            incident[cursor[v]] = (u, e);
            cursor[v] += 1;
        }
        let graph = Graph {
            n,
            edges,
            offsets,
            incident,
        };
        graph.check_connected()?;
        Ok(graph)
    }

    fn check_connected(&self) -> Result<()> {
        let labels = self.component_labels();
        let components = labels.iter().max().map_or(0, |&c| c + 1);
        if components > 1 {
            let unreachable = labels.iter().position(|&c| c != 0).unwrap();
            return Err(Error::Disconnected {
                components,
                unreachable,
            });
        }
        Ok(())
    }

    fn component_labels(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &(v, _) in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Parses the edge-list text format: one `u v` pair per line, `#` comments.
    ///
    /// Vertex ids are densified to `0..n` in ascending numeric order, so an
    /// input that already uses `0..n` keeps its ids.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut raw = Vec::new();
        let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
        for (index, line) in text.lines().enumerate() {
            let line_no = index + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut tokens = trimmed.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<u64> {
                let tok = tok.ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("expected two vertex ids, got {trimmed:?}"),
                })?;
                tok.parse::<u64>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid vertex id {tok:?}"),
                })
            };
            let a = parse(tokens.next())?;
            let b = parse(tokens.next())?;
            if tokens.next().is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected two vertex ids, got {trimmed:?}"),
                });
            }
            if a == b {
                return Err(Error::SelfLoop {
                    line: line_no,
                    vertex: a,
                });
            }
            let key = (a.min(b), a.max(b));
            if let Some(&first_line) = seen.get(&key) {
                return Err(Error::DuplicateEdge {
                    line: line_no,
                    u: key.0,
                    v: key.1,
                    first_line,
                });
            }
            seen.insert(key, line_no);
            raw.push(key);
        }
        let mut ids: Vec<u64> = raw.iter().flat_map(|&(a, b)| [a, b]).collect();
        ids.sort_unstable();
        ids.dedup();
        let dense: HashMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut edges: Vec<(usize, usize)> = raw
            .iter()
            .map(|&(a, b)| (dense[&a], dense[&b]))
            .collect();
        // ascending densification preserves u < v
        edges.sort_unstable();
        Self::from_canonical(ids.len(), edges)
    }

    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_edge_list(&text)
    }

    /// Canonical edge-list text: sorted `u v` lines.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 8);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_edge_list()).map_err(|e| Error::io(path, e))
    }

    /// SHA-256 over `n` and the canonical edge list, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("{} {}\n", self.n, self.edges.len()).as_bytes());
        hasher.update(self.to_edge_list().as_bytes());
        hex_string(&hasher.finalize())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// `(neighbor, edge id)` pairs incident to `u`.
    pub fn neighbors(&self, u: usize) -> &[(usize, usize)] {
        &self.incident[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Potential differences `B x`: `result_e = x_v - x_u`.
    pub fn incidence_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, x.len())?;
        Ok(self.edges.iter().map(|&(u, v)| x[v] - x[u]).collect())
    }

    /// Net inflow `B^T f`: flow entering each vertex minus flow leaving it.
    pub fn incidence_transpose_apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len(self.m(), f.len())?;
        let mut out = vec![0.0; self.n];
        for (&(u, v), &fe) in self.edges.iter().zip(f) {
            out[u] -= fe;
            out[v] += fe;
        }
        Ok(out)
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// A vertex demand vector `chi` whose entries sum to zero.
///
/// Under the orientation convention `B^T f = chi`, a positive entry is a sink.
#[derive(Debug, Clone, PartialEq)]
pub struct Demand(Vec<f64>);

impl Demand {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let total: f64 = values.iter().sum();
        let l1: f64 = values.iter().map(|v| v.abs()).sum();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDemand("non-finite entry".into()));
        }
        if total.abs() > 1e-9 * l1.max(1.0) {
            return Err(Error::InvalidDemand(format!(
                "entries sum to {total:e}, expected 0"
            )));
        }
        Ok(Demand(values))
    }

    /// `amount` units shipped from `s` to `t`: `amount * (e_t - e_s)`.
    pub fn pair(n: usize, s: usize, t: usize, amount: f64) -> Result<Self> {
        if s >= n || t >= n {
            return Err(Error::InvalidDemand(format!(
                "pair ({s}, {t}) outside 0..{n}"
            )));
        }
        let mut values = vec![0.0; n];
        values[s] -= amount;
        values[t] += amount;
        Ok(Demand(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Demand {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Signed per-edge flow values relative to the edge orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow(pub Vec<f64>);

impl Flow {
    pub fn zeros(m: usize) -> Self {
        Flow(vec![0.0; m])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Flow {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::parse_edge_list("0 1\n1 2\n0 2").unwrap()
    }

    #[test]
    fn parses_triangle_and_k2() {
        let g = triangle();
        assert_eq!((g.n(), g.m()), (3, 3));
        assert_eq!(g.edges(), &[(0, 1), (0, 2), (1, 2)]);
        let k2 = Graph::parse_edge_list("0 1").unwrap();
        assert_eq!((k2.n(), k2.m()), (2, 1));
    }

    #[test]
    fn rejects_disconnected() {
        let err = Graph::parse_edge_list("0 1\n2 3").unwrap_err();
        assert!(matches!(
            err,
            Error::Disconnected {
                components: 2,
                unreachable: 2
            }
        ));
    }

    #[test]
    fn structural_errors_name_the_line() {
        match Graph::parse_edge_list("# c\n0 1\n1 1\n").unwrap_err() {
            Error::SelfLoop { line, vertex } => assert_eq!((line, vertex), (3, 1)),
            e => panic!("unexpected {e}"),
        }
        match Graph::parse_edge_list("0 1\n1 2\n1 0\n").unwrap_err() {
            Error::DuplicateEdge {
                line, first_line, ..
            } => assert_eq!((line, first_line), (3, 1)),
            e => panic!("unexpected {e}"),
        }
        match Graph::parse_edge_list("0 1\n1 x\n").unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(
            Graph::parse_edge_list("0 1 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(Graph::parse_edge_list("# nothing\n").is_err());
    }

    #[test]
    fn densifies_sparse_ids_in_ascending_order() {
        let g = Graph::parse_edge_list("30 10\n10 20\n").unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges(), &[(0, 1), (0, 2)]);
    }

    #[test]
    fn canonical_save_is_idempotent() {
        let g = Graph::parse_edge_list("5 2\n2 9\n9 5\n9 7\n").unwrap();
        let again = Graph::parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(g, again);
        assert_eq!(g.content_hash(), again.content_hash());
    }

    #[test]
    fn incidence_transpose_examples() {
        let k2 = Graph::parse_edge_list("0 1").unwrap();
        assert_eq!(k2.incidence_transpose_apply(&[1.0]).unwrap(), vec![-1.0, 1.0]);
        // hand multiplication with rows (-1,1,0), (-1,0,1), (0,-1,1)
        let g = triangle();
        assert_eq!(
            g.incidence_transpose_apply(&[1.0, 1.0, -1.0]).unwrap(),
            vec![-2.0, 2.0, 0.0]
        );
        assert_eq!(g.incidence_transpose_apply(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert!(matches!(
            g.incidence_transpose_apply(&[1.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 1 })
        ));
    }

    #[test]
    fn incidence_apply_examples() {
        let k2 = Graph::parse_edge_list("0 1").unwrap();
        assert_eq!(k2.incidence_apply(&[0.0, 1.0]).unwrap(), vec![1.0]);
        let g = triangle();
        assert_eq!(g.incidence_apply(&[1.0, 1.0, 1.0]).unwrap(), vec![0.0; 3]);
        assert_eq!(g.incidence_apply(&[0.0, 1.0, 2.0]).unwrap(), vec![1.0, 2.0, 1.0]);
        assert!(g.incidence_apply(&[0.0; 2]).is_err());
    }

    #[test]
    fn demand_validation() {
        assert!(Demand::new(vec![1.0, -1.0]).is_ok());
        assert!(Demand::new(vec![1.0, 0.5]).is_err());
        let d = Demand::pair(3, 0, 2, 2.0).unwrap();
        assert_eq!(d.values(), &[-2.0, 0.0, 2.0]);
        assert!(Demand::pair(3, 0, 3, 1.0).is_err());
    }

    #[test]
    fn programmatic_construction_canonicalizes() {
        let g = Graph::new(3, [(2, 1), (1, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert!(Graph::new(3, [(0, 1), (1, 0), (1, 2)]).is_err());
        assert!(Graph::new(3, [(0, 0), (1, 2)]).is_err());
        assert!(Graph::new(2, [(0, 2)]).is_err());
    }
}
