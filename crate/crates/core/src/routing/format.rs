//! Versioned text formats for schemes and representation tables.
//!
//! Both files are a header of `key value` lines, a body of whitespace
//! separated decimals printed with 17 significant digits, and a trailing
//! `checksum <sha256>` line over everything before it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::{check_graph, RepresentationTable};
use crate::error::{Error, Result};
use crate::graph::{hex_string, Graph};
use crate::lapsolve::{Block, EdgeWeights};
use crate::mwu::{Component, NormMode, RoutingScheme};

pub const SCHEME_HEADER: &str = "oblivroute-scheme v1";
pub const TABLE_HEADER: &str = "oblivroute-table v1";

fn push_row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

fn seal(mut body: String) -> String {
    let digest = hex_string(&Sha256::digest(body.as_bytes()));
    let _ = writeln!(body, "checksum {digest}");
    body
}

fn write_file(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn save_scheme(scheme: &RoutingScheme, path: impl AsRef<Path>) -> Result<()> {
    let g = scheme.graph.as_ref();
    let mut body = String::new();
    let _ = writeln!(body, "{SCHEME_HEADER}");
    let _ = writeln!(body, "graph {}", g.content_hash());
    let _ = writeln!(body, "n {}", g.n());
    let _ = writeln!(body, "m {}", g.m());
    let _ = writeln!(body, "norm {}", scheme.norm_mode);
    let _ = writeln!(body, "alpha_used {:.16e}", scheme.alpha_used);
    let _ = writeln!(body, "components {}", scheme.components.len());
    for c in &scheme.components {
        push_row(&mut body, std::iter::once(c.lambda).chain(c.weights.values().iter().copied()));
    }
    write_file(path.as_ref(), seal(body))
}

pub fn save_table(table: &RepresentationTable, path: impl AsRef<Path>) -> Result<()> {
    let mut body = String::new();
    let _ = writeln!(body, "{TABLE_HEADER}");
    let _ = writeln!(body, "graph {}", table.graph_hash);
    let _ = writeln!(body, "n {}", table.n());
    let _ = writeln!(body, "m {}", table.m());
    let _ = writeln!(body, "target {}", table.target);
    for e in 0..table.m() {
        push_row(&mut body, table.flows.row(e).iter().copied());
    }
    write_file(path.as_ref(), seal(body))
}

/// A checksummed file split into header fields and body rows.
struct Parsed<'a> {
    path: &'a Path,
    fields: HashMap<&'a str, &'a str>,
    rows: Vec<&'a str>,
}

impl<'a> Parsed<'a> {
    fn new(path: &'a Path, text: &'a str, header: &str, keys: &[&'static str]) -> Result<Self> {
        let err = |msg: String| Error::format(path, msg);
        let first = text.lines().next().ok_or_else(|| err("empty file".into()))?;
        if first != header {
            return Err(err(format!("unsupported format {first:?}, expected {header:?}")));
        }
        let body_end = text
            .trim_end_matches('\n')
            .rfind('\n')
            .map(|i| i + 1)
            .ok_or_else(|| err("truncated file: missing checksum".into()))?;
        let (body, trailer) = text.split_at(body_end);
        let stored = trailer
            .trim_end()
            .strip_prefix("checksum ")
            .ok_or_else(|| err("truncated file: missing checksum line".into()))?;
        let actual = hex_string(&Sha256::digest(body.as_bytes()));
        if stored != actual {
            return Err(err("checksum mismatch".into()));
        }

        let mut lines = body.lines().skip(1);
        let mut fields = HashMap::new();
        for key in keys {
            let line = lines.next().ok_or_else(|| err(format!("missing header field {key:?}")))?;
            let value = line
                .strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .ok_or_else(|| err(format!("expected header field {key:?}, got {line:?}")))?;
            fields.insert(*key, value);
        }
        Ok(Parsed {
            path,
            fields,
            rows: lines.collect(),
        })
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(self.path, msg)
    }

    fn field(&self, key: &str) -> &'a str {
        self.fields[key]
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.field(key)
            .parse()
            .map_err(|_| self.err(format!("invalid value for {key:?}: {:?}", self.field(key))))
    }

    fn row(&self, index: usize, expected: usize) -> Result<Vec<f64>> {
        let values = self.rows[index]
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| self.err(format!("body row {} has an invalid number", index + 1)))?;
        if values.len() != expected {
            return Err(self.err(format!(
                "body row {} has {} values, expected {expected}",
                index + 1,
                values.len()
            )));
        }
        Ok(values)
    }

    fn expect_rows(&self, count: usize) -> Result<()> {
        if self.rows.len() != count {
            return Err(self.err(format!("expected {count} body rows, found {}", self.rows.len())));
        }
        Ok(())
    }

    fn check_shape(&self, g: &Graph) -> Result<()> {
        check_graph(self.field("graph"), g)?;
        let (n, m): (usize, usize) = (self.number("n")?, self.number("m")?);
        if n != g.n() || m != g.m() {
            return Err(self.err(format!("header says n={n} m={m}, graph has n={} m={}", g.n(), g.m())));
        }
        Ok(())
    }
}

/// Hex SHA-256 of a file's bytes.
pub fn file_checksum(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex_string(&Sha256::digest(&bytes)))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Loads a scheme written by [`save_scheme`], refusing it unless it was built
/// for `graph`.
pub fn load_scheme(path: impl AsRef<Path>, graph: Arc<Graph>) -> Result<RoutingScheme> {
    let path = path.as_ref();
    let text = read(path)?;
    let p = Parsed::new(path, &text, SCHEME_HEADER, &["graph", "n", "m", "norm", "alpha_used", "components"])?;
    p.check_shape(&graph)?;
    let norm_mode: NormMode = p.field("norm").parse().map_err(|_| p.err("invalid norm mode"))?;
    let alpha_used: f64 = p.number("alpha_used")?;
    let count: usize = p.number("components")?;
    p.expect_rows(count)?;
    let components = (0..count)
        .map(|i| {
            let mut row = p.row(i, graph.m() + 1)?;
            let lambda = row.remove(0);
            let weights = EdgeWeights::new(row).map_err(|e| p.err(format!("component {i}: {e}")))?;
            Ok(Component { lambda, weights })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RoutingScheme {
        graph,
        components,
        norm_mode,
        alpha_used,
        restarts: 0,
        restart_log: Vec::new(),
        trace: Vec::new(),
    })
}

pub fn load_table(path: impl AsRef<Path>, g: &Graph) -> Result<RepresentationTable> {
    let path = path.as_ref();
    let text = read(path)?;
    let p = Parsed::new(path, &text, TABLE_HEADER, &["graph", "n", "m", "target"])?;
    p.check_shape(g)?;
    let target: usize = p.number("target")?;
    if target >= g.n() {
        return Err(p.err(format!("target {target} outside 0..{}", g.n())));
    }
    p.expect_rows(g.m())?;
    let mut flows = Block::zeros(g.m(), g.n());
    for e in 0..g.m() {
        flows.row_mut(e).copy_from_slice(&p.row(e, g.n())?);
    }
    Ok(RepresentationTable {
        target,
        graph_hash: g.content_hash(),
        flows,
    })
}
