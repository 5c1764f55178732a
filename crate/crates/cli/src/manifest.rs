//! JSON run manifests written next to each command's output.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use oblivroute::{Graph, MwuConfig};
use serde::Serialize;
use serde_json::{Map, Value};

pub struct Manifest {
    fields: Map<String, Value>,
}

fn unix_secs() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl Manifest {
    pub fn start_without_graph(command: &str) -> Self {
        let mut m = Manifest { fields: Map::new() };
        m.set("command", command);
        m.set("version", env!("CARGO_PKG_VERSION"));
        m.set("started_at", unix_secs());
        m
    }

    pub fn start(command: &str, g: &Graph) -> Self {
        let mut m = Self::start_without_graph(command);
        m.set("graph_hash", g.content_hash());
        m.set("n", g.n());
        m.set("m", g.m());
        m
    }

    /// Records the configuration with defaults that depend on `g` filled in.
    pub fn config(&mut self, cfg: &MwuConfig, g: &Graph) {
        let mut resolved = cfg.clone();
        resolved.alpha_init = Some(cfg.resolved_alpha_init(g.n()));
        resolved.sketch_delta = Some(cfg.resolved_delta(g.n()));
        self.set("config", resolved);
    }

    pub fn config_unresolved(&mut self, cfg: &MwuConfig) {
        self.set("config", cfg);
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).unwrap_or(Value::Null);
        self.fields.insert(key.to_string(), value);
    }

    pub fn finish(mut self, path: &Path) -> anyhow::Result<()> {
        self.set("finished_at", unix_secs());
        let text = serde_json::to_string_pretty(&Value::Object(self.fields))?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing manifest {}", path.display()))
    }
}

pub fn file_sha256(path: &Path) -> anyhow::Result<String> {
    Ok(oblivroute::routing::file_checksum(path)?)
}
