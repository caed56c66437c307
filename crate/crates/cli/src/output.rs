//! Artifact writing: every file carries the version, seed and config hash.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Metadata {
    pub version: String,
    pub schema: u32,
    pub seed: u64,
    pub config_hash: String,
}

impl Metadata {
    /// Hash of the resolved configuration, so equivalent files that differ
    /// only in layout or defaults share a hash. The output directory does
    /// not enter.
    pub fn new(config: &RunConfig) -> Self {
        let mut value = serde_json::to_value(config).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output");
        }
        let canonical = serde_json::to_vec(&value).expect("config serializes");
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            schema: SCHEMA_VERSION,
            seed: config.seed,
            config_hash: hex::encode(Sha256::digest(&canonical)),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    metadata: &'a Metadata,
    command: &'a str,
    report: &'a T,
}

/// Writes artifacts into one directory.
pub struct Artifacts {
    pub dir: PathBuf,
    pub meta: Metadata,
    pub command: String,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, meta: Metadata, command: &str) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), meta, command: command.into(), written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn path(&mut self, name: &str) -> std::io::Result<PathBuf> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        self.written.push(p.clone());
        Ok(p)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, report: &T) -> std::io::Result<()> {
        let env = Envelope { metadata: &self.meta, command: &self.command, report };
        let mut text = serde_json::to_string_pretty(&env).map_err(std::io::Error::other)?;
        text.push('\n');
        let p = self.path(name)?;
        fs::write(p, text)
    }

    /// CSV with a `#` metadata line above the header.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
        let mut out = format!(
            "# entroflux {} schema={} seed={} config_hash={}\n{}\n",
            self.meta.version,
            self.meta.schema,
            self.meta.seed,
            self.meta.config_hash,
            header.join(",")
        );
        for r in rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        let p = self.path(name)?;
        fs::write(p, out)
    }

    /// Little-endian `f64`, row-major `[cell][component]`, plus a JSON
    /// sidecar `<name>.json`.
    pub fn snapshot<T: Serialize>(&mut self, name: &str, values: &[f64], sidecar: &T) -> std::io::Result<()> {
        let p = self.path(&format!("{name}.bin"))?;
        let mut f = fs::File::create(p)?;
        let mut bytes = Vec::with_capacity(values.len() * 8);
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        f.write_all(&bytes)?;
        self.json(&format!("{name}.json"), sidecar)
    }
}

/// Shortest round-trip representation, so CSV files are reproducible.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
