//! Artifact writing. Every file starts with the provenance of the run: the
//! SHA-256 of the canonical configuration and the crate versions.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub groundlab: &'static str,
    pub groundlab_cli: &'static str,
}

impl Provenance {
    /// Hash of the configuration as canonical JSON; the output directory is
    /// excluded so that reruns elsewhere carry the same header.
    pub fn new(cfg: &ExperimentConfig) -> Self {
        let canonical = serde_json::to_string(cfg).expect("configuration serializes");
        Self {
            config_hash: hex::encode(Sha256::digest(canonical.as_bytes())),
            groundlab: groundlab::VERSION,
            groundlab_cli: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn comment_line(&self) -> String {
        format!(
            "# config_sha256={} groundlab={} groundlab-cli={}",
            self.config_hash, self.groundlab, self.groundlab_cli
        )
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Writes into one directory; all writes go through this value, one at a
/// time.
pub struct Writer {
    dir: PathBuf,
    provenance: Provenance,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, provenance: Provenance) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            provenance,
            written: Vec::new(),
        })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn into_files(self) -> Vec<PathBuf> {
        self.written
    }

    fn put(&mut self, name: &str, body: String) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    /// CSV with the provenance comment, a header row and numeric rows.
    pub fn csv(&mut self, name: &str, columns: &[String], rows: &[Vec<f64>]) -> Result<()> {
        let mut s = self.provenance.comment_line();
        s.push('\n');
        s.push_str(&columns.join(","));
        s.push('\n');
        for row in rows {
            let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        self.put(name, s)
    }

    /// JSON object with the provenance under `"provenance"`.
    pub fn json(&mut self, name: &str, body: Value) -> Result<()> {
        let mut obj = json!({ "provenance": self.provenance });
        if let (Some(dst), Value::Object(src)) = (obj.as_object_mut(), body) {
            dst.extend(src);
        }
        let mut text = serde_json::to_string_pretty(&obj)?;
        text.push('\n');
        self.put(name, text)
    }

    /// Text whose first lines may be a format header; the provenance comment
    /// goes first unless `after_first_line` is set.
    pub fn text(&mut self, name: &str, body: &str, after_first_line: bool) -> Result<()> {
        let comment = self.provenance.comment_line();
        let s = if after_first_line {
            let (first, rest) = body.split_once('\n').unwrap_or((body, ""));
            format!("{first}\n{comment}\n{rest}")
        } else {
            format!("{comment}\n{body}")
        };
        self.put(name, s)
    }
}
