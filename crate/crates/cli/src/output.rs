use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance attached to every file a command writes.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub command: String,
    pub version: &'static str,
    pub parameters: Value,
    pub seed: Option<u64>,
}

impl Meta {
    pub fn new(command: &str, parameters: Value, seed: Option<u64>) -> Self {
        Meta { command: command.to_string(), version: VERSION, parameters, seed }
    }
}

pub struct Writer {
    dir: PathBuf,
    meta: Meta,
    written: Vec<PathBuf>,
}

impl Writer {
    pub fn new(dir: &Path, meta: Meta) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Writer { dir: dir.to_path_buf(), meta, written: Vec::new() })
    }

    fn put(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    /// `{"metadata": ..., "result": ...}`, pretty-printed with a trailing LF.
    pub fn json<T: Serialize>(&mut self, name: &str, result: &T) -> Result<()> {
        let doc = json!({ "metadata": self.meta, "result": result });
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        self.put(name, &s)
    }

    /// CSV with `#` comment lines carrying the metadata, then the header row.
    pub fn csv(&mut self, name: &str, header: &str, rows: &[String]) -> Result<()> {
        let mut block = format!("{header}\n");
        for r in rows {
            block.push_str(r);
            block.push('\n');
        }
        self.csv_block(name, &block)
    }

    /// Same, for a table that already has its header row.
    pub fn csv_block(&mut self, name: &str, block: &str) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "# anchortalk {} command={}", self.meta.version, self.meta.command)?;
        if let Some(seed) = self.meta.seed {
            writeln!(s, "# seed={seed}")?;
        }
        writeln!(s, "# parameters={}", serde_json::to_string(&self.meta.parameters)?)?;
        s.push_str(block);
        if !s.ends_with('\n') {
            s.push('\n');
        }
        self.put(name, &s)
    }

    pub fn report(&self) {
        for p in &self.written {
            println!("wrote {}", p.display());
        }
    }
}

pub fn join(vals: &[f64]) -> String {
    vals.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}
