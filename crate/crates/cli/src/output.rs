//! Run artifacts: in-memory files, the manifest, and the atomic commit to disk.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const LOCK_FILE: &str = ".spreadfract.lock";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PLOTS_FILE: &str = "plots.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Axis of a plot description.
#[derive(Debug, Clone, Serialize)]
pub struct Axis {
    pub column: &'static str,
    pub label: &'static str,
    pub log: bool,
}

impl Axis {
    pub fn linear(column: &'static str, label: &'static str) -> Self {
        Self {
            column,
            label,
            log: false,
        }
    }

    pub fn log(column: &'static str, label: &'static str) -> Self {
        Self {
            column,
            label,
            log: true,
        }
    }
}

/// Rendering hints for one CSV, for whatever plotting tool reads them.
#[derive(Debug, Clone, Serialize)]
pub struct Plot {
    pub file: String,
    pub title: String,
    pub x: Axis,
    pub y: Axis,
    /// Column whose distinct values become separate lines.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_by: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_line: Option<Value>,
}

#[derive(Debug, Serialize)]
struct OutputEntry {
    file: String,
    bytes: usize,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    library_version: &'static str,
    command: &'a str,
    config: &'a Value,
    input: &'a Value,
    diagnostics: &'a Value,
    outputs: Vec<OutputEntry>,
}

/// Everything a command produces, held in memory until [`Artifacts::commit`].
pub struct Artifacts {
    command: &'static str,
    files: Vec<(String, Vec<u8>)>,
    plots: Vec<Plot>,
    pub config: Value,
    pub input: Value,
    pub diagnostics: Value,
}

impl Artifacts {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            files: Vec::new(),
            plots: Vec::new(),
            config: Value::Null,
            input: Value::Null,
            diagnostics: Value::Object(Default::default()),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    /// Renders a CSV through `write` and stores it.
    pub fn add_csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> spreadfract::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.add(name, buf);
        Ok(())
    }

    pub fn add_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        self.add(name, to_json(value)?);
        Ok(())
    }

    pub fn plot(&mut self, plot: Plot) {
        self.plots.push(plot);
    }

    pub fn diagnostic(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        let v = serde_json::to_value(value).map_err(|e| CliError::Usage(format!("serializing diagnostics: {e}")))?;
        if let Value::Object(map) = &mut self.diagnostics {
            map.insert(key.to_string(), v);
        }
        Ok(())
    }

    /// Writes every file to `dir` (temp file, then rename), finishing with the manifest.
    ///
    /// The directory is locked for the duration; a second concurrent run fails
    /// instead of interleaving its files with ours.
    pub fn commit(mut self, dir: &Path) -> Result<Vec<PathBuf>> {
        if !self.plots.is_empty() {
            let plots = to_json(&self.plots)?;
            self.add(PLOTS_FILE, plots);
        }
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            library_version: spreadfract::VERSION,
            command: self.command,
            config: &self.config,
            input: &self.input,
            diagnostics: &self.diagnostics,
            outputs: self
                .files
                .iter()
                .map(|(name, bytes)| OutputEntry {
                    file: name.clone(),
                    bytes: bytes.len(),
                    sha256: sha256_hex(bytes),
                })
                .collect(),
        };
        let manifest = to_json(&manifest)?;
        self.add(MANIFEST_FILE, manifest);

        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let _lock = DirLock::acquire(dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            written.push(write_atomic(dir, name, bytes)?);
        }
        Ok(written)
    }
}

fn to_json(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::Usage(format!("serializing output: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, &target)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(&target, e));
    }
    Ok(target)
}

struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(DirLock(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Locked(dir.to_path_buf())),
            Err(e) => Err(CliError::io(path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}
