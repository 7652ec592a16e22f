//! Append-only JSON-lines result cache keyed by a digest of the canonical
//! request.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Bumped whenever the output schema changes; part of every key.
pub const SCHEMA_VERSION: u32 = 1;

pub fn artifact_version() -> String {
    format!("{}+schema{}", env!("CARGO_PKG_VERSION"), SCHEMA_VERSION)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub key: String,
    pub version: String,
    pub request: Value,
    pub response: Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub path: String,
    pub entries: usize,
    pub current_version: usize,
    pub corrupt_lines: usize,
}

/// SHA-256 over the artifact version and the request with sorted keys.
pub fn digest(request: &Value) -> String {
    let mut h = Sha256::new();
    h.update(artifact_version().as_bytes());
    h.update([0]);
    h.update(serde_json::to_string(request).expect("json").as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Invalid(format!("cache {}: {e}", path.display()))
}

pub struct Cache {
    path: PathBuf,
}

impl Cache {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Every parseable entry; corrupt lines are skipped with a warning.
    fn scan(&self) -> Result<(Vec<Entry>, usize)> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
            Err(e) => return Err(io_err(&self.path, e)),
        };
        let mut entries = Vec::new();
        let mut corrupt = 0;
        for (no, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| io_err(&self.path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Entry>(&line) {
                Ok(e) => entries.push(e),
                Err(err) => {
                    corrupt += 1;
                    log::warn!(
                        "skipping corrupt cache line {} in {}: {err}",
                        no + 1,
                        self.path.display()
                    );
                }
            }
        }
        Ok((entries, corrupt))
    }

    pub fn get(&self, key: &str) -> Result<Option<Value>> {
        let version = artifact_version();
        let (entries, _) = self.scan()?;
        Ok(entries
            .into_iter()
            .rev()
            .find(|e| e.key == key && e.version == version)
            .map(|e| e.response))
    }

    /// Appends one line under an exclusive lock, so concurrent writers
    /// never interleave.
    pub fn put(&self, key: &str, request: &Value, response: &Value) -> Result<()> {
        let entry = Entry {
            key: key.to_string(),
            version: artifact_version(),
            request: request.clone(),
            response: response.clone(),
        };
        let mut line = serde_json::to_string(&entry).expect("json");
        line.push('\n');
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| io_err(&self.path, e))?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| io_err(&self.path, e))?;
        file.lock().map_err(|e| io_err(&self.path, e))?;
        let res = file.write_all(line.as_bytes()).and_then(|_| file.flush());
        file.unlock().map_err(|e| io_err(&self.path, e))?;
        res.map_err(|e| io_err(&self.path, e))
    }

    pub fn entries(&self) -> Result<Vec<Entry>> {
        Ok(self.scan()?.0)
    }

    pub fn stats(&self) -> Result<CacheStats> {
        let (entries, corrupt) = self.scan()?;
        let version = artifact_version();
        Ok(CacheStats {
            path: self.path.display().to_string(),
            entries: entries.len(),
            current_version: entries.iter().filter(|e| e.version == version).count(),
            corrupt_lines: corrupt,
        })
    }
}
