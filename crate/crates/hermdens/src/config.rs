//! Run configuration: brute-force budgets, default `q`, truncation window,
//! cache location and worker count.
//!
//! Read from a TOML file given by `--config` or by `$HERMDENS_CONFIG`;
//! command-line flags override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cdens::DEFAULT_ALPHA_BUDGET;
use crate::error::{Error, Result};
use crate::whit::DEFAULT_BRUTE_BUDGET;

pub const CONFIG_ENV: &str = "HERMDENS_CONFIG";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// log₂ cap for classical brute-force counts
    pub alpha_budget: f64,
    /// log₂ cap for Iwahori brute-force counts
    pub iwahori_budget: f64,
    pub default_q: u64,
    pub window_lo: i64,
    pub window_hi: i64,
    pub cache: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            alpha_budget: DEFAULT_ALPHA_BUDGET,
            iwahori_budget: DEFAULT_BRUTE_BUDGET,
            default_q: 3,
            window_lo: -3,
            window_hi: 24,
            cache: None,
            jobs: None,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Invalid(format!("bad config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Explicit path, else the environment variable, else defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_file(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::from_file(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = Config::parse("default_q = 5\nwindow_hi = 30\n").unwrap();
        assert_eq!(c.default_q, 5);
        assert_eq!(c.window_hi, 30);
        assert_eq!(c.alpha_budget, DEFAULT_ALPHA_BUDGET);
        assert!(Config::parse("bogus = 1").is_err());
        assert_eq!(Config::parse("").unwrap(), Config::default());
    }

    #[test]
    fn from_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cfg.toml");
        std::fs::write(&p, "jobs = 2\ncache = \"/tmp/x.jsonl\"\n").unwrap();
        let c = Config::load(Some(&p)).unwrap();
        assert_eq!(c.jobs, Some(2));
        assert_eq!(c.cache, Some(PathBuf::from("/tmp/x.jsonl")));
        assert!(Config::load(Some(&dir.path().join("missing.toml"))).is_err());
    }
}
