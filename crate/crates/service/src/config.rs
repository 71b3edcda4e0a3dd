use std::path::{Path, PathBuf};
use std::time::Duration;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing required key {0:?}")]
    Missing(&'static str),
}

/// Startup settings, read from `key = value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub triples: PathBuf,
    pub edges: Option<PathBuf>,
    pub bind: String,
    pub port: u16,
    pub session_ttl: Duration,
    pub default_k: usize,
    pub default_alpha: f64,
    /// `None` lets every keystroke run to the exact answer.
    pub default_budget: Option<Duration>,
    pub allow_unknown: bool,
}

impl ServiceConfig {
    pub fn new(triples: impl Into<PathBuf>, edges: Option<PathBuf>) -> Self {
        Self {
            triples: triples.into(),
            edges,
            bind: "127.0.0.1".into(),
            port: 8080,
            session_ttl: Duration::from_secs(600),
            default_k: 20,
            default_alpha: 0.0,
            default_budget: Some(Duration::from_millis(50)),
            allow_unknown: false,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses the config text. Relative paths are taken from `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg = Self::new(PathBuf::new(), None);
        let mut have_triples = false;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ConfigError::Syntax { line: n + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |_| err(format!("bad value {value:?} for {key}"));
            match key {
                "triples" => {
                    cfg.triples = base.join(value);
                    have_triples = true;
                }
                "edges" => cfg.edges = Some(base.join(value)),
                "bind" => cfg.bind = value.to_string(),
                "port" => cfg.port = value.parse().map_err(|_| err(format!("bad port {value:?}")))?,
                "session_ttl_secs" => cfg.session_ttl = Duration::from_secs(value.parse().map_err(bad)?),
                "default_k" => cfg.default_k = value.parse().map_err(|_| err(format!("bad k {value:?}")))?,
                "default_alpha" => {
                    cfg.default_alpha = value.parse().map_err(|_| err(format!("bad alpha {value:?}")))?
                }
                "default_budget_ms" => {
                    cfg.default_budget = match value {
                        "none" => None,
                        v => Some(Duration::from_millis(v.parse().map_err(bad)?)),
                    }
                }
                "allow_unknown" => cfg.allow_unknown = value.parse().map_err(|_| err(format!("bad flag {value:?}")))?,
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        if !have_triples {
            return Err(ConfigError::Missing("triples"));
        }
        Ok(cfg)
    }
}
