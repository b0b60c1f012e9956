//! Content-addressed lookup of traces (by digest) and configs (by hash).

use std::collections::BTreeMap;
use std::path::Path;

use crate::envelope::{config_hash, preset, EnvelopeConfig, Preset};
use crate::trace::{trace_digest, validate_trace, ActionTrace};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn json_files(dir: &Path) -> Result<Vec<std::path::PathBuf>, StoreError> {
    let io = |source| StoreError::Io { path: dir.display().to_string(), source };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Default, Clone)]
pub struct TraceStore {
    by_digest: BTreeMap<String, ActionTrace>,
}

impl TraceStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, trace: ActionTrace) -> String {
        let digest = trace_digest(&trace).expect("stored traces are valid");
        self.by_digest.insert(digest.clone(), trace);
        digest
    }

    pub fn get(&self, digest: &str) -> Option<&ActionTrace> {
        self.by_digest.get(digest)
    }

    pub fn len(&self) -> usize {
        self.by_digest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_digest.is_empty()
    }

    /// Loads every trace document in `dir`, or in `dir/traces` when present.
    pub fn from_dir(dir: &Path) -> Result<Self, StoreError> {
        let dir = if dir.join("traces").is_dir() { dir.join("traces") } else { dir.to_path_buf() };
        let mut store = TraceStore::new();
        for path in json_files(&dir)? {
            let bytes = std::fs::read(&path).map_err(|source| StoreError::Io { path: path.display().to_string(), source })?;
            let trace = validate_trace(&bytes)
                .map_err(|e| StoreError::Invalid { path: path.display().to_string(), message: e.to_string() })?;
            store.insert(trace);
        }
        Ok(store)
    }
}

impl FromIterator<ActionTrace> for TraceStore {
    fn from_iter<I: IntoIterator<Item = ActionTrace>>(iter: I) -> Self {
        let mut s = TraceStore::new();
        for t in iter {
            s.insert(t);
        }
        s
    }
}

#[derive(Debug, Default, Clone)]
pub struct ConfigStore {
    by_hash: BTreeMap<String, EnvelopeConfig>,
}

impl ConfigStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// The three presets.
    pub fn with_presets() -> Self {
        Preset::ALL.into_iter().map(preset).collect()
    }

    pub fn insert(&mut self, config: EnvelopeConfig) -> String {
        let hash = config_hash(&config);
        self.by_hash.insert(hash.clone(), config);
        hash
    }

    pub fn get(&self, hash: &str) -> Option<&EnvelopeConfig> {
        self.by_hash.get(hash)
    }

    pub fn into_configs(self) -> Vec<EnvelopeConfig> {
        self.by_hash.into_values().collect()
    }

    pub fn by_name(&self, name: &str) -> Option<&EnvelopeConfig> {
        self.by_hash.values().find(|c| c.name == name)
    }

    /// Loads every config document in `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, StoreError> {
        let mut store = ConfigStore::new();
        for path in json_files(dir)? {
            let bytes = std::fs::read(&path).map_err(|source| StoreError::Io { path: path.display().to_string(), source })?;
            let cfg = EnvelopeConfig::from_document(&bytes)
                .map_err(|e| StoreError::Invalid { path: path.display().to_string(), message: e.to_string() })?;
            store.insert(cfg);
        }
        Ok(store)
    }
}

impl FromIterator<EnvelopeConfig> for ConfigStore {
    fn from_iter<I: IntoIterator<Item = EnvelopeConfig>>(iter: I) -> Self {
        let mut s = ConfigStore::new();
        for c in iter {
            s.insert(c);
        }
        s
    }
}
