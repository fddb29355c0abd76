//! Service configuration: file defaults, then environment, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use rosetta_kb::kb::DEFAULT_NAMESPACE;
use rosetta_kb::schema::Paradigm;
use rosetta_kb::terms::DEFAULT_REFERENCE_VOCABULARY;
use rosetta_kb::KbConfig;
use serde::{Deserialize, Serialize};

use crate::ServeError;

pub const DEFAULT_BIND: &str = "127.0.0.1:7878";
pub const DEFAULT_DATA_DIR: &str = "rosetta-data";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ServiceConfig {
    pub data_directory: PathBuf,
    pub namespace: String,
    pub reference_vocabulary: String,
    pub bind_address: String,
    pub default_paradigm: Paradigm,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            data_directory: DEFAULT_DATA_DIR.into(),
            namespace: DEFAULT_NAMESPACE.into(),
            reference_vocabulary: DEFAULT_REFERENCE_VOCABULARY.into(),
            bind_address: DEFAULT_BIND.into(),
            default_paradigm: Paradigm::Light,
        }
    }
}

impl ServiceConfig {
    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Self { data_directory: dir.into(), ..Self::default() }
    }

    pub fn from_file(path: &Path) -> Result<Self, ServeError> {
        let text = fs::read_to_string(path).map_err(|e| ServeError::Config(format!("{}: {e}", path.display())))?;
        serde_yaml::from_str(&text).map_err(|e| ServeError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), ServeError> {
        if self.namespace.trim().is_empty() {
            return Err(ServeError::Config("namespace must be non-empty".into()));
        }
        Ok(())
    }

    /// Creates the data directory if needed and proves it is writable.
    pub fn ensure_writable(&self) -> Result<(), ServeError> {
        let dir = &self.data_directory;
        let unwritable = |e: std::io::Error| ServeError::DataDirectoryUnwritable(dir.clone(), e.to_string());
        fs::create_dir_all(dir).map_err(unwritable)?;
        let probe = dir.join(".write-probe");
        fs::write(&probe, b"").map_err(unwritable)?;
        fs::remove_file(&probe).map_err(unwritable)
    }

    pub fn kb_config(&self) -> KbConfig {
        KbConfig {
            data_dir: Some(self.data_directory.clone()),
            namespace: self.namespace.clone(),
            reference_vocabulary: self.reference_vocabulary.clone(),
            default_paradigm: self.default_paradigm,
            ..KbConfig::default()
        }
    }
}
