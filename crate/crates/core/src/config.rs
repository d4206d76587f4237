//! Experiment configuration: sectioned TOML, canonical text and its hash.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audit::AuditSection;
use crate::error::{Error, Result};
use crate::horizon::PropertyStarConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSection {
    /// `tasep`, `asep-exotic` or `aep-basic`.
    pub model: String,
    pub seed: u64,
    pub replicas: usize,
    pub out: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            model: "tasep".into(),
            seed: 1,
            replicas: 1000,
            out: "out".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRate {
    pub v: i64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultitypeSection {
    pub rates: Vec<JumpRate>,
    pub horizon: f64,
    pub box_half: i64,
    pub w: i64,
}

impl Default for MultitypeSection {
    fn default() -> Self {
        Self {
            rates: vec![
                JumpRate { v: 1, p: 0.6 },
                JumpRate { v: 3, p: 0.3 },
                JumpRate {
                    v: -3,
                    p: 0.3 - 0.4 / 3.0,
                },
            ],
            horizon: 4.0,
            box_half: 20,
            w: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WebSection {
    pub eta: f64,
    pub n: f64,
}

impl Default for WebSection {
    fn default() -> Self {
        Self {
            eta: 0.6,
            n: 2000.0,
        }
    }
}

/// Everything a run depends on.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub audit: AuditSection,
    pub horizon: PropertyStarConfig,
    pub multitype: MultitypeSection,
    pub web: WebSection,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sorted-key TOML rendering; equal configs give equal text.
    pub fn canonical(&self) -> Result<String> {
        let value = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        toml::to_string(&value).map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.canonical()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
