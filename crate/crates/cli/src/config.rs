use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use lqg_walk::sim::{PushSearch, ScenarioConfig, SweepGrid};

/// Everything a config document can hold: the scenario itself plus the
/// optional push-limit bracket and sweep grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub scenario: ScenarioConfig,
    pub push_limit: PushSearch,
    pub sweep: SweepGrid,
}

impl RunConfig {
    /// TOML unless the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            Some("toml") | None => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            Some(other) => bail!("unsupported config extension `.{other}` (use .toml or .json)"),
        };
        Ok(cfg)
    }

    /// Compact JSON with sorted keys.
    pub fn canonical_json(&self) -> Result<String> {
        // serde_json::Value keeps object keys in a BTreeMap, so the
        // round-trip sorts them
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string(&value)?)
    }

    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.canonical_json()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
