//! Run configuration, read from TOML. Every field has a default, so an empty
//! file is a valid configuration and any subset of fields may be overridden.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::pipeline::{TrackerConfig, Variant};
use crate::sim::SCENARIO_NAMES;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub seed: u64,
    pub variant: Variant,
    /// Seeds for `compare` (0..seeds).
    pub seeds: u64,
    /// Scenarios for `compare`.
    pub scenarios: Vec<String>,
    /// Output directory.
    pub out: PathBuf,
    pub tracker: TrackerConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: "one".into(),
            seed: 0,
            variant: Variant::GmphdContextAware,
            seeds: 10,
            scenarios: SCENARIO_NAMES.iter().map(|s| s.to_string()).collect(),
            out: PathBuf::from("out"),
            tracker: TrackerConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        for s in std::iter::once(&self.scenario).chain(&self.scenarios) {
            if !SCENARIO_NAMES.contains(&s.as_str()) {
                return Err(Error::UnknownScenario(s.clone()));
            }
        }
        self.tracker.validate()?;
        self.eval.validate()
    }
}
