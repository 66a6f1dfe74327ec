use std::fs;
use std::path::Path;

use serde::Deserialize;

use drillguide::engine::DrillConfig;
use drillguide::plan::ShellParams;
use drillguide::{Error, Result};

/// `--config` file: `{"drill": {...DrillConfig}, "shells": {...ShellParams}}`,
/// either section optional and missing fields defaulted.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub drill: DrillConfig,
    pub shells: ShellParams,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Config = serde_json::from_slice(&fs::read(path)?)
            .map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))?;
        cfg.drill.validate()?;
        cfg.shells.validate()?;
        Ok(cfg)
    }
}
