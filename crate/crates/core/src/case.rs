//! A case directory bundles everything a drilling session needs:
//!
//! ```text
//! <case_id>/
//!   volume.capv   labels (CAPV1)
//!   plan.capp     zones (CAPP1)
//!   bone.capf     signed bone distance (CAPF1)
//!   case.json     optional: {"home_mm": [x, y, z], "drill": {...}}
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::DrillConfig;
use crate::error::{Error, Result};
use crate::field::DistanceField;
use crate::formats::{load_field, load_plan, load_volume, save_field, save_plan, save_volume};
use crate::plan::ZonePlan;
use crate::volume::LabelVolume;

pub const VOLUME_FILE: &str = "volume.capv";
pub const PLAN_FILE: &str = "plan.capp";
pub const BONE_FILE: &str = "bone.capf";
pub const META_FILE: &str = "case.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseMeta {
    /// Starting drill position; defaults to just above the grid's top center.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub home_mm: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drill: Option<DrillConfig>,
}

#[derive(Debug, Clone)]
pub struct Case {
    pub id: String,
    pub volume: LabelVolume,
    pub plan: ZonePlan,
    pub bone: DistanceField,
    pub meta: CaseMeta,
}

impl Case {
    pub fn home_mm(&self) -> [f64; 3] {
        self.meta.home_mm.unwrap_or_else(|| {
            let (lo, hi) = self.plan.spec.bounds();
            [
                (lo[0] + hi[0]) / 2.0,
                (lo[1] + hi[1]) / 2.0,
                hi[2] - self.plan.spec.spacing[2] / 2.0,
            ]
        })
    }

    pub fn drill_config(&self) -> DrillConfig {
        self.meta.drill.clone().unwrap_or_default()
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let id = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::InvalidParams(format!("bad case directory {}", dir.display())))?
            .to_string();
        let volume = load_volume(dir.join(VOLUME_FILE))?;
        let plan = load_plan(dir.join(PLAN_FILE))?;
        let bone = load_field(dir.join(BONE_FILE))?;
        if plan.spec != *volume.spec() || bone.spec != plan.spec {
            return Err(Error::SpecMismatch);
        }
        let meta_path = dir.join(META_FILE);
        let meta = if meta_path.exists() {
            serde_json::from_slice(&fs::read(&meta_path)?)
                .map_err(|e| Error::MalformedHeader(format!("{}: {e}", meta_path.display())))?
        } else {
            CaseMeta::default()
        };
        if let Some(cfg) = &meta.drill {
            cfg.validate()?;
        }
        Ok(Self {
            id,
            volume,
            plan,
            bone,
            meta,
        })
    }

    /// Writes the case into `parent/<id>/`, returning that directory.
    pub fn save(&self, parent: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = parent.as_ref().join(&self.id);
        fs::create_dir_all(&dir)?;
        save_volume(dir.join(VOLUME_FILE), &self.volume)?;
        save_plan(dir.join(PLAN_FILE), &self.plan)?;
        save_field(dir.join(BONE_FILE), &self.bone)?;
        let meta = serde_json::to_vec_pretty(&self.meta).map_err(std::io::Error::from)?;
        fs::write(dir.join(META_FILE), meta)?;
        Ok(dir)
    }
}

/// Case ids under `dir`: subdirectories holding at least a plan file, sorted.
pub fn list_cases(dir: impl AsRef<Path>) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if entry.path().join(PLAN_FILE).is_file() {
            if let Some(name) = entry.file_name().to_str() {
                ids.push(name.to_string());
            }
        }
    }
    ids.sort();
    Ok(ids)
}
