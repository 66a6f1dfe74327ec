//! Browser demo over the synthetic slab case.
//!
//! Three operations, each drawn as an x/z slice at a chosen y row:
//!
//! * `field_image`: composite distance to the protected structures, colored
//!   with adjustable red and yellow thresholds.
//! * `replan` + `zone_image`: zone plan for adjustable shell thicknesses.
//! * `drill`: one engine tick at a pose, returning force, pitch and warning.
//!
//! Images are RGBA, row 0 at the top of the slab (highest z).

use drillguide::engine::{bone_distance, tick, DrillConfig, DrillState};
use drillguide::field::{compose_min, CompositeField};
use drillguide::plan::{blend_color, build_plan, ColorStops, Protect, ShellParams, Zone, ZonePlan};
use drillguide::synthetic::{slab_case, SlabLayout, SyntheticCase};
use wasm_bindgen::prelude::*;

const EMPTY_RGBA: [u8; 4] = [24, 26, 32, 255];
const ANATOMY_RGBA: [u8; 4] = [205, 200, 185, 255];
const REMOVED_RGBA: [u8; 4] = [60, 62, 70, 255];

fn zone_rgba(zone: Zone) -> [u8; 4] {
    match zone {
        Zone::Empty => EMPTY_RGBA,
        Zone::Anatomy => ANATOMY_RGBA,
        Zone::Green => [46, 170, 80, 255],
        Zone::Yellow => [235, 200, 40, 255],
        Zone::Red => [210, 50, 45, 255],
    }
}

#[wasm_bindgen]
pub struct Demo {
    case: SyntheticCase,
    protect: CompositeField,
    plan: ZonePlan,
    cfg: DrillConfig,
    state: DrillState,
    guidance: bool,
}

/// Outcome of one drill tick.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct TickInfo {
    pub t_ms: u32,
    pub removed: u32,
    pub force_n: f64,
    pub audio_hz: f64,
    pub bone_mm: f64,
    warning: String,
}

#[wasm_bindgen]
impl TickInfo {
    #[wasm_bindgen(getter)]
    pub fn warning(&self) -> String {
        self.warning.clone()
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<Demo, String> {
        let case = slab_case(&SlabLayout::default(), &ShellParams::default()).map_err(|e| e.to_string())?;
        let fields: Vec<_> = case.protect.iter().map(|(f, _)| f.clone()).collect();
        let protect = compose_min(&fields).map_err(|e| e.to_string())?;
        let plan = case.plan.clone();
        let state = DrillState::new(&plan, case.home_mm);
        Ok(Demo {
            case,
            protect,
            plan,
            cfg: DrillConfig::default(),
            state,
            guidance: true,
        })
    }

    pub fn width(&self) -> u32 {
        self.plan.spec.dims[0] as u32
    }

    pub fn height(&self) -> u32 {
        self.plan.spec.dims[2] as u32
    }

    pub fn rows(&self) -> u32 {
        self.plan.spec.dims[1] as u32
    }

    pub fn spacing_mm(&self) -> f64 {
        self.plan.spec.spacing[0]
    }

    fn slice(&self, row: u32, mut pixel: impl FnMut(usize) -> [u8; 4]) -> Vec<u8> {
        let [nx, ny, nz] = self.plan.spec.dims;
        let j = (row as usize).min(ny - 1);
        let mut out = Vec::with_capacity(nx * nz * 4);
        for k in (0..nz).rev() {
            for i in 0..nx {
                out.extend(pixel(self.plan.spec.index([i, j, k])));
            }
        }
        out
    }

    /// Distance to the nearest protected structure, blended red to green.
    pub fn field_image(&self, row: u32, t_red: f64, t_yellow: f64) -> Result<Vec<u8>, String> {
        let stops = ColorStops::new(t_red, t_yellow).map_err(|e| e.to_string())?;
        Ok(self.slice(row, |idx| {
            if self.case.volume.labels()[idx] == 0 {
                return EMPTY_RGBA;
            }
            let [r, g, b] = blend_color(self.protect.values[idx] as f64, &stops);
            [(r * 255.0).round() as u8, (g * 255.0).round() as u8, (b * 255.0).round() as u8, 255]
        }))
    }

    /// Rebuilds the zone plan and resets the drill. Returns zone counts as
    /// `[green, yellow, red, anatomy]`.
    pub fn replan(&mut self, red_posterior: f64, red_lateral: f64, yellow: f64) -> Result<Vec<u32>, String> {
        let reds = [red_posterior, red_lateral];
        let protect: Vec<Protect> = self
            .case
            .protect
            .iter()
            .zip(reds)
            .map(|((field, _), red_mm)| Protect { field, red_mm })
            .collect();
        self.plan = build_plan(&self.case.volume, &self.case.target_codes, &protect, yellow).map_err(|e| e.to_string())?;
        self.reset();
        Ok(self.counts())
    }

    pub fn counts(&self) -> Vec<u32> {
        let c = &self.plan.counts;
        [c.green, c.yellow, c.red, c.anatomy].map(|n| n as u32).to_vec()
    }

    /// Zones with removed voxels darkened. Without guidance every target
    /// voxel is drawn as plain bone.
    pub fn zone_image(&self, row: u32) -> Vec<u8> {
        self.slice(row, |idx| {
            let zone = self.plan.zones[idx];
            if zone != Zone::Empty && !self.state.is_present(idx) {
                REMOVED_RGBA
            } else if !self.guidance && zone != Zone::Empty {
                ANATOMY_RGBA
            } else {
                zone_rgba(zone)
            }
        })
    }

    pub fn set_guidance(&mut self, on: bool) {
        self.guidance = on;
    }

    pub fn reset(&mut self) {
        self.state = DrillState::new(&self.plan, self.case.home_mm);
    }

    pub fn remaining(&self) -> u32 {
        self.state.remaining_count() as u32
    }

    /// Runs one tick with the burr at (x, y, z) mm.
    pub fn drill(&mut self, x: f64, y: f64, z: f64, on: bool) -> Result<TickInfo, String> {
        let pose = [x, y, z];
        let out = tick(&mut self.state, pose, on, &self.cfg, &self.plan, &self.case.bone).map_err(|e| e.to_string())?;
        Ok(TickInfo {
            t_ms: out.t_ms as u32,
            removed: out.removed.len() as u32,
            force_n: out.force,
            audio_hz: out.audio_hz,
            bone_mm: bone_distance(&self.case.bone, pose),
            warning: if self.guidance { out.warning.as_str() } else { "NONE" }.to_string(),
        })
    }
}
