//! Guidance zones: which voxels must go, which are a caution buffer, and
//! which must not be touched.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::DistanceField;
use crate::volume::{GridSpec, LabelVolume, EMPTY_CODE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
#[repr(u8)]
pub enum Zone {
    Empty = 0,
    Anatomy = 1,
    Green = 2,
    Yellow = 3,
    Red = 4,
}

impl Zone {
    pub const ALL: [Zone; 5] = [Zone::Empty, Zone::Anatomy, Zone::Green, Zone::Yellow, Zone::Red];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Zone> {
        Zone::ALL.get(code as usize).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Zone::Empty => "EMPTY",
            Zone::Anatomy => "ANATOMY",
            Zone::Green => "GREEN",
            Zone::Yellow => "YELLOW",
            Zone::Red => "RED",
        }
    }

    /// Removing this voxel counts toward a breach.
    pub fn is_forbidden(self) -> bool {
        matches!(self, Zone::Red | Zone::Anatomy)
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Zone {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Zone::ALL
            .into_iter()
            .find(|z| z.as_str() == s)
            .ok_or_else(|| format!("unknown zone {s:?}"))
    }
}

/// Voxel totals per zone.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub struct ZoneCounts {
    pub empty: usize,
    pub anatomy: usize,
    pub green: usize,
    pub yellow: usize,
    pub red: usize,
}

impl ZoneCounts {
    pub fn get(&self, zone: Zone) -> usize {
        match zone {
            Zone::Empty => self.empty,
            Zone::Anatomy => self.anatomy,
            Zone::Green => self.green,
            Zone::Yellow => self.yellow,
            Zone::Red => self.red,
        }
    }

    fn bump(&mut self, zone: Zone) {
        match zone {
            Zone::Empty => self.empty += 1,
            Zone::Anatomy => self.anatomy += 1,
            Zone::Green => self.green += 1,
            Zone::Yellow => self.yellow += 1,
            Zone::Red => self.red += 1,
        }
    }

    pub fn non_empty(&self) -> usize {
        self.anatomy + self.green + self.yellow + self.red
    }

    pub fn from_zones(zones: &[Zone]) -> Self {
        let mut c = ZoneCounts::default();
        for &z in zones {
            c.bump(z);
        }
        c
    }
}

/// Shell thicknesses (mm) used to lay out the zones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShellParams {
    /// Red (no-drill) thickness around each protected structure.
    pub red_thickness_per_structure: BTreeMap<String, f64>,
    /// Caution band laid in front of every red boundary.
    pub yellow_thickness: f64,
    /// Depth of the dense outer bone layer.
    pub cortical_shell: f64,
}

impl Default for ShellParams {
    fn default() -> Self {
        Self {
            red_thickness_per_structure: BTreeMap::from([
                ("VF-posterior".to_string(), 1.0),
                ("VF-lateral".to_string(), 0.1),
            ]),
            yellow_thickness: 1.0,
            cortical_shell: 1.5,
        }
    }
}

impl ShellParams {
    /// Red thickness for a structure, falling back to 1 mm for unlisted names.
    pub fn red_for(&self, structure: &str) -> f64 {
        self.red_thickness_per_structure
            .get(structure)
            .copied()
            .unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !self.red_thickness_per_structure.values().all(|&v| ok(v))
            || !ok(self.yellow_thickness)
            || !ok(self.cortical_shell)
        {
            return Err(Error::InvalidParams(
                "shell thicknesses must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Per-voxel zone assignment plus the planned totals that completion rates
/// are measured against.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonePlan {
    pub spec: GridSpec,
    pub zones: Vec<Zone>,
    pub counts: ZoneCounts,
    pub params: ShellParams,
}

impl ZonePlan {
    pub fn new(spec: GridSpec, zones: Vec<Zone>, params: ShellParams) -> Result<Self> {
        if zones.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.len(),
                found: zones.len(),
            });
        }
        let counts = ZoneCounts::from_zones(&zones);
        Ok(Self {
            spec,
            zones,
            counts,
            params,
        })
    }

    #[inline]
    pub fn zone(&self, voxel: [usize; 3]) -> Zone {
        self.zones[self.spec.index(voxel)]
    }
}

/// One protected structure and the red thickness drawn around it.
#[derive(Debug, Clone, Copy)]
pub struct Protect<'a> {
    pub field: &'a DistanceField,
    pub red_mm: f64,
}

/// Lays out zones over `volume`.
///
/// Target voxels become RED where any protected field is within its red
/// thickness, YELLOW where within red + `yellow_mm`, GREEN otherwise. Labelled
/// voxels outside the target become ANATOMY, unlabelled ones EMPTY.
pub fn build_plan(
    volume: &LabelVolume,
    target_codes: &BTreeSet<u8>,
    protect: &[Protect<'_>],
    yellow_mm: f64,
) -> Result<ZonePlan> {
    let spec = *volume.spec();
    if protect.iter().any(|p| p.field.spec != spec) {
        return Err(Error::SpecMismatch);
    }
    let mut red_thickness_per_structure = BTreeMap::new();
    for p in protect {
        if red_thickness_per_structure
            .insert(p.field.structure_name.clone(), p.red_mm)
            .is_some()
        {
            return Err(Error::InvalidParams(format!(
                "structure {:?} is protected twice",
                p.field.structure_name
            )));
        }
    }
    let params = ShellParams {
        red_thickness_per_structure,
        yellow_thickness: yellow_mm,
        ..ShellParams::default()
    };
    params.validate()?;

    let mut is_target = [false; 256];
    for &c in target_codes {
        if c != EMPTY_CODE {
            is_target[c as usize] = true;
        }
    }

    let mut zones = Vec::with_capacity(spec.len());
    let mut any_target = false;
    for (idx, &code) in volume.labels().iter().enumerate() {
        let zone = if is_target[code as usize] {
            any_target = true;
            let mut zone = Zone::Green;
            for p in protect {
                let d = p.field.values[idx] as f64;
                if d <= p.red_mm {
                    zone = Zone::Red;
                    break;
                }
                if d <= p.red_mm + yellow_mm {
                    zone = Zone::Yellow;
                }
            }
            zone
        } else if code == EMPTY_CODE {
            Zone::Empty
        } else {
            Zone::Anatomy
        };
        zones.push(zone);
    }
    if !any_target {
        return Err(Error::EmptyTarget);
    }
    ZonePlan::new(spec, zones, params)
}

/// Exact per-zone histogram of a plan.
pub fn plan_counts(plan: &ZonePlan) -> ZoneCounts {
    ZoneCounts::from_zones(&plan.zones)
}

pub type Rgb = [f64; 3];

/// Anchor colors and the distance thresholds (mm) between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorStops {
    pub red_anchor: Rgb,
    pub yellow_anchor: Rgb,
    pub green_anchor: Rgb,
    pub t_red: f64,
    pub t_yellow: f64,
}

impl ColorStops {
    pub fn new(t_red: f64, t_yellow: f64) -> Result<Self> {
        Self {
            t_red,
            t_yellow,
            ..Self::default()
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.t_red.is_finite() && self.t_yellow.is_finite() && self.t_red < self.t_yellow) {
            return Err(Error::InvalidParams(format!(
                "color thresholds need t_red < t_yellow, got {} and {}",
                self.t_red, self.t_yellow
            )));
        }
        Ok(self)
    }
}

impl Default for ColorStops {
    fn default() -> Self {
        Self {
            red_anchor: [1.0, 0.0, 0.0],
            yellow_anchor: [1.0, 1.0, 0.0],
            green_anchor: [0.0, 1.0, 0.0],
            t_red: 1.0,
            t_yellow: 2.0,
        }
    }
}

fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
    std::array::from_fn(|c| a[c] + (b[c] - a[c]) * t)
}

/// Piecewise-linear red → yellow → green ramp over distance `d` (mm).
///
/// Red up to `t_red`, yellow at `t_yellow`, green from `t_yellow` plus one
/// more band of the same width onward.
pub fn blend_color(d: f64, stops: &ColorStops) -> Rgb {
    let band = stops.t_yellow - stops.t_red;
    if d.is_nan() || d <= stops.t_red {
        stops.red_anchor
    } else if d <= stops.t_yellow {
        lerp(stops.red_anchor, stops.yellow_anchor, (d - stops.t_red) / band)
    } else if d < stops.t_yellow + band {
        lerp(stops.yellow_anchor, stops.green_anchor, (d - stops.t_yellow) / band)
    } else {
        stops.green_anchor
    }
}
