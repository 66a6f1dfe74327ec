//! Synthetic cases for tests, demos and the CLI `fixture` command.

use std::collections::{BTreeMap, BTreeSet};

use crate::case::{Case, CaseMeta};
use crate::engine::TrajectorySample;
use crate::error::Result;
use crate::field::{signed_edt, signed_edt_of_mask, DistanceField};
use crate::plan::{build_plan, Protect, ShellParams, ZonePlan};
use crate::volume::{GridSpec, LabelVolume, DEFAULT_SPACING_MM};

pub const CODE_VF_POSTERIOR: u8 = 1;
pub const CODE_VF_LATERAL: u8 = 2;
pub const CODE_LB: u8 = 3;
/// Resection segments A through E use consecutive codes from here.
pub const CODE_SEGMENT_A: u8 = 10;

/// Geometry of the slab case, in voxels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabLayout {
    pub dims: [usize; 3],
    pub spacing: f64,
    /// Layers of protected structure under the target.
    pub floor: usize,
    /// Target thickness above the floor.
    pub target: usize,
    /// Width of the lateral protected wall at low x.
    pub lateral: usize,
    /// Width of the untargeted bone rim at high x.
    pub rim: usize,
}

impl Default for SlabLayout {
    fn default() -> Self {
        Self {
            dims: [24, 12, 20],
            spacing: DEFAULT_SPACING_MM,
            floor: 4,
            target: 10,
            lateral: 3,
            rim: 3,
        }
    }
}

/// A planned case: volume, protected-structure fields, bone field and plan.
#[derive(Debug, Clone)]
pub struct SyntheticCase {
    pub volume: LabelVolume,
    pub target_codes: BTreeSet<u8>,
    pub protect: Vec<(DistanceField, f64)>,
    pub bone: DistanceField,
    pub plan: ZonePlan,
    /// A pose above the target, clear of any material.
    pub home_mm: [f64; 3],
}

impl SyntheticCase {
    /// Packages the case for a case directory or a session server.
    pub fn into_case(self, id: impl Into<String>) -> Case {
        Case {
            id: id.into(),
            volume: self.volume,
            plan: self.plan,
            bone: self.bone,
            meta: CaseMeta {
                home_mm: Some(self.home_mm),
                drill: None,
            },
        }
    }
}

pub fn segment_names() -> [&'static str; 5] {
    ["A", "B", "C", "D", "E"]
}

/// Builds the labels of a slab case: a protected floor (posterior canal
/// wall), a target slab on it split into five segments along x, a thin
/// protected wall on the low-x side and an untargeted bone rim on the
/// high-x side.
pub fn slab_volume(layout: &SlabLayout) -> Result<LabelVolume> {
    let spec = GridSpec::isotropic(layout.dims, layout.spacing)?;
    let mut palette = BTreeMap::from([
        (CODE_VF_POSTERIOR, "VF-posterior".to_string()),
        (CODE_VF_LATERAL, "VF-lateral".to_string()),
        (CODE_LB, "LB".to_string()),
    ]);
    for (n, name) in segment_names().iter().enumerate() {
        palette.insert(CODE_SEGMENT_A + n as u8, name.to_string());
    }
    let [nx, ny, nz] = layout.dims;
    let top = (layout.floor + layout.target).min(nz);
    let inner = layout.lateral..nx.saturating_sub(layout.rim);
    let inner_width = inner.len().max(1);
    let mut labels = vec![0u8; spec.len()];
    for k in 0..top {
        for j in 0..ny {
            for i in 0..nx {
                let code = if k < layout.floor {
                    CODE_VF_POSTERIOR
                } else if i < layout.lateral {
                    CODE_VF_LATERAL
                } else if i >= inner.end {
                    CODE_LB
                } else {
                    CODE_SEGMENT_A + ((i - inner.start) * 5 / inner_width) as u8
                };
                labels[spec.index([i, j, k])] = code;
            }
        }
    }
    LabelVolume::new(spec, labels, palette)
}

/// The slab case with the given shell thicknesses.
pub fn slab_case(layout: &SlabLayout, params: &ShellParams) -> Result<SyntheticCase> {
    let volume = slab_volume(layout)?;
    let target_codes: BTreeSet<u8> = (0..5).map(|n| CODE_SEGMENT_A + n).collect();
    let mut protect = Vec::new();
    for code in [CODE_VF_POSTERIOR, CODE_VF_LATERAL] {
        let field = signed_edt(&volume, &BTreeSet::from([code]))?;
        let red = params.red_for(&field.structure_name);
        protect.push((field, red));
    }
    let mut bone_codes = target_codes.clone();
    bone_codes.insert(CODE_LB);
    let mut bone = signed_edt_of_mask(&volume.mask_of(&bone_codes), "bone")?;
    bone.sources = vec!["LB".into(), "A-E".into()];
    let refs: Vec<Protect<'_>> = protect
        .iter()
        .map(|(f, red)| Protect {
            field: f,
            red_mm: *red,
        })
        .collect();
    let mut plan = build_plan(&volume, &target_codes, &refs, params.yellow_thickness)?;
    plan.params.cortical_shell = params.cortical_shell;
    let spec = volume.spec();
    let (lo, hi) = spec.bounds();
    let home_mm = [
        (lo[0] + hi[0]) / 2.0,
        (lo[1] + hi[1]) / 2.0,
        hi[2] - spec.spacing[2] / 2.0,
    ];
    Ok(SyntheticCase {
        volume,
        target_codes,
        protect,
        bone,
        plan,
        home_mm,
    })
}

/// Raster sweep over the xy extent of the grid at descending heights, one
/// sample per tick, drill powered throughout.
pub fn raster_sweep(
    spec: &GridSpec,
    z_levels_mm: &[f64],
    step_mm: f64,
    tick_ms: u64,
    dwell_ticks: usize,
) -> Vec<TrajectorySample> {
    let (lo, hi) = spec.bounds();
    let mut out = Vec::new();
    let mut t = 0u64;
    let steps = |a: usize| ((hi[a] - lo[a]) / step_mm).floor() as usize;
    for &z in z_levels_mm {
        for row in 0..=steps(1) {
            let y = lo[1] + row as f64 * step_mm;
            let cols: Vec<usize> = if row % 2 == 0 {
                (0..=steps(0)).collect()
            } else {
                (0..=steps(0)).rev().collect()
            };
            for col in cols {
                let x = lo[0] + col as f64 * step_mm;
                for _ in 0..dwell_ticks.max(1) {
                    out.push(TrajectorySample {
                        t_ms: t,
                        pos_mm: [x, y, z],
                        on: true,
                    });
                    t += tick_ms;
                }
            }
        }
    }
    out
}
