//! Fixed-timestep drilling with a spherical burr.
//!
//! Each tick removes the still-present voxels closest to the burr center,
//! up to a per-tick cap that drops from the cancellous rate to the cortical
//! rate while the tip sits in the outer bone layer. Force and drill pitch
//! are derived from the same bone distance sample.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{RemovalEvent, RemovalLog};
use crate::field::DistanceField;
use crate::plan::{Zone, ZonePlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DrillConfig {
    /// Burr diameter, mm.
    pub tip_diameter: f64,
    /// Tick length, ms.
    pub tick: u64,
    /// Voxels per tick in cancellous bone.
    pub rate_cancellous: u32,
    /// Voxels per tick in the cortical layer.
    pub rate_cortical: u32,
    /// Force ceiling, N.
    pub f_max: f64,
    /// Baseline drill pitch, Hz.
    pub f_base: f64,
    /// Pitch shift at the bone surface, Hz.
    pub delta_f: f64,
    /// Depth of the cortical layer, mm.
    pub cortical_shell: f64,
}

impl Default for DrillConfig {
    fn default() -> Self {
        Self {
            tip_diameter: 4.0,
            tick: 5,
            rate_cancellous: 10,
            rate_cortical: 1,
            f_max: 3.2,
            f_base: 220.0,
            delta_f: 220.0,
            cortical_shell: 1.5,
        }
    }
}

impl DrillConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(self.tip_diameter.is_finite() && self.tip_diameter > 0.0) {
            return bad("tip_diameter must be > 0");
        }
        if self.tick == 0 {
            return bad("tick must be > 0");
        }
        if self.rate_cancellous < 1 || self.rate_cortical < 1 {
            return bad("removal rates must be >= 1");
        }
        if !(self.f_max.is_finite() && self.f_max >= 0.0) {
            return bad("f_max must be >= 0");
        }
        if !(self.f_base.is_finite() && self.delta_f.is_finite()) {
            return bad("audio parameters must be finite");
        }
        if !(self.cortical_shell.is_finite() && self.cortical_shell >= 0.0) {
            return bad("cortical_shell must be >= 0");
        }
        Ok(())
    }

    pub fn tip_radius(&self) -> f64 {
        self.tip_diameter / 2.0
    }

    /// Whether a bone distance sample (negative inside bone) lies in the cortical layer.
    pub fn is_cortical(&self, bone_mm: f64) -> bool {
        bone_mm <= 0.0 && bone_mm >= -self.cortical_shell
    }

    /// Density mapping for the pitch shift: 1 at the bone surface, falling
    /// linearly to 0 at the inner edge of the cortical layer, 0 outside bone.
    pub fn alpha(&self, bone_mm: f64) -> f64 {
        if bone_mm > 0.0 || bone_mm.is_nan() {
            return 0.0;
        }
        if self.cortical_shell == 0.0 {
            return if bone_mm == 0.0 { 1.0 } else { 0.0 };
        }
        (1.0 - bone_mm.abs() / self.cortical_shell).clamp(0.0, 1.0)
    }

    pub fn audio_hz(&self, powered: bool, bone_mm: f64) -> f64 {
        if powered {
            self.f_base + self.delta_f * self.alpha(bone_mm)
        } else {
            0.0
        }
    }

    /// Removal cap for a tick with the tip at the given bone distance.
    pub fn rate_cap(&self, bone_mm: f64) -> u32 {
        if self.is_cortical(bone_mm) {
            self.rate_cortical
        } else {
            self.rate_cancellous
        }
    }

    /// Force scales inversely with the removal cap and is zero when nothing is cut.
    pub fn force(&self, removed: usize, cap: u32) -> f64 {
        if removed == 0 {
            0.0
        } else {
            self.f_max * (self.rate_cortical as f64 / cap as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Warning {
    None,
    Yellow,
    Red,
}

impl Warning {
    pub fn as_str(self) -> &'static str {
        match self {
            Warning::None => "NONE",
            Warning::Yellow => "YELLOW",
            Warning::Red => "RED",
        }
    }

    fn for_zone(zone: Zone) -> Warning {
        match zone {
            Zone::Red | Zone::Anatomy => Warning::Red,
            Zone::Yellow => Warning::Yellow,
            Zone::Green | Zone::Empty => Warning::None,
        }
    }
}

/// Drill pose and the material still standing.
#[derive(Debug, Clone)]
pub struct DrillState {
    pub tip_position: [f64; 3],
    pub powered: bool,
    /// Start time (ms) of the next tick.
    pub sim_time: u64,
    remaining: Vec<bool>,
    remaining_count: usize,
}

impl DrillState {
    pub fn new(plan: &ZonePlan, home: [f64; 3]) -> Self {
        let remaining: Vec<bool> = plan.zones.iter().map(|&z| z != Zone::Empty).collect();
        let remaining_count = remaining.iter().filter(|&&r| r).count();
        Self {
            tip_position: home,
            powered: false,
            sim_time: 0,
            remaining,
            remaining_count,
        }
    }

    pub fn is_present(&self, index: usize) -> bool {
        self.remaining[index]
    }

    pub fn remaining(&self) -> &[bool] {
        &self.remaining
    }

    pub fn remaining_count(&self) -> usize {
        self.remaining_count
    }

    /// Moves the clock forward to `t_ms` if it is ahead; never moves it back.
    pub fn advance_to(&mut self, t_ms: u64) {
        self.sim_time = self.sim_time.max(t_ms);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RemovedVoxel {
    pub index: usize,
    pub voxel: [usize; 3],
    pub zone: Zone,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    /// Start time of the tick, ms.
    pub t_ms: u64,
    pub removed: Vec<RemovedVoxel>,
    pub force: f64,
    pub audio_hz: f64,
    pub warning: Warning,
    /// Whether the reduced cortical cap applied.
    pub cortical: bool,
}

/// Still-present voxels whose centers lie inside the burr, nearest first,
/// ties broken by linear index.
pub fn candidates(state: &DrillState, plan: &ZonePlan, pose: [f64; 3], radius: f64) -> Vec<usize> {
    let spec = &plan.spec;
    let r2 = radius * radius;
    let mut range = [(0usize, 0usize); 3];
    for a in 0..3 {
        let lo = ((pose[a] - radius - spec.origin[a]) / spec.spacing[a] - 0.5).ceil();
        let hi = ((pose[a] + radius - spec.origin[a]) / spec.spacing[a] - 0.5).floor();
        let lo = lo.max(0.0);
        let hi = hi.min(spec.dims[a] as f64 - 1.0);
        if hi < lo {
            return Vec::new();
        }
        range[a] = (lo as usize, hi as usize);
    }
    let mut hits: Vec<(f64, usize)> = Vec::new();
    for k in range[2].0..=range[2].1 {
        for j in range[1].0..=range[1].1 {
            for i in range[0].0..=range[0].1 {
                let idx = spec.index([i, j, k]);
                if !state.remaining[idx] {
                    continue;
                }
                let c = spec.center([i, j, k]);
                let d2: f64 = (0..3).map(|a| (c[a] - pose[a]).powi(2)).sum();
                if d2 <= r2 {
                    hits.push((d2, idx));
                }
            }
        }
    }
    hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    hits.into_iter().map(|(_, idx)| idx).collect()
}

/// Bone distance at `pose`; positions outside the grid are outside bone.
pub fn bone_distance(bone: &DistanceField, pose: [f64; 3]) -> f64 {
    bone.sample(pose).map_or(f64::INFINITY, f64::from)
}

/// Advances the drill by one tick.
pub fn tick(
    state: &mut DrillState,
    pose: [f64; 3],
    powered: bool,
    cfg: &DrillConfig,
    plan: &ZonePlan,
    bone: &DistanceField,
) -> Result<TickOutput> {
    if plan.spec != bone.spec || state.remaining.len() != plan.zones.len() {
        return Err(Error::SpecMismatch);
    }
    if pose.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinitePose);
    }
    let t_ms = state.sim_time;
    state.sim_time += cfg.tick;
    state.tip_position = pose;
    state.powered = powered;

    let bone_mm = bone_distance(bone, pose);
    let cortical = cfg.is_cortical(bone_mm);
    let mut removed = Vec::new();
    if powered {
        let cap = cfg.rate_cap(bone_mm);
        for idx in candidates(state, plan, pose, cfg.tip_radius())
            .into_iter()
            .take(cap as usize)
        {
            state.remaining[idx] = false;
            state.remaining_count -= 1;
            removed.push(RemovedVoxel {
                index: idx,
                voxel: plan.spec.coords(idx),
                zone: plan.zones[idx],
            });
        }
    }
    let cap = cfg.rate_cap(bone_mm);
    let warning = removed
        .iter()
        .map(|r| Warning::for_zone(r.zone))
        .max()
        .unwrap_or(Warning::None);
    Ok(TickOutput {
        t_ms,
        force: cfg.force(removed.len(), cap),
        audio_hz: cfg.audio_hz(powered, bone_mm),
        warning,
        cortical,
        removed,
    })
}

/// One line of a trajectory file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t_ms: u64,
    pub pos_mm: [f64; 3],
    pub on: bool,
}

pub fn read_trajectory(reader: impl BufRead) -> Result<Vec<TrajectorySample>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: n + 1,
            detail: e.to_string(),
        })?;
        out.push(s);
    }
    Ok(out)
}

pub fn write_trajectory(mut writer: impl Write, traj: &[TrajectorySample]) -> Result<()> {
    for s in traj {
        serde_json::to_writer(&mut writer, s).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Checks a trajectory's timestamps: strictly increasing and on the tick grid.
pub fn validate_trajectory(traj: &[TrajectorySample], cfg: &DrillConfig) -> Result<()> {
    let mut prev: Option<u64> = None;
    for (index, s) in traj.iter().enumerate() {
        if s.t_ms % cfg.tick != 0 || prev.is_some_and(|p| s.t_ms <= p) {
            return Err(Error::NonMonotoneTimestamps {
                index,
                t_ms: s.t_ms,
            });
        }
        if s.pos_mm.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinitePose);
        }
        prev = Some(s.t_ms);
    }
    Ok(())
}

/// Full result of replaying a trajectory.
#[derive(Debug, Clone)]
pub struct Replay {
    pub log: RemovalLog,
    pub ticks: Vec<TickOutput>,
    pub state: DrillState,
}

/// Replays a trajectory from the plan's intact state, one tick per sample.
pub fn replay_trajectory(
    plan: &ZonePlan,
    bone: &DistanceField,
    cfg: &DrillConfig,
    traj: &[TrajectorySample],
) -> Result<Replay> {
    cfg.validate()?;
    validate_trajectory(traj, cfg)?;
    let home = traj.first().map_or([0.0; 3], |s| s.pos_mm);
    let mut state = DrillState::new(plan, home);
    let mut log = RemovalLog::default();
    let mut ticks = Vec::with_capacity(traj.len());
    for s in traj {
        state.advance_to(s.t_ms);
        let out = tick(&mut state, s.pos_mm, s.on, cfg, plan, bone)?;
        log.extend(out.removed.iter().map(|r| RemovalEvent {
            t_ms: out.t_ms,
            voxel: r.voxel,
            zone: r.zone,
        }));
        ticks.push(out);
    }
    Ok(Replay { log, ticks, state })
}

/// Replays a trajectory and returns the removal log.
pub fn run_trajectory(
    plan: &ZonePlan,
    bone: &DistanceField,
    cfg: &DrillConfig,
    traj: &[TrajectorySample],
) -> Result<RemovalLog> {
    replay_trajectory(plan, bone, cfg, traj).map(|r| r.log)
}
