//! JSON frames carried on `/sessions/{id}/stream`.

use serde::{Deserialize, Serialize};

use drillguide::engine::{TickOutput, Warning};
use drillguide::plan::Zone;

/// Client to server: one drill pose per tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseFrame {
    pub t: u64,
    pub pos_mm: [f64; 3],
    pub on: bool,
}

/// `[i, j, k, "ZONE"]`, or `[i, j, k]` when guidance is off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RemovedEntry {
    Zoned(usize, usize, usize, Zone),
    Bare(usize, usize, usize),
}

impl RemovedEntry {
    pub fn voxel(&self) -> [usize; 3] {
        match *self {
            RemovedEntry::Zoned(i, j, k, _) | RemovedEntry::Bare(i, j, k) => [i, j, k],
        }
    }

    pub fn zone(&self) -> Option<Zone> {
        match *self {
            RemovedEntry::Zoned(_, _, _, z) => Some(z),
            RemovedEntry::Bare(..) => None,
        }
    }
}

/// Server to client: the outcome of one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickFrame {
    pub t: u64,
    pub removed: Vec<RemovedEntry>,
    pub force_n: f64,
    pub audio_hz: f64,
    pub warning: Warning,
}

impl TickFrame {
    /// Without guidance the zone of each voxel and the zone warning are withheld.
    pub fn from_tick(out: &TickOutput, guidance: bool) -> Self {
        let removed = out
            .removed
            .iter()
            .map(|r| {
                let [i, j, k] = r.voxel;
                if guidance {
                    RemovedEntry::Zoned(i, j, k, r.zone)
                } else {
                    RemovedEntry::Bare(i, j, k)
                }
            })
            .collect();
        Self {
            t: out.t_ms,
            removed,
            force_n: out.force,
            audio_hz: out.audio_hz,
            warning: if guidance { out.warning } else { Warning::None },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorFrame {
    pub error: String,
    pub detail: String,
}

/// Anything the server may send on the stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutFrame {
    Tick(TickFrame),
    Error(ErrorFrame),
}

impl OutFrame {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frames always serialize")
    }
}
