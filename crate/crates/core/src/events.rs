//! Removal logs and the metrics computed from them: breaches, completion
//! rates and drilling time.

use std::io::{BufRead, Write};
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plan::{Zone, ZonePlan};

/// Minimum run of consecutive forbidden removals that counts as a breach.
pub const BREACH_MIN_VOXELS: usize = 5;
/// Qualifying runs closer together than this (ms) merge into one breach.
pub const BREACH_MERGE_WINDOW_MS: u64 = 2000;

/// One removed voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalEvent {
    pub t_ms: u64,
    #[serde(rename = "v")]
    pub voxel: [usize; 3],
    pub zone: Zone,
}

/// Time-ordered removal events of one session.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RemovalLog(pub Vec<RemovalEvent>);

impl Deref for RemovalLog {
    type Target = Vec<RemovalEvent>;

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl DerefMut for RemovalLog {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.0
    }
}

impl FromIterator<RemovalEvent> for RemovalLog {
    fn from_iter<I: IntoIterator<Item = RemovalEvent>>(iter: I) -> Self {
        RemovalLog(iter.into_iter().collect())
    }
}

impl RemovalLog {
    /// Reads JSON lines; blank lines are skipped.
    pub fn read_jsonl(reader: impl BufRead) -> Result<Self> {
        let mut events = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let ev: RemovalEvent = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: n + 1,
                detail: e.to_string(),
            })?;
            if ev.zone == Zone::Empty {
                return Err(Error::MalformedRecord {
                    line: n + 1,
                    detail: "EMPTY voxels cannot be removed".into(),
                });
            }
            events.push(ev);
        }
        Ok(RemovalLog(events))
    }

    pub fn write_jsonl(&self, mut writer: impl Write) -> Result<()> {
        for ev in &self.0 {
            serde_json::to_writer(&mut writer, ev).map_err(std::io::Error::from)?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn is_time_ordered(&self) -> bool {
        self.0.windows(2).all(|w| w[0].t_ms <= w[1].t_ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreachEvent {
    pub start_ms: u64,
    pub end_ms: u64,
    pub voxel_count: usize,
}

/// Groups forbidden (RED or ANATOMY) removals into breach events.
///
/// Forbidden events form maximal runs of consecutive forbidden removals.
/// Runs separated by at most `merge_window_ms` (start of the next run minus
/// end of the previous one) chain into one episode, and an episode is a
/// breach when at least one of its runs holds `min_voxels` events or more.
///
/// Short runs still chain episodes together, so raising either threshold
/// can only remove or merge breaches, never split one.
pub fn detect_breaches(
    log: &[RemovalEvent],
    min_voxels: usize,
    merge_window_ms: u64,
) -> Result<Vec<BreachEvent>> {
    if let Some(i) = log.windows(2).position(|w| w[1].t_ms < w[0].t_ms) {
        return Err(Error::UnorderedLog(i + 1));
    }
    let min_voxels = min_voxels.max(1);

    struct Episode {
        start_ms: u64,
        end_ms: u64,
        voxels: usize,
        longest_run: usize,
    }

    let mut episodes: Vec<Episode> = Vec::new();
    let mut i = 0;
    while i < log.len() {
        if !log[i].zone.is_forbidden() {
            i += 1;
            continue;
        }
        let start = i;
        while i < log.len() && log[i].zone.is_forbidden() {
            i += 1;
        }
        let (run_start, run_end, len) = (log[start].t_ms, log[i - 1].t_ms, i - start);
        match episodes.last_mut() {
            Some(ep) if run_start - ep.end_ms <= merge_window_ms => {
                ep.end_ms = run_end;
                ep.voxels += len;
                ep.longest_run = ep.longest_run.max(len);
            }
            _ => episodes.push(Episode {
                start_ms: run_start,
                end_ms: run_end,
                voxels: len,
                longest_run: len,
            }),
        }
    }
    Ok(episodes
        .into_iter()
        .filter(|ep| ep.longest_run >= min_voxels)
        .map(|ep| BreachEvent {
            start_ms: ep.start_ms,
            end_ms: ep.end_ms,
            voxel_count: ep.voxels,
        })
        .collect())
}

/// Percent of each zone's planned voxels that were removed. `None` marks a
/// zone with nothing planned.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CompletionRates {
    pub green: Option<f64>,
    pub yellow: Option<f64>,
    pub red: Option<f64>,
    pub anatomy: Option<f64>,
}

impl CompletionRates {
    pub fn get(&self, zone: Zone) -> Option<f64> {
        match zone {
            Zone::Green => self.green,
            Zone::Yellow => self.yellow,
            Zone::Red => self.red,
            Zone::Anatomy => self.anatomy,
            Zone::Empty => None,
        }
    }
}

pub fn completion_rates(log: &[RemovalEvent], plan: &ZonePlan) -> Result<CompletionRates> {
    let mut removed = [0usize; 5];
    for ev in log {
        let inside = ev
            .voxel
            .iter()
            .zip(plan.spec.dims)
            .all(|(&c, n)| c < n);
        if !inside {
            return Err(Error::UnknownVoxel(ev.voxel));
        }
        removed[ev.zone.code() as usize] += 1;
    }
    let pct = |zone: Zone| {
        let planned = plan.counts.get(zone);
        (planned > 0).then(|| 100.0 * removed[zone.code() as usize] as f64 / planned as f64)
    };
    Ok(CompletionRates {
        green: pct(Zone::Green),
        yellow: pct(Zone::Yellow),
        red: pct(Zone::Red),
        anatomy: pct(Zone::Anatomy),
    })
}

/// Seconds from the first to the last removal.
pub fn drill_time(log: &[RemovalEvent]) -> f64 {
    match (log.first(), log.last()) {
        (Some(first), Some(last)) if log.len() >= 2 => {
            last.t_ms.saturating_sub(first.t_ms) as f64 / 1000.0
        }
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::ShellParams;
    use crate::volume::GridSpec;

    fn ev(t_ms: u64, zone: Zone) -> RemovalEvent {
        RemovalEvent {
            t_ms,
            voxel: [0, 0, 0],
            zone,
        }
    }

    #[test]
    fn four_reds_are_not_a_breach() {
        let mut log: Vec<_> = (0..4).map(|i| ev(i * 5, Zone::Red)).collect();
        log.push(ev(20, Zone::Green));
        assert!(detect_breaches(&log, 5, 2000).unwrap().is_empty());
    }

    #[test]
    fn five_reds_are_one_breach() {
        let log: Vec<_> = (0..5).map(|i| ev(i * 200, Zone::Red)).collect();
        let b = detect_breaches(&log, 5, 2000).unwrap();
        assert_eq!(
            b,
            vec![BreachEvent {
                start_ms: 0,
                end_ms: 800,
                voxel_count: 5
            }]
        );
    }

    #[test]
    fn anatomy_counts_as_forbidden() {
        let log: Vec<_> = (0..5).map(|i| ev(i, Zone::Anatomy)).collect();
        assert_eq!(detect_breaches(&log, 5, 2000).unwrap().len(), 1);
    }

    #[test]
    fn unordered_log_is_rejected() {
        let log = [ev(10, Zone::Red), ev(5, Zone::Red)];
        assert!(matches!(detect_breaches(&log, 5, 2000), Err(Error::UnorderedLog(1))));
    }

    #[test]
    fn completion_counts_against_plan() {
        let spec = GridSpec::isotropic([20, 10, 1], 1.0).unwrap();
        let plan = ZonePlan::new(spec, vec![Zone::Green; 200], ShellParams::default()).unwrap();
        let log: Vec<_> = (0..150).map(|i| ev(i, Zone::Green)).collect();
        let c = completion_rates(&log, &plan).unwrap();
        assert_eq!(c.green, Some(75.0));
        assert_eq!(c.yellow, None);
        assert_eq!(completion_rates(&[], &plan).unwrap().green, Some(0.0));
        let stray = [RemovalEvent {
            t_ms: 0,
            voxel: [20, 0, 0],
            zone: Zone::Green,
        }];
        assert!(matches!(completion_rates(&stray, &plan), Err(Error::UnknownVoxel(_))));
    }

    #[test]
    fn drill_time_spans_first_to_last() {
        assert_eq!(drill_time(&[ev(1000, Zone::Green), ev(243_000, Zone::Green)]), 242.0);
        assert_eq!(drill_time(&[ev(1000, Zone::Green)]), 0.0);
        assert_eq!(drill_time(&[]), 0.0);
    }

    #[test]
    fn jsonl_line_shape() {
        let log = RemovalLog(vec![RemovalEvent {
            t_ms: 15,
            voxel: [1, 2, 3],
            zone: Zone::Yellow,
        }]);
        let bytes = log.to_jsonl_bytes();
        assert_eq!(
            std::str::from_utf8(&bytes).unwrap(),
            "{\"t_ms\":15,\"v\":[1,2,3],\"zone\":\"YELLOW\"}\n"
        );
        assert_eq!(RemovalLog::read_jsonl(&bytes[..]).unwrap(), log);
        assert!(RemovalLog::read_jsonl(&b"{\"t_ms\":1,\"v\":[0,0,0],\"zone\":\"EMPTY\"}\n"[..]).is_err());
        assert!(RemovalLog::read_jsonl(&b"{\"t_ms\":1}\n"[..]).is_err());
    }
}
