//! Case catalog and live drilling sessions, independent of any transport.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use drillguide::case::{list_cases, Case};
use drillguide::engine::{tick, DrillConfig, DrillState};
use drillguide::events::{RemovalEvent, RemovalLog};
use drillguide::formats::{plan_bytes, volume_bytes};
use drillguide::report::{session_metrics, Condition, SessionLabel, SessionMetrics};

use crate::error::{ServiceError, ServiceResult};
use crate::protocol::{OutFrame, PoseFrame, TickFrame};

pub const DEFAULT_MAX_SESSIONS: usize = 16;

/// A loaded case plus its served file bytes.
#[derive(Debug)]
pub struct CatalogEntry {
    pub case: Case,
    pub volume_bytes: Vec<u8>,
    pub plan_bytes: Vec<u8>,
}

/// Read-only set of cases, loaded once.
#[derive(Debug, Default)]
pub struct Catalog {
    cases: BTreeMap<String, Arc<CatalogEntry>>,
}

impl Catalog {
    pub fn load(dir: impl AsRef<Path>) -> drillguide::Result<Self> {
        let dir = dir.as_ref();
        let mut cases = BTreeMap::new();
        for id in list_cases(dir)? {
            let case = Case::load(dir.join(&id))?;
            let entry = CatalogEntry {
                volume_bytes: volume_bytes(&case.volume),
                plan_bytes: plan_bytes(&case.plan),
                case,
            };
            cases.insert(id, Arc::new(entry));
        }
        Ok(Self { cases })
    }

    pub fn from_cases(cases: impl IntoIterator<Item = Case>) -> Self {
        let cases = cases
            .into_iter()
            .map(|case| {
                let entry = CatalogEntry {
                    volume_bytes: volume_bytes(&case.volume),
                    plan_bytes: plan_bytes(&case.plan),
                    case,
                };
                (entry.case.id.clone(), Arc::new(entry))
            })
            .collect();
        Self { cases }
    }

    pub fn ids(&self) -> Vec<String> {
        self.cases.keys().cloned().collect()
    }

    pub fn get(&self, id: &str) -> ServiceResult<Arc<CatalogEntry>> {
        self.cases
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownCase(id.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub session_id: String,
    pub case_id: String,
    pub guidance_enabled: bool,
    pub cfg: DrillConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub case_id: String,
    pub guidance_enabled: bool,
    /// Pairing unit for reports; defaults to the session id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinishedSession {
    pub session_id: String,
    pub log_path: PathBuf,
    pub metrics: SessionMetrics,
}

/// One drilling attempt: one engine instance fed by one pose stream.
#[derive(Debug)]
pub struct Session {
    pub descriptor: SessionDescriptor,
    subject: String,
    entry: Arc<CatalogEntry>,
    state: DrillState,
    log: RemovalLog,
    closed: bool,
}

impl Session {
    pub fn new(descriptor: SessionDescriptor, subject: String, entry: Arc<CatalogEntry>) -> Self {
        let state = DrillState::new(&entry.case.plan, entry.case.home_mm());
        Self {
            descriptor,
            subject,
            entry,
            state,
            log: RemovalLog::default(),
            closed: false,
        }
    }

    pub fn log(&self) -> &RemovalLog {
        &self.log
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Runs one tick. The server clock is authoritative: the tick starts at
    /// the later of the next free tick slot and the client time rounded down
    /// to the tick grid.
    pub fn handle_pose(&mut self, pose: PoseFrame) -> ServiceResult<TickFrame> {
        if self.closed {
            return Err(ServiceError::SessionClosed(self.descriptor.session_id.clone()));
        }
        if pose.pos_mm.iter().any(|c| !c.is_finite()) {
            return Err(ServiceError::MalformedMessage("pos_mm must be finite".into()));
        }
        let cfg = &self.descriptor.cfg;
        let case = &self.entry.case;
        self.state.advance_to(pose.t - pose.t % cfg.tick);
        let out = tick(&mut self.state, pose.pos_mm, pose.on, cfg, &case.plan, &case.bone)?;
        self.log.extend(out.removed.iter().map(|r| RemovalEvent {
            t_ms: out.t_ms,
            voxel: r.voxel,
            zone: r.zone,
        }));
        Ok(TickFrame::from_tick(&out, self.descriptor.guidance_enabled))
    }

    /// Parses and runs one text frame; failures come back as error frames.
    pub fn handle_frame(&mut self, text: &str) -> OutFrame {
        let result = serde_json::from_str::<PoseFrame>(text)
            .map_err(|e| ServiceError::MalformedMessage(e.to_string()))
            .and_then(|pose| self.handle_pose(pose));
        match result {
            Ok(frame) => OutFrame::Tick(frame),
            Err(e) => OutFrame::Error(e.frame()),
        }
    }

    fn label(&self) -> SessionLabel {
        SessionLabel {
            session_id: self.descriptor.session_id.clone(),
            subject: self.subject.clone(),
            condition: if self.descriptor.guidance_enabled {
                Condition::Guided
            } else {
                Condition::Unguided
            },
        }
    }

    /// Closes the session and computes its metrics.
    pub fn finish(&mut self) -> ServiceResult<SessionMetrics> {
        if self.closed {
            return Err(ServiceError::SessionClosed(self.descriptor.session_id.clone()));
        }
        self.closed = true;
        Ok(session_metrics(&self.label(), &self.log, &self.entry.case.plan)?)
    }
}

pub type SharedSession = Arc<Mutex<Session>>;

#[derive(Debug, Default)]
struct Registry {
    live: HashMap<String, SharedSession>,
    finished: HashSet<String>,
    streamed: HashSet<String>,
}

/// Owns the catalog and every session of the process.
#[derive(Debug)]
pub struct SessionManager {
    catalog: Catalog,
    log_dir: PathBuf,
    max_sessions: usize,
    next_id: AtomicU64,
    registry: Mutex<Registry>,
}

impl SessionManager {
    pub fn new(catalog: Catalog, log_dir: impl Into<PathBuf>, max_sessions: usize) -> Self {
        Self {
            catalog,
            log_dir: log_dir.into(),
            max_sessions,
            next_id: AtomicU64::new(1),
            registry: Mutex::default(),
        }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn log_dir(&self) -> &Path {
        &self.log_dir
    }

    pub fn live_count(&self) -> usize {
        self.registry.lock().unwrap().live.len()
    }

    pub fn create(&self, req: CreateSession) -> ServiceResult<SessionDescriptor> {
        let entry = self.catalog.get(&req.case_id)?;
        let mut reg = self.registry.lock().unwrap();
        if reg.live.len() >= self.max_sessions {
            return Err(ServiceError::ResourceExhausted(reg.live.len()));
        }
        let n = self.next_id.fetch_add(1, Ordering::Relaxed);
        let session_id = format!("s{n:06}");
        let descriptor = SessionDescriptor {
            session_id: session_id.clone(),
            case_id: req.case_id,
            guidance_enabled: req.guidance_enabled,
            cfg: entry.case.drill_config(),
        };
        let subject = req.subject.unwrap_or_else(|| session_id.clone());
        let session = Session::new(descriptor.clone(), subject, entry);
        reg.live.insert(session_id, Arc::new(Mutex::new(session)));
        Ok(descriptor)
    }

    fn lookup(&self, reg: &Registry, id: &str) -> ServiceResult<SharedSession> {
        if let Some(s) = reg.live.get(id) {
            return Ok(s.clone());
        }
        if reg.finished.contains(id) {
            Err(ServiceError::SessionClosed(id.to_string()))
        } else {
            Err(ServiceError::UnknownSession(id.to_string()))
        }
    }

    pub fn get(&self, id: &str) -> ServiceResult<SharedSession> {
        let reg = self.registry.lock().unwrap();
        self.lookup(&reg, id)
    }

    /// Hands out the session for its single stream connection.
    pub fn attach_stream(&self, id: &str) -> ServiceResult<SharedSession> {
        let mut reg = self.registry.lock().unwrap();
        let session = self.lookup(&reg, id)?;
        if !reg.streamed.insert(id.to_string()) {
            return Err(ServiceError::StreamTaken(id.to_string()));
        }
        Ok(session)
    }

    /// Closes a session, writes `<log_dir>/<id>.jsonl` and returns its metrics.
    pub fn finish(&self, id: &str) -> ServiceResult<FinishedSession> {
        let session = {
            let mut reg = self.registry.lock().unwrap();
            let session = self.lookup(&reg, id)?;
            reg.live.remove(id);
            reg.finished.insert(id.to_string());
            session
        };
        let mut session = session.lock().unwrap();
        let metrics = session.finish()?;
        fs::create_dir_all(&self.log_dir).map_err(drillguide::Error::from)?;
        let log_path = self.log_dir.join(format!("{id}.jsonl"));
        fs::write(&log_path, session.log().to_jsonl_bytes()).map_err(drillguide::Error::from)?;
        Ok(FinishedSession {
            session_id: id.to_string(),
            log_path,
            metrics,
        })
    }
}
