use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::watch;
use vrptw_core::fixtures::{self, Fixture, FixtureMetadata};
use vrptw_core::provenance::{HistoryGraph, RecordId};
use vrptw_core::ProblemInstance;

use crate::config::Config;
use crate::error::{ApiError, ApiResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Viewport {
    Left,
    Right,
}

impl Viewport {
    pub fn parse(text: &str) -> ApiResult<Self> {
        match text {
            "left" => Ok(Viewport::Left),
            "right" => Ok(Viewport::Right),
            other => Err(ApiError::not_found(format!("unknown viewport '{other}'"))),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Viewport::Left => 0,
            Viewport::Right => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Slot {
    pub record: Option<RecordId>,
    pub job: Option<u64>,
}

pub struct Session {
    pub id: u64,
    pub fixture: Option<String>,
    pub metadata: Option<FixtureMetadata>,
    pub instance: Arc<ProblemInstance>,
    pub history: HistoryGraph,
    pub seeded: Vec<RecordId>,
    pub seeding_note: Option<String>,
    pub viewports: [Slot; 2],
}

impl Session {
    pub fn slot(&mut self, viewport: Viewport) -> &mut Slot {
        &mut self.viewports[viewport.index()]
    }

    /// The record shown in an idle viewport.
    pub fn idle_record(&self, viewport: Viewport) -> ApiResult<RecordId> {
        let slot = self.viewports[viewport.index()];
        if slot.job.is_some() {
            return Err(ApiError::busy());
        }
        slot.record
            .ok_or_else(|| ApiError::state(format!("no record loaded in the {viewport:?} viewport").to_lowercase()))
    }
}

/// Event log of one solve job.
pub struct JobEntry {
    pub id: u64,
    pub session_id: u64,
    pub viewport: Viewport,
    pub cancel: Arc<AtomicBool>,
    events: Mutex<Vec<Value>>,
    count: watch::Sender<usize>,
}

impl JobEntry {
    pub fn new(id: u64, session_id: u64, viewport: Viewport, cancel: Arc<AtomicBool>) -> Self {
        Self {
            id,
            session_id,
            viewport,
            cancel,
            events: Mutex::new(Vec::new()),
            count: watch::channel(0).0,
        }
    }

    pub fn push(&self, event: Value) {
        let mut events = self.events.lock().expect("event log");
        events.push(event);
        let n = events.len();
        drop(events);
        self.count.send_replace(n);
    }

    pub fn events_from(&self, since: usize) -> Vec<Value> {
        let events = self.events.lock().expect("event log");
        events.get(since..).map(<[Value]>::to_vec).unwrap_or_default()
    }

    pub fn finished(&self) -> bool {
        let events = self.events.lock().expect("event log");
        events.last().is_some_and(is_terminal)
    }

    pub fn subscribe(&self) -> watch::Receiver<usize> {
        self.count.subscribe()
    }
}

pub fn is_terminal(event: &Value) -> bool {
    event.get("phase").and_then(Value::as_str) == Some("finished")
}

pub struct AppState {
    pub config: Config,
    fixtures: HashMap<String, Fixture>,
    sessions: Mutex<HashMap<u64, Arc<Mutex<Session>>>>,
    jobs: Mutex<HashMap<u64, Arc<JobEntry>>>,
    next_session: AtomicU64,
    next_job: AtomicU64,
}

impl AppState {
    pub fn new(config: Config) -> Result<Self, String> {
        let mut table: HashMap<String, Fixture> = fixtures::names()
            .filter_map(|n| fixtures::bundled(n).map(|f| (n.to_string(), f)))
            .collect();
        if let Some(dir) = &config.fixture_dir {
            let entries = std::fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            for entry in entries.flatten() {
                let path = entry.path();
                if path.extension().and_then(|e| e.to_str()) != Some("json") {
                    continue;
                }
                let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                let fixture = Fixture::parse(&name, &text).map_err(|e| format!("{}: {e}", path.display()))?;
                table.insert(name, fixture);
            }
        }
        Ok(Self {
            config,
            fixtures: table,
            sessions: Mutex::new(HashMap::new()),
            jobs: Mutex::new(HashMap::new()),
            next_session: AtomicU64::new(1),
            next_job: AtomicU64::new(1),
        })
    }

    pub fn fixture(&self, name: &str) -> ApiResult<&Fixture> {
        self.fixtures
            .get(name)
            .ok_or_else(|| ApiError::not_found(format!("unknown fixture '{name}'")))
    }

    pub fn fixture_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.fixtures.keys().cloned().collect();
        names.sort();
        names
    }

    pub fn insert_session(&self, build: impl FnOnce(u64) -> Session) -> Arc<Mutex<Session>> {
        let id = self.next_session.fetch_add(1, Ordering::Relaxed);
        let session = Arc::new(Mutex::new(build(id)));
        self.sessions.lock().expect("sessions").insert(id, session.clone());
        session
    }

    pub fn session(&self, id: u64) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions
            .lock()
            .expect("sessions")
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("session {id} does not exist")))
    }

    pub fn next_job_id(&self) -> u64 {
        self.next_job.fetch_add(1, Ordering::Relaxed)
    }

    pub fn insert_job(&self, job: Arc<JobEntry>) {
        self.jobs.lock().expect("jobs").insert(job.id, job);
    }

    pub fn job(&self, id: u64) -> ApiResult<Arc<JobEntry>> {
        self.jobs
            .lock()
            .expect("jobs")
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("job {id} does not exist")))
    }
}

pub fn lock(session: &Mutex<Session>) -> MutexGuard<'_, Session> {
    session.lock().unwrap_or_else(|e| e.into_inner())
}
