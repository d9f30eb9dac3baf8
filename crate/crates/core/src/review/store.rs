use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};

use super::{Ack, Event, Judgment, NewSession, Resolution, ReviewError, Session};
use crate::error::{Error, Result};
use crate::fsutil::{append_jsonl, read_jsonl};

type Clock = Arc<dyn Fn() -> Option<DateTime<Utc>> + Send + Sync>;

/// Sessions backed by one append-only event log each
/// (`<root>/sessions/<id>/events.jsonl`). Writes to a session are
/// serialized by its lock; reads see a consistent snapshot.
pub struct ReviewStore {
    root: Option<PathBuf>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    clock: Clock,
}

impl ReviewStore {
    /// A store that keeps nothing on disk.
    pub fn in_memory() -> Self {
        ReviewStore {
            root: None,
            sessions: RwLock::new(BTreeMap::new()),
            clock: Arc::new(|| Some(Utc::now())),
        }
    }

    /// Opens (or creates) a store under `root`, replaying every session log.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let dir = root.join("sessions");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut sessions = BTreeMap::new();
        let mut entries: Vec<_> = std::fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join("events.jsonl").is_file())
            .collect();
        entries.sort();
        for path in entries {
            let session = replay(&path.join("events.jsonl"))?;
            sessions.insert(session.id().to_string(), Arc::new(Mutex::new(session)));
        }
        Ok(ReviewStore {
            root: Some(root),
            sessions: RwLock::new(sessions),
            clock: Arc::new(|| Some(Utc::now())),
        })
    }

    /// Replaces the timestamp source; `None` leaves timestamps unset.
    pub fn with_clock(
        mut self,
        clock: impl Fn() -> Option<DateTime<Utc>> + Send + Sync + 'static,
    ) -> Self {
        self.clock = Arc::new(clock);
        self
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    fn log_path(&self, id: &str) -> Option<PathBuf> {
        self.root
            .as_ref()
            .map(|r| r.join("sessions").join(id).join("events.jsonl"))
    }

    fn log(&self, id: &str, event: &Event) -> Result<()> {
        if let Some(path) = self.log_path(id) {
            append_jsonl(&path, event)?;
        }
        Ok(())
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions
            .read()
            .expect("store lock")
            .keys()
            .cloned()
            .collect()
    }

    fn handle(&self, id: &str) -> Result<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ReviewError::UnknownSession(id.to_string()).into())
    }

    pub fn create_session(&self, spec: NewSession) -> Result<String> {
        let now = (self.clock)();
        let mut sessions = self.sessions.write().expect("store lock");
        if sessions.contains_key(&spec.name) {
            return Err(ReviewError::DuplicateSession(spec.name).into());
        }
        let session = Session::create(spec.clone(), now)?;
        let id = session.id().to_string();
        if let Some(path) = self.log_path(&id) {
            if path.exists() {
                return Err(ReviewError::DuplicateSession(id).into());
            }
        }
        self.log(
            &id,
            &Event::Created {
                session: spec,
                timestamp: now,
            },
        )?;
        sessions.insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    /// Runs `f` against a locked session.
    pub fn with_session<R>(&self, id: &str, f: impl FnOnce(&Session) -> R) -> Result<R> {
        let handle = self.handle(id)?;
        let session = handle.lock().expect("session lock");
        Ok(f(&session))
    }

    pub fn submit(&self, id: &str, mut judgment: Judgment) -> Result<Ack> {
        let handle = self.handle(id)?;
        let mut session = handle.lock().expect("session lock");
        judgment.session_id = id.to_string();
        if judgment.timestamp.is_none() {
            judgment.timestamp = (self.clock)();
        }
        session.validate_judgment(&judgment)?;
        self.log(
            id,
            &Event::Judged {
                judgment: judgment.clone(),
            },
        )?;
        Ok(session.submit(judgment)?)
    }

    pub fn resolve(&self, id: &str, mut resolution: Resolution) -> Result<Ack> {
        let handle = self.handle(id)?;
        let mut session = handle.lock().expect("session lock");
        if resolution.timestamp.is_none() {
            resolution.timestamp = (self.clock)();
        }
        session.validate_resolution(&resolution)?;
        self.log(
            id,
            &Event::Resolved {
                resolution: resolution.clone(),
            },
        )?;
        Ok(session.resolve(resolution)?)
    }

    pub fn close(&self, id: &str) -> Result<()> {
        let handle = self.handle(id)?;
        let mut session = handle.lock().expect("session lock");
        if !session.is_closed() {
            self.log(
                id,
                &Event::Closed {
                    timestamp: (self.clock)(),
                },
            )?;
            session.close();
        }
        Ok(())
    }
}

/// Rebuilds a session from its log.
pub fn replay(path: &Path) -> Result<Session> {
    let events: Vec<Event> = read_jsonl(path)?;
    let mut iter = events.into_iter();
    let mut session = match iter.next() {
        Some(Event::Created { session, timestamp }) => Session::create(session, timestamp)?,
        _ => {
            return Err(Error::Contract(format!(
                "{} does not start with a creation event",
                path.display()
            )))
        }
    };
    for event in iter {
        session.apply(event)?;
    }
    Ok(session)
}
