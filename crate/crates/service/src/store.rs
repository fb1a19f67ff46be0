//! In-memory session table with optional JSON snapshots on disk.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use tokio::sync::Mutex;

use crate::session::Session;

pub type SessionHandle = Arc<Mutex<Session>>;

#[derive(Debug, Default)]
pub struct SessionStore {
    dir: Option<PathBuf>,
    sessions: RwLock<BTreeMap<String, SessionHandle>>,
}

impl SessionStore {
    /// Sessions live in memory only.
    pub fn in_memory() -> SessionStore {
        SessionStore::default()
    }

    /// Snapshots go to `dir`; existing snapshots there are loaded. Files that
    /// do not parse are skipped with a warning.
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<SessionStore> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut sessions = BTreeMap::new();
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in paths {
            match fs::read(&path).map(|b| serde_json::from_slice::<Session>(&b)) {
                Ok(Ok(s)) => {
                    sessions.insert(s.session_id.clone(), Arc::new(Mutex::new(s)));
                }
                Ok(Err(e)) => log::warn!("skipping snapshot {}: {e}", path.display()),
                Err(e) => log::warn!("skipping snapshot {}: {e}", path.display()),
            }
        }
        Ok(SessionStore {
            dir: Some(dir),
            sessions: RwLock::new(sessions),
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn get(&self, id: &str) -> Option<SessionHandle> {
        self.sessions.read().expect("session table").get(id).cloned()
    }

    pub fn insert(&self, session: Session) -> SessionHandle {
        let id = session.session_id.clone();
        let handle = Arc::new(Mutex::new(session));
        self.sessions.write().expect("session table").insert(id, handle.clone());
        handle
    }

    pub fn ids(&self) -> Vec<String> {
        self.sessions.read().expect("session table").keys().cloned().collect()
    }

    /// Writes the snapshot atomically (temp file, then rename).
    pub fn persist(&self, session: &Session) -> io::Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(format!("{}.json", session.session_id));
        let tmp = dir.join(format!(".{}.json.tmp", session.session_id));
        let text = serde_json::to_vec_pretty(session).map_err(io::Error::other)?;
        fs::write(&tmp, text)?;
        fs::rename(&tmp, &path)
    }
}
