//! One JSON document per session under a directory. Saves are checked
//! against the stored version so a stale copy cannot overwrite newer work.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Session, SessionState, WorkflowError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub state: SessionState,
    pub version: u64,
    pub model_id: String,
    pub scenario: String,
}

#[derive(Debug)]
pub struct SessionStore {
    dir: PathBuf,
    lock: Mutex<()>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl SessionStore {
    pub fn open(dir: &Path) -> Result<Self, WorkflowError> {
        std::fs::create_dir_all(dir).map_err(|source| WorkflowError::Io { path: dir.to_owned(), source })?;
        Ok(Self { dir: dir.to_owned(), lock: Mutex::new(()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    /// Assigns the first free deterministic id, sets version 1 and writes.
    pub fn create(&self, mut session: Session) -> Result<Session, WorkflowError> {
        let _guard = self.lock.lock().unwrap();
        let seed = format!("{}\0{}", session.problem.render(), session.model_id);
        session.id = (0u32..)
            .map(|n| {
                let digest = Sha256::digest(format!("{seed}\0{n}").as_bytes());
                format!("s-{}", &hex::encode(digest)[..12])
            })
            .find(|id| !self.path_of(id).exists())
            .expect("an unused id exists");
        session.version = 1;
        self.write(&session)?;
        Ok(session)
    }

    pub fn load(&self, id: &str) -> Result<Session, WorkflowError> {
        if !valid_id(id) {
            return Err(WorkflowError::NotFound(id.to_owned()));
        }
        let path = self.path_of(id);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(WorkflowError::NotFound(id.to_owned())),
            Err(source) => return Err(WorkflowError::Io { path, source }),
        };
        serde_json::from_str(&text).map_err(|e| WorkflowError::Corrupt { path, message: e.to_string() })
    }

    /// Persists `session` if the stored copy still has `session.version`,
    /// and returns it with the version incremented.
    pub fn save(&self, session: &Session) -> Result<Session, WorkflowError> {
        let _guard = self.lock.lock().unwrap();
        let stored = self.load(&session.id)?;
        if stored.version != session.version {
            return Err(WorkflowError::StaleVersion { expected: session.version, found: stored.version });
        }
        let mut next = session.clone();
        next.version += 1;
        self.write(&next)?;
        Ok(next)
    }

    fn write(&self, session: &Session) -> Result<(), WorkflowError> {
        let path = self.path_of(&session.id);
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(session).expect("sessions serialize") + "\n";
        std::fs::write(&tmp, text).map_err(|source| WorkflowError::Io { path: tmp.clone(), source })?;
        std::fs::rename(&tmp, &path).map_err(|source| WorkflowError::Io { path, source })
    }

    pub fn list(&self) -> Result<Vec<SessionSummary>, WorkflowError> {
        let entries = std::fs::read_dir(&self.dir).map_err(|source| WorkflowError::Io { path: self.dir.clone(), source })?;
        let mut ids: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".json")).map(str::to_owned))
            .collect();
        ids.sort();
        let mut out = Vec::with_capacity(ids.len());
        for id in ids {
            let s = self.load(&id)?;
            out.push(SessionSummary { id: s.id, state: s.state, version: s.version, model_id: s.model_id, scenario: s.problem.scenario });
        }
        Ok(out)
    }
}
