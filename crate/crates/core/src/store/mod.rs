//! Durable project state.
//!
//! Layout under `<root>/<project_id>/`:
//!
//! ```text
//! manifest            committed generation, user list, pending transaction
//! project.state       project document (pretty JSON)
//! users/<id>.state    one document per user
//! events/<run>.log    JSON-lines event log, one file per run
//! ```
//!
//! A save stages every document in `.txn-<generation>/`, then flips the
//! manifest to name that transaction. Only after the flip are the staged
//! files moved into place, so a crash at any point leaves either the old or
//! the new state reachable; `load` rolls a committed transaction forward.

mod stats;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use stats::{export_stats, largest_remainder_percent, stats_rows, StatsRow, SUMMARY_SCOPE};

use crate::model::{EngineConfig, ProjectState, RunId, UserId, UserState};
use crate::verify::RunEvent;

pub const SCHEMA_VERSION: u32 = 1;

const MANIFEST: &str = "manifest";
const MANIFEST_TMP: &str = "manifest.tmp";
const PROJECT_DOC: &str = "project.state";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: {detail}", file.display())]
    Corrupt { file: PathBuf, detail: String },
    #[error("{}: schema version {found} is newer than supported {SCHEMA_VERSION}", file.display())]
    UnsupportedVersion { file: PathBuf, found: u32 },
    #[error("{}: {source}", file.display())]
    Io { file: PathBuf, source: std::io::Error },
    #[error("injected crash at {0:?}")]
    InjectedCrash(WritePoint),
}

impl StoreError {
    pub fn is_corruption(&self) -> bool {
        matches!(self, StoreError::Corrupt { .. } | StoreError::UnsupportedVersion { .. })
    }
}

/// A step of a save at which a crash can be injected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WritePoint {
    /// Writing a document into the staging directory.
    Stage(String),
    /// Writing the temporary manifest that names the transaction.
    ManifestWrite,
    /// Renaming the temporary manifest over the real one (commit point).
    ManifestCommit,
    /// Moving a staged document into place.
    Install(String),
    /// Writing the manifest that clears the pending transaction.
    FinalizeWrite,
    FinalizeCommit,
    Cleanup,
}

/// Called before every write point; returning `true` simulates a crash
/// there. A crash during a file write leaves a torn (half-written) file.
pub type FaultHook<'a> = &'a mut dyn FnMut(&WritePoint) -> bool;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Pending {
    generation: u64,
    files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    generation: u64,
    #[serde(default)]
    run: Option<RunId>,
    users: Vec<UserId>,
    #[serde(default)]
    pending: Option<Pending>,
}

#[derive(Serialize)]
struct DocOut<'a, T> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

/// A project as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub project: ProjectState,
    pub users: BTreeMap<UserId, UserState>,
}

impl Snapshot {
    pub fn empty(project_id: &str) -> Self {
        Self { project: ProjectState::new(project_id, EngineConfig::default()), users: BTreeMap::new() }
    }
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

fn io_err(file: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { file: file.to_path_buf(), source }
}

fn user_file(id: &UserId) -> String {
    let safe: String = id
        .as_str()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.@+".contains(c) { c } else { '_' })
        .collect();
    format!("users/{safe}.state")
}

fn event_file(run: RunId) -> String {
    format!("events/{:020}.log", run.0)
}

fn sync_dir(dir: &Path) {
    // best effort: not every platform lets a directory be opened for sync
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("state documents always serialize");
    bytes.push(b'\n');
    bytes
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn project_dir(&self, project_id: &str) -> PathBuf {
        self.root.join(project_id)
    }

    fn write_file(path: &Path, bytes: &[u8], point: WritePoint, hook: &mut FaultHook<'_>) -> Result<(), StoreError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let crash = hook(&point);
        let mut f = File::create(path).map_err(io_err(path))?;
        if crash {
            f.write_all(&bytes[..bytes.len() / 2]).map_err(io_err(path))?;
            return Err(StoreError::InjectedCrash(point));
        }
        f.write_all(bytes).map_err(io_err(path))?;
        f.sync_all().map_err(io_err(path))
    }

    fn rename(from: &Path, to: &Path, point: WritePoint, hook: &mut FaultHook<'_>) -> Result<(), StoreError> {
        if hook(&point) {
            return Err(StoreError::InjectedCrash(point));
        }
        if let Some(parent) = to.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::rename(from, to).map_err(io_err(from))?;
        if let Some(parent) = to.parent() {
            sync_dir(parent);
        }
        Ok(())
    }

    fn read_manifest(dir: &Path) -> Result<Option<Manifest>, StoreError> {
        let path = dir.join(MANIFEST);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io_err(&path)(e)),
        };
        let m: Manifest =
            serde_json::from_str(&text).map_err(|e| StoreError::Corrupt { file: path.clone(), detail: e.to_string() })?;
        if m.schema_version > SCHEMA_VERSION {
            return Err(StoreError::UnsupportedVersion { file: path, found: m.schema_version });
        }
        Ok(Some(m))
    }

    fn write_manifest(
        dir: &Path,
        m: &Manifest,
        points: (WritePoint, WritePoint),
        hook: &mut FaultHook<'_>,
    ) -> Result<(), StoreError> {
        let tmp = dir.join(MANIFEST_TMP);
        Self::write_file(&tmp, &to_json(m), points.0, hook)?;
        Self::rename(&tmp, &dir.join(MANIFEST), points.1, hook)
    }

    fn read_doc<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let corrupt = |detail: String| StoreError::Corrupt { file: path.to_path_buf(), detail };
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
        let version = value
            .as_object_mut()
            .and_then(|o| o.remove("schema_version"))
            .and_then(|v| v.as_u64())
            .ok_or_else(|| corrupt("missing schema_version".into()))?;
        if version > u64::from(SCHEMA_VERSION) {
            return Err(StoreError::UnsupportedVersion { file: path.to_path_buf(), found: version as u32 });
        }
        serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))
    }

    /// Moves every staged file of a committed transaction into place and
    /// clears it from the manifest. Safe to repeat.
    fn roll_forward(dir: &Path, manifest: &mut Manifest, hook: &mut FaultHook<'_>) -> Result<(), StoreError> {
        let Some(pending) = manifest.pending.clone() else { return Ok(()) };
        let staging = dir.join(format!(".txn-{}", pending.generation));
        for rel in &pending.files {
            let staged = staging.join(rel);
            if staged.exists() {
                Self::rename(&staged, &dir.join(rel), WritePoint::Install(rel.clone()), hook)?;
            }
        }
        manifest.pending = None;
        Self::write_manifest(dir, manifest, (WritePoint::FinalizeWrite, WritePoint::FinalizeCommit), hook)?;
        if hook(&WritePoint::Cleanup) {
            return Err(StoreError::InjectedCrash(WritePoint::Cleanup));
        }
        Self::remove_staging(dir);
        Ok(())
    }

    fn remove_staging(dir: &Path) {
        if let Ok(entries) = fs::read_dir(dir) {
            for e in entries.flatten() {
                if e.file_name().to_string_lossy().starts_with(".txn-") {
                    let _ = fs::remove_dir_all(e.path());
                }
            }
        }
    }

    /// Loads a project; a project never saved loads as an empty state.
    pub fn load(&self, project_id: &str) -> Result<Snapshot, StoreError> {
        let dir = self.project_dir(project_id);
        let Some(mut manifest) = Self::read_manifest(&dir)? else {
            return Ok(Snapshot::empty(project_id));
        };
        if manifest.pending.is_some() {
            let mut no_faults = |_: &WritePoint| false;
            let mut hook: FaultHook<'_> = &mut no_faults;
            Self::roll_forward(&dir, &mut manifest, &mut hook)?;
        }
        let project: ProjectState = Self::read_doc(&dir.join(PROJECT_DOC))?;
        let mut users = BTreeMap::new();
        for id in &manifest.users {
            let user: UserState = Self::read_doc(&dir.join(user_file(id)))?;
            users.insert(id.clone(), user);
        }
        Ok(Snapshot { project, users })
    }

    pub fn save(&self, snapshot: &Snapshot, new_events: &[RunEvent]) -> Result<(), StoreError> {
        self.save_with_faults(snapshot, new_events, &mut |_: &WritePoint| false)
    }

    /// Saves the snapshot and appends `new_events` to the log of the
    /// project's latest run, calling `hook` before every write point.
    pub fn save_with_faults(
        &self,
        snapshot: &Snapshot,
        new_events: &[RunEvent],
        mut hook: FaultHook<'_>,
    ) -> Result<(), StoreError> {
        let project = &snapshot.project;
        let dir = self.project_dir(&project.project_id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let previous = Self::read_manifest(&dir)?;
        if let Some(mut m) = previous.clone() {
            if m.pending.is_some() {
                Self::roll_forward(&dir, &mut m, &mut hook)?;
            }
        }
        Self::remove_staging(&dir);
        let generation = previous.as_ref().map_or(1, |m| m.generation + 1);
        let staging = dir.join(format!(".txn-{generation}"));

        let mut docs: Vec<(String, Vec<u8>)> = vec![(
            PROJECT_DOC.to_string(),
            to_json(&DocOut { schema_version: SCHEMA_VERSION, body: project }),
        )];
        for (id, user) in &snapshot.users {
            docs.push((user_file(id), to_json(&DocOut { schema_version: SCHEMA_VERSION, body: user })));
        }
        if !new_events.is_empty() {
            let run = project.last_run_id().unwrap_or(RunId(0));
            let rel = event_file(run);
            let mut log = fs::read(dir.join(&rel)).unwrap_or_default();
            log.extend(crate::verify::event_log(new_events).into_bytes());
            docs.push((rel, log));
        }

        for (rel, bytes) in &docs {
            Self::write_file(&staging.join(rel), bytes, WritePoint::Stage(rel.clone()), &mut hook)?;
        }
        sync_dir(&staging);

        let mut manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            generation,
            run: project.last_run_id(),
            users: snapshot.users.keys().cloned().collect(),
            pending: Some(Pending { generation, files: docs.into_iter().map(|(rel, _)| rel).collect() }),
        };
        Self::write_manifest(&dir, &manifest, (WritePoint::ManifestWrite, WritePoint::ManifestCommit), &mut hook)?;
        Self::roll_forward(&dir, &mut manifest, &mut hook)
    }

    /// Every stored event, oldest run first.
    pub fn events(&self, project_id: &str) -> Result<Vec<RunEvent>, StoreError> {
        let dir = self.project_dir(project_id).join("events");
        let mut files: Vec<PathBuf> = match fs::read_dir(&dir) {
            Ok(entries) => entries.flatten().map(|e| e.path()).filter(|p| p.extension().is_some_and(|x| x == "log")).collect(),
            Err(_) => return Ok(Vec::new()),
        };
        files.sort();
        let mut out = Vec::new();
        for f in files {
            let text = fs::read_to_string(&f).map_err(io_err(&f))?;
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                out.push(serde_json::from_str(line).map_err(|e| StoreError::Corrupt {
                    file: f.clone(),
                    detail: format!("line {}: {e}", i + 1),
                })?);
            }
        }
        Ok(out)
    }

    /// Per-project shared secret for the HTTP API, if one is configured.
    pub fn token(&self, project_id: &str) -> Option<String> {
        fs::read_to_string(self.project_dir(project_id).join("token")).ok().map(|t| t.trim().to_string())
    }

    pub fn write_stats(&self, project_id: &str, out: &Path) -> Result<(), StoreError> {
        let snap = self.load(project_id)?;
        let csv = export_stats(snap.users.values());
        fs::write(out, csv).map_err(io_err(out))
    }
}
