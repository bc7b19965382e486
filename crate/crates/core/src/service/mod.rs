//! The engine facade used by the CLI, the HTTP API and the simulation
//! harness.
//!
//! Every project has a single writer: runs and user actions are applied one
//! at a time under a per-project lock, persisted, and only then published to
//! readers as an immutable snapshot.

pub mod http;
mod manifest;
pub mod views;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use manifest::{collect_artifacts, InlineRepo, RunManifest};

use crate::ingest::IngestError;
use crate::model::{BuildRun, RejectionCategory, RunId, UserId, UserState, AVATAR_COUNT};
use crate::scoring::{leaderboard, Catalog, LeaderboardEntry};
use crate::store::{Snapshot, Store, StoreError};
use crate::vcs::{RepoView, VcsError};
use crate::verify::{process_run, reject, unblock, EventKind, RejectError, RunEvent, UnblockError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("report parsing failed: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Parse(Vec<IngestError>),
    #[error("run {run} is not newer than the last processed run {last}")]
    Stale { run: RunId, last: RunId },
    #[error("unknown project {0}")]
    UnknownProject(String),
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error(transparent)]
    Reject(#[from] RejectError),
    #[error(transparent)]
    Unblock(#[from] UnblockError),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Vcs(#[from] VcsError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Per-user tallies of one processed run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRunCounts {
    pub solved: usize,
    pub generated: usize,
    pub auto_rejected: usize,
    pub points: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: RunId,
    pub users: BTreeMap<UserId, UserRunCounts>,
    pub events: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn from_events(run_id: RunId, events: &[RunEvent]) -> Self {
        let mut users: BTreeMap<UserId, UserRunCounts> = BTreeMap::new();
        for e in events {
            let c = users.entry(e.user_id.clone()).or_default();
            match &e.kind {
                EventKind::ChallengeSolved { .. } | EventKind::QuestStepSolved { .. } => c.solved += 1,
                EventKind::ChallengeGenerated { .. } => c.generated += 1,
                EventKind::ChallengeAutoRejected { .. } => c.auto_rejected += 1,
                EventKind::PointsAwarded { delta, .. } => c.points += delta,
                _ => {}
            }
        }
        Self { run_id, users, events: events.len(), warnings: Vec::new() }
    }
}

struct Slot {
    writer: Mutex<()>,
    state: RwLock<Arc<Snapshot>>,
    events: RwLock<Vec<RunEvent>>,
}

pub struct Engine {
    store: Option<Store>,
    catalog: Catalog,
    slots: Mutex<HashMap<String, Arc<Slot>>>,
}

fn valid_project_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) && !id.starts_with('.')
}

impl Engine {
    /// An engine that keeps everything in memory.
    pub fn in_memory() -> Self {
        Self { store: None, catalog: Catalog::standard(), slots: Mutex::new(HashMap::new()) }
    }

    pub fn with_store(store: Store) -> Self {
        Self { store: Some(store), catalog: Catalog::standard(), slots: Mutex::new(HashMap::new()) }
    }

    /// Replaces the achievement catalog (e.g. with extra registered entries).
    pub fn with_catalog(mut self, catalog: Catalog) -> Self {
        self.catalog = catalog;
        self
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn store(&self) -> Option<&Store> {
        self.store.as_ref()
    }

    fn slot(&self, project: &str) -> Result<Arc<Slot>, ServiceError> {
        if !valid_project_id(project) {
            return Err(ServiceError::BadRequest(format!("invalid project id `{project}`")));
        }
        let mut slots = self.slots.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(s) = slots.get(project) {
            return Ok(s.clone());
        }
        let (snapshot, events) = match &self.store {
            Some(store) => (store.load(project)?, store.events(project)?),
            None => (Snapshot::empty(project), Vec::new()),
        };
        let slot = Arc::new(Slot { writer: Mutex::new(()), state: RwLock::new(Arc::new(snapshot)), events: RwLock::new(events) });
        slots.insert(project.to_string(), slot.clone());
        Ok(slot)
    }

    /// The last committed state of a project that has seen a run or a user.
    pub fn snapshot(&self, project: &str) -> Result<Arc<Snapshot>, ServiceError> {
        let snap = self.slot(project)?.state.read().unwrap_or_else(|e| e.into_inner()).clone();
        if snap.project.history.is_empty() && snap.users.is_empty() {
            return Err(ServiceError::UnknownProject(project.to_string()));
        }
        Ok(snap)
    }

    /// Applies `f` under the project's writer lock, persists the result and
    /// publishes it.
    fn write<R>(
        &self,
        project: &str,
        f: impl FnOnce(&Snapshot) -> Result<(Snapshot, Vec<RunEvent>, R), ServiceError>,
    ) -> Result<R, ServiceError> {
        let slot = self.slot(project)?;
        let _guard = slot.writer.lock().unwrap_or_else(|e| e.into_inner());
        let current = slot.state.read().unwrap_or_else(|e| e.into_inner()).clone();
        let (next, events, result) = f(&current)?;
        if let Some(store) = &self.store {
            store.save(&next, &events)?;
        }
        slot.events.write().unwrap_or_else(|e| e.into_inner()).extend(events);
        *slot.state.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(next);
        Ok(result)
    }

    /// Processes one build. An old or repeated run id changes nothing and
    /// yields [`ServiceError::Stale`].
    pub fn ingest(&self, project: &str, run: &BuildRun, view: &dyn RepoView, seed: Option<u64>) -> Result<RunReport, ServiceError> {
        self.write(project, |snap| {
            if let Some(last) = snap.project.last_run_id() {
                if run.run_id <= last {
                    return Err(ServiceError::Stale { run: run.run_id, last });
                }
            }
            let mut project_state = snap.project.clone();
            if let Some(seed) = seed {
                project_state.config.rng_seed = Some(seed);
            }
            let outcome = process_run(&project_state, &snap.users, run, view, &self.catalog);
            let report = RunReport::from_events(run.run_id, &outcome.events);
            Ok((Snapshot { project: outcome.project, users: outcome.users }, outcome.events, report))
        })
    }

    /// Parses the manifest's artifacts, builds the run and processes it.
    pub fn ingest_manifest(&self, project: &str, manifest: &RunManifest) -> Result<RunReport, ServiceError> {
        let last = self.slot(project)?.state.read().unwrap_or_else(|e| e.into_inner()).project.last_run.clone();
        let (run, view, warnings) = manifest.build(last.as_ref())?;
        let mut report = self.ingest(project, &run, view.as_ref(), manifest.seed)?;
        report.warnings = warnings;
        Ok(report)
    }

    fn with_user<R>(
        &self,
        project: &str,
        user: &str,
        f: impl FnOnce(&mut UserState, RunId) -> Result<(Vec<EventKind>, R), ServiceError>,
    ) -> Result<R, ServiceError> {
        self.snapshot(project)?;
        self.write(project, |snap| {
            let id = UserId::from(user);
            let mut next = snap.clone();
            let run = next.project.last_run_id().unwrap_or(RunId(0));
            let state = next.users.get_mut(&id).ok_or_else(|| ServiceError::UnknownUser(user.to_string()))?;
            let (kinds, result) = f(state, run)?;
            let events = kinds.into_iter().map(|kind| RunEvent { run_id: run, user_id: id.clone(), kind }).collect();
            Ok((next, events, result))
        })
    }

    /// Manually rejects an open challenge with a reason.
    pub fn reject(
        &self,
        project: &str,
        user: &str,
        challenge_id: &str,
        reason: &str,
        category: Option<RejectionCategory>,
    ) -> Result<crate::model::Challenge, ServiceError> {
        self.with_user(project, user, |state, run| {
            let ch = reject(state, challenge_id, reason, category, run)?;
            let event = EventKind::ChallengeRejected {
                challenge_id: ch.id.clone(),
                challenge_kind: ch.kind(),
                reason: reason.to_string(),
                category,
            };
            Ok((vec![event], ch))
        })
    }

    pub fn unblock(&self, project: &str, user: &str, unit: &str) -> Result<(), ServiceError> {
        self.with_user(project, user, |state, _| {
            unblock(state, unit)?;
            Ok((Vec::new(), ()))
        })
    }

    pub fn set_avatar(&self, project: &str, user: &str, avatar: u32) -> Result<(), ServiceError> {
        if avatar >= u32::from(AVATAR_COUNT) {
            return Err(ServiceError::BadRequest(format!("avatar must be in 0..={}", AVATAR_COUNT - 1)));
        }
        self.with_user(project, user, |state, _| {
            state.avatar_id = avatar as u8;
            Ok((Vec::new(), ()))
        })
    }

    /// Adds a user, or renames an existing one.
    pub fn register_user(&self, project: &str, user: &str, display_name: &str) -> Result<(), ServiceError> {
        if user.trim().is_empty() {
            return Err(ServiceError::BadRequest("user id must not be empty".into()));
        }
        self.write(project, |snap| {
            let mut next = snap.clone();
            let id = UserId::from(user);
            next.project.users.insert(id.clone());
            next.users
                .entry(id.clone())
                .or_insert_with(|| UserState::new(id, display_name))
                .display_name = display_name.to_string();
            Ok((next, Vec::new(), ()))
        })
    }

    /// Replaces the project's engine settings.
    pub fn configure(&self, project: &str, config: crate::model::EngineConfig) -> Result<(), ServiceError> {
        self.write(project, |snap| {
            let mut next = snap.clone();
            next.project.config = config;
            Ok((next, Vec::new(), ()))
        })
    }

    /// Head commit of the last processed run.
    pub fn last_head(&self, project: &str) -> Option<String> {
        let slot = self.slot(project).ok()?;
        let state = slot.state.read().unwrap_or_else(|e| e.into_inner());
        state.project.last_run.as_ref().and_then(|r| r.head.clone())
    }

    pub fn leaderboard(&self, project: &str) -> Result<Vec<LeaderboardEntry>, ServiceError> {
        Ok(leaderboard(self.snapshot(project)?.users.values()))
    }

    pub fn user(&self, project: &str, user: &str) -> Result<UserState, ServiceError> {
        self.snapshot(project)?
            .users
            .get(&UserId::from(user))
            .cloned()
            .ok_or_else(|| ServiceError::UnknownUser(user.to_string()))
    }

    /// Every event recorded for the project, oldest first.
    pub fn events(&self, project: &str) -> Result<Vec<RunEvent>, ServiceError> {
        Ok(self.slot(project)?.events.read().unwrap_or_else(|e| e.into_inner()).clone())
    }

    pub fn stats_csv(&self, project: &str) -> Result<String, ServiceError> {
        Ok(crate::store::export_stats(self.snapshot(project)?.users.values()))
    }

    pub fn token(&self, project: &str) -> Option<String> {
        self.store.as_ref().and_then(|s| s.token(project))
    }
}
