//! Scripted, deterministic replays.
//!
//! A [`Scenario`] is a JSON document listing users and build steps. Each step
//! may commit files to an in-memory repository, carries the report tables of
//! that build, and may end with user actions (rejections, unblocks). Given
//! the same scenario, [`replay`] always yields the same event log.

mod fuzz;

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fuzz::fuzz_scenarios;

use crate::model::{
    BuildRun, BuildStatus, ChallengeKind, CoverageSnapshot, EngineConfig, LineState, MethodSpan, MutantRecord,
    MutantStatus, RejectionCategory, ReportKinds, RunId, SmellFinding, SourceUnit, TestSnapshot, UnitCoverage, UserId,
};
use crate::service::{Engine, RunReport, ServiceError};
use crate::store::Snapshot;
use crate::vcs::MemoryRepo;
use crate::verify::{event_log, RunEvent};

pub const PROJECT: &str = "sim";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioUser {
    pub id: String,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodRow {
    pub name: String,
    pub first: u32,
    pub last: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub path: String,
    #[serde(default)]
    pub covered: Vec<u32>,
    #[serde(default)]
    pub uncovered: Vec<u32>,
    /// `[line, branches taken, branches total]`
    #[serde(default)]
    pub partial: Vec<[u32; 3]>,
    #[serde(default)]
    pub methods: Vec<MethodRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantRow {
    pub path: String,
    pub line: u32,
    pub mutator: String,
    pub status: MutantStatus,
    #[serde(default)]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmellRow {
    pub path: String,
    pub rule: String,
    pub start: u32,
    #[serde(default)]
    pub end: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    /// Rejects a challenge chosen by id, by kind (first open one) or by
    /// position in the open list.
    Reject {
        user: String,
        #[serde(default)]
        challenge: Option<String>,
        #[serde(default)]
        kind: Option<ChallengeKind>,
        #[serde(default)]
        index: Option<usize>,
        reason: String,
        #[serde(default)]
        category: Option<RejectionCategory>,
        /// Skip silently when nothing matches.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        lenient: bool,
    },
    Unblock {
        user: String,
        unit: String,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        lenient: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub run_id: u64,
    pub at: DateTime<Utc>,
    pub status: BuildStatus,
    pub author: String,
    /// Files written by this step's commit.
    #[serde(default)]
    pub files: BTreeMap<String, String>,
    #[serde(default)]
    pub deleted: Vec<String>,
    #[serde(default)]
    pub coverage: Option<Vec<CoverageRow>>,
    #[serde(default)]
    pub mutants: Option<Vec<MutantRow>>,
    #[serde(default)]
    pub smells: Option<Vec<SmellRow>>,
    #[serde(default)]
    pub tests: Option<TestSnapshot>,
    #[serde(default)]
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    #[serde(default)]
    pub config: Option<EngineConfig>,
    #[serde(default)]
    pub users: Vec<ScenarioUser>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("step {step} (run {run}): {message}")]
    Step { step: usize, run: u64, message: String },
    #[error("scenario: {0}")]
    Invalid(String),
    #[error("unreadable scenario: {0}")]
    Format(#[from] serde_json::Error),
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenarios always serialize") + "\n"
    }

    /// Checks run ordering, user references and that every report row
    /// refers to a file present after the step's commit.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let mut ids = BTreeSet::new();
        for u in &self.users {
            if u.id.trim().is_empty() || !ids.insert(u.id.as_str()) {
                return Err(ScenarioError::Invalid(format!("duplicate or empty user id `{}`", u.id)));
            }
        }
        if let Some(cfg) = &self.config {
            if cfg.max_open_challenges == 0 {
                return Err(ScenarioError::Invalid("max_open_challenges must be positive".into()));
            }
        }
        let mut files: BTreeSet<String> = BTreeSet::new();
        let mut last = 0u64;
        let mut authors: BTreeSet<String> = ids.iter().map(|s| s.to_string()).collect();
        for (i, s) in self.steps.iter().enumerate() {
            let fail = |message: String| ScenarioError::Step { step: i, run: s.run_id, message };
            if s.run_id <= last {
                return Err(fail(format!("run id {} does not increase (previous {last})", s.run_id)));
            }
            last = s.run_id;
            if s.author.trim().is_empty() {
                return Err(fail("empty author".into()));
            }
            authors.insert(s.author.clone());
            for d in &s.deleted {
                if !files.remove(d) {
                    return Err(fail(format!("deletes missing file {d}")));
                }
                if s.files.contains_key(d) {
                    return Err(fail(format!("both writes and deletes {d}")));
                }
            }
            files.extend(s.files.keys().cloned());
            let mut referenced: Vec<&str> = Vec::new();
            referenced.extend(s.coverage.iter().flatten().map(|c| c.path.as_str()));
            referenced.extend(s.mutants.iter().flatten().map(|m| m.path.as_str()));
            referenced.extend(s.smells.iter().flatten().map(|m| m.path.as_str()));
            if let Some(missing) = referenced.into_iter().find(|p| !files.contains(*p)) {
                return Err(fail(format!("reports reference {missing}, which does not exist")));
            }
            for sm in s.smells.iter().flatten() {
                if sm.end.is_some_and(|e| e < sm.start) || sm.start == 0 {
                    return Err(fail(format!("bad smell range in {}", sm.path)));
                }
            }
            for a in &s.actions {
                let user = match a {
                    Action::Reject { user, reason, .. } => {
                        if reason.trim().is_empty() {
                            return Err(fail("rejection without a reason".into()));
                        }
                        user
                    }
                    Action::Unblock { user, .. } => user,
                };
                if !authors.contains(user) {
                    return Err(fail(format!("action for unknown user {user}")));
                }
            }
        }
        Ok(())
    }
}

fn unit_of(path: &str) -> SourceUnit {
    SourceUnit::from_path(path)
}

/// Builds the run a step describes.
pub fn build_run(step: &Step) -> BuildRun {
    let mut run = BuildRun::new(RunId(step.run_id), step.at, step.status, UserId::from(step.author.as_str()));
    run.reports = ReportKinds {
        coverage: step.coverage.is_some(),
        mutations: step.mutants.is_some(),
        findings: step.smells.is_some(),
        tests: step.tests.is_some(),
    };
    let mut coverage = CoverageSnapshot::default();
    for row in step.coverage.iter().flatten() {
        let mut cov = UnitCoverage::new(unit_of(&row.path));
        for &l in &row.covered {
            cov.set_line(l, LineState::Covered);
        }
        for &l in &row.uncovered {
            cov.set_line(l, LineState::Uncovered);
        }
        for &[l, taken, total] in &row.partial {
            cov.set_line(l, LineState::from_counts(u64::from(taken > 0), Some((taken, total))));
        }
        for m in &row.methods {
            cov.add_method(MethodSpan { name: m.name.clone(), signature: None, first_line: m.first, last_line: m.last });
        }
        coverage.insert(cov);
    }
    run.coverage = coverage;
    let mut ordinals: BTreeMap<(String, u32, String), usize> = BTreeMap::new();
    for m in step.mutants.iter().flatten() {
        let unit = unit_of(&m.path);
        let n = ordinals.entry((unit.unit_name.clone(), m.line, m.mutator.clone())).or_insert(0);
        run.mutants.push(MutantRecord {
            id: MutantRecord::make_id(&unit.unit_name, m.line, &m.mutator, *n),
            source_unit: unit,
            line: m.line,
            mutator: m.mutator.clone(),
            method: None,
            description: m.description.clone().unwrap_or_else(|| format!("{} on line {}", m.mutator, m.line)),
            status: m.status,
        });
        *n += 1;
    }
    run.smells = step
        .smells
        .iter()
        .flatten()
        .map(|s| SmellFinding {
            rule_id: s.rule.clone(),
            source_unit: unit_of(&s.path),
            start_line: s.start,
            end_line: s.end.unwrap_or(s.start),
            message: format!("{} finding", s.rule),
        })
        .collect();
    run.tests = step.tests.unwrap_or_default();
    run
}

/// What the observer sees after each step (run plus its actions).
pub struct StepObservation<'a> {
    pub index: usize,
    pub step: &'a Step,
    pub run: &'a BuildRun,
    pub repo: &'a MemoryRepo,
    /// State right after the run, before the step's actions.
    pub after_run: &'a Snapshot,
    /// State after the actions.
    pub snapshot: &'a Snapshot,
    /// Events of this step only.
    pub events: &'a [RunEvent],
    pub report: &'a RunReport,
}

#[derive(Debug, Clone)]
pub struct Replay {
    pub events: Vec<RunEvent>,
    pub snapshot: Snapshot,
    pub reports: Vec<RunReport>,
}

impl Replay {
    /// The event log as JSON lines.
    pub fn log(&self) -> String {
        event_log(&self.events)
    }
}

fn step_error(i: usize, step: &Step, e: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Step { step: i, run: step.run_id, message: e.to_string() }
}

pub fn replay(scenario: &Scenario) -> Result<Replay, ScenarioError> {
    replay_observed(scenario, |_| {})
}

/// Replays the scenario on a fresh in-memory engine, calling `observe`
/// after every step.
pub fn replay_observed(scenario: &Scenario, mut observe: impl FnMut(&StepObservation<'_>)) -> Result<Replay, ScenarioError> {
    scenario.validate()?;
    let engine = Engine::in_memory();
    if let Some(cfg) = &scenario.config {
        engine.configure(PROJECT, cfg.clone()).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    }
    for u in &scenario.users {
        engine
            .register_user(PROJECT, &u.id, u.name.as_deref().unwrap_or(&u.id))
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    }
    let mut repo = MemoryRepo::new();
    let mut reports = Vec::new();
    for (i, step) in scenario.steps.iter().enumerate() {
        let before = engine.events(PROJECT).map_err(|e| step_error(i, step, e))?.len();
        if !step.files.is_empty() || !step.deleted.is_empty() {
            let mut changes: Vec<(&str, Option<&str>)> =
                step.files.iter().map(|(p, c)| (p.as_str(), Some(c.as_str()))).collect();
            changes.extend(step.deleted.iter().map(|p| (p.as_str(), None)));
            repo.commit(&step.author, step.at, &changes);
        }
        let mut run = build_run(step);
        run.commits = crate::vcs::commits_since(&repo, engine.last_head(PROJECT).as_deref());
        let report = engine.ingest(PROJECT, &run, &repo, Some(scenario.seed)).map_err(|e| step_error(i, step, e))?;
        let after_run = engine.snapshot(PROJECT).map_err(|e| step_error(i, step, e))?;
        for a in &step.actions {
            apply_action(&engine, a).map_err(|e| step_error(i, step, e))?;
        }
        let all = engine.events(PROJECT).map_err(|e| step_error(i, step, e))?;
        let snapshot = engine.snapshot(PROJECT).map_err(|e| step_error(i, step, e))?;
        observe(&StepObservation {
            index: i,
            step,
            run: &run,
            repo: &repo,
            after_run: &after_run,
            snapshot: &snapshot,
            events: &all[before..],
            report: &report,
        });
        reports.push(report);
    }
    let events = engine.events(PROJECT).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    let snapshot = match engine.snapshot(PROJECT) {
        Ok(s) => (*s).clone(),
        Err(_) => Snapshot::empty(PROJECT),
    };
    Ok(Replay { events, snapshot, reports })
}

fn apply_action(engine: &Engine, action: &Action) -> Result<(), ServiceError> {
    match action {
        Action::Reject { user, challenge, kind, index, reason, category, lenient } => {
            let state = engine.user(PROJECT, user)?;
            let open = &state.open_challenges;
            let chosen = if let Some(id) = challenge {
                Some(id.clone())
            } else if let Some(k) = kind {
                open.iter().find(|c| c.kind() == *k).map(|c| c.id.clone())
            } else {
                open.get(index.unwrap_or(0)).map(|c| c.id.clone())
            };
            match chosen {
                Some(id) => {
                    engine.reject(PROJECT, user, &id, reason, *category)?;
                }
                None if *lenient => {}
                None => return Err(ServiceError::BadRequest(format!("no matching open challenge for {user}"))),
            }
        }
        Action::Unblock { user, unit, lenient } => match engine.unblock(PROJECT, user, unit) {
            Err(ServiceError::Unblock(_)) if *lenient => {}
            other => other?,
        },
    }
    Ok(())
}
