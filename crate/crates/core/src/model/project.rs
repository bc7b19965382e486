use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{BuildRun, BuildStatus, CoverageSnapshot, MutantRecord, ReportKinds, RunId, SmellFinding, TestSnapshot, UserId};
use crate::scoring::PointsTable;

/// Per-project tuning knobs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub max_open_challenges: u32,
    pub quest_enabled: bool,
    /// How many of the newest commits count as "recent" for target selection.
    pub changed_window: usize,
    pub rng_seed: Option<u64>,
    /// Lines searched above and below a moved snippet before giving up.
    pub relocation_window: u32,
    pub source_extensions: Vec<String>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            max_open_challenges: 3,
            quest_enabled: true,
            changed_window: 50,
            rng_seed: None,
            relocation_window: 3,
            source_extensions: vec![".java".to_string(), ".kt".to_string()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: RunId,
    pub timestamp: DateTime<Utc>,
    pub status: BuildStatus,
    #[serde(default)]
    pub head: Option<String>,
}

/// Report snapshots of the most recent successful run; generation and
/// diffing read from here.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Baseline {
    pub run: Option<RunId>,
    pub coverage: CoverageSnapshot,
    pub mutants: Vec<MutantRecord>,
    pub smells: Vec<SmellFinding>,
    pub tests: TestSnapshot,
    pub reports: ReportKinds,
}

impl Baseline {
    /// Replaces each report family the run actually carried.
    pub fn absorb(&mut self, run: &BuildRun) {
        if !run.is_success() {
            return;
        }
        self.run = Some(run.run_id);
        if run.reports.coverage {
            self.coverage = run.coverage.clone();
            self.reports.coverage = true;
        }
        if run.reports.mutations {
            self.mutants = run.mutants.clone();
            self.reports.mutations = true;
        }
        if run.reports.findings {
            self.smells = run.smells.clone();
            self.reports.findings = true;
        }
        if run.reports.tests {
            self.tests = run.tests;
            self.reports.tests = true;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectState {
    pub project_id: String,
    #[serde(default)]
    pub last_run: Option<RunSummary>,
    #[serde(default)]
    pub history: Vec<RunSummary>,
    #[serde(default)]
    pub baseline: Baseline,
    #[serde(default)]
    pub users: BTreeSet<UserId>,
    #[serde(default)]
    pub config: EngineConfig,
    #[serde(default)]
    pub points: PointsTable,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl ProjectState {
    pub fn new(project_id: impl Into<String>, config: EngineConfig) -> Self {
        Self {
            project_id: project_id.into(),
            last_run: None,
            history: Vec::new(),
            baseline: Baseline::default(),
            users: BTreeSet::new(),
            config,
            points: PointsTable::default(),
            extra: BTreeMap::new(),
        }
    }

    pub fn last_run_id(&self) -> Option<RunId> {
        self.last_run.as_ref().map(|r| r.run_id)
    }

    /// The version stamped on API responses.
    pub fn version(&self) -> u64 {
        self.last_run_id().map_or(0, |r| r.0)
    }

    pub fn seed(&self) -> u64 {
        self.config.rng_seed.unwrap_or_else(|| {
            // stable default derived from the project id (FNV-1a)
            self.project_id
                .bytes()
                .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3))
        })
    }
}
