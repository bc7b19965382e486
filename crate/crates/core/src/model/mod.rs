//! Domain types shared by every other module. Nothing in here performs I/O.

mod challenge;
mod coverage;
mod project;
mod user;

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use challenge::{
    AutoRejectReason, Challenge, ChallengeKind, ChallengeState, ChallengeTarget, Quest, QuestKind,
    QuestState, RejectionCategory,
};
pub use coverage::{CoverageFraction, CoverageSnapshot, LineState, MethodSpan, UnitCoverage};
pub use project::{Baseline, EngineConfig, ProjectState, RunSummary};
pub use user::{validate, AchievementUnlock, LedgerEntry, UserState, AVATAR_COUNT};

/// Identifier of a developer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub String);

impl UserId {
    pub fn new(id: impl Into<String>) -> Self {
        UserId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for UserId {
    fn from(s: &str) -> Self {
        UserId(s.to_string())
    }
}

/// Monotonically increasing build number of a project.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RunId(pub u64);

impl fmt::Display for RunId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Production,
    Test,
}

/// A class-like unit of the analyzed project, bound to its file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceUnit {
    pub unit_name: String,
    pub path: String,
    pub kind: UnitKind,
}

impl SourceUnit {
    pub fn new(path: &str, unit_name: &str) -> Self {
        let path = normalize_path(path);
        let kind = classify(&path, unit_name);
        Self { unit_name: unit_name.to_string(), path, kind }
    }

    /// Derives the unit name from the path: separators become dots and the
    /// extension is dropped.
    pub fn from_path(path: &str) -> Self {
        let path = normalize_path(path);
        let name = name_from_path(&path);
        Self::new(&path, &name)
    }

    pub fn is_test(&self) -> bool {
        self.kind == UnitKind::Test
    }

    pub fn file_name(&self) -> &str {
        self.path.rsplit('/').next().unwrap_or(&self.path)
    }
}

impl fmt::Display for SourceUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.unit_name)
    }
}

/// Forward slashes, no leading `./`.
pub fn normalize_path(path: &str) -> String {
    let mut p = path.trim().replace('\\', "/");
    while let Some(rest) = p.strip_prefix("./") {
        p = rest.to_string();
    }
    p
}

pub fn name_from_path(path: &str) -> String {
    let path = normalize_path(path);
    let stem = match path.rfind('.') {
        Some(dot) if dot > path.rfind('/').map_or(0, |s| s + 1) => &path[..dot],
        _ => &path[..],
    };
    stem.trim_start_matches('/').replace('/', ".")
}

fn classify(path: &str, unit_name: &str) -> UnitKind {
    let padded = format!("/{path}");
    if padded.contains("/test/") || unit_name.ends_with("Test") || unit_name.ends_with("Tests") {
        UnitKind::Test
    } else {
        UnitKind::Production
    }
}

/// Two report paths name the same file when equal or when one is a
/// `/`-aligned suffix of the other (reports disagree on source roots).
pub fn paths_match(a: &str, b: &str) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    a == b
        || (a.len() > b.len() && a.ends_with(b) && a.as_bytes()[a.len() - b.len() - 1] == b'/')
        || (b.len() > a.len() && b.ends_with(a) && b.as_bytes()[b.len() - a.len() - 1] == b'/')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutantStatus {
    Killed,
    Survived,
    NoCoverage,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MutantRecord {
    pub id: String,
    pub source_unit: SourceUnit,
    pub line: u32,
    pub mutator: String,
    #[serde(default)]
    pub method: Option<String>,
    pub description: String,
    pub status: MutantStatus,
}

impl MutantRecord {
    /// `unit:line:mutator:ordinal`, with the mutator reduced to its simple name.
    pub fn make_id(class_name: &str, line: u32, mutator: &str, ordinal: usize) -> String {
        let short = mutator.rsplit('.').next().unwrap_or(mutator);
        format!("{class_name}:{line}:{short}:{ordinal}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SmellFinding {
    pub rule_id: String,
    pub source_unit: SourceUnit,
    pub start_line: u32,
    pub end_line: u32,
    pub message: String,
}

impl SmellFinding {
    pub fn overlaps(&self, start: u32, end: u32) -> bool {
        self.start_line <= end && start <= self.end_line
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSnapshot {
    pub test_count: u64,
    pub failing_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildStatus {
    Success,
    Failure,
}

impl BuildStatus {
    pub fn is_success(self) -> bool {
        self == BuildStatus::Success
    }
}

impl std::str::FromStr for BuildStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "success" => Ok(BuildStatus::Success),
            "failure" => Ok(BuildStatus::Failure),
            other => Err(format!("unknown build status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitMeta {
    pub hash: String,
    pub author: UserId,
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub changed_paths: Vec<String>,
}

/// Which report families a run actually carried. A missing family means
/// "no information", which is different from an empty report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportKinds {
    pub coverage: bool,
    pub mutations: bool,
    pub findings: bool,
    pub tests: bool,
}

impl ReportKinds {
    pub const ALL: ReportKinds = ReportKinds { coverage: true, mutations: true, findings: true, tests: true };
}

/// Everything one CI build hands to the engine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildRun {
    pub run_id: RunId,
    pub timestamp: DateTime<Utc>,
    pub build_status: BuildStatus,
    #[serde(default)]
    pub coverage: CoverageSnapshot,
    #[serde(default)]
    pub mutants: Vec<MutantRecord>,
    #[serde(default)]
    pub smells: Vec<SmellFinding>,
    #[serde(default)]
    pub tests: TestSnapshot,
    #[serde(default)]
    pub reports: ReportKinds,
    #[serde(default)]
    pub commits: Vec<CommitMeta>,
    pub actor: UserId,
}

impl BuildRun {
    /// A run with no reports and no commits.
    pub fn new(run_id: RunId, timestamp: DateTime<Utc>, build_status: BuildStatus, actor: UserId) -> Self {
        Self {
            run_id,
            timestamp,
            build_status,
            coverage: CoverageSnapshot::default(),
            mutants: Vec::new(),
            smells: Vec::new(),
            tests: TestSnapshot::default(),
            reports: ReportKinds::default(),
            commits: Vec::new(),
            actor,
        }
    }

    pub fn is_success(&self) -> bool {
        self.build_status.is_success()
    }

    pub fn mutant(&self, id: &str) -> Option<&MutantRecord> {
        self.mutants.iter().find(|m| m.id == id)
    }
}
