use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CoverageFraction, LineState, MethodSpan, MutantRecord, RunId, SmellFinding, SourceUnit, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChallengeKind {
    Build,
    Test,
    ClassCoverage,
    MethodCoverage,
    LineCoverage,
    Mutation,
    Smell,
}

impl ChallengeKind {
    pub const ALL: [ChallengeKind; 7] = [
        ChallengeKind::Build,
        ChallengeKind::Test,
        ChallengeKind::ClassCoverage,
        ChallengeKind::MethodCoverage,
        ChallengeKind::LineCoverage,
        ChallengeKind::Mutation,
        ChallengeKind::Smell,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChallengeKind::Build => "build",
            ChallengeKind::Test => "test",
            ChallengeKind::ClassCoverage => "class_coverage",
            ChallengeKind::MethodCoverage => "method_coverage",
            ChallengeKind::LineCoverage => "line_coverage",
            ChallengeKind::Mutation => "mutation",
            ChallengeKind::Smell => "smell",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ChallengeKind::Build => "Build Challenge",
            ChallengeKind::Test => "Test Challenge",
            ChallengeKind::ClassCoverage => "Class Coverage Challenge",
            ChallengeKind::MethodCoverage => "Method Coverage Challenge",
            ChallengeKind::LineCoverage => "Line Coverage Challenge",
            ChallengeKind::Mutation => "Mutation Challenge",
            ChallengeKind::Smell => "Smell Challenge",
        }
    }

    /// Kinds whose target lives inside a particular source unit.
    pub fn is_unit_bound(self) -> bool {
        !matches!(self, ChallengeKind::Build | ChallengeKind::Test)
    }
}

impl fmt::Display for ChallengeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Kind-specific payload, including the baseline captured at creation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChallengeTarget {
    Build {
        failing_run: RunId,
    },
    Test {
        baseline_tests: u64,
    },
    ClassCoverage {
        unit: SourceUnit,
        baseline: CoverageFraction,
    },
    MethodCoverage {
        unit: SourceUnit,
        method: MethodSpan,
        baseline: CoverageFraction,
    },
    LineCoverage {
        unit: SourceUnit,
        line: u32,
        baseline: LineState,
        snippet: String,
    },
    Mutation {
        mutant: MutantRecord,
        #[serde(default)]
        original_text: Option<String>,
    },
    Smell {
        finding: SmellFinding,
        #[serde(default)]
        snippet: Option<String>,
    },
}

impl ChallengeTarget {
    pub fn kind(&self) -> ChallengeKind {
        match self {
            ChallengeTarget::Build { .. } => ChallengeKind::Build,
            ChallengeTarget::Test { .. } => ChallengeKind::Test,
            ChallengeTarget::ClassCoverage { .. } => ChallengeKind::ClassCoverage,
            ChallengeTarget::MethodCoverage { .. } => ChallengeKind::MethodCoverage,
            ChallengeTarget::LineCoverage { .. } => ChallengeKind::LineCoverage,
            ChallengeTarget::Mutation { .. } => ChallengeKind::Mutation,
            ChallengeTarget::Smell { .. } => ChallengeKind::Smell,
        }
    }

    pub fn unit(&self) -> Option<&SourceUnit> {
        match self {
            ChallengeTarget::Build { .. } | ChallengeTarget::Test { .. } => None,
            ChallengeTarget::ClassCoverage { unit, .. }
            | ChallengeTarget::MethodCoverage { unit, .. }
            | ChallengeTarget::LineCoverage { unit, .. } => Some(unit),
            ChallengeTarget::Mutation { mutant, .. } => Some(&mutant.source_unit),
            ChallengeTarget::Smell { finding, .. } => Some(&finding.source_unit),
        }
    }

    /// Identity used to avoid two open challenges on the same thing. Baselines
    /// and snippets are not part of it.
    pub fn key(&self) -> String {
        match self {
            ChallengeTarget::Build { .. } => "build".to_string(),
            ChallengeTarget::Test { baseline_tests } => format!("test:{baseline_tests}"),
            ChallengeTarget::ClassCoverage { unit, .. } => format!("class:{}", unit.unit_name),
            ChallengeTarget::MethodCoverage { unit, method, .. } => {
                format!("method:{}#{}", unit.unit_name, method.display_name())
            }
            ChallengeTarget::LineCoverage { unit, line, .. } => format!("line:{}:{line}", unit.unit_name),
            ChallengeTarget::Mutation { mutant, .. } => format!("mutation:{}", mutant.id),
            ChallengeTarget::Smell { finding, .. } => format!(
                "smell:{}:{}:{}-{}",
                finding.source_unit.unit_name, finding.rule_id, finding.start_line, finding.end_line
            ),
        }
    }

    pub fn description(&self) -> String {
        match self {
            ChallengeTarget::Build { failing_run } => {
                format!("Fix the build that failed in run {failing_run}")
            }
            ChallengeTarget::Test { baseline_tests } => {
                format!("Write at least one additional test (currently {baseline_tests})")
            }
            ChallengeTarget::ClassCoverage { unit, baseline } => {
                format!("Increase the line coverage of {unit} beyond {baseline}")
            }
            ChallengeTarget::MethodCoverage { unit, method, baseline } => format!(
                "Increase the line coverage of method {} in {unit} beyond {baseline}",
                method.display_name()
            ),
            ChallengeTarget::LineCoverage { unit, line, baseline, .. } => match baseline {
                LineState::PartiallyCovered { branch_covered, branch_total } => format!(
                    "Cover more branches of line {line} in {unit} ({branch_covered} of {branch_total} taken)"
                ),
                _ => format!("Write a test that covers line {line} in {unit}"),
            },
            ChallengeTarget::Mutation { mutant, .. } => format!(
                "Write a test that detects the mutant at line {} in {}: {}",
                mutant.line, mutant.source_unit, mutant.description
            ),
            ChallengeTarget::Smell { finding, .. } => format!(
                "Remove the smell {} at lines {}-{} in {}: {}",
                finding.rule_id, finding.start_line, finding.end_line, finding.source_unit, finding.message
            ),
        }
    }

    /// Code shown next to the challenge, when there is any.
    pub fn snippet(&self) -> Option<&str> {
        match self {
            ChallengeTarget::LineCoverage { snippet, .. } => Some(snippet),
            ChallengeTarget::Mutation { original_text, .. } => original_text.as_deref(),
            ChallengeTarget::Smell { snippet, .. } => snippet.as_deref(),
            _ => None,
        }
    }
}

/// Machine-checkable causes of an automatic rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoRejectReason {
    FileDeleted,
    CodeChanged,
    MutantVanished,
    OutOfScope,
}

impl AutoRejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            AutoRejectReason::FileDeleted => "file_deleted",
            AutoRejectReason::CodeChanged => "code_changed",
            AutoRejectReason::MutantVanished => "mutant_vanished",
            AutoRejectReason::OutOfScope => "out_of_scope",
        }
    }
}

impl fmt::Display for AutoRejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optional tag on a rejection, mirroring the commonly observed causes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionCategory {
    AutoRejected,
    NoIdeaHowToTest,
    LineAlreadyCovered,
    NotFeasible,
    ChangedOrDeletedCode,
    NoMutatedLine,
    MutantAlreadyKilled,
    OutOfScope,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum ChallengeState {
    Open,
    Solved {
        run: RunId,
    },
    Rejected {
        reason: String,
        #[serde(default)]
        category: Option<RejectionCategory>,
        run: RunId,
        auto: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Challenge {
    pub id: String,
    pub owner: UserId,
    pub target: ChallengeTarget,
    pub created_at: RunId,
    pub state: ChallengeState,
    pub points: u32,
}

impl Challenge {
    pub fn kind(&self) -> ChallengeKind {
        self.target.kind()
    }

    pub fn is_open(&self) -> bool {
        self.state == ChallengeState::Open
    }

    pub fn solved_at(&self) -> Option<RunId> {
        match self.state {
            ChallengeState::Solved { run } => Some(run),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestKind {
    SmellSweep,
    CoverageAscent,
    MutationStreak,
    LineMarch,
    ExpandSuite,
}

impl QuestKind {
    pub const ALL: [QuestKind; 5] = [
        QuestKind::SmellSweep,
        QuestKind::CoverageAscent,
        QuestKind::MutationStreak,
        QuestKind::LineMarch,
        QuestKind::ExpandSuite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestKind::SmellSweep => "smell_sweep",
            QuestKind::CoverageAscent => "coverage_ascent",
            QuestKind::MutationStreak => "mutation_streak",
            QuestKind::LineMarch => "line_march",
            QuestKind::ExpandSuite => "expand_suite",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            QuestKind::SmellSweep => "Smell Sweep",
            QuestKind::CoverageAscent => "Coverage Ascent",
            QuestKind::MutationStreak => "Mutation Streak",
            QuestKind::LineMarch => "Line March",
            QuestKind::ExpandSuite => "Expand the Suite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum QuestState {
    Open,
    Completed { run: RunId },
    AutoRejected { run: RunId, reason: AutoRejectReason },
}

/// An ordered chain of challenges; only the step at `cursor` is active.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quest {
    pub id: String,
    pub owner: UserId,
    pub kind: QuestKind,
    pub steps: Vec<Challenge>,
    pub cursor: usize,
    pub created_at: RunId,
    pub state: QuestState,
}

impl Quest {
    pub fn is_open(&self) -> bool {
        self.state == QuestState::Open
    }

    pub fn active_step(&self) -> Option<&Challenge> {
        if self.is_open() {
            self.steps.get(self.cursor)
        } else {
            None
        }
    }
}
