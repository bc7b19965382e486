//! Challenge verification: what a build solved, what it made obsolete, and
//! the ordered event stream describing every state change.

mod process;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use process::{process_run, RunOutcome};

use crate::model::{
    AutoRejectReason, BuildRun, Challenge, ChallengeKind, ChallengeState, ChallengeTarget, LineState, MutantStatus,
    QuestKind, RejectionCategory, RunId, SourceUnit, UserId, UserState,
};
use crate::model::paths_match;
use crate::vcs::RepoView;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    ChallengeSolved { challenge_id: String, challenge_kind: ChallengeKind },
    ChallengeAutoRejected { challenge_id: String, challenge_kind: ChallengeKind, reason: AutoRejectReason },
    ChallengeRejected {
        challenge_id: String,
        challenge_kind: ChallengeKind,
        reason: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        category: Option<RejectionCategory>,
    },
    ChallengeGenerated { challenge_id: String, challenge_kind: ChallengeKind, target: String },
    QuestGenerated { quest_id: String, quest_kind: QuestKind, steps: usize },
    QuestStepSolved { quest_id: String, step: usize, challenge_id: String },
    QuestCompleted { quest_id: String },
    QuestAutoRejected { quest_id: String, reason: AutoRejectReason },
    AchievementUnlocked { achievement: String },
    PointsAwarded { delta: i64, cause: String },
    RunIgnored { detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunEvent {
    pub run_id: RunId,
    pub user_id: UserId,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl RunEvent {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("events always serialize")
    }
}

/// Renders events as JSON lines, the format of committed golden logs.
pub fn event_log(events: &[RunEvent]) -> String {
    events.iter().map(|e| e.to_json_line() + "\n").collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applicability {
    Applicable,
    /// The target's text was found this many lines away; the challenge is
    /// re-bound there.
    Relocated { line: u32 },
    Inapplicable(AutoRejectReason),
}

fn same_text(a: &str, b: &str) -> bool {
    a.trim() == b.trim()
}

/// Finds `snippet` at `line` or within `window` lines of it, nearest first,
/// below before above.
pub fn locate_line(lines: &[String], line: u32, snippet: &str, window: u32) -> Option<u32> {
    let at = |l: u32| l >= 1 && lines.get(l as usize - 1).is_some_and(|t| same_text(t, snippet));
    if at(line) {
        return Some(line);
    }
    (1..=window).flat_map(|d| [line + d, line.saturating_sub(d)]).find(|&l| at(l))
}

fn unit_tracked(run: &BuildRun, unit: &SourceUnit) -> bool {
    !(run.is_success() && run.reports.coverage && run.coverage.find(unit).is_none())
}

/// Whether the challenge still refers to something that exists.
pub fn is_applicable(ch: &Challenge, view: &dyn RepoView, run: &BuildRun, window: u32) -> Applicability {
    use Applicability::*;
    let Some(unit) = ch.target.unit() else { return Applicable };
    let Some(lines) = view.unit_lines(unit) else { return Inapplicable(AutoRejectReason::FileDeleted) };
    match &ch.target {
        ChallengeTarget::ClassCoverage { unit, .. } => {
            if unit_tracked(run, unit) {
                Applicable
            } else {
                Inapplicable(AutoRejectReason::OutOfScope)
            }
        }
        ChallengeTarget::MethodCoverage { unit, method, .. } => {
            if !unit_tracked(run, unit) {
                return Inapplicable(AutoRejectReason::OutOfScope);
            }
            let gone = run.is_success()
                && run.reports.coverage
                && run.coverage.find(unit).is_some_and(|c| c.find_method(method).is_none());
            if gone {
                Inapplicable(AutoRejectReason::CodeChanged)
            } else {
                Applicable
            }
        }
        ChallengeTarget::LineCoverage { unit, line, snippet, .. } => {
            if !unit_tracked(run, unit) {
                return Inapplicable(AutoRejectReason::OutOfScope);
            }
            match locate_line(&lines, *line, snippet, window) {
                Some(l) if l == *line => Applicable,
                Some(l) => Relocated { line: l },
                None => Inapplicable(AutoRejectReason::CodeChanged),
            }
        }
        ChallengeTarget::Mutation { mutant, .. } => {
            if run.is_success() && run.reports.mutations && run.mutant(&mutant.id).is_none() {
                Inapplicable(AutoRejectReason::MutantVanished)
            } else {
                Applicable
            }
        }
        ChallengeTarget::Smell { finding, snippet } => match snippet {
            Some(s) => match locate_line(&lines, finding.start_line, s, window) {
                Some(l) if l != finding.start_line => Relocated { line: l },
                _ => Applicable,
            },
            None => Applicable,
        },
        ChallengeTarget::Build { .. } | ChallengeTarget::Test { .. } => Applicable,
    }
}

/// Moves a line or smell target to `line` after a relocation.
pub fn rebind(target: &mut ChallengeTarget, line: u32) {
    match target {
        ChallengeTarget::LineCoverage { line: l, .. } => *l = line,
        ChallengeTarget::Smell { finding, .. } => {
            let span = finding.end_line - finding.start_line;
            finding.start_line = line;
            finding.end_line = line + span;
        }
        _ => {}
    }
}

/// Whether the run fulfils the challenge. Every kind needs a successful
/// build; for a build challenge that is the whole condition.
pub fn is_solved(ch: &Challenge, run: &BuildRun) -> bool {
    if !run.is_success() {
        return false;
    }
    let r = run.reports;
    match &ch.target {
        ChallengeTarget::Build { .. } => true,
        ChallengeTarget::Test { baseline_tests } => r.tests && run.tests.test_count > *baseline_tests,
        ChallengeTarget::ClassCoverage { unit, baseline } => {
            r.coverage && run.coverage.find(unit).is_some_and(|c| c.line_coverage() > *baseline)
        }
        ChallengeTarget::MethodCoverage { unit, method, baseline } => {
            r.coverage
                && run
                    .coverage
                    .find(unit)
                    .and_then(|c| c.find_method(method).map(|m| c.method_coverage(m)))
                    .is_some_and(|now| now > *baseline)
        }
        ChallengeTarget::LineCoverage { unit, line, baseline, .. } => {
            r.coverage
                && run.coverage.find(unit).and_then(|c| c.lines.get(line)).is_some_and(|now| line_improved(*baseline, *now))
        }
        ChallengeTarget::Mutation { mutant, .. } => {
            r.mutations && run.mutant(&mutant.id).is_some_and(|m| m.status == MutantStatus::Killed)
        }
        ChallengeTarget::Smell { finding, .. } => {
            r.findings
                && !run.smells.iter().any(|f| {
                    f.rule_id == finding.rule_id
                        && paths_match(&f.source_unit.path, &finding.source_unit.path)
                        && f.overlaps(finding.start_line, finding.end_line)
                })
        }
    }
}

/// Fully covered now, or partially covered with more branches taken.
pub fn line_improved(baseline: LineState, now: LineState) -> bool {
    match now {
        LineState::Covered => baseline != LineState::Covered,
        LineState::PartiallyCovered { branch_covered, .. } => branch_covered > baseline.branches_taken().unwrap_or(0),
        LineState::Uncovered => false,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RejectError {
    #[error("unknown challenge {0}")]
    UnknownChallenge(String),
    #[error("challenge {0} is already closed")]
    AlreadyClosed(String),
    #[error("a rejection needs a reason")]
    EmptyReason,
}

/// Manually rejects an open challenge. Rejecting a class coverage challenge
/// blocks its unit from future generation.
pub fn reject(
    user: &mut UserState,
    challenge_id: &str,
    reason: &str,
    category: Option<RejectionCategory>,
    run: RunId,
) -> Result<Challenge, RejectError> {
    if reason.trim().is_empty() {
        return Err(RejectError::EmptyReason);
    }
    let Some(pos) = user.open_challenges.iter().position(|c| c.id == challenge_id) else {
        return Err(if user.all_challenges().any(|c| c.id == challenge_id) {
            RejectError::AlreadyClosed(challenge_id.to_string())
        } else {
            RejectError::UnknownChallenge(challenge_id.to_string())
        });
    };
    let mut ch = user.open_challenges.remove(pos);
    ch.state = ChallengeState::Rejected { reason: reason.to_string(), category, run, auto: false };
    if ch.kind() == ChallengeKind::ClassCoverage {
        if let Some(unit) = ch.target.unit() {
            user.blocked_units.insert(unit.clone());
        }
    }
    user.rejected_challenges.push(ch.clone());
    Ok(ch)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UnblockError {
    #[error("unit {0} is not blocked")]
    NotBlocked(String),
}

/// Lifts a block; `unit` may be the unit name or its path.
pub fn unblock(user: &mut UserState, unit: &str) -> Result<SourceUnit, UnblockError> {
    let found = user
        .blocked_units
        .iter()
        .find(|u| u.unit_name == unit || u.path == unit)
        .cloned()
        .ok_or_else(|| UnblockError::NotBlocked(unit.to_string()))?;
    user.blocked_units.remove(&found);
    Ok(found)
}
