//! Brute-force re-evaluation of a run: which open challenges and quest steps
//! it solves or auto-rejects, derived from the rules without the engine's
//! verification code.

use std::collections::{BTreeMap, BTreeSet};

use covquest::model::{
    AutoRejectReason, BuildRun, Challenge, ChallengeTarget, LineState, MutantStatus, SourceUnit, UnitCoverage, UserId,
    UserState,
};
use covquest::vcs::RepoView;
use covquest::verify::{EventKind, RunEvent};

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct Verdicts {
    pub solved: BTreeSet<String>,
    pub auto_rejected: BTreeMap<String, AutoRejectReason>,
    pub quest_steps: BTreeSet<String>,
    pub quests_rejected: BTreeMap<String, AutoRejectReason>,
}

impl Verdicts {
    pub fn len(&self) -> usize {
        self.solved.len() + self.auto_rejected.len() + self.quest_steps.len() + self.quests_rejected.len()
    }

    /// The verdicts the engine reported in a run's events.
    pub fn from_events(events: &[RunEvent]) -> Self {
        let mut v = Verdicts::default();
        for e in events {
            match &e.kind {
                EventKind::ChallengeSolved { challenge_id, .. } => {
                    v.solved.insert(challenge_id.clone());
                }
                EventKind::ChallengeAutoRejected { challenge_id, reason, .. } => {
                    v.auto_rejected.insert(challenge_id.clone(), *reason);
                }
                EventKind::QuestStepSolved { challenge_id, .. } => {
                    v.quest_steps.insert(challenge_id.clone());
                }
                EventKind::QuestAutoRejected { quest_id, reason } => {
                    v.quests_rejected.insert(quest_id.clone(), *reason);
                }
                _ => {}
            }
        }
        v
    }
}

enum Fate {
    Gone(AutoRejectReason),
    Here(Challenge),
}

fn unit_in<'a>(run: &'a BuildRun, unit: &SourceUnit) -> Option<&'a UnitCoverage> {
    run.coverage
        .units
        .get(&unit.unit_name)
        .or_else(|| run.coverage.units.values().find(|u| u.unit.path == unit.path))
}

fn out_of_scope(run: &BuildRun, unit: &SourceUnit) -> bool {
    run.is_success() && run.reports.coverage && unit_in(run, unit).is_none()
}

/// Every line within the window holding the text; nearest wins, and on a
/// tie the line further down the file.
fn find_text(lines: &[String], line: u32, text: &str, window: u32) -> Option<u32> {
    let lo = line.saturating_sub(window).max(1);
    (lo..=line + window)
        .filter(|&l| lines.get(l as usize - 1).is_some_and(|t| t.trim() == text.trim()))
        .min_by_key(|&l| (l.abs_diff(line), l < line))
}

fn fate(ch: &Challenge, run: &BuildRun, view: &dyn RepoView, window: u32) -> Fate {
    let mut ch = ch.clone();
    let unit = match ch.target.unit() {
        Some(u) => u.clone(),
        None => return Fate::Here(ch),
    };
    let Some(lines) = view.file_lines(&unit.path) else {
        return Fate::Gone(AutoRejectReason::FileDeleted);
    };
    match &mut ch.target {
        ChallengeTarget::ClassCoverage { .. } if out_of_scope(run, &unit) => Fate::Gone(AutoRejectReason::OutOfScope),
        ChallengeTarget::MethodCoverage { method, .. } => {
            if out_of_scope(run, &unit) {
                return Fate::Gone(AutoRejectReason::OutOfScope);
            }
            let missing = run.is_success()
                && run.reports.coverage
                && unit_in(run, &unit).is_some_and(|c| {
                    !c.methods.iter().any(|m| m.name == method.name && m.signature == method.signature)
                });
            if missing {
                Fate::Gone(AutoRejectReason::CodeChanged)
            } else {
                Fate::Here(ch)
            }
        }
        ChallengeTarget::LineCoverage { line, snippet, .. } => {
            if out_of_scope(run, &unit) {
                return Fate::Gone(AutoRejectReason::OutOfScope);
            }
            match find_text(&lines, *line, snippet, window) {
                Some(l) => {
                    *line = l;
                    Fate::Here(ch)
                }
                None => Fate::Gone(AutoRejectReason::CodeChanged),
            }
        }
        ChallengeTarget::Mutation { mutant, .. } => {
            let vanished =
                run.is_success() && run.reports.mutations && !run.mutants.iter().any(|m| m.id == mutant.id);
            if vanished {
                Fate::Gone(AutoRejectReason::MutantVanished)
            } else {
                Fate::Here(ch)
            }
        }
        ChallengeTarget::Smell { finding, snippet: Some(text) } => {
            if let Some(l) = find_text(&lines, finding.start_line, text, window) {
                let span = finding.end_line - finding.start_line;
                finding.start_line = l;
                finding.end_line = l + span;
            }
            Fate::Here(ch)
        }
        _ => Fate::Here(ch),
    }
}

fn hits(states: impl Iterator<Item = LineState>) -> (u128, u128) {
    let (mut hit, mut total) = (0u128, 0u128);
    for s in states {
        total += 1;
        if s != LineState::Uncovered {
            hit += 1;
        }
    }
    if total == 0 {
        (1, 1)
    } else {
        (hit, total)
    }
}

fn greater(now: (u128, u128), base: (u64, u64)) -> bool {
    let base = if base.1 == 0 { (1, 1) } else { (u128::from(base.0), u128::from(base.1)) };
    now.0 * base.1 > base.0 * now.1
}

fn branches(state: LineState) -> u32 {
    match state {
        LineState::PartiallyCovered { branch_covered, .. } => branch_covered,
        _ => 0,
    }
}

fn solved(ch: &Challenge, run: &BuildRun) -> bool {
    if !run.is_success() {
        return false;
    }
    match &ch.target {
        ChallengeTarget::Build { .. } => true,
        ChallengeTarget::Test { baseline_tests } => run.reports.tests && run.tests.test_count > *baseline_tests,
        ChallengeTarget::ClassCoverage { unit, baseline } => {
            run.reports.coverage
                && unit_in(run, unit)
                    .is_some_and(|c| greater(hits(c.lines.values().copied()), (baseline.covered, baseline.total)))
        }
        ChallengeTarget::MethodCoverage { unit, method, baseline } => {
            run.reports.coverage
                && unit_in(run, unit).is_some_and(|c| {
                    c.methods.iter().find(|m| m.name == method.name && m.signature == method.signature).is_some_and(|m| {
                        let states = c.lines.iter().filter(|(l, _)| (m.first_line..=m.last_line).contains(*l));
                        greater(hits(states.map(|(_, s)| *s)), (baseline.covered, baseline.total))
                    })
                })
        }
        ChallengeTarget::LineCoverage { unit, line, baseline, .. } => {
            run.reports.coverage
                && unit_in(run, unit).and_then(|c| c.lines.get(line)).is_some_and(|now| match *now {
                    LineState::Covered => *baseline != LineState::Covered,
                    LineState::PartiallyCovered { branch_covered, .. } => branch_covered > branches(*baseline),
                    LineState::Uncovered => false,
                })
        }
        ChallengeTarget::Mutation { mutant, .. } => {
            run.reports.mutations
                && run.mutants.iter().any(|m| m.id == mutant.id && m.status == MutantStatus::Killed)
        }
        ChallengeTarget::Smell { finding, .. } => {
            run.reports.findings
                && !run.smells.iter().any(|f| {
                    f.rule_id == finding.rule_id
                        && f.source_unit.path == finding.source_unit.path
                        && f.start_line <= finding.end_line
                        && finding.start_line <= f.end_line
                })
        }
    }
}

/// What `run` should do to the open challenges and quests in `before`.
pub fn evaluate(before: &BTreeMap<UserId, UserState>, run: &BuildRun, view: &dyn RepoView, window: u32) -> Verdicts {
    let mut v = Verdicts::default();
    for user in before.values() {
        for ch in &user.open_challenges {
            match fate(ch, run, view, window) {
                Fate::Gone(reason) => {
                    v.auto_rejected.insert(ch.id.clone(), reason);
                }
                Fate::Here(c) => {
                    if solved(&c, run) {
                        v.solved.insert(ch.id.clone());
                    }
                }
            }
        }
        for quest in &user.open_quests {
            let first_gone = |from: usize| {
                quest.steps[from..].iter().find_map(|s| match fate(s, run, view, window) {
                    Fate::Gone(r) => Some(r),
                    Fate::Here(_) => None,
                })
            };
            let active = &quest.steps[quest.cursor];
            match fate(active, run, view, window) {
                Fate::Gone(r) => {
                    v.quests_rejected.insert(quest.id.clone(), r);
                }
                Fate::Here(c) if solved(&c, run) => {
                    v.quest_steps.insert(active.id.clone());
                    if quest.cursor + 1 < quest.steps.len() {
                        if let Some(r) = first_gone(quest.cursor + 1) {
                            v.quests_rejected.insert(quest.id.clone(), r);
                        }
                    }
                }
                Fate::Here(_) => {
                    if let Some(r) = first_gone(quest.cursor) {
                        v.quests_rejected.insert(quest.id.clone(), r);
                    }
                }
            }
        }
    }
    v
}
