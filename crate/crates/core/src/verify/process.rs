use std::collections::BTreeMap;

use log::{debug, warn};

use super::{is_applicable, is_solved, rebind, Applicability, EventKind, RunEvent};
use crate::generate::{generate_quest, top_up, GenerationContext};
use crate::model::{
    AutoRejectReason, BuildRun, Challenge, ChallengeState, ChallengeTarget, ProjectState, QuestState, RejectionCategory,
    RunId, RunSummary, UserId, UserState,
};
use crate::rng::DrawStream;
use crate::scoring::{evaluate_achievements, AchievementContext, Award, Catalog, PointsTable};
use crate::vcs::{changed_units, RepoView};

/// New states plus the ordered events of one processed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub project: ProjectState,
    pub users: BTreeMap<UserId, UserState>,
    pub events: Vec<RunEvent>,
}

struct Emitter {
    run: RunId,
    events: Vec<RunEvent>,
}

impl Emitter {
    fn emit(&mut self, user: &UserId, kind: EventKind) {
        self.events.push(RunEvent { run_id: self.run, user_id: user.clone(), kind });
    }

    fn award(&mut self, user: &mut UserState, delta: u32, cause: String) {
        user.award(self.run, i64::from(delta), cause.clone());
        let id = user.user_id.clone();
        self.emit(&id, EventKind::PointsAwarded { delta: i64::from(delta), cause });
    }
}

fn auto_reject(ch: &mut Challenge, reason: AutoRejectReason, run: RunId) {
    ch.state = ChallengeState::Rejected {
        reason: reason.as_str().to_string(),
        category: Some(RejectionCategory::AutoRejected),
        run,
        auto: true,
    };
}

/// Applies one build to the project. Runs must arrive in increasing id
/// order; an old or repeated id changes nothing and yields a single
/// `run_ignored` event.
pub fn process_run(
    project: &ProjectState,
    users: &BTreeMap<UserId, UserState>,
    run: &BuildRun,
    view: &dyn RepoView,
    catalog: &Catalog,
) -> RunOutcome {
    if let Some(last) = project.last_run_id() {
        if run.run_id <= last {
            warn!("ignoring run {} (last processed {})", run.run_id, last);
            return RunOutcome {
                project: project.clone(),
                users: users.clone(),
                events: vec![RunEvent {
                    run_id: run.run_id,
                    user_id: run.actor.clone(),
                    kind: EventKind::RunIgnored { detail: format!("run {} is not newer than {}", run.run_id, last) },
                }],
            };
        }
    }

    let mut project = project.clone();
    let mut users = users.clone();
    let mut out = Emitter { run: run.run_id, events: Vec::new() };

    let newcomers = std::iter::once(&run.actor).chain(run.commits.iter().map(|c| &c.author));
    for id in newcomers {
        if !users.contains_key(id) {
            users.insert(id.clone(), UserState::new(id.clone(), id.as_str()));
        }
        project.users.insert(id.clone());
    }

    let points = project.points.clone();
    let window = project.config.relocation_window;

    for user in users.values_mut() {
        evaluate_challenges(user, run, view, window, &points, &mut out);
    }
    for user in users.values_mut() {
        advance_quest(user, run, &project, view, window, &points, &mut out);
    }

    project.history.push(RunSummary {
        run_id: run.run_id,
        timestamp: run.timestamp,
        status: run.build_status,
        head: Some(view.head().to_string()).filter(|h| !h.is_empty()),
    });
    project.last_run = project.history.last().cloned();
    project.baseline.absorb(run);

    for user in users.values_mut() {
        let ctx = AchievementContext { user, run, history: &project.history, is_actor: user.user_id == run.actor };
        let unlocked = evaluate_achievements(catalog, &ctx);
        for key in unlocked {
            user.achievements.insert(key.clone(), crate::model::AchievementUnlock { run: run.run_id, at: run.timestamp });
            out.emit(&user.user_id.clone(), EventKind::AchievementUnlocked { achievement: key });
        }
    }

    let changed = changed_units(view, project.config.changed_window, &project.config.source_extensions);
    let seed = project.seed();
    for user in users.values_mut() {
        let mut ctx = GenerationContext::new(
            run.run_id,
            run.timestamp,
            &project.baseline,
            &changed,
            !run.is_success(),
            view,
            &project.config,
            &points,
            DrawStream::for_user(seed, &user.user_id, run.run_id),
        );
        for ch in top_up(user, &mut ctx) {
            out.emit(
                &user.user_id,
                EventKind::ChallengeGenerated { challenge_id: ch.id.clone(), challenge_kind: ch.kind(), target: ch.target.key() },
            );
        }
        if let Some(q) = generate_quest(user, &mut ctx) {
            out.emit(&user.user_id, EventKind::QuestGenerated { quest_id: q.id.clone(), quest_kind: q.kind, steps: q.steps.len() });
            user.open_quests.push(q);
        }
        debug!("user {} drew {} numbers in run {}", user.user_id, ctx.draws.log().len(), run.run_id);
    }

    RunOutcome { project, users, events: out.events }
}

fn evaluate_challenges(
    user: &mut UserState,
    run: &BuildRun,
    view: &dyn RepoView,
    window: u32,
    points: &PointsTable,
    out: &mut Emitter,
) {
    let open = std::mem::take(&mut user.open_challenges);
    for mut ch in open {
        match is_applicable(&ch, view, run, window) {
            Applicability::Inapplicable(reason) => {
                auto_reject(&mut ch, reason, run.run_id);
                out.emit(
                    &user.user_id,
                    EventKind::ChallengeAutoRejected { challenge_id: ch.id.clone(), challenge_kind: ch.kind(), reason },
                );
                user.rejected_challenges.push(ch);
                continue;
            }
            Applicability::Relocated { line } => rebind(&mut ch.target, line),
            Applicability::Applicable => {}
        }
        if is_solved(&ch, run) {
            ch.state = ChallengeState::Solved { run: run.run_id };
            out.emit(&user.user_id, EventKind::ChallengeSolved { challenge_id: ch.id.clone(), challenge_kind: ch.kind() });
            out.award(user, points.points_for(Award::ChallengeSolved(ch.kind())), format!("challenge:{}", ch.id));
            user.completed_challenges.push(ch);
        } else {
            user.open_challenges.push(ch);
        }
    }
}

/// Checks the quest's remaining steps from the cursor on; the first one
/// that no longer applies ends the quest.
fn remaining_inapplicable(
    steps: &mut [Challenge],
    from: usize,
    view: &dyn RepoView,
    run: &BuildRun,
    window: u32,
) -> Option<AutoRejectReason> {
    for step in steps.iter_mut().skip(from) {
        match is_applicable(step, view, run, window) {
            Applicability::Inapplicable(reason) => return Some(reason),
            Applicability::Relocated { line } => rebind(&mut step.target, line),
            Applicability::Applicable => {}
        }
    }
    None
}

fn advance_quest(
    user: &mut UserState,
    run: &BuildRun,
    project: &ProjectState,
    view: &dyn RepoView,
    window: u32,
    points: &PointsTable,
    out: &mut Emitter,
) {
    let Some(mut quest) = user.open_quests.pop() else { return };
    let uid = user.user_id.clone();

    let mut ended = remaining_inapplicable(&mut quest.steps[..=quest.cursor], quest.cursor, view, run, window);
    if ended.is_none() && is_solved(&quest.steps[quest.cursor], run) {
        let step = quest.cursor;
        let ch = &mut quest.steps[step];
        ch.state = ChallengeState::Solved { run: run.run_id };
        let (id, kind) = (ch.id.clone(), ch.kind());
        out.emit(&uid, EventKind::QuestStepSolved { quest_id: quest.id.clone(), step, challenge_id: id.clone() });
        out.award(user, points.points_for(Award::ChallengeSolved(kind)), format!("challenge:{id}"));
        out.award(user, points.points_for(Award::QuestStep), format!("quest_step:{}:{step}", quest.id));
        quest.cursor += 1;
        if quest.cursor == quest.steps.len() {
            quest.state = QuestState::Completed { run: run.run_id };
            out.emit(&uid, EventKind::QuestCompleted { quest_id: quest.id.clone() });
            out.award(user, points.points_for(Award::QuestCompleted), format!("quest_completed:{}", quest.id));
            user.completed_quests.push(quest);
            return;
        }
        let current_tests = if run.is_success() && run.reports.tests { run.tests.test_count } else { project.baseline.tests.test_count };
        if let ChallengeTarget::Test { baseline_tests } = &mut quest.steps[quest.cursor].target {
            *baseline_tests = current_tests;
        }
    }
    if ended.is_none() {
        ended = remaining_inapplicable(&mut quest.steps, quest.cursor, view, run, window);
    }
    match ended {
        Some(reason) => {
            quest.state = QuestState::AutoRejected { run: run.run_id, reason };
            out.emit(&uid, EventKind::QuestAutoRejected { quest_id: quest.id.clone(), reason });
            user.rejected_quests.push(quest);
        }
        None => user.open_quests.push(quest),
    }
}
