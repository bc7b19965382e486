//! Read-only projections served by the API. Each view is a pure function
//! of the stored state, so repeated reads between runs are identical.

use serde::{Deserialize, Serialize};

use crate::model::{Challenge, ChallengeKind, ChallengeState, Quest, QuestKind, QuestState, RunId, UserState};
use crate::scoring::Catalog;

/// Every API response: the project version (last run id) plus data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub version: u64,
    pub data: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeView {
    pub id: String,
    pub kind: ChallengeKind,
    pub title: String,
    pub description: String,
    pub points: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snippet: Option<String>,
    pub created_at: RunId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solved_at: Option<RunId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection: Option<RejectionView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionView {
    pub reason: String,
    pub automatic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<crate::model::RejectionCategory>,
}

impl ChallengeView {
    pub fn of(ch: &Challenge) -> Self {
        let rejection = match &ch.state {
            ChallengeState::Rejected { reason, category, auto, .. } => {
                Some(RejectionView { reason: reason.clone(), automatic: *auto, category: *category })
            }
            _ => None,
        };
        Self {
            id: ch.id.clone(),
            kind: ch.kind(),
            title: ch.kind().title().to_string(),
            description: ch.target.description(),
            points: ch.points,
            unit: ch.target.unit().map(|u| u.unit_name.clone()),
            snippet: ch.target.snippet().map(str::to_string),
            created_at: ch.created_at,
            solved_at: ch.solved_at(),
            rejection,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserChallenges {
    pub open: Vec<ChallengeView>,
    pub completed: Vec<ChallengeView>,
    pub rejected: Vec<ChallengeView>,
    pub blocked_units: Vec<String>,
}

pub fn user_challenges(user: &UserState) -> UserChallenges {
    let all = |list: &[Challenge]| list.iter().map(ChallengeView::of).collect();
    UserChallenges {
        open: all(&user.open_challenges),
        completed: all(&user.completed_challenges),
        rejected: all(&user.rejected_challenges),
        blocked_units: user.blocked_units.iter().map(|u| u.unit_name.clone()).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Solved,
    Active,
    Locked,
}

/// A quest step; `detail` is withheld until the step is reached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestStepView {
    pub index: usize,
    pub title: String,
    pub status: StepStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<ChallengeView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestView {
    pub id: String,
    pub kind: QuestKind,
    pub title: String,
    pub state: QuestState,
    pub cursor: usize,
    pub steps: Vec<QuestStepView>,
}

impl QuestView {
    pub fn of(q: &Quest) -> Self {
        let steps = q
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let status = if i < q.cursor {
                    StepStatus::Solved
                } else if i == q.cursor && q.is_open() {
                    StepStatus::Active
                } else {
                    StepStatus::Locked
                };
                QuestStepView {
                    index: i,
                    title: s.kind().title().to_string(),
                    status,
                    detail: (status != StepStatus::Locked).then(|| ChallengeView::of(s)),
                }
            })
            .collect();
        Self { id: q.id.clone(), kind: q.kind, title: q.kind.title().to_string(), state: q.state.clone(), cursor: q.cursor, steps }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserQuests {
    pub open: Option<QuestView>,
    pub completed: Vec<QuestView>,
    pub rejected: Vec<QuestView>,
}

pub fn user_quests(user: &UserState) -> UserQuests {
    UserQuests {
        open: user.open_quest().map(QuestView::of),
        completed: user.completed_quests.iter().map(QuestView::of).collect(),
        rejected: user.rejected_quests.iter().map(QuestView::of).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AchievementView {
    pub key: String,
    pub title: String,
    pub description: String,
    pub secret: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unlocked_at: Option<RunId>,
}

/// Unlocked achievements, locked public ones, and only a count of the
/// locked secret ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserAchievements {
    pub unlocked: Vec<AchievementView>,
    pub locked: Vec<AchievementView>,
    pub secret_locked: usize,
}

pub fn user_achievements(user: &UserState, catalog: &Catalog) -> UserAchievements {
    let mut out = UserAchievements { unlocked: Vec::new(), locked: Vec::new(), secret_locked: 0 };
    for def in catalog.iter() {
        let view = |unlocked_at| AchievementView {
            key: def.key.clone(),
            title: def.title.clone(),
            description: def.description.clone(),
            secret: def.secret,
            unlocked_at,
        };
        match user.achievements.get(&def.key) {
            Some(u) => out.unlocked.push(view(Some(u.run))),
            None if def.secret => out.secret_locked += 1,
            None => out.locked.push(view(None)),
        }
    }
    out
}
