use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Challenge, ChallengeKind, ChallengeState, EngineConfig, Quest, QuestState, RunId, SourceUnit, UserId};

/// Number of selectable avatars; ids run from 0 to `AVATAR_COUNT - 1`.
pub const AVATAR_COUNT: u8 = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub run: RunId,
    pub delta: i64,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AchievementUnlock {
    pub run: RunId,
    pub at: DateTime<Utc>,
}

/// Everything the engine knows about one developer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub user_id: UserId,
    pub display_name: String,
    #[serde(default)]
    pub avatar_id: u8,
    #[serde(default)]
    pub open_challenges: Vec<Challenge>,
    #[serde(default)]
    pub completed_challenges: Vec<Challenge>,
    #[serde(default)]
    pub rejected_challenges: Vec<Challenge>,
    #[serde(default)]
    pub blocked_units: BTreeSet<SourceUnit>,
    #[serde(default)]
    pub open_quests: Vec<Quest>,
    #[serde(default)]
    pub completed_quests: Vec<Quest>,
    #[serde(default)]
    pub rejected_quests: Vec<Quest>,
    #[serde(default)]
    pub achievements: BTreeMap<String, AchievementUnlock>,
    #[serde(default)]
    pub ledger: Vec<LedgerEntry>,
    /// Cached fold of the ledger.
    #[serde(default)]
    pub score: i64,
    #[serde(default)]
    pub last_build_challenge_at: Option<DateTime<Utc>>,
    /// Fields written by newer tools, carried through rewrites untouched.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl UserState {
    pub fn new(user_id: UserId, display_name: impl Into<String>) -> Self {
        Self {
            user_id,
            display_name: display_name.into(),
            avatar_id: 0,
            open_challenges: Vec::new(),
            completed_challenges: Vec::new(),
            rejected_challenges: Vec::new(),
            blocked_units: BTreeSet::new(),
            open_quests: Vec::new(),
            completed_quests: Vec::new(),
            rejected_quests: Vec::new(),
            achievements: BTreeMap::new(),
            ledger: Vec::new(),
            score: 0,
            last_build_challenge_at: None,
            extra: BTreeMap::new(),
        }
    }

    /// Appends a ledger entry and refreshes the cached score.
    pub fn award(&mut self, run: RunId, delta: i64, cause: impl Into<String>) {
        self.ledger.push(LedgerEntry { run, delta, cause: cause.into() });
        self.score += delta;
    }

    pub fn ledger_total(&self) -> i64 {
        self.ledger.iter().map(|e| e.delta).sum()
    }

    pub fn open_quest(&self) -> Option<&Quest> {
        self.open_quests.first()
    }

    pub fn is_blocked(&self, unit: &SourceUnit) -> bool {
        self.blocked_units.iter().any(|b| b.unit_name == unit.unit_name)
    }

    pub fn completed_of(&self, kind: ChallengeKind) -> usize {
        self.completed_challenges.iter().filter(|c| c.kind() == kind).count()
    }

    pub fn all_challenges(&self) -> impl Iterator<Item = &Challenge> {
        self.open_challenges
            .iter()
            .chain(&self.completed_challenges)
            .chain(&self.rejected_challenges)
            .chain(self.all_quests().flat_map(|q| q.steps.iter()))
    }

    pub fn all_quests(&self) -> impl Iterator<Item = &Quest> {
        self.open_quests.iter().chain(&self.completed_quests).chain(&self.rejected_quests)
    }
}

/// Lists every broken `UserState` invariant; empty means the state is sound.
pub fn validate(state: &UserState, config: &EngineConfig) -> Vec<String> {
    let mut violations = Vec::new();

    if state.ledger_total() != state.score {
        violations.push("score/ledger mismatch".to_string());
    }
    if state.open_challenges.len() > config.max_open_challenges as usize {
        violations.push("open challenge overflow".to_string());
    }
    if state.avatar_id >= AVATAR_COUNT {
        violations.push(format!("avatar {} out of range", state.avatar_id));
    }

    let mut seen = HashSet::new();
    for ch in state.all_challenges() {
        if !seen.insert(ch.id.as_str()) {
            violations.push(format!("duplicate challenge id {}", ch.id));
        }
        if ch.owner != state.user_id {
            violations.push(format!("challenge {} owned by {}", ch.id, ch.owner));
        }
    }

    let wrong_state = |list: &[Challenge], ok: fn(&ChallengeState) -> bool, name: &str| {
        list.iter()
            .filter(|c| !ok(&c.state))
            .map(|c| format!("challenge {} in {name} list has state {:?}", c.id, c.state))
            .collect::<Vec<_>>()
    };
    violations.extend(wrong_state(&state.open_challenges, |s| *s == ChallengeState::Open, "open"));
    violations.extend(wrong_state(
        &state.completed_challenges,
        |s| matches!(s, ChallengeState::Solved { .. }),
        "completed",
    ));
    violations.extend(wrong_state(
        &state.rejected_challenges,
        |s| matches!(s, ChallengeState::Rejected { .. }),
        "rejected",
    ));

    let mut open_keys = HashSet::new();
    for ch in &state.open_challenges {
        if !open_keys.insert(ch.target.key()) {
            violations.push(format!("duplicate open target {}", ch.target.key()));
        }
    }

    for unit in &state.blocked_units {
        let justified = state.rejected_challenges.iter().any(|c| {
            matches!(c.state, ChallengeState::Rejected { auto: false, .. })
                && c.kind() == ChallengeKind::ClassCoverage
                && c.target.unit().map(|u| u.unit_name.as_str()) == Some(unit.unit_name.as_str())
        });
        if !justified {
            violations.push(format!("blocked unit {unit} has no rejected class_coverage challenge"));
        }
    }

    if state.open_quests.len() > 1 {
        violations.push("more than one open quest".to_string());
    }
    for q in state.all_quests() {
        violations.extend(quest_violations(q, &state.user_id));
    }
    for q in &state.open_quests {
        if q.state != QuestState::Open {
            violations.push(format!("quest {} in open list is not open", q.id));
        }
    }
    for q in &state.completed_quests {
        if !matches!(q.state, QuestState::Completed { .. }) {
            violations.push(format!("quest {} in completed list is not completed", q.id));
        }
    }
    for q in &state.rejected_quests {
        if !matches!(q.state, QuestState::AutoRejected { .. }) {
            violations.push(format!("quest {} in rejected list is not rejected", q.id));
        }
    }

    violations
}

fn quest_violations(q: &Quest, owner: &UserId) -> Vec<String> {
    let mut out = Vec::new();
    if !(2..=5).contains(&q.steps.len()) {
        out.push(format!("quest {} has {} steps", q.id, q.steps.len()));
    }
    if q.cursor > q.steps.len() {
        out.push(format!("quest {} cursor past end", q.id));
    }
    if q.steps.iter().any(|s| &s.owner != owner) || &q.owner != owner {
        out.push(format!("quest {} has a foreign step owner", q.id));
    }
    for (i, step) in q.steps.iter().enumerate() {
        let solved = matches!(step.state, ChallengeState::Solved { .. });
        if i < q.cursor && !solved {
            out.push(format!("quest {} step {i} behind cursor is unsolved", q.id));
        }
        if i > q.cursor && solved {
            out.push(format!("quest {} step {i} ahead of cursor was evaluated", q.id));
        }
    }
    if matches!(q.state, QuestState::Completed { .. }) && q.cursor != q.steps.len() {
        out.push(format!("quest {} completed with unsolved steps", q.id));
    }
    out
}
