use serde::{Deserialize, Serialize};

use crate::model::{UserId, UserState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub user_id: UserId,
    pub display_name: String,
    pub avatar_id: u8,
    pub score: i64,
    pub completed_challenges: usize,
    pub completed_quests: usize,
    pub unfinished_quests: usize,
    pub achievements: usize,
}

/// Ranks users by score, then completed challenges, then name.
pub fn leaderboard<'a>(users: impl IntoIterator<Item = &'a UserState>) -> Vec<LeaderboardEntry> {
    let mut rows: Vec<_> = users
        .into_iter()
        .map(|u| LeaderboardEntry {
            user_id: u.user_id.clone(),
            display_name: u.display_name.clone(),
            avatar_id: u.avatar_id,
            score: u.ledger_total(),
            completed_challenges: u.completed_challenges.len(),
            completed_quests: u.completed_quests.len(),
            unfinished_quests: u.open_quests.len(),
            achievements: u.achievements.len(),
        })
        .collect();
    rows.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then(b.completed_challenges.cmp(&a.completed_challenges))
            .then(a.display_name.cmp(&b.display_name))
            .then(a.user_id.cmp(&b.user_id))
    });
    rows
}
