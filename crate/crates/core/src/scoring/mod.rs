//! Points table, achievements and the leaderboard.

mod achievements;
mod leaderboard;

use serde::{Deserialize, Serialize};

pub use achievements::{evaluate_achievements, AchievementContext, AchievementDef, AchievementScope, Catalog, CatalogError};
pub use leaderboard::{leaderboard, LeaderboardEntry};

use crate::model::ChallengeKind;

/// Points per challenge kind plus quest bonuses. Recorded in the project
/// state so the values in force stay auditable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PointsTable {
    pub build: u32,
    pub test: u32,
    pub class_coverage: u32,
    pub method_coverage: u32,
    pub line_coverage: u32,
    pub smell: u32,
    pub mutation: u32,
    pub quest_step_bonus: u32,
    pub quest_completion_bonus: u32,
}

impl Default for PointsTable {
    fn default() -> Self {
        Self {
            build: 1,
            test: 1,
            class_coverage: 2,
            method_coverage: 2,
            line_coverage: 3,
            smell: 2,
            mutation: 4,
            quest_step_bonus: 1,
            quest_completion_bonus: 3,
        }
    }
}

/// Something that earns points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Award {
    ChallengeSolved(ChallengeKind),
    QuestStep,
    QuestCompleted,
}

impl PointsTable {
    pub fn for_kind(&self, kind: ChallengeKind) -> u32 {
        match kind {
            ChallengeKind::Build => self.build,
            ChallengeKind::Test => self.test,
            ChallengeKind::ClassCoverage => self.class_coverage,
            ChallengeKind::MethodCoverage => self.method_coverage,
            ChallengeKind::LineCoverage => self.line_coverage,
            ChallengeKind::Smell => self.smell,
            ChallengeKind::Mutation => self.mutation,
        }
    }

    pub fn points_for(&self, award: Award) -> u32 {
        match award {
            Award::ChallengeSolved(kind) => self.for_kind(kind),
            Award::QuestStep => self.quest_step_bonus,
            Award::QuestCompleted => self.quest_completion_bonus,
        }
    }

    /// Bonus points of a fully completed quest, excluding the steps' own
    /// challenge points.
    pub fn quest_bonus_total(&self, steps: usize) -> u32 {
        self.quest_step_bonus * steps as u32 + self.quest_completion_bonus
    }

    /// Empty when every entry is positive.
    pub fn check(&self) -> Result<(), String> {
        let entries = [
            self.build,
            self.test,
            self.class_coverage,
            self.method_coverage,
            self.line_coverage,
            self.smell,
            self.mutation,
            self.quest_step_bonus,
            self.quest_completion_bonus,
        ];
        if entries.iter().all(|&p| p > 0) {
            Ok(())
        } else {
            Err("points table entries must be positive".to_string())
        }
    }
}
