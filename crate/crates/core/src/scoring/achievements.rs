//! Achievement catalog. Each entry is a pure predicate over the user, the
//! run being processed and the project's run history.

use std::collections::HashMap;
use std::fmt;

use chrono::Timelike;
use thiserror::Error;

use crate::model::{BuildRun, ChallengeKind, MutantStatus, RunSummary, UserState};

/// Who an achievement can be earned by in a given run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AchievementScope {
    /// Project-level facts of the run; credited to the run's actor only.
    Actor,
    /// Facts about the user's own record; checked for every user.
    Everyone,
}

pub struct AchievementContext<'a> {
    pub user: &'a UserState,
    pub run: &'a BuildRun,
    /// All processed runs including the current one, oldest first.
    pub history: &'a [RunSummary],
    pub is_actor: bool,
}

type Predicate = Box<dyn Fn(&AchievementContext<'_>) -> bool + Send + Sync>;

pub struct AchievementDef {
    pub key: String,
    pub title: String,
    pub description: String,
    pub secret: bool,
    pub scope: AchievementScope,
    predicate: Predicate,
}

impl AchievementDef {
    pub fn new(
        key: &str,
        title: &str,
        description: &str,
        scope: AchievementScope,
        predicate: impl Fn(&AchievementContext<'_>) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            key: key.to_string(),
            title: title.to_string(),
            description: description.to_string(),
            secret: false,
            scope,
            predicate: Box::new(predicate),
        }
    }

    pub fn secret(mut self) -> Self {
        self.secret = true;
        self
    }

    pub fn holds(&self, ctx: &AchievementContext<'_>) -> bool {
        (self.scope == AchievementScope::Everyone || ctx.is_actor) && (self.predicate)(ctx)
    }
}

impl fmt::Debug for AchievementDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AchievementDef")
            .field("key", &self.key)
            .field("secret", &self.secret)
            .field("scope", &self.scope)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CatalogError {
    #[error("achievement `{0}` is already registered")]
    DuplicateKey(String),
}

#[derive(Debug, Default)]
pub struct Catalog {
    entries: Vec<AchievementDef>,
}

impl Catalog {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn register(&mut self, def: AchievementDef) -> Result<(), CatalogError> {
        if self.get(&def.key).is_some() {
            return Err(CatalogError::DuplicateKey(def.key));
        }
        self.entries.push(def);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&AchievementDef> {
        self.entries.iter().find(|d| d.key == key)
    }

    pub fn iter(&self) -> impl Iterator<Item = &AchievementDef> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The built-in achievements (two of them secret).
    pub fn standard() -> Self {
        use AchievementScope::{Actor, Everyone};

        let mut c = Catalog::empty();
        let defs = vec![
            AchievementDef::new("first_test", "First Test", "Have at least one test in the project", Actor, |x| {
                x.run.is_success() && x.run.reports.tests && x.run.tests.test_count >= 1
            }),
            AchievementDef::new("full_coverage", "Full Coverage", "Reach 100% line coverage in the project", Actor, |x| {
                covered_run(x.run) && x.run.coverage.project_line_coverage().is_full()
            }),
            AchievementDef::new("first_challenge_solved", "First Steps", "Solve your first challenge", Everyone, |x| {
                x.user.completed_challenges.len() >= 1
            }),
            AchievementDef::new("ten_challenges", "Challenger", "Solve ten challenges", Everyone, |x| {
                x.user.completed_challenges.len() >= 10
            }),
            AchievementDef::new("fifty_challenges", "Veteran", "Solve fifty challenges", Everyone, |x| {
                x.user.completed_challenges.len() >= 50
            }),
            AchievementDef::new("first_mutation_kill", "Mutant Hunter", "Solve a mutation challenge", Everyone, |x| {
                x.user.completed_of(ChallengeKind::Mutation) >= 1
            }),
            AchievementDef::new("ten_mutation_kills", "Exterminator", "Solve ten mutation challenges", Everyone, |x| {
                x.user.completed_of(ChallengeKind::Mutation) >= 10
            }),
            AchievementDef::new("smell_free_run", "Fresh Air", "Finish a build without any static-analysis finding", Actor, |x| {
                x.run.is_success() && x.run.reports.findings && x.run.smells.is_empty()
            }),
            AchievementDef::new("first_quest", "Adventurer", "Complete a quest", Everyone, |x| {
                x.user.completed_quests.len() >= 1
            }),
            AchievementDef::new("three_quests", "Quest Master", "Complete three quests", Everyone, |x| {
                x.user.completed_quests.len() >= 3
            }),
            AchievementDef::new("green_streak_5", "Green Streak", "Five successful builds in a row", Actor, |x| {
                x.history.len() >= 5 && x.history[x.history.len() - 5..].iter().all(|r| r.status.is_success())
            }),
            AchievementDef::new("centurion", "Centurion", "Collect 100 points", Everyone, |x| x.user.score >= 100),
            AchievementDef::new("coverage_90", "Almost There", "Reach 90% line coverage in the project", Actor, |x| {
                let f = x.run.coverage.project_line_coverage();
                covered_run(x.run) && u128::from(f.covered) * 10 >= u128::from(f.total) * 9
            }),
            AchievementDef::new("kill_ratio_80", "Mutant Slayer", "Kill at least 80% of all mutants", Actor, |x| {
                let total = x.run.mutants.len();
                let killed = x.run.mutants.iter().filter(|m| m.status == MutantStatus::Killed).count();
                x.run.reports.mutations && total > 0 && killed * 5 >= total * 4
            }),
            AchievementDef::new("early_bird", "Early Bird", "Solve a challenge in the run right after it appeared", Everyone, early_bird),
            AchievementDef::new("night_shift", "Night Shift", "Push a build between midnight and 5 am (UTC)", Actor, |x| {
                x.run.timestamp.hour() < 5
            })
            .secret(),
            AchievementDef::new("comeback", "Comeback", "Fix the build after three or more failures in a row", Actor, |x| {
                let n = x.history.len();
                x.run.is_success() && n >= 4 && x.history[n - 4..n - 1].iter().all(|r| !r.status.is_success())
            })
            .secret(),
        ];
        for d in defs {
            c.register(d).expect("built-in keys are unique");
        }
        c
    }
}

fn covered_run(run: &BuildRun) -> bool {
    run.is_success() && run.reports.coverage && run.coverage.tracked_lines() > 0
}

fn early_bird(x: &AchievementContext<'_>) -> bool {
    let position: HashMap<_, _> = x.history.iter().enumerate().map(|(i, r)| (r.run_id, i)).collect();
    x.user.completed_challenges.iter().any(|c| {
        match (position.get(&c.created_at), c.solved_at().and_then(|s| position.get(&s))) {
            (Some(&created), Some(&solved)) => solved <= created + 1,
            _ => false,
        }
    })
}

/// Keys of achievements that hold now and were not unlocked before.
pub fn evaluate_achievements(catalog: &Catalog, ctx: &AchievementContext<'_>) -> Vec<String> {
    catalog
        .iter()
        .filter(|d| !ctx.user.achievements.contains_key(&d.key))
        .filter(|d| d.holds(ctx))
        .map(|d| d.key.clone())
        .collect()
}
