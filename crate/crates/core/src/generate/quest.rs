use std::collections::BTreeSet;

use super::{draw_candidate, make_challenge, raw_candidates, Candidate, GenerationContext};
use crate::model::{ChallengeKind, ChallengeTarget, Quest, QuestKind, QuestState, UserState};

const SWEEP_STEPS: usize = 3;
const STREAK_STEPS: usize = 3;
const MARCH_STEPS: usize = 3;
const SUITE_STEPS: usize = 2;

fn units_of(pool: &[Candidate]) -> BTreeSet<String> {
    pool.iter().filter_map(|c| c.unit.as_ref()).map(|(u, _)| u.unit_name.clone()).collect()
}

fn in_unit(pool: &[Candidate], name: &str) -> Vec<Candidate> {
    pool.iter().filter(|c| c.unit.as_ref().is_some_and(|(u, _)| u.unit_name == name)).cloned().collect()
}

fn count_in_unit(pool: &[Candidate], name: &str) -> usize {
    pool.iter().filter(|c| c.unit.as_ref().is_some_and(|(u, _)| u.unit_name == name)).count()
}

struct QuestPools {
    test: Vec<Candidate>,
    class: Vec<Candidate>,
    method: Vec<Candidate>,
    line: Vec<Candidate>,
    mutation: Vec<Candidate>,
    smell: Vec<Candidate>,
}

impl QuestPools {
    fn collect(user: &UserState, ctx: &GenerationContext<'_>) -> Self {
        Self {
            test: raw_candidates(user, ctx, ChallengeKind::Test),
            class: raw_candidates(user, ctx, ChallengeKind::ClassCoverage),
            method: raw_candidates(user, ctx, ChallengeKind::MethodCoverage),
            line: raw_candidates(user, ctx, ChallengeKind::LineCoverage),
            mutation: raw_candidates(user, ctx, ChallengeKind::Mutation),
            smell: raw_candidates(user, ctx, ChallengeKind::Smell),
        }
    }

    fn sweep_units(&self) -> Vec<Candidate> {
        self.smell
            .iter()
            .filter(|c| count_in_unit(&self.smell, &c.unit.as_ref().expect("bound").0.unit_name) >= SWEEP_STEPS)
            .cloned()
            .collect()
    }

    fn ascent_units(&self) -> Vec<Candidate> {
        let with_method = units_of(&self.method);
        let with_line = units_of(&self.line);
        self.class
            .iter()
            .filter(|c| {
                let name = &c.unit.as_ref().expect("bound").0.unit_name;
                with_method.contains(name) && with_line.contains(name)
            })
            .cloned()
            .collect()
    }

    fn eligible(&self, kind: QuestKind) -> bool {
        match kind {
            QuestKind::SmellSweep => !self.sweep_units().is_empty(),
            QuestKind::CoverageAscent => !self.ascent_units().is_empty(),
            QuestKind::MutationStreak => self.mutation.len() >= STREAK_STEPS,
            QuestKind::LineMarch => units_of(&self.line).len() >= MARCH_STEPS,
            QuestKind::ExpandSuite => !self.test.is_empty(),
        }
    }
}

/// Draws `n` distinct candidates from `pool` without replacement.
fn draw_distinct(mut pool: Vec<Candidate>, n: usize, ctx: &mut GenerationContext<'_>) -> Vec<ChallengeTarget> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let pick = draw_candidate(pool.clone(), &mut ctx.draws);
        pool.retain(|c| c.target.key() != pick.target.key());
        out.push(pick.target);
    }
    out
}

fn pick_uniform(pool: &[Candidate], ctx: &mut GenerationContext<'_>) -> ChallengeTarget {
    pool[ctx.draws.pick(pool.len())].target.clone()
}

/// A new quest when the user has none open and some catalog entry can be
/// filled from the current baseline. Quest steps are drawn independently of
/// the user's standalone challenges.
pub fn generate_quest(user: &UserState, ctx: &mut GenerationContext<'_>) -> Option<Quest> {
    if !ctx.config.quest_enabled || ctx.baseline.run.is_none() || user.open_quest().is_some() {
        return None;
    }
    let pools = QuestPools::collect(user, ctx);
    let kinds: Vec<QuestKind> = QuestKind::ALL.into_iter().filter(|&k| pools.eligible(k)).collect();
    if kinds.is_empty() {
        return None;
    }
    let kind = kinds[ctx.draws.pick(kinds.len())];
    let targets = match kind {
        QuestKind::SmellSweep => {
            let unit = draw_candidate(pools.sweep_units(), &mut ctx.draws).unit.expect("bound").0;
            draw_distinct(in_unit(&pools.smell, &unit.unit_name), SWEEP_STEPS, ctx)
        }
        QuestKind::CoverageAscent => {
            let class = draw_candidate(pools.ascent_units(), &mut ctx.draws);
            let name = class.unit.as_ref().expect("bound").0.unit_name.clone();
            let method = pick_uniform(&in_unit(&pools.method, &name), ctx);
            let line = pick_uniform(&in_unit(&pools.line, &name), ctx);
            vec![class.target, method, line]
        }
        QuestKind::MutationStreak => draw_distinct(pools.mutation.clone(), STREAK_STEPS, ctx),
        QuestKind::LineMarch => {
            let mut pool = pools.line.clone();
            let mut out = Vec::new();
            for _ in 0..MARCH_STEPS {
                let pick = draw_candidate(pool.clone(), &mut ctx.draws);
                let name = pick.unit.as_ref().expect("bound").0.unit_name.clone();
                pool.retain(|c| c.unit.as_ref().is_some_and(|(u, _)| u.unit_name != name));
                out.push(pick.target);
            }
            out
        }
        QuestKind::ExpandSuite => vec![pools.test[0].target.clone(); SUITE_STEPS],
    };
    let id = ctx.next_id(user, "q");
    let steps = targets
        .into_iter()
        .enumerate()
        .map(|(i, t)| make_challenge(ctx, user, format!("{id}-s{i}"), t))
        .collect();
    Some(Quest { id, owner: user.user_id.clone(), kind, steps, cursor: 0, created_at: ctx.run, state: QuestState::Open })
}
