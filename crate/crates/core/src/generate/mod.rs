//! Challenge and quest generation.
//!
//! A challenge is generated by drawing a kind uniformly among the kinds that
//! currently have candidates, then (for unit-bound kinds) drawing a unit with
//! rank weights that favour low coverage, then drawing an instance uniformly
//! inside that unit. All randomness flows through the context's
//! [`DrawStream`], so a `(seed, user, run)` triple fully determines the output.

mod quest;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{DateTime, Duration, Utc};
use thiserror::Error;

pub use quest::generate_quest;

use crate::model::{
    Baseline, Challenge, ChallengeKind, ChallengeState, ChallengeTarget, CoverageFraction, EngineConfig, MutantStatus,
    RunId, SourceUnit, UserState,
};
use crate::rng::DrawStream;
use crate::scoring::PointsTable;
use crate::vcs::{is_changed, RepoView};

/// Minimum spacing between two build challenges of the same owner.
pub const BUILD_CHALLENGE_COOLDOWN_DAYS: i64 = 7;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenerationError {
    #[error("no candidates to select from")]
    EmptyCandidates,
    #[error("no challenge kind can be generated")]
    Exhausted,
}

/// Inputs of one user's generation round.
pub struct GenerationContext<'a> {
    pub run: RunId,
    pub now: DateTime<Utc>,
    /// Snapshots of the latest successful run.
    pub baseline: &'a Baseline,
    pub changed: &'a BTreeSet<SourceUnit>,
    /// The run being processed failed.
    pub build_failed: bool,
    pub view: &'a dyn RepoView,
    pub config: &'a EngineConfig,
    pub points: &'a PointsTable,
    pub draws: DrawStream,
    seq: u32,
}

impl<'a> GenerationContext<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        run: RunId,
        now: DateTime<Utc>,
        baseline: &'a Baseline,
        changed: &'a BTreeSet<SourceUnit>,
        build_failed: bool,
        view: &'a dyn RepoView,
        config: &'a EngineConfig,
        points: &'a PointsTable,
        draws: DrawStream,
    ) -> Self {
        Self { run, now, baseline, changed, build_failed, view, config, points, draws, seq: 0 }
    }

    fn next_id(&mut self, user: &UserState, prefix: &str) -> String {
        self.seq += 1;
        format!("{}-{}-{}{}", self.run, user.user_id, prefix, self.seq)
    }

    fn unit_coverage(&self, unit: &SourceUnit) -> CoverageFraction {
        self.baseline.coverage.find(unit).map_or(CoverageFraction::FULL, |u| u.line_coverage())
    }

    fn eligible_unit(&self, user: &UserState, unit: &SourceUnit) -> bool {
        is_changed(self.changed, unit) && !user.is_blocked(unit)
    }
}

/// One possible challenge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub unit: Option<(SourceUnit, CoverageFraction)>,
    pub target: ChallengeTarget,
}

/// Every candidate of `kind`, before removing targets the user already holds.
pub fn raw_candidates(user: &UserState, ctx: &GenerationContext<'_>, kind: ChallengeKind) -> Vec<Candidate> {
    let base = ctx.baseline;
    let has_baseline = base.run.is_some();
    let bound = |unit: &SourceUnit, target: ChallengeTarget| Candidate {
        unit: Some((unit.clone(), ctx.unit_coverage(unit))),
        target,
    };
    let mut out = Vec::new();
    match kind {
        ChallengeKind::Build => {
            let cooled = user
                .last_build_challenge_at
                .is_none_or(|t| ctx.now - t >= Duration::days(BUILD_CHALLENGE_COOLDOWN_DAYS));
            if ctx.build_failed && cooled {
                out.push(Candidate { unit: None, target: ChallengeTarget::Build { failing_run: ctx.run } });
            }
        }
        ChallengeKind::Test => {
            if has_baseline {
                out.push(Candidate { unit: None, target: ChallengeTarget::Test { baseline_tests: base.tests.test_count } });
            }
        }
        ChallengeKind::ClassCoverage => {
            for cov in base.coverage.units.values() {
                let unit = &cov.unit;
                let fraction = cov.line_coverage();
                if !unit.is_test() && ctx.eligible_unit(user, unit) && !fraction.is_full() {
                    out.push(bound(unit, ChallengeTarget::ClassCoverage { unit: unit.clone(), baseline: fraction }));
                }
            }
        }
        ChallengeKind::MethodCoverage => {
            for cov in base.coverage.units.values() {
                let unit = &cov.unit;
                if unit.is_test() || !ctx.eligible_unit(user, unit) {
                    continue;
                }
                for m in &cov.methods {
                    let fraction = cov.method_coverage(m);
                    if fraction.total > 0 && !fraction.is_full() {
                        out.push(bound(
                            unit,
                            ChallengeTarget::MethodCoverage { unit: unit.clone(), method: m.clone(), baseline: fraction },
                        ));
                    }
                }
            }
        }
        ChallengeKind::LineCoverage => {
            for cov in base.coverage.units.values() {
                let unit = &cov.unit;
                if unit.is_test() || !ctx.eligible_unit(user, unit) {
                    continue;
                }
                let Some(lines) = ctx.view.unit_lines(unit) else { continue };
                for (&line, &state) in &cov.lines {
                    if state.is_fully_covered() {
                        continue;
                    }
                    match lines.get(line as usize - 1) {
                        Some(text) if !text.trim().is_empty() => out.push(bound(
                            unit,
                            ChallengeTarget::LineCoverage { unit: unit.clone(), line, baseline: state, snippet: text.clone() },
                        )),
                        _ => {}
                    }
                }
            }
        }
        ChallengeKind::Mutation => {
            for m in &base.mutants {
                let unit = &m.source_unit;
                if m.status == MutantStatus::Survived && !unit.is_test() && ctx.eligible_unit(user, unit) {
                    let original_text = crate::vcs::line_text(ctx.view, unit, m.line);
                    out.push(bound(unit, ChallengeTarget::Mutation { mutant: m.clone(), original_text }));
                }
            }
        }
        ChallengeKind::Smell => {
            for f in &base.smells {
                let unit = &f.source_unit;
                if ctx.eligible_unit(user, unit) {
                    let snippet = crate::vcs::line_text(ctx.view, unit, f.start_line);
                    out.push(bound(unit, ChallengeTarget::Smell { finding: f.clone(), snippet }));
                }
            }
        }
    }
    // the same finding can be reported twice
    let mut seen = HashSet::new();
    out.retain(|c| seen.insert(c.target.key()));
    out
}

/// Candidates of `kind` whose target the user does not already hold open.
pub fn candidates(user: &UserState, ctx: &GenerationContext<'_>, kind: ChallengeKind) -> Vec<Candidate> {
    if kind == ChallengeKind::Build && user.open_challenges.iter().any(|c| c.kind() == ChallengeKind::Build) {
        return Vec::new();
    }
    let held: HashSet<String> = user.open_challenges.iter().map(|c| c.target.key()).collect();
    let mut pool = raw_candidates(user, ctx, kind);
    pool.retain(|c| !held.contains(&c.target.key()));
    pool
}

pub fn generatable_kinds(user: &UserState, ctx: &GenerationContext<'_>) -> Vec<ChallengeKind> {
    ChallengeKind::ALL.into_iter().filter(|&k| !candidates(user, ctx, k).is_empty()).collect()
}

/// Number of distinct challenges that could still be generated for the user.
pub fn remaining_pool_size(user: &UserState, ctx: &GenerationContext<'_>) -> usize {
    ChallengeKind::ALL.into_iter().map(|k| candidates(user, ctx, k).len()).sum()
}

/// Sorts ascending by coverage, ties by unit name.
pub fn rank_candidates(list: &mut [(SourceUnit, CoverageFraction)]) {
    list.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.unit_name.cmp(&b.0.unit_name)));
}

/// Index chosen by `u` when `n` ranked candidates carry weights `n, n-1, ..., 1`.
pub fn rank_weighted_index(n: usize, u: f64) -> usize {
    assert!(n > 0);
    let total = (n * (n + 1) / 2) as f64;
    let target = u * total;
    let mut cumulative = 0usize;
    for i in 0..n {
        cumulative += n - i;
        if target < cumulative as f64 {
            return i;
        }
    }
    n - 1
}

/// Draws one unit from a list already sorted by [`rank_candidates`]; the
/// lowest-coverage unit is the most likely.
pub fn select_target_unit(
    candidates: &[(SourceUnit, CoverageFraction)],
    draws: &mut DrawStream,
) -> Result<SourceUnit, GenerationError> {
    if candidates.is_empty() {
        return Err(GenerationError::EmptyCandidates);
    }
    let u = draws.next_unit();
    Ok(candidates[rank_weighted_index(candidates.len(), u)].0.clone())
}

/// Picks a candidate: uniform for unit-free kinds, unit first otherwise.
pub(crate) fn draw_candidate(pool: Vec<Candidate>, draws: &mut DrawStream) -> Candidate {
    debug_assert!(!pool.is_empty());
    if pool[0].unit.is_none() {
        let i = draws.pick(pool.len());
        return pool.into_iter().nth(i).expect("index in range");
    }
    let mut by_unit: BTreeMap<String, (SourceUnit, CoverageFraction, Vec<Candidate>)> = BTreeMap::new();
    for c in pool {
        let (unit, cov) = c.unit.clone().expect("unit-bound candidate");
        by_unit.entry(unit.unit_name.clone()).or_insert_with(|| (unit, cov, Vec::new())).2.push(c);
    }
    let mut ranked: Vec<(SourceUnit, CoverageFraction)> =
        by_unit.values().map(|(u, cov, _)| (u.clone(), *cov)).collect();
    rank_candidates(&mut ranked);
    let unit = select_target_unit(&ranked, draws).expect("nonempty");
    let mut instances = by_unit.remove(&unit.unit_name).expect("selected unit exists").2;
    let i = draws.pick(instances.len());
    instances.swap_remove(i)
}

pub(crate) fn make_challenge(ctx: &GenerationContext<'_>, owner: &UserState, id: String, target: ChallengeTarget) -> Challenge {
    Challenge {
        id,
        owner: owner.user_id.clone(),
        points: ctx.points.for_kind(target.kind()),
        target,
        created_at: ctx.run,
        state: ChallengeState::Open,
    }
}

/// One new challenge for the user, or [`GenerationError::Exhausted`].
pub fn generate_challenge(user: &UserState, ctx: &mut GenerationContext<'_>) -> Result<Challenge, GenerationError> {
    let kinds = generatable_kinds(user, ctx);
    if kinds.is_empty() {
        return Err(GenerationError::Exhausted);
    }
    let kind = kinds[ctx.draws.pick(kinds.len())];
    let pool = candidates(user, ctx, kind);
    let chosen = draw_candidate(pool, &mut ctx.draws);
    let id = ctx.next_id(user, "c");
    Ok(make_challenge(ctx, user, id, chosen.target))
}

/// Fills the user's open challenges up to the configured maximum. Stops
/// early when nothing more can be generated.
pub fn top_up(user: &mut UserState, ctx: &mut GenerationContext<'_>) -> Vec<Challenge> {
    let max = ctx.config.max_open_challenges as usize;
    let mut created = Vec::new();
    while user.open_challenges.len() < max {
        match generate_challenge(user, ctx) {
            Ok(ch) => {
                if ch.kind() == ChallengeKind::Build {
                    user.last_build_challenge_at = Some(ctx.now);
                }
                user.open_challenges.push(ch.clone());
                created.push(ch);
            }
            Err(_) => break,
        }
    }
    created
}
