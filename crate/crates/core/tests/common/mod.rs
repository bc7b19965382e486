//! Shared fixtures and the checks behind the acceptance suite.
#![allow(dead_code)]

pub mod kinds;
pub mod oracle;
pub mod reports;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use covquest::generate::{generate_challenge, rank_candidates, remaining_pool_size, select_target_unit, GenerationContext};
use covquest::model::{
    validate, Baseline, BuildStatus, Challenge, ChallengeKind, ChallengeState, ChallengeTarget, CoverageFraction,
    EngineConfig, LineState, RunId, SourceUnit, UnitCoverage, UserId, UserState,
};
use covquest::rng::DrawStream;
use covquest::scoring::{Award, PointsTable};
use covquest::sim::{fuzz_scenarios, replay, replay_observed, Scenario};
use covquest::store::{export_stats, Snapshot, Store, StoreError, WritePoint};
use covquest::vcs::{changed_units, MemoryRepo};
use covquest::verify::{reject, unblock, EventKind, RunEvent};

pub type Check = Result<String, String>;

pub const FUZZ_SEED: u64 = 0x5eed_2024;
pub const FUZZ_COUNT: usize = 100;

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(rel: &str) -> PathBuf {
    crate_dir().join("fixtures").join(rel)
}

pub fn scenario_path(name: &str) -> PathBuf {
    crate_dir().join("scenarios").join(format!("{name}.json"))
}

pub fn golden_path(name: &str) -> PathBuf {
    crate_dir().join("scenarios").join(format!("{name}.log"))
}

pub fn load_scenario(name: &str) -> Scenario {
    let text = std::fs::read_to_string(scenario_path(name)).expect("scenario readable");
    Scenario::from_json(&text).expect("scenario parses")
}

/// Names of the committed scenarios that have a golden log.
pub fn golden_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(crate_dir().join("scenarios"))
        .expect("scenarios dir")
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .filter(|n| golden_path(n).exists())
        .collect();
    names.sort();
    names
}

fn first_difference(a: &str, b: &str) -> usize {
    a.lines().zip(b.lines()).position(|(x, y)| x != y).unwrap_or_else(|| a.lines().count().min(b.lines().count())) + 1
}

pub fn check_determinism() -> Check {
    let names = golden_names();
    if names.is_empty() {
        return Err("no golden scenarios committed".into());
    }
    let mut slowest = Duration::ZERO;
    for name in &names {
        let scenario = load_scenario(name);
        let golden = std::fs::read_to_string(golden_path(name)).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let a = replay(&scenario).map_err(|e| format!("{name}: {e}"))?.log();
        let took = start.elapsed();
        let b = replay(&scenario).map_err(|e| format!("{name}: {e}"))?.log();
        if a != b {
            return Err(format!("{name}: consecutive replays differ at line {}", first_difference(&a, &b)));
        }
        if a != golden {
            return Err(format!("{name}: log differs from the golden file at line {}", first_difference(&a, &golden)));
        }
        if took > Duration::from_secs(5) {
            return Err(format!("{name}: replay took {took:?}"));
        }
        slowest = slowest.max(took);
    }
    Ok(format!("{} golden scenarios byte-identical, slowest replay {slowest:?}", names.len()))
}

/// After every run, each user holds exactly `min(max_open, generatable)`
/// open challenges, and every user document is internally consistent.
pub fn check_top_up(count: usize) -> Check {
    let mut checked = 0usize;
    let mut below_max = 0usize;
    let mut violations = Vec::new();
    for (i, scenario) in fuzz_scenarios(count, FUZZ_SEED).iter().enumerate() {
        replay_observed(scenario, |obs| {
            let project = &obs.after_run.project;
            let changed = changed_units(obs.repo, project.config.changed_window, &project.config.source_extensions);
            for user in obs.after_run.users.values() {
                let ctx = GenerationContext::new(
                    obs.run.run_id,
                    obs.run.timestamp,
                    &project.baseline,
                    &changed,
                    !obs.run.is_success(),
                    obs.repo,
                    &project.config,
                    &project.points,
                    DrawStream::from_seed(0),
                );
                let open = user.open_challenges.len();
                let generatable = open + remaining_pool_size(user, &ctx);
                let max = project.config.max_open_challenges as usize;
                checked += 1;
                if open < max {
                    below_max += 1;
                }
                if open != max.min(generatable) {
                    violations.push(format!(
                        "scenario {i} run {}: {} has {open} open, expected min({max}, {generatable})",
                        obs.run.run_id, user.user_id
                    ));
                }
                for v in validate(user, &project.config) {
                    violations.push(format!("scenario {i} run {}: {}: {v}", obs.run.run_id, user.user_id));
                }
            }
        })
        .map_err(|e| format!("scenario {i}: {e}"))?;
    }
    match violations.first() {
        Some(v) => Err(format!("{} violations, first: {v}", violations.len())),
        None => Ok(format!("{count} scenarios, {checked} user-runs checked ({below_max} below max), 0 violations")),
    }
}

/// Candidates A, B, C with A least covered, then C, then B.
pub fn weighted_candidates() -> Vec<(SourceUnit, CoverageFraction)> {
    vec![
        (SourceUnit::from_path("src/A.java"), CoverageFraction::new(1, 10)),
        (SourceUnit::from_path("src/B.java"), CoverageFraction::new(8, 10)),
        (SourceUnit::from_path("src/C.java"), CoverageFraction::new(4, 10)),
    ]
}

pub fn check_weighted(draws: usize, seed: u64) -> Check {
    let expected = [("src.A", 1.0 / 2.0), ("src.C", 1.0 / 3.0), ("src.B", 1.0 / 6.0)];
    let mut candidates = weighted_candidates();
    rank_candidates(&mut candidates);
    let mut stream = DrawStream::from_seed(seed);
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let start = Instant::now();
    for _ in 0..draws {
        let unit = select_target_unit(&candidates, &mut stream).map_err(|e| e.to_string())?;
        *counts.entry(unit.unit_name).or_default() += 1;
    }
    let took = start.elapsed();
    let mut parts = Vec::new();
    for (name, p) in expected {
        let observed = counts.get(name).copied().unwrap_or(0) as f64 / draws as f64;
        if (observed - p).abs() > 0.02 {
            return Err(format!("{name}: observed {observed:.4}, expected {p:.4}"));
        }
        parts.push(format!("{name}={observed:.4}"));
    }
    if took > Duration::from_secs(10) {
        return Err(format!("{draws} draws took {took:?}"));
    }
    Ok(format!("{draws} draws: {} in {took:?}", parts.join(" ")))
}

pub fn check_kinds() -> Check {
    let mut total = 0;
    let fixtures = kinds::fixtures();
    for f in &fixtures {
        let n = kinds::check_fixture(f)?;
        if n < 5 {
            return Err(format!("{}: only {n} near misses", f.name));
        }
        total += n;
    }
    Ok(format!("{} kinds flip only on the intended delta ({total} near misses stay open)", fixtures.len()))
}

pub fn check_build_cap() -> Check {
    let scenario = load_scenario("build-cap");
    let start = scenario.steps[0].at;
    let day = |run: RunId| {
        let step = scenario.steps.iter().find(|s| s.run_id == run.0).expect("run in scenario");
        (step.at - start).num_days()
    };
    let failure_days: Vec<i64> =
        scenario.steps.iter().filter(|s| s.status == BuildStatus::Failure).map(|s| (s.at - start).num_days()).collect();
    if failure_days != [0, 2, 9] {
        return Err(format!("scenario fails on days {failure_days:?}"));
    }
    let events = replay(&scenario).map_err(|e| e.to_string())?.events;
    let build_days: Vec<i64> = events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::ChallengeGenerated { challenge_kind: ChallengeKind::Build, .. }))
        .map(|e| day(e.run_id))
        .collect();
    if build_days != [0, 9] {
        return Err(format!("build challenges generated on days {build_days:?}"));
    }
    Ok("failures on days 0, 2, 9 yield build challenges on days 0 and 9".into())
}

pub fn check_quest_partial_credit() -> Check {
    let events = replay(&load_scenario("quest-partial-credit")).map_err(|e| e.to_string())?.events;
    let quest = events
        .iter()
        .find_map(|e| match &e.kind {
            EventKind::QuestGenerated { quest_id, steps: 3, .. } => Some(quest_id.clone()),
            _ => None,
        })
        .ok_or("no 3-step quest generated")?;
    let points = PointsTable::default();
    let mut challenge_points = 0i64;
    let mut step_bonus = 0i64;
    let mut completion = 0i64;
    let mut rejected = 0;
    let mut steps_solved = Vec::new();
    for e in &events {
        match &e.kind {
            EventKind::PointsAwarded { delta, cause } => {
                if cause.starts_with(&format!("challenge:{quest}-s")) {
                    challenge_points += delta;
                } else if cause.starts_with(&format!("quest_step:{quest}:")) {
                    step_bonus += delta;
                } else if *cause == format!("quest_completed:{quest}") {
                    completion += delta;
                }
            }
            EventKind::QuestStepSolved { quest_id, step, .. } if *quest_id == quest => steps_solved.push(*step),
            EventKind::QuestAutoRejected { quest_id, .. } if *quest_id == quest => rejected += 1,
            EventKind::QuestCompleted { quest_id } if *quest_id == quest => completion += 1,
            _ => {}
        }
    }
    let line = i64::from(points.points_for(Award::ChallengeSolved(ChallengeKind::LineCoverage)));
    let bonus = i64::from(points.points_for(Award::QuestStep));
    if steps_solved != [0, 1] {
        return Err(format!("steps solved: {steps_solved:?}"));
    }
    if challenge_points != 2 * line || step_bonus != 2 * bonus || completion != 0 || rejected != 1 {
        return Err(format!(
            "challenge points {challenge_points}, step bonus {step_bonus}, completion {completion}, auto-rejections {rejected}"
        ));
    }
    Ok(format!("{quest}: 2 steps ({challenge_points} + {step_bonus} points), no completion bonus, auto-rejected"))
}

/// A project with four changed, partly covered units; `Target` is the least
/// covered and so the heaviest class candidate.
pub struct BlockingSetup {
    pub repo: MemoryRepo,
    pub baseline: Baseline,
    pub changed: std::collections::BTreeSet<SourceUnit>,
    pub config: EngineConfig,
    pub points: PointsTable,
    pub target: SourceUnit,
}

pub fn blocking_setup() -> BlockingSetup {
    let mut repo = MemoryRepo::new();
    let at = Utc.with_ymd_and_hms(2024, 2, 5, 9, 0, 0).unwrap();
    let names = ["Target", "Alpha", "Beta", "Gamma"];
    let paths: Vec<String> = names.iter().map(|n| format!("src/main/java/lib/{n}.java")).collect();
    let bodies: Vec<String> =
        names.iter().map(|n| (1..=6).map(|l| format!("    int {}{l}() {{ return {l}; }}", n.to_lowercase())).collect::<Vec<_>>().join("\n")).collect();
    let changes: Vec<(&str, Option<&str>)> = paths.iter().zip(&bodies).map(|(p, b)| (p.as_str(), Some(b.as_str()))).collect();
    repo.commit("dev", at, &changes);
    let mut baseline = Baseline::default();
    baseline.run = Some(RunId(1));
    baseline.reports.coverage = true;
    for (i, p) in paths.iter().enumerate() {
        let mut cov = UnitCoverage::new(SourceUnit::from_path(p));
        for l in 1..=6u32 {
            cov.set_line(l, if (l as usize) <= i + 1 { LineState::Covered } else { LineState::Uncovered });
        }
        baseline.coverage.insert(cov);
    }
    let config = EngineConfig::default();
    let changed = changed_units(&repo, config.changed_window, &config.source_extensions);
    BlockingSetup { repo, baseline, changed, config, points: PointsTable::default(), target: SourceUnit::from_path(&paths[0]) }
}

impl BlockingSetup {
    /// Class coverage challenges on `unit` over `rounds` seeded rounds, and
    /// class coverage challenges in total.
    pub fn class_hits(&self, user: &UserState, unit: &SourceUnit, rounds: u64) -> (usize, usize) {
        let (mut on_unit, mut class_total) = (0, 0);
        let at = Utc.with_ymd_and_hms(2024, 2, 6, 9, 0, 0).unwrap();
        for round in 0..rounds {
            let mut ctx = GenerationContext::new(
                RunId(2),
                at,
                &self.baseline,
                &self.changed,
                false,
                &self.repo,
                &self.config,
                &self.points,
                DrawStream::for_user(round, &user.user_id, RunId(2)),
            );
            if let Ok(ch) = generate_challenge(user, &mut ctx) {
                if let ChallengeTarget::ClassCoverage { unit: u, .. } = &ch.target {
                    class_total += 1;
                    if u == unit {
                        on_unit += 1;
                    }
                }
            }
        }
        (on_unit, class_total)
    }
}

pub fn check_class_blocking(rounds: u64) -> Check {
    let setup = blocking_setup();
    let mut user = UserState::new(UserId::from("dee"), "Dee");
    user.open_challenges.push(Challenge {
        id: "1-dee-c1".into(),
        owner: user.user_id.clone(),
        target: ChallengeTarget::ClassCoverage { unit: setup.target.clone(), baseline: CoverageFraction::new(1, 6) },
        created_at: RunId(1),
        state: ChallengeState::Open,
        points: 2,
    });
    reject(&mut user, "1-dee-c1", "generated code", None, RunId(1)).map_err(|e| e.to_string())?;
    let (blocked_hits, blocked_class) = setup.class_hits(&user, &setup.target, rounds);
    if blocked_hits != 0 {
        return Err(format!("{blocked_hits} class challenges on the blocked unit"));
    }
    if blocked_class == 0 {
        return Err("no class challenges generated at all while blocked".into());
    }
    unblock(&mut user, &setup.target.unit_name).map_err(|e| e.to_string())?;
    let (free_hits, _) = setup.class_hits(&user, &setup.target, rounds);
    if free_hits == 0 {
        return Err("no class challenge on the unit after unblocking".into());
    }
    Ok(format!(
        "{rounds} rounds: 0 on blocked unit ({blocked_class} on others), {free_hits} after unblock"
    ))
}

pub fn check_oracle(count: usize, max_runs: usize) -> Check {
    let mut scenarios = 0;
    let mut runs = 0;
    let mut verdicts = 0;
    for (i, scenario) in fuzz_scenarios(count, FUZZ_SEED).iter().enumerate() {
        if scenario.steps.len() > max_runs {
            continue;
        }
        scenarios += 1;
        let mut before: BTreeMap<UserId, UserState> = BTreeMap::new();
        let mut mismatch = None;
        replay_observed(scenario, |obs| {
            let window = obs.after_run.project.config.relocation_window;
            let expected = oracle::evaluate(&before, obs.run, obs.repo, window);
            let run_events: Vec<RunEvent> = obs.events.iter().filter(|e| e.run_id == obs.run.run_id).cloned().collect();
            let actual = oracle::Verdicts::from_events(&run_events);
            if expected != actual && mismatch.is_none() {
                mismatch = Some(format!("scenario {i} run {}: oracle {expected:?} engine {actual:?}", obs.run.run_id));
            }
            verdicts += actual.len();
            runs += 1;
            before = obs.snapshot.users.clone();
        })
        .map_err(|e| format!("scenario {i}: {e}"))?;
        if let Some(m) = mismatch {
            return Err(m);
        }
    }
    if verdicts == 0 {
        return Err("fuzz corpus produced no verdicts to compare".into());
    }
    Ok(format!("{scenarios} scenarios, {runs} runs, {verdicts} verdicts agree"))
}

pub fn check_parsers() -> Check {
    reports::check_all()
}

fn project_snapshots(name: &str) -> Vec<(Snapshot, Vec<RunEvent>)> {
    let mut out = Vec::new();
    replay_observed(&load_scenario(name), |obs| out.push((obs.snapshot.clone(), obs.events.to_vec())))
        .expect("scenario replays");
    out
}

/// Saves `old`, then crashes the save of `new` at write point `n`; returns
/// what a fresh load sees, or `None` once `n` is past the last point.
fn crash_at(old: &(Snapshot, Vec<RunEvent>), new: &(Snapshot, Vec<RunEvent>), n: usize) -> Result<Option<(Snapshot, Vec<RunEvent>, WritePoint)>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = Store::new(dir.path());
    store.save(&old.0, &old.1).map_err(|e| e.to_string())?;
    let mut seen = 0;
    let mut hit = None;
    let res = store.save_with_faults(&new.0, &new.1, &mut |p: &WritePoint| {
        seen += 1;
        if seen == n + 1 {
            hit = Some(p.clone());
            true
        } else {
            false
        }
    });
    let Some(point) = hit else {
        res.map_err(|e| e.to_string())?;
        return Ok(None);
    };
    if !matches!(res, Err(StoreError::InjectedCrash(_))) {
        return Err(format!("crash at {point:?} not reported"));
    }
    let fresh = Store::new(dir.path());
    let id = &new.0.project.project_id;
    let loaded = fresh.load(id).map_err(|e| format!("load after crash at {point:?}: {e}"))?;
    let events = fresh.events(id).map_err(|e| format!("events after crash at {point:?}: {e}"))?;
    Ok(Some((loaded, events, point)))
}

pub fn check_crash_consistency() -> Check {
    let steps = project_snapshots("team-sprint");
    let mut points = 0;
    let mut transitions = 0;
    for pair in steps.windows(2) {
        let old = (pair[0].0.clone(), pair[0].1.clone());
        let new = (pair[1].0.clone(), pair[1].1.clone());
        let old_events: Vec<RunEvent> = old.1.clone();
        let new_events: Vec<RunEvent> = old.1.iter().chain(&new.1).cloned().collect();
        transitions += 1;
        for n in 0.. {
            let Some((snap, events, point)) = crash_at(&old, &new, n)? else { break };
            points += 1;
            let is_old = snap == old.0 && events == old_events;
            let is_new = snap == new.0 && events == new_events;
            if !is_old && !is_new {
                return Err(format!("mixed state after crash at {point:?} (run {:?})", new.0.project.last_run_id()));
            }
        }
    }
    Ok(format!("{points} injected crashes over {transitions} saves, each loads the old or new state"))
}

pub fn check_stats_export() -> Check {
    let replayed = replay(&load_scenario("team-sprint")).map_err(|e| e.to_string())?;
    let mut tally: BTreeMap<(String, String), (usize, usize)> = BTreeMap::new();
    for e in &replayed.events {
        let (kind, solved) = match &e.kind {
            EventKind::ChallengeSolved { challenge_kind, .. } => (challenge_kind, true),
            EventKind::ChallengeRejected { challenge_kind, .. } | EventKind::ChallengeAutoRejected { challenge_kind, .. } => {
                (challenge_kind, false)
            }
            _ => continue,
        };
        let kind = serde_json::to_value(kind).unwrap().as_str().unwrap().to_string();
        for scope in [e.user_id.to_string(), "ALL".to_string()] {
            let t = tally.entry((scope, kind.clone())).or_default();
            if solved {
                t.0 += 1;
            } else {
                t.1 += 1;
            }
        }
    }
    let csv = export_stats(replayed.snapshot.users.values());
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let mut rows = 0;
    let mut summary_rows = 0;
    for record in reader.records() {
        let r = record.map_err(|e| e.to_string())?;
        let (scope, kind) = (r[0].to_string(), r[1].to_string());
        let completed: usize = r[2].parse().map_err(|_| "bad completed".to_string())?;
        let rejected: usize = r[3].parse().map_err(|_| "bad rejected".to_string())?;
        let expected = tally.get(&(scope.clone(), kind.clone())).copied().unwrap_or_default();
        if (completed, rejected) != expected {
            return Err(format!("{scope}/{kind}: csv {completed}/{rejected}, events {}/{}", expected.0, expected.1));
        }
        if completed + rejected > 0 {
            let c: u32 = r[5].parse().map_err(|_| format!("{scope}/{kind}: missing ratio"))?;
            let j: u32 = r[6].parse().map_err(|_| format!("{scope}/{kind}: missing ratio"))?;
            if c + j != 100 {
                return Err(format!("{scope}/{kind}: ratios {c} + {j} != 100"));
            }
        }
        if scope == "ALL" {
            summary_rows += 1;
        }
        rows += 1;
    }
    if summary_rows != ChallengeKind::ALL.len() {
        return Err(format!("{summary_rows} summary rows"));
    }
    Ok(format!("{rows} rows match event tallies, every ratio pair sums to 100%"))
}
