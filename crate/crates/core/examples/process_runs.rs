//! Feeds two builds through the engine: the first hands out challenges,
//! the second improves coverage and solves some of them.
//!
//! ```text
//! cargo run --example process_runs
//! ```

use chrono::{TimeZone, Utc};
use covquest::model::{BuildRun, BuildStatus, LineState, ReportKinds, RunId, SourceUnit, UnitCoverage, UserId};
use covquest::service::Engine;
use covquest::verify::EventKind;
use covquest::vcs::MemoryRepo;

const PATH: &str = "src/main/java/calc/Sum.java";
const SUM: &str = "class Sum {\n    int add(int a, int b) {\n        return a + b;\n    }\n    int twice(int a) {\n        return add(a, a);\n    }\n}\n";

fn run(id: u64, covered: &[u32], uncovered: &[u32], tests: u64) -> BuildRun {
    let at = Utc.with_ymd_and_hms(2024, 6, 3, 9, 0, 0).unwrap() + chrono::Duration::days(id as i64);
    let mut run = BuildRun::new(RunId(id), at, BuildStatus::Success, UserId::from("ann"));
    run.reports = ReportKinds { coverage: true, mutations: false, findings: false, tests: true };
    let mut cov = UnitCoverage::new(SourceUnit::from_path(PATH));
    for &l in covered {
        cov.set_line(l, LineState::Covered);
    }
    for &l in uncovered {
        cov.set_line(l, LineState::Uncovered);
    }
    run.coverage.insert(cov);
    run.tests.test_count = tests;
    run
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut repo = MemoryRepo::new();
    repo.commit("ann", Utc.with_ymd_and_hms(2024, 6, 3, 8, 0, 0).unwrap(), &[(PATH, Some(SUM))]);
    let engine = Engine::in_memory();
    engine.register_user("demo", "ann", "Ann")?;

    for (label, build) in [("run 1", run(1, &[2, 3], &[5, 6], 2)), ("run 2", run(2, &[2, 3, 5, 6], &[], 3))] {
        let report = engine.ingest("demo", &build, &repo, Some(7))?;
        println!("{label}: {} events", report.events);
    }
    for e in engine.events("demo")? {
        match e.kind {
            EventKind::ChallengeGenerated { challenge_id, target, .. } => println!("  [{}] new {challenge_id}: {target}", e.run_id),
            EventKind::ChallengeSolved { challenge_id, .. } => println!("  [{}] solved {challenge_id}", e.run_id),
            EventKind::PointsAwarded { delta, cause } => println!("  [{}] +{delta} ({cause})", e.run_id),
            EventKind::AchievementUnlocked { achievement } => println!("  [{}] achievement {achievement}", e.run_id),
            _ => {}
        }
    }
    let ann = engine.user("demo", "ann")?;
    println!("ann: score {}, {} open, {} completed", ann.score, ann.open_challenges.len(), ann.completed_challenges.len());
    Ok(())
}
