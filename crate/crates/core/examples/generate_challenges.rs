//! Generates a user's open challenges from a baseline and recent commits.
//!
//! ```text
//! cargo run --example generate_challenges
//! ```

use chrono::{TimeZone, Utc};
use covquest::generate::{top_up, GenerationContext};
use covquest::model::{Baseline, EngineConfig, LineState, MutantRecord, MutantStatus, ReportKinds, RunId, SourceUnit, UnitCoverage, UserId, UserState};
use covquest::rng::DrawStream;
use covquest::scoring::PointsTable;
use covquest::vcs::{changed_units, MemoryRepo};

const ORDER: &str = "class Order {\n    int total(int qty) {\n        if (qty > 10) {\n            return qty * 9;\n        }\n        return qty * 10;\n    }\n}\n";

fn main() {
    let path = "src/main/java/shop/Order.java";
    let mut repo = MemoryRepo::new();
    repo.commit("ann", Utc.with_ymd_and_hms(2024, 3, 4, 9, 0, 0).unwrap(), &[(path, Some(ORDER))]);

    let unit = SourceUnit::from_path(path);
    let mut cov = UnitCoverage::new(unit.clone());
    for (line, state) in [(2, LineState::Covered), (3, LineState::PartiallyCovered { branch_covered: 1, branch_total: 2 }), (4, LineState::Uncovered), (6, LineState::Covered)] {
        cov.set_line(line, state);
    }
    let mut baseline = Baseline::default();
    baseline.run = Some(RunId(1));
    baseline.reports = ReportKinds { coverage: true, mutations: true, findings: false, tests: true };
    baseline.coverage.insert(cov);
    baseline.tests.test_count = 3;
    baseline.mutants.push(MutantRecord {
        id: MutantRecord::make_id(&unit.unit_name, 3, "ConditionalsBoundaryMutator", 0),
        source_unit: unit,
        line: 3,
        mutator: "ConditionalsBoundaryMutator".into(),
        method: Some("total".into()),
        description: "changed conditional boundary".into(),
        status: MutantStatus::Survived,
    });

    let config = EngineConfig::default();
    let points = PointsTable::default();
    let changed = changed_units(&repo, config.changed_window, &config.source_extensions);
    let mut user = UserState::new(UserId::from("ann"), "Ann");
    let now = Utc.with_ymd_and_hms(2024, 3, 4, 10, 0, 0).unwrap();
    let draws = DrawStream::for_user(7, &user.user_id, RunId(2));
    let mut ctx = GenerationContext::new(RunId(2), now, &baseline, &changed, false, &repo, &config, &points, draws);

    for ch in top_up(&mut user, &mut ctx) {
        println!("{:<10} {:>2} pts  {}", ch.kind().as_str(), ch.points, ch.target.description());
        if let Some(snippet) = ch.target.snippet() {
            println!("{:16}`{}`", "", snippet.trim());
        }
    }
}
