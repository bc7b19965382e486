//! One directed fixture per challenge kind: a reference run that leaves the
//! challenge open, the single delta that solves it, and near-miss deltas
//! that must not.

use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use covquest::model::{
    BuildRun, BuildStatus, Challenge, ChallengeState, ChallengeTarget, CoverageFraction, EngineConfig, LineState,
    MethodSpan, MutantRecord, MutantStatus, ProjectState, ReportKinds, RunId, SmellFinding, SourceUnit, TestSnapshot,
    UnitCoverage, UserId, UserState,
};
use covquest::scoring::Catalog;
use covquest::vcs::MemoryRepo;
use covquest::verify::{process_run, EventKind};

pub const PATH: &str = "src/main/java/shop/Basket.java";
const OTHER: &str = "src/main/java/shop/Receipt.java";

pub const SOURCE: &str = "\
class Basket {
    int total() {
        return sum();
    }
    int discount(int pct) {
        if (pct > 30) { pct = 30; }
        return total() * pct / 100;
    }
    long round(double v) {
        return Math.round(v);
    }";

pub type Delta = fn(&mut BuildRun);

pub struct KindFixture {
    pub name: &'static str,
    pub challenge: Challenge,
    /// Turns the shared base run into this fixture's unsolved reference.
    pub reference: Delta,
    pub intended: Delta,
    pub near_misses: Vec<(&'static str, Delta)>,
}

pub fn unit() -> SourceUnit {
    SourceUnit::from_path(PATH)
}

fn method(name: &str, first: u32, last: u32) -> MethodSpan {
    MethodSpan { name: name.into(), signature: None, first_line: first, last_line: last }
}

fn mutant(line: u32, mutator: &str, ordinal: usize, status: MutantStatus) -> MutantRecord {
    let u = unit();
    MutantRecord {
        id: MutantRecord::make_id(&u.unit_name, line, mutator, ordinal),
        source_unit: u,
        line,
        mutator: mutator.into(),
        method: Some("discount".into()),
        description: format!("{mutator} on line {line}"),
        status,
    }
}

fn smell(rule: &str, start: u32, end: u32) -> SmellFinding {
    SmellFinding { rule_id: rule.into(), source_unit: unit(), start_line: start, end_line: end, message: rule.into() }
}

fn basket(run: &mut BuildRun) -> &mut UnitCoverage {
    run.coverage.units.get_mut(&unit().unit_name).expect("basket is covered")
}

fn set(run: &mut BuildRun, line: u32, state: LineState) {
    basket(run).lines.insert(line, state);
}

fn find_mutant<'a>(run: &'a mut BuildRun, line: u32, mutator: &str) -> &'a mut MutantRecord {
    run.mutants.iter_mut().find(|m| m.line == line && m.mutator == mutator).expect("mutant present")
}

/// Run 1: lines 1-4 covered, 5-8 and 10-11 uncovered, line 9 with one of
/// four branches; 14 tests; two survivors and one killed mutant on
/// `discount`; two smells.
pub fn base_run(id: u64) -> BuildRun {
    let at = Utc.with_ymd_and_hms(2024, 4, 1, 10, 0, 0).unwrap() + chrono::Duration::hours(id as i64);
    let mut run = BuildRun::new(RunId(id), at, BuildStatus::Success, UserId::from("ann"));
    run.reports = ReportKinds::ALL;
    let mut cov = UnitCoverage::new(unit());
    for l in 1..=4 {
        cov.set_line(l, LineState::Covered);
    }
    for l in [5, 6, 7, 8, 10, 11] {
        cov.set_line(l, LineState::Uncovered);
    }
    cov.set_line(9, LineState::PartiallyCovered { branch_covered: 1, branch_total: 4 });
    cov.add_method(method("total", 2, 4));
    cov.add_method(method("discount", 5, 8));
    cov.add_method(method("round", 9, 11));
    run.coverage.insert(cov);
    let mut other = UnitCoverage::new(SourceUnit::from_path(OTHER));
    other.set_line(1, LineState::Covered);
    other.set_line(2, LineState::Uncovered);
    run.coverage.insert(other);
    run.mutants = vec![
        mutant(6, "MathMutator", 0, MutantStatus::Survived),
        mutant(6, "NegateConditionalsMutator", 0, MutantStatus::Survived),
        mutant(3, "PrimitiveReturnsMutator", 0, MutantStatus::Killed),
    ];
    run.smells = vec![smell("MagicNumber", 6, 6), smell("LongMethod", 5, 8)];
    run.tests = TestSnapshot { test_count: 14, failing_count: 0 };
    run
}

pub fn repo() -> MemoryRepo {
    let mut repo = MemoryRepo::new();
    let at = Utc.with_ymd_and_hms(2024, 4, 1, 9, 0, 0).unwrap();
    repo.commit("ann", at, &[(PATH, Some(SOURCE)), (OTHER, Some("class Receipt {\n    String text;\n}"))]);
    repo
}

fn line_text(n: u32) -> String {
    SOURCE.lines().nth(n as usize - 1).expect("line exists").to_string()
}

fn challenge(kind: &str, target: ChallengeTarget) -> Challenge {
    Challenge {
        id: format!("fixture-{kind}"),
        owner: UserId::from("ann"),
        target,
        created_at: RunId(1),
        state: ChallengeState::Open,
        points: 0,
    }
}

fn keep(_: &mut BuildRun) {}

fn fail(run: &mut BuildRun) {
    run.build_status = BuildStatus::Failure;
}

pub fn fixtures() -> Vec<KindFixture> {
    vec![
        KindFixture {
            name: "build",
            challenge: challenge("build", ChallengeTarget::Build { failing_run: RunId(1) }),
            reference: fail,
            intended: |r| r.build_status = BuildStatus::Success,
            near_misses: vec![
                ("more tests, still failing", |r| r.tests.test_count = 20),
                ("full coverage, still failing", |r| {
                    for l in 1..=11 {
                        set(r, l, LineState::Covered);
                    }
                }),
                ("mutants killed, still failing", |r| {
                    for m in &mut r.mutants {
                        m.status = MutantStatus::Killed;
                    }
                }),
                ("smells gone, still failing", |r| r.smells.clear()),
                ("no reports, still failing", |r| r.reports = ReportKinds::default()),
                ("failing tests reported", |r| r.tests.failing_count = 2),
            ],
        },
        KindFixture {
            name: "test",
            challenge: challenge("test", ChallengeTarget::Test { baseline_tests: 14 }),
            reference: keep,
            intended: |r| r.tests.test_count = 15,
            near_misses: vec![
                ("one test fewer", |r| r.tests.test_count = 13),
                ("a test starts failing", |r| r.tests.failing_count = 1),
                ("15 tests on a failed build", |r| {
                    r.tests.test_count = 15;
                    fail(r);
                }),
                ("15 tests without a test report", |r| {
                    r.tests.test_count = 15;
                    r.reports.tests = false;
                }),
                ("coverage rises instead", |r| set(r, 5, LineState::Covered)),
                ("mutant killed instead", |r| find_mutant(r, 6, "MathMutator").status = MutantStatus::Killed),
            ],
        },
        KindFixture {
            name: "class_coverage",
            challenge: challenge(
                "class_coverage",
                ChallengeTarget::ClassCoverage { unit: unit(), baseline: CoverageFraction::new(5, 11) },
            ),
            reference: keep,
            intended: |r| set(r, 5, LineState::Covered),
            near_misses: vec![
                ("covered line moves, count unchanged", |r| {
                    set(r, 5, LineState::Covered);
                    set(r, 4, LineState::Uncovered);
                }),
                ("more branches on a hit line", |r| {
                    set(r, 9, LineState::PartiallyCovered { branch_covered: 3, branch_total: 4 })
                }),
                ("other unit fully covered", |r| {
                    let other = SourceUnit::from_path(OTHER);
                    r.coverage.units.get_mut(&other.unit_name).unwrap().lines.insert(2, LineState::Covered);
                }),
                ("line covered on a failed build", |r| {
                    set(r, 5, LineState::Covered);
                    fail(r);
                }),
                ("line covered without a coverage report", |r| {
                    set(r, 5, LineState::Covered);
                    r.reports.coverage = false;
                }),
                ("new lines at the same ratio", |r| {
                    for l in 12..=16 {
                        set(r, l, LineState::Covered);
                    }
                    for l in 17..=22 {
                        set(r, l, LineState::Uncovered);
                    }
                }),
            ],
        },
        KindFixture {
            name: "method_coverage",
            challenge: challenge(
                "method_coverage",
                ChallengeTarget::MethodCoverage {
                    unit: unit(),
                    method: method("discount", 5, 8),
                    baseline: CoverageFraction::new(0, 4),
                },
            ),
            reference: keep,
            intended: |r| set(r, 6, LineState::Covered),
            near_misses: vec![
                ("line just before the method", |r| set(r, 4, LineState::Covered)),
                ("line of the next method", |r| set(r, 10, LineState::Covered)),
                ("method line covered on a failed build", |r| {
                    set(r, 6, LineState::Covered);
                    fail(r);
                }),
                ("method line covered without a coverage report", |r| {
                    set(r, 6, LineState::Covered);
                    r.reports.coverage = false;
                }),
                ("method renamed in the report", |r| {
                    set(r, 6, LineState::Covered);
                    let c = basket(r);
                    c.methods.retain(|m| m.name != "discount");
                    c.add_method(method("applyDiscount", 5, 8));
                }),
                ("other unit improves", |r| {
                    let other = SourceUnit::from_path(OTHER);
                    r.coverage.units.get_mut(&other.unit_name).unwrap().lines.insert(2, LineState::Covered);
                }),
            ],
        },
        KindFixture {
            name: "line_coverage",
            challenge: challenge(
                "line_coverage",
                ChallengeTarget::LineCoverage { unit: unit(), line: 7, baseline: LineState::Uncovered, snippet: line_text(7) },
            ),
            reference: keep,
            intended: |r| set(r, 7, LineState::Covered),
            near_misses: vec![
                ("line above", |r| set(r, 6, LineState::Covered)),
                ("line below", |r| set(r, 8, LineState::Covered)),
                ("every other line", |r| {
                    for l in (1..=11).filter(|&l| l != 7) {
                        set(r, l, LineState::Covered);
                    }
                }),
                ("covered on a failed build", |r| {
                    set(r, 7, LineState::Covered);
                    fail(r);
                }),
                ("covered without a coverage report", |r| {
                    set(r, 7, LineState::Covered);
                    r.reports.coverage = false;
                }),
            ],
        },
        KindFixture {
            name: "mutation",
            challenge: challenge(
                "mutation",
                ChallengeTarget::Mutation {
                    mutant: mutant(6, "MathMutator", 0, MutantStatus::Survived),
                    original_text: Some(line_text(6)),
                },
            ),
            reference: keep,
            intended: |r| find_mutant(r, 6, "MathMutator").status = MutantStatus::Killed,
            near_misses: vec![
                ("sibling mutant on the same line killed", |r| {
                    find_mutant(r, 6, "NegateConditionalsMutator").status = MutantStatus::Killed
                }),
                ("target loses coverage", |r| find_mutant(r, 6, "MathMutator").status = MutantStatus::NoCoverage),
                ("killed on a failed build", |r| {
                    find_mutant(r, 6, "MathMutator").status = MutantStatus::Killed;
                    fail(r);
                }),
                ("killed without a mutation report", |r| {
                    find_mutant(r, 6, "MathMutator").status = MutantStatus::Killed;
                    r.reports.mutations = false;
                }),
                ("identical second mutant killed", |r| r.mutants.push(mutant(6, "MathMutator", 1, MutantStatus::Killed))),
                ("line covered instead", |r| set(r, 6, LineState::Covered)),
            ],
        },
        KindFixture {
            name: "smell",
            challenge: challenge(
                "smell",
                ChallengeTarget::Smell { finding: smell("MagicNumber", 6, 6), snippet: Some(line_text(6)) },
            ),
            reference: keep,
            intended: |r| r.smells.retain(|s| s.rule_id != "MagicNumber"),
            near_misses: vec![
                ("other smell fixed", |r| r.smells.retain(|s| s.rule_id != "LongMethod")),
                ("finding widened", |r| r.smells.iter_mut().filter(|s| s.rule_id == "MagicNumber").for_each(|s| s.end_line = 7)),
                ("finding replaced by an overlapping one", |r| {
                    r.smells.retain(|s| s.rule_id != "MagicNumber");
                    r.smells.push(smell("MagicNumber", 5, 6));
                }),
                ("fixed on a failed build", |r| {
                    r.smells.retain(|s| s.rule_id != "MagicNumber");
                    fail(r);
                }),
                ("fixed without a findings report", |r| {
                    r.smells.retain(|s| s.rule_id != "MagicNumber");
                    r.reports.findings = false;
                }),
            ],
        },
    ]
}

/// Processes run 1 (the base run), installs the fixture challenge, then
/// processes `run` as run 2 and reports whether the challenge was solved.
pub fn solves(challenge: &Challenge, run: &BuildRun) -> bool {
    let repo = repo();
    let catalog = Catalog::standard();
    let config = EngineConfig { quest_enabled: false, ..EngineConfig::default() };
    let ann = UserId::from("ann");
    let users = BTreeMap::from([(ann.clone(), UserState::new(ann.clone(), "Ann"))]);
    let first = process_run(&ProjectState::new("kinds", config), &users, &base_run(1), &repo, &catalog);
    let mut users = first.users;
    users.get_mut(&ann).unwrap().open_challenges = vec![challenge.clone()];
    let second = process_run(&first.project, &users, run, &repo, &catalog);
    second
        .events
        .iter()
        .any(|e| matches!(&e.kind, EventKind::ChallengeSolved { challenge_id, .. } if *challenge_id == challenge.id))
}

/// `Err` describes the first delta that behaves differently than intended.
pub fn check_fixture(f: &KindFixture) -> Result<usize, String> {
    let reference = {
        let mut r = base_run(2);
        (f.reference)(&mut r);
        r
    };
    if solves(&f.challenge, &reference) {
        return Err(format!("{}: reference run already solves it", f.name));
    }
    let mut intended = reference.clone();
    (f.intended)(&mut intended);
    if !solves(&f.challenge, &intended) {
        return Err(format!("{}: intended delta does not solve it", f.name));
    }
    for (label, delta) in &f.near_misses {
        let mut r = reference.clone();
        delta(&mut r);
        if solves(&f.challenge, &r) {
            return Err(format!("{}: near miss `{label}` solves it", f.name));
        }
    }
    Ok(f.near_misses.len())
}
