use std::collections::BTreeMap;

use chrono::{Duration, TimeZone, Utc};

use super::{Action, CoverageRow, MethodRow, MutantRow, Scenario, ScenarioUser, SmellRow, Step};
use crate::model::{BuildStatus, ChallengeKind, MutantStatus, RunId, TestSnapshot, UserId};
use crate::rng::DrawStream;

const MAX_USERS: usize = 4;
const MAX_RUNS: usize = 8;
const MAX_UNITS: usize = 12;

const MUTATORS: [&str; 3] = ["MathMutator", "NegateConditionalsMutator", "ReturnValsMutator"];
const RULES: [&str; 4] = ["MagicNumber", "LongMethod", "EmptyCatchBlock", "UnusedLocal"];

struct Gen {
    r: DrawStream,
    serial: u32,
}

impl Gen {
    fn chance(&mut self, p: f64) -> bool {
        self.r.next_unit() < p
    }

    fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.r.pick(hi - lo + 1)
    }

    fn line(&mut self, unit: usize) -> String {
        self.serial += 1;
        format!("    step{unit}_{}();", self.serial)
    }
}

/// Per-unit facts that persist across runs so challenges can be solved.
struct UnitPlan {
    mutants: Vec<(u32, &'static str)>,
    smells: Vec<(&'static str, u32)>,
    coverage_bias: f64,
}

/// `count` random but valid scenarios, a pure function of `seed`.
pub fn fuzz_scenarios(count: usize, seed: u64) -> Vec<Scenario> {
    (0..count).map(|i| fuzz_one(seed, i as u64)).collect()
}

fn fuzz_one(seed: u64, index: u64) -> Scenario {
    let mut g = Gen { r: DrawStream::for_user(seed, &UserId::from("fuzz"), RunId(index)), serial: 0 };
    let n_users = g.range(1, MAX_USERS);
    let n_runs = g.range(1, MAX_RUNS);
    let n_units = g.range(1, MAX_UNITS);
    let users: Vec<String> = (0..n_users).map(|i| format!("dev{i}")).collect();
    let path = |u: usize| format!("src/main/java/app/Unit{u}.java");

    let mut files: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut plans: BTreeMap<usize, UnitPlan> = BTreeMap::new();
    let mut tests = g.range(0, 20) as u64;
    let start = Utc.with_ymd_and_hms(2024, 3, 4, 8, 0, 0).unwrap();
    let mut at = start;
    let mut run_id = 0u64;
    let mut steps = Vec::new();

    for k in 0..n_runs {
        run_id += g.range(1, 2) as u64;
        at += Duration::hours(g.range(1, 60) as i64);
        let author = users[g.r.pick(users.len())].clone();
        let mut written = BTreeMap::new();
        let mut deleted = Vec::new();
        for u in 0..n_units {
            let exists = files.contains_key(&u);
            if !exists && (k == 0 && (u == 0 || g.chance(0.7)) || k > 0 && g.chance(0.2)) {
                let len = g.range(6, 18);
                let lines: Vec<String> = (0..len).map(|_| g.line(u)).collect();
                let n_mut = g.range(0, 3);
                let mutants = (0..n_mut).map(|_| (g.range(1, len) as u32, MUTATORS[g.r.pick(MUTATORS.len())])).collect();
                let n_smell = g.range(0, 3);
                let smells = (0..n_smell).map(|_| (RULES[g.r.pick(RULES.len())], g.range(1, len) as u32)).collect();
                plans.insert(u, UnitPlan { mutants, smells, coverage_bias: g.r.next_unit() * 0.6 });
                written.insert(path(u), lines.join("\n"));
                files.insert(u, lines);
            } else if exists && k > 0 && files.len() > 1 && g.chance(0.06) {
                files.remove(&u);
                plans.remove(&u);
                deleted.push(path(u));
            } else if exists && k > 0 && g.chance(0.3) {
                let new_line = g.line(u);
                let lines = files.get_mut(&u).expect("exists");
                let pos = g.r.pick(lines.len() + 1);
                if g.chance(0.5) {
                    lines.insert(pos, new_line);
                } else {
                    let pos = pos.min(lines.len() - 1);
                    lines[pos] = new_line;
                }
                written.insert(path(u), lines.join("\n"));
            }
        }
        let status = if g.chance(0.8) { BuildStatus::Success } else { BuildStatus::Failure };
        let progress = (k + 1) as f64 / n_runs as f64;

        let coverage = g.chance(0.9).then(|| {
            let mut rows = Vec::new();
            for (&u, lines) in &files {
                let bias = plans[&u].coverage_bias;
                let mut row = CoverageRow { path: path(u), ..CoverageRow::default() };
                let len = lines.len() as u32;
                for l in 1..=len {
                    let x = g.r.next_unit();
                    if x < bias + progress * 0.4 {
                        row.covered.push(l);
                    } else if x < bias + progress * 0.4 + 0.1 {
                        row.partial.push([l, 1, 2]);
                    } else {
                        row.uncovered.push(l);
                    }
                }
                let split = g.range(1, len as usize) as u32;
                row.methods.push(MethodRow { name: "first".into(), first: 1, last: split });
                if split < len {
                    row.methods.push(MethodRow { name: "second".into(), first: split + 1, last: len });
                }
                rows.push(row);
            }
            rows
        });
        let mutants = g.chance(0.8).then(|| {
            let mut rows = Vec::new();
            for (&u, plan) in &plans {
                for &(line, mutator) in &plan.mutants {
                    if g.chance(0.1) {
                        continue;
                    }
                    let killed = g.chance(0.3 + progress * 0.4);
                    let status = if killed { MutantStatus::Killed } else { MutantStatus::Survived };
                    rows.push(MutantRow { path: path(u), line, mutator: mutator.to_string(), status, description: None });
                }
            }
            rows
        });
        let smells = g.chance(0.8).then(|| {
            let mut rows = Vec::new();
            for (&u, plan) in &plans {
                for &(rule, start) in &plan.smells {
                    if g.chance(0.75 - progress * 0.3) {
                        rows.push(SmellRow { path: path(u), rule: rule.to_string(), start, end: None });
                    }
                }
            }
            rows
        });
        let test_rows = g.chance(0.9).then(|| {
            if g.chance(0.5) {
                tests += g.range(1, 3) as u64;
            }
            TestSnapshot { test_count: tests, failing_count: 0 }
        });
        let mut actions = Vec::new();
        if g.chance(0.15) {
            let user = users[g.r.pick(users.len())].clone();
            let kind = g.chance(0.5).then_some(ChallengeKind::ClassCoverage);
            actions.push(Action::Reject {
                user,
                challenge: None,
                kind,
                index: None,
                reason: "not feasible right now".into(),
                category: None,
                lenient: true,
            });
        }
        if g.chance(0.08) {
            let user = users[g.r.pick(users.len())].clone();
            let u = g.r.pick(n_units);
            actions.push(Action::Unblock { user, unit: format!("src.main.java.app.Unit{u}"), lenient: true });
        }
        steps.push(Step {
            run_id,
            at,
            status,
            author,
            files: written,
            deleted,
            coverage,
            mutants,
            smells,
            tests: test_rows,
            actions,
        });
    }

    Scenario {
        seed: seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15),
        config: None,
        users: users.into_iter().map(|id| ScenarioUser { id, name: None }).collect(),
        steps,
    }
}
