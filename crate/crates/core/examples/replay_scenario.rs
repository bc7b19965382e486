//! Replays a scenario file and prints its event log, one JSON object per
//! line; with a second argument the log is compared to a golden file.
//!
//! ```text
//! cargo run --example replay_scenario -- crates/core/scenarios/team-sprint.json
//! cargo run --example replay_scenario -- crates/core/scenarios/team-sprint.json crates/core/scenarios/team-sprint.log
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use covquest::sim::{replay, Scenario};

fn main() -> ExitCode {
    let mut args = std::env::args().skip(1);
    let scenario = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/first-blood.json"));
    let text = std::fs::read_to_string(&scenario).expect("scenario readable");
    let log = match Scenario::from_json(&text).and_then(|s| replay(&s)) {
        Ok(r) => r.log(),
        Err(e) => {
            eprintln!("{}: {e}", scenario.display());
            return ExitCode::FAILURE;
        }
    };
    match args.next() {
        None => {
            print!("{log}");
            ExitCode::SUCCESS
        }
        Some(golden) => {
            let expected = std::fs::read_to_string(&golden).expect("golden readable");
            if expected == log {
                println!("{} matches {golden}", scenario.display());
                ExitCode::SUCCESS
            } else {
                let line = expected.lines().zip(log.lines()).position(|(a, b)| a != b).map_or(0, |i| i + 1);
                eprintln!("{} differs from {golden} near line {line}", scenario.display());
                ExitCode::FAILURE
            }
        }
    }
}
