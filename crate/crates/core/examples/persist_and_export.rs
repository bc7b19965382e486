//! Runs the engine on an on-disk store, reopens it as a fresh process
//! would, and writes the statistics CSV.
//!
//! ```text
//! cargo run --example persist_and_export [state-dir]
//! ```

use std::path::PathBuf;

use covquest::service::Engine;
use covquest::sim::{build_run, Scenario, PROJECT};
use covquest::store::Store;
use covquest::vcs::MemoryRepo;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = match std::env::args().nth(1) {
        Some(dir) => PathBuf::from(dir),
        None => std::env::temp_dir().join(format!("covquest-example-{}", std::process::id())),
    };
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/first-blood.json");
    let scenario = Scenario::from_json(&std::fs::read_to_string(path)?)?;

    {
        let engine = Engine::with_store(Store::new(&root));
        let mut repo = MemoryRepo::new();
        for step in &scenario.steps {
            let changes: Vec<(&str, Option<&str>)> = step
                .files
                .iter()
                .map(|(p, c)| (p.as_str(), Some(c.as_str())))
                .chain(step.deleted.iter().map(|p| (p.as_str(), None)))
                .collect();
            repo.commit(&step.author, step.at, &changes);
            let report = engine.ingest(PROJECT, &build_run(step), &repo, Some(scenario.seed))?;
            println!("run {} stored: {} events", report.run_id, report.events);
        }
    }

    let store = Store::new(&root);
    let snapshot = store.load(PROJECT)?;
    println!("reloaded {} at run {:?} with {} users and {} events", PROJECT, snapshot.project.last_run_id(), snapshot.users.len(), store.events(PROJECT)?.len());
    let out = root.join("stats.csv");
    store.write_stats(PROJECT, &out)?;
    println!("statistics written to {}:\n{}", out.display(), std::fs::read_to_string(&out)?);
    Ok(())
}
