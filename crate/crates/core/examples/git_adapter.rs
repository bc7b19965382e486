//! Reads a git working copy the way the engine does: recent commits, the
//! source units they touched, and the current text of a file.
//!
//! ```text
//! cargo run --example git_adapter -- /path/to/repo
//! ```

use covquest::model::EngineConfig;
use covquest::vcs::{changed_units, GitRepo, RepoView};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::args().nth(1).unwrap_or_else(|| ".".into());
    let repo = GitRepo::open(&root)?;
    println!("head {}", repo.head());
    for c in repo.history().iter().take(5) {
        println!("  {} {} {} ({} files)", &c.hash[..c.hash.len().min(10)], c.timestamp, c.author, c.changed_paths.len());
    }
    let config = EngineConfig { source_extensions: vec![".rs".into(), ".java".into(), ".kt".into()], ..EngineConfig::default() };
    let changed = changed_units(&repo, config.changed_window, &config.source_extensions);
    println!("{} source units changed in the last {} commits", changed.len(), config.changed_window);
    for unit in changed.iter().take(10) {
        let lines = repo.unit_lines(unit).map_or(0, |l| l.len());
        println!("  {} ({} lines)", unit.unit_name, lines);
    }
    Ok(())
}
