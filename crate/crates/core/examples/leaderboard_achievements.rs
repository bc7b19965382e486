//! Replays a three-developer sprint and prints the leaderboard, each
//! user's achievements and the challenge statistics table.
//!
//! ```text
//! cargo run --example leaderboard_achievements
//! ```

use std::path::PathBuf;

use covquest::scoring::{leaderboard, Catalog};
use covquest::service::views::user_achievements;
use covquest::sim::{replay, Scenario};
use covquest::store::export_stats;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/team-sprint.json");
    let replayed = replay(&Scenario::from_json(&std::fs::read_to_string(path)?)?)?;
    let users = &replayed.snapshot.users;

    println!("{:<4} {:<6} {:>5} {:>7} {:>7} {:>5}", "rank", "user", "score", "solved", "quests", "ach.");
    for (i, row) in leaderboard(users.values()).iter().enumerate() {
        println!(
            "{:<4} {:<6} {:>5} {:>7} {:>7} {:>5}",
            i + 1,
            row.display_name,
            row.score,
            row.completed_challenges,
            row.completed_quests,
            row.achievements
        );
    }

    let catalog = Catalog::standard();
    for user in users.values() {
        let view = user_achievements(user, &catalog);
        let names: Vec<&str> = view.unlocked.iter().map(|a| a.title.as_str()).collect();
        println!("{}: {} ({} still hidden)", user.display_name, names.join(", "), view.secret_locked);
    }

    println!("\n{}", export_stats(users.values()));
    Ok(())
}
