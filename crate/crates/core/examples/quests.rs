//! Replays the bundled quest scenario: two steps are solved, then the file
//! behind the last step is deleted and the quest is auto-rejected while the
//! points already earned stay.
//!
//! ```text
//! cargo run --example quests
//! ```

use std::path::PathBuf;

use covquest::service::views::QuestView;
use covquest::sim::{replay, Scenario};
use covquest::verify::EventKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/quest-partial-credit.json");
    let scenario = Scenario::from_json(&std::fs::read_to_string(path)?)?;
    let replayed = replay(&scenario)?;
    for e in &replayed.events {
        let line = match &e.kind {
            EventKind::QuestGenerated { quest_id, quest_kind, steps } => format!("{quest_id}: {} quest with {steps} steps", quest_kind.title()),
            EventKind::QuestStepSolved { quest_id, step, .. } => format!("{quest_id}: step {} solved", step + 1),
            EventKind::QuestCompleted { quest_id } => format!("{quest_id}: completed"),
            EventKind::QuestAutoRejected { quest_id, reason } => format!("{quest_id}: auto-rejected ({})", reason.as_str()),
            EventKind::PointsAwarded { delta, cause } if cause.contains("-q") || cause.starts_with("quest") => format!("+{delta} for {cause}"),
            _ => continue,
        };
        println!("run {} {}: {line}", e.run_id, e.user_id);
    }
    for user in replayed.snapshot.users.values() {
        for quest in user.all_quests() {
            let view = QuestView::of(quest);
            println!("{} final: {}", user.user_id, serde_json::to_string(&view)?);
        }
        println!("{} score: {}", user.user_id, user.score);
    }
    Ok(())
}
