use std::collections::BTreeMap;

use crate::model::{ChallengeKind, ChallengeState, UserState};

pub const HEADER: [&str; 8] = ["scope", "kind", "completed", "rejected", "total", "completed_ratio", "rejected_ratio", "reasons"];

/// Scope value of the per-kind summary rows.
pub const SUMMARY_SCOPE: &str = "ALL";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatsRow {
    pub scope: String,
    pub kind: ChallengeKind,
    pub completed: usize,
    pub rejected: usize,
    /// Percentages; `None` when the total is zero.
    pub ratios: Option<(u32, u32)>,
    pub reasons: Vec<String>,
}

/// Integer percentages of `parts` that sum to exactly 100. Each share is
/// rounded down, then the leftover points go to the largest remainders,
/// earlier parts winning ties. `None` when all parts are zero.
pub fn largest_remainder_percent(parts: &[usize]) -> Option<Vec<u32>> {
    let total: usize = parts.iter().sum();
    if total == 0 {
        return None;
    }
    let mut shares: Vec<u32> = parts.iter().map(|&p| (p * 100 / total) as u32).collect();
    let mut order: Vec<usize> = (0..parts.len()).collect();
    // remainder of part i is (p*100 mod total)/total; compare numerators
    order.sort_by(|&a, &b| ((parts[b] * 100) % total).cmp(&((parts[a] * 100) % total)).then(a.cmp(&b)));
    let leftover = 100 - shares.iter().sum::<u32>();
    for &i in order.iter().take(leftover as usize) {
        shares[i] += 1;
    }
    Some(shares)
}

fn reason_of(state: &ChallengeState) -> Option<&str> {
    match state {
        ChallengeState::Rejected { reason, .. } => Some(reason),
        _ => None,
    }
}

/// Rows of the statistics table: one per (user, kind), then one summary
/// row per kind. Counts cover standalone challenges, not quest steps.
pub fn stats_rows<'a>(users: impl IntoIterator<Item = &'a UserState>) -> Vec<StatsRow> {
    let mut rows = Vec::new();
    let mut summary: BTreeMap<ChallengeKind, StatsRow> = BTreeMap::new();
    for user in users {
        for kind in ChallengeKind::ALL {
            let completed = user.completed_challenges.iter().filter(|c| c.kind() == kind).count();
            let rejected: Vec<&str> =
                user.rejected_challenges.iter().filter(|c| c.kind() == kind).filter_map(|c| reason_of(&c.state)).collect();
            let row = StatsRow {
                scope: user.user_id.to_string(),
                kind,
                completed,
                rejected: rejected.len(),
                ratios: largest_remainder_percent(&[completed, rejected.len()]).map(|v| (v[0], v[1])),
                reasons: rejected.iter().map(|r| r.to_string()).collect(),
            };
            let s = summary.entry(kind).or_insert_with(|| StatsRow {
                scope: SUMMARY_SCOPE.to_string(),
                kind,
                completed: 0,
                rejected: 0,
                ratios: None,
                reasons: Vec::new(),
            });
            s.completed += row.completed;
            s.rejected += row.rejected;
            s.reasons.extend(row.reasons.iter().cloned());
            rows.push(row);
        }
    }
    for kind in ChallengeKind::ALL {
        if let Some(mut s) = summary.remove(&kind) {
            s.ratios = largest_remainder_percent(&[s.completed, s.rejected]).map(|v| (v[0], v[1]));
            rows.push(s);
        }
    }
    rows
}

/// The statistics table as CSV. A project without users yields the
/// header only.
pub fn export_stats<'a>(users: impl IntoIterator<Item = &'a UserState>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for r in stats_rows(users) {
        let (cr, rr) = r.ratios.map_or((String::new(), String::new()), |(c, j)| (c.to_string(), j.to_string()));
        w.write_record([
            r.scope,
            r.kind.as_str().to_string(),
            r.completed.to_string(),
            r.rejected.to_string(),
            (r.completed + r.rejected).to_string(),
            cr,
            rr,
            r.reasons.join("; "),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}
