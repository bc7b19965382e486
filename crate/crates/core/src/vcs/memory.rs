use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use sha2::{Digest, Sha256};

use super::RepoView;
use crate::model::{normalize_path, CommitMeta, UserId};

/// In-memory repository used by the simulation harness and tests.
#[derive(Debug, Clone, Default)]
pub struct MemoryRepo {
    head: String,
    history: Vec<CommitMeta>,
    files: BTreeMap<String, Vec<String>>,
}

impl MemoryRepo {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies a commit: `Some(content)` writes a file, `None` deletes it.
    /// Returns the new head hash, which depends only on parent and changes.
    pub fn commit(&mut self, author: &str, at: DateTime<Utc>, changes: &[(&str, Option<&str>)]) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.head.as_bytes());
        hasher.update(author.as_bytes());
        hasher.update(at.to_rfc3339().as_bytes());
        let mut changed = Vec::new();
        for (path, content) in changes {
            let path = normalize_path(path);
            hasher.update(path.as_bytes());
            match content {
                Some(text) => {
                    hasher.update(b"+");
                    hasher.update(text.as_bytes());
                    self.files.insert(path.clone(), text.lines().map(str::to_string).collect());
                }
                None => {
                    hasher.update(b"-");
                    self.files.remove(&path);
                }
            }
            changed.push(path);
        }
        let hash: String = hasher.finalize().iter().take(20).map(|b| format!("{b:02x}")).collect();
        self.history.insert(
            0,
            CommitMeta { hash: hash.clone(), author: UserId::from(author), timestamp: at, changed_paths: changed },
        );
        self.head = hash.clone();
        hash
    }

    /// A repository with the given files and history (newest first).
    pub fn from_parts(history: Vec<CommitMeta>, files: BTreeMap<String, String>) -> Self {
        Self {
            head: history.first().map(|c| c.hash.clone()).unwrap_or_default(),
            history,
            files: files.into_iter().map(|(p, text)| (normalize_path(&p), text.lines().map(str::to_string).collect())).collect(),
        }
    }

    pub fn has_file(&self, path: &str) -> bool {
        self.files.contains_key(&normalize_path(path))
    }
}

impl RepoView for MemoryRepo {
    fn head(&self) -> &str {
        &self.head
    }

    fn history(&self) -> &[CommitMeta] {
        &self.history
    }

    fn paths(&self) -> Vec<String> {
        self.files.keys().cloned().collect()
    }

    fn file_lines(&self, path: &str) -> Option<Vec<String>> {
        self.files.get(path).cloned()
    }
}
