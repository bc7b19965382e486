//! Read-only view of the repository at the built revision: commit history,
//! recently changed units and current line text.

mod git;
mod memory;

use std::collections::BTreeSet;

use thiserror::Error;

pub use git::GitRepo;
pub use memory::MemoryRepo;

use crate::model::{paths_match, CommitMeta, SourceUnit, UserId};

#[derive(Debug, Error)]
pub enum VcsError {
    #[error("unknown commit {0}")]
    UnknownCommit(String),
    #[error("git {args}: {detail}")]
    Git { args: String, detail: String },
    #[error("unparseable git output: {0}")]
    Parse(String),
}

/// One repository revision.
pub trait RepoView: Send + Sync {
    fn head(&self) -> &str;

    /// Newest first.
    fn history(&self) -> &[CommitMeta];

    /// Every file path present at head.
    fn paths(&self) -> Vec<String>;

    /// Content of a file at head split into lines, `None` if absent.
    fn file_lines(&self, path: &str) -> Option<Vec<String>>;

    /// The head path a report path refers to, by exact or suffix match.
    fn resolve(&self, path: &str) -> Option<String> {
        let paths = self.paths();
        if paths.iter().any(|p| p == path) {
            return Some(path.to_string());
        }
        paths.into_iter().filter(|p| paths_match(p, path)).min_by_key(|p| (p.len(), p.clone()))
    }

    /// Lines of the unit's file, if it still exists.
    fn unit_lines(&self, unit: &SourceUnit) -> Option<Vec<String>> {
        self.resolve(&unit.path).and_then(|p| self.file_lines(&p))
    }
}

/// Units touched by the newest `window` commits, restricted to source files.
pub fn changed_units(view: &dyn RepoView, window: usize, extensions: &[String]) -> BTreeSet<SourceUnit> {
    view.history()
        .iter()
        .take(window)
        .flat_map(|c| c.changed_paths.iter())
        .filter(|p| extensions.iter().any(|ext| p.ends_with(ext.as_str())))
        .map(|p| SourceUnit::from_path(p))
        .collect()
}

/// The exact current text of a 1-based line.
pub fn line_text(view: &dyn RepoView, unit: &SourceUnit, line: u32) -> Option<String> {
    if line == 0 {
        return None;
    }
    view.unit_lines(unit)?.into_iter().nth(line as usize - 1)
}

pub fn author_of(view: &dyn RepoView, hash: &str) -> Result<UserId, VcsError> {
    view.history()
        .iter()
        .find(|c| c.hash == hash)
        .map(|c| c.author.clone())
        .ok_or_else(|| VcsError::UnknownCommit(hash.to_string()))
}

/// Commits newer than `previous_head`, newest first; everything if the
/// previous head is unknown.
pub fn commits_since(view: &dyn RepoView, previous_head: Option<&str>) -> Vec<CommitMeta> {
    view.history()
        .iter()
        .take_while(|c| Some(c.hash.as_str()) != previous_head)
        .cloned()
        .collect()
}

/// True when some unit in `changed` lives in the same file as `unit`.
pub fn is_changed(changed: &BTreeSet<SourceUnit>, unit: &SourceUnit) -> bool {
    changed.iter().any(|c| paths_match(&c.path, &unit.path))
}
