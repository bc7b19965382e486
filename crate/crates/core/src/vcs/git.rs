use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;

use chrono::{DateTime, Utc};

use super::{RepoView, VcsError};
use crate::model::{CommitMeta, UserId};

const RECORD: char = '\u{1e}';
const FIELD: char = '\u{1f}';

/// A working copy read through the `git` command-line client. History and
/// the file list are loaded once; file contents on demand.
pub struct GitRepo {
    root: PathBuf,
    head: String,
    history: Vec<CommitMeta>,
    paths: Vec<String>,
    cache: Mutex<HashMap<String, Option<Vec<String>>>>,
}

impl GitRepo {
    pub fn open(root: impl AsRef<Path>) -> Result<Self, VcsError> {
        let root = root.as_ref().to_path_buf();
        let head = git(&root, &["rev-parse", "HEAD"])?.trim().to_string();
        let log = git(&root, &["log", "--name-only", "--no-renames", "--format=%x1e%H%x1f%ae%x1f%aI"])?;
        let history = parse_log(&log)?;
        let paths = git(&root, &["ls-tree", "-r", "--name-only", "HEAD"])?
            .lines()
            .map(str::to_string)
            .collect();
        Ok(Self { root, head, history, paths, cache: Mutex::new(HashMap::new()) })
    }
}

fn git(root: &Path, args: &[&str]) -> Result<String, VcsError> {
    let out = Command::new("git")
        .arg("-C")
        .arg(root)
        .args(args)
        .output()
        .map_err(|e| VcsError::Git { args: args.join(" "), detail: e.to_string() })?;
    if !out.status.success() {
        return Err(VcsError::Git {
            args: args.join(" "),
            detail: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn parse_log(log: &str) -> Result<Vec<CommitMeta>, VcsError> {
    let mut commits = Vec::new();
    for record in log.split(RECORD).filter(|r| !r.trim().is_empty()) {
        let mut lines = record.lines();
        let header = lines.next().ok_or_else(|| VcsError::Parse(record.to_string()))?;
        let fields: Vec<&str> = header.split(FIELD).collect();
        let [hash, author, date] = fields.as_slice() else {
            return Err(VcsError::Parse(header.to_string()));
        };
        let timestamp = DateTime::parse_from_rfc3339(date)
            .map_err(|e| VcsError::Parse(format!("{date}: {e}")))?
            .with_timezone(&Utc);
        commits.push(CommitMeta {
            hash: hash.to_string(),
            author: UserId::new(*author),
            timestamp,
            changed_paths: lines.map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect(),
        });
    }
    Ok(commits)
}

impl RepoView for GitRepo {
    fn head(&self) -> &str {
        &self.head
    }

    fn history(&self) -> &[CommitMeta] {
        &self.history
    }

    fn paths(&self) -> Vec<String> {
        self.paths.clone()
    }

    fn file_lines(&self, path: &str) -> Option<Vec<String>> {
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry(path.to_string())
            .or_insert_with(|| {
                git(&self.root, &["show", &format!("{}:{}", self.head, path)])
                    .ok()
                    .map(|text| text.lines().map(str::to_string).collect())
            })
            .clone()
    }
}
