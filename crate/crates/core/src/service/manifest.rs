use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ServiceError;
use crate::ingest::{Artifact, ArtifactBundle, CoverageFile, IngestError};
use crate::model::{BuildRun, BuildStatus, CommitMeta, RunId, RunSummary, UserId};
use crate::vcs::{commits_since, GitRepo, MemoryRepo, RepoView};

/// Repository content passed inline instead of a checkout path.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InlineRepo {
    /// Newest first.
    pub commits: Vec<CommitMeta>,
    pub files: BTreeMap<String, String>,
}

/// What a CI job posts after a build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Defaults to one past the last processed run.
    #[serde(default)]
    pub run_id: Option<RunId>,
    pub status: BuildStatus,
    /// Defaults to the head commit's time.
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
    /// Defaults to the head commit's author.
    #[serde(default)]
    pub actor: Option<UserId>,
    #[serde(default)]
    pub repo: Option<PathBuf>,
    #[serde(default)]
    pub inline: Option<InlineRepo>,
    /// File paths or glob patterns per report family.
    #[serde(default)]
    pub coverage: Vec<String>,
    #[serde(default)]
    pub mutations: Vec<String>,
    #[serde(default)]
    pub findings: Vec<String>,
    #[serde(default)]
    pub tests: Vec<String>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn is_pattern(s: &str) -> bool {
    s.contains(['*', '?', '['])
}

/// Reads every file named by `patterns`. A plain path that cannot be read
/// and a pattern that matches nothing are both errors naming the input.
pub fn collect_artifacts(patterns: &[String]) -> Result<Vec<Artifact>, Vec<IngestError>> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for p in patterns {
        if !is_pattern(p) {
            match Artifact::read(std::path::Path::new(p)) {
                Ok(a) => out.push(a),
                Err(e) => errors.push(e),
            }
            continue;
        }
        let paths = match glob::glob(p) {
            Ok(paths) => paths,
            Err(e) => {
                errors.push(IngestError::Io { file: p.clone(), detail: e.to_string() });
                continue;
            }
        };
        let mut matched: Vec<PathBuf> = paths.filter_map(Result::ok).filter(|p| p.is_file()).collect();
        matched.sort();
        if matched.is_empty() {
            errors.push(IngestError::Io { file: p.clone(), detail: "pattern matched no files".into() });
        }
        for m in matched {
            match Artifact::read(&m) {
                Ok(a) => out.push(a),
                Err(e) => errors.push(e),
            }
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

impl RunManifest {
    pub fn view(&self) -> Result<Box<dyn RepoView>, ServiceError> {
        match (&self.repo, &self.inline) {
            (Some(path), _) => Ok(Box::new(GitRepo::open(path)?)),
            (None, Some(inline)) => Ok(Box::new(MemoryRepo::from_parts(inline.commits.clone(), inline.files.clone()))),
            (None, None) => Err(ServiceError::BadRequest("a run needs either `repo` or `inline`".into())),
        }
    }

    fn bundle(&self) -> Result<ArtifactBundle, Vec<IngestError>> {
        let mut errors = Vec::new();
        let mut take = |patterns: &[String]| collect_artifacts(patterns).unwrap_or_else(|e| {
            errors.extend(e);
            Vec::new()
        });
        let coverage = take(&self.coverage);
        let mutations = take(&self.mutations);
        let findings = take(&self.findings);
        let tests = take(&self.tests);
        let mut files = Vec::new();
        for a in coverage {
            match CoverageFile::sniffed(a) {
                Ok(f) => files.push(f),
                Err(e) => errors.push(e),
            }
        }
        if errors.is_empty() {
            Ok(ArtifactBundle { coverage: files, mutations, findings, tests })
        } else {
            Err(errors)
        }
    }

    /// Parses the artifacts and assembles the run; `last` is the previously
    /// processed run, used for the default id and the new commits.
    pub fn build(&self, last: Option<&RunSummary>) -> Result<(BuildRun, Box<dyn RepoView>, Vec<String>), ServiceError> {
        let view = self.view()?;
        let parsed = self.bundle().and_then(|b| b.parse()).map_err(ServiceError::Parse)?;
        let head = view.history().first().cloned();
        let run_id = self.run_id.unwrap_or(RunId(last.map_or(1, |l| l.run_id.0 + 1)));
        let timestamp = self.timestamp.or(head.as_ref().map(|c| c.timestamp)).unwrap_or_else(Utc::now);
        let actor = self
            .actor
            .clone()
            .or(head.map(|c| c.author))
            .ok_or_else(|| ServiceError::BadRequest("no actor given and the repository has no commits".into()))?;
        let previous_head = last.and_then(|l| l.head.as_deref());
        let run = BuildRun {
            run_id,
            timestamp,
            build_status: self.status,
            coverage: parsed.coverage,
            mutants: parsed.mutants,
            smells: parsed.smells,
            tests: parsed.tests,
            reports: parsed.reports,
            commits: commits_since(view.as_ref(), previous_head),
            actor,
        };
        Ok((run, view, parsed.warnings))
    }
}
