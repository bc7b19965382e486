//! Parsers for the report artifacts a build leaves behind.
//!
//! Coverage comes as LCOV tracefiles or Cobertura XML, mutants as PIT
//! `mutations.xml`, static-analysis findings as SARIF 2.1.0 and test results
//! as JUnit-style `testsuite`/`testcase` XML. Every parser is pure: the same
//! bytes always produce the same snapshot.

mod cobertura;
mod junit;
mod lcov;
mod pit;
mod sarif;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{paths_match, CoverageSnapshot, MutantRecord, ReportKinds, SmellFinding, SourceUnit, TestSnapshot};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("{file}: payload is not valid UTF-8")]
    Utf8 { file: String },
    #[error("{file}:{line}: malformed record near `{token}`: {detail}")]
    Malformed { file: String, line: usize, token: String, detail: String },
    #[error("{file}: unknown coverage format `{tag}`")]
    UnknownFormat { file: String, tag: String },
    #[error("{file}: invalid XML: {detail}")]
    Xml { file: String, detail: String },
    #[error("{file}: element #{index}: missing `{field}`")]
    MissingField { file: String, index: usize, field: String },
    #[error("{file}: not a SARIF log, missing `{path}`")]
    MissingKey { file: String, path: String },
    #[error("{file}: invalid JSON: {detail}")]
    Json { file: String, detail: String },
    #[error("{file}: {detail}")]
    Io { file: String, detail: String },
}

impl IngestError {
    pub fn file(&self) -> &str {
        match self {
            IngestError::Utf8 { file }
            | IngestError::Malformed { file, .. }
            | IngestError::UnknownFormat { file, .. }
            | IngestError::Xml { file, .. }
            | IngestError::MissingField { file, .. }
            | IngestError::MissingKey { file, .. }
            | IngestError::Json { file, .. }
            | IngestError::Io { file, .. } => file,
        }
    }
}

/// A named report payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: impl Into<Vec<u8>>) -> Self {
        Self { name: name.into(), bytes: bytes.into() }
    }

    pub fn read(path: &Path) -> Result<Self, IngestError> {
        let name = path.display().to_string();
        std::fs::read(path)
            .map(|bytes| Artifact { name: name.clone(), bytes })
            .map_err(|e| IngestError::Io { file: name, detail: e.to_string() })
    }

    pub fn text(&self) -> Result<&str, IngestError> {
        std::str::from_utf8(&self.bytes).map_err(|_| IngestError::Utf8 { file: self.name.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverageFormat {
    Lcov,
    Cobertura,
}

impl FromStr for CoverageFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lcov" => Ok(CoverageFormat::Lcov),
            "cobertura" => Ok(CoverageFormat::Cobertura),
            other => Err(other.to_string()),
        }
    }
}

impl fmt::Display for CoverageFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoverageFormat::Lcov => "lcov",
            CoverageFormat::Cobertura => "cobertura",
        })
    }
}

/// A coverage payload with its format fixed once, either by the caller or
/// by sniffing the content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageFile {
    pub format: CoverageFormat,
    pub artifact: Artifact,
}

impl CoverageFile {
    pub fn new(format: CoverageFormat, artifact: Artifact) -> Self {
        Self { format, artifact }
    }

    /// Accepts a format tag string such as `"lcov"`.
    pub fn tagged(tag: &str, artifact: Artifact) -> Result<Self, IngestError> {
        tag.parse()
            .map(|format| Self { format, artifact: artifact.clone() })
            .map_err(|tag| IngestError::UnknownFormat { file: artifact.name, tag })
    }

    /// `SF:` records mean LCOV, a `<coverage` root means Cobertura.
    pub fn sniffed(artifact: Artifact) -> Result<Self, IngestError> {
        let format = sniff_format(artifact.text()?)
            .ok_or_else(|| IngestError::UnknownFormat { file: artifact.name.clone(), tag: "?".into() })?;
        Ok(Self { format, artifact })
    }
}

fn sniff_format(text: &str) -> Option<CoverageFormat> {
    if text.contains("<coverage") {
        return Some(CoverageFormat::Cobertura);
    }
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with("TN:"))?;
    first.starts_with("SF:").then_some(CoverageFormat::Lcov)
}

/// Result plus non-fatal diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

/// Union of all coverage files; overlapping lines merge by max.
pub fn parse_coverage(files: &[CoverageFile]) -> Result<CoverageSnapshot, IngestError> {
    let mut snapshot = CoverageSnapshot::default();
    for file in files {
        let text = file.artifact.text()?;
        let part = match file.format {
            CoverageFormat::Lcov => lcov::parse(&file.artifact.name, text)?,
            CoverageFormat::Cobertura => cobertura::parse(&file.artifact.name, text)?,
        };
        snapshot.merge(&part);
    }
    Ok(snapshot)
}

pub fn parse_mutations(files: &[Artifact]) -> Result<Parsed<Vec<MutantRecord>>, IngestError> {
    let mut out = Parsed { value: Vec::new(), warnings: Vec::new() };
    for file in files {
        pit::parse(&file.name, file.text()?, &mut out)?;
    }
    Ok(out)
}

pub fn parse_findings(files: &[Artifact]) -> Result<Parsed<Vec<SmellFinding>>, IngestError> {
    let mut out = Parsed { value: Vec::new(), warnings: Vec::new() };
    for file in files {
        sarif::parse(&file.name, file.text()?, &mut out)?;
    }
    Ok(out)
}

pub fn parse_tests(files: &[Artifact]) -> Result<TestSnapshot, IngestError> {
    let mut total = TestSnapshot::default();
    for file in files {
        let part = junit::parse(&file.name, file.text()?)?;
        total.test_count += part.test_count;
        total.failing_count += part.failing_count;
    }
    Ok(total)
}

/// Rebinds mutants and findings to the coverage unit of the same file, since
/// each report names files its own way.
pub fn link_units(coverage: &CoverageSnapshot, mutants: &mut [MutantRecord], findings: &mut [SmellFinding]) {
    let resolve = |unit: &SourceUnit| -> Option<SourceUnit> {
        if let Some(u) = coverage.units.get(&unit.unit_name) {
            return Some(u.unit.clone());
        }
        coverage
            .units
            .values()
            .filter(|u| paths_match(&u.unit.path, &unit.path))
            .max_by_key(|u| (u.unit.path.len(), std::cmp::Reverse(u.unit.unit_name.clone())))
            .map(|u| u.unit.clone())
    };
    for m in mutants.iter_mut() {
        if let Some(u) = resolve(&m.source_unit) {
            m.source_unit = u;
        }
    }
    for f in findings.iter_mut() {
        if let Some(u) = resolve(&f.source_unit) {
            f.source_unit = u;
        }
    }
}

/// All report payloads of one build.
#[derive(Debug, Clone, Default)]
pub struct ArtifactBundle {
    pub coverage: Vec<CoverageFile>,
    pub mutations: Vec<Artifact>,
    pub findings: Vec<Artifact>,
    pub tests: Vec<Artifact>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedReports {
    pub coverage: CoverageSnapshot,
    pub mutants: Vec<MutantRecord>,
    pub smells: Vec<SmellFinding>,
    pub tests: TestSnapshot,
    pub reports: ReportKinds,
    pub warnings: Vec<String>,
}

impl ArtifactBundle {
    /// Parses every family, collecting one diagnostic per failing file.
    pub fn parse(&self) -> Result<ParsedReports, Vec<IngestError>> {
        let mut errors = Vec::new();
        let mut coverage = CoverageSnapshot::default();
        for f in &self.coverage {
            match parse_coverage(std::slice::from_ref(f)) {
                Ok(part) => coverage.merge(&part),
                Err(e) => errors.push(e),
            }
        }
        let mut warnings = Vec::new();
        let mut mutants = Vec::new();
        for f in &self.mutations {
            match parse_mutations(std::slice::from_ref(f)) {
                Ok(p) => {
                    mutants.extend(p.value);
                    warnings.extend(p.warnings);
                }
                Err(e) => errors.push(e),
            }
        }
        let mut smells = Vec::new();
        for f in &self.findings {
            match parse_findings(std::slice::from_ref(f)) {
                Ok(p) => {
                    smells.extend(p.value);
                    warnings.extend(p.warnings);
                }
                Err(e) => errors.push(e),
            }
        }
        let mut tests = TestSnapshot::default();
        for f in &self.tests {
            match parse_tests(std::slice::from_ref(f)) {
                Ok(t) => {
                    tests.test_count += t.test_count;
                    tests.failing_count += t.failing_count;
                }
                Err(e) => errors.push(e),
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        link_units(&coverage, &mut mutants, &mut smells);
        Ok(ParsedReports {
            coverage,
            mutants,
            smells,
            tests,
            reports: ReportKinds {
                coverage: !self.coverage.is_empty(),
                mutations: !self.mutations.is_empty(),
                findings: !self.findings.is_empty(),
                tests: !self.tests.is_empty(),
            },
            warnings,
        })
    }
}

/// Shared helper for the XML parsers. Cobertura reports carry a DOCTYPE, so
/// inline DTDs are accepted; external ones are never fetched.
pub(crate) fn parse_xml<'a>(file: &str, text: &'a str) -> Result<roxmltree::Document<'a>, IngestError> {
    let opt = roxmltree::ParsingOptions { allow_dtd: true, ..roxmltree::ParsingOptions::default() };
    roxmltree::Document::parse_with_options(text, opt)
        .map_err(|e| IngestError::Xml { file: file.to_string(), detail: e.to_string() })
}
