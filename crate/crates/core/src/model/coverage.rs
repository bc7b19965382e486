//! Coverage snapshot types: per-unit line states, method spans and exact
//! coverage fractions.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SourceUnit;

/// An exact `covered / total` ratio. A zero denominator reads as 1 (nothing
/// to cover means fully covered).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoverageFraction {
    pub covered: u64,
    pub total: u64,
}

impl CoverageFraction {
    pub const FULL: CoverageFraction = CoverageFraction { covered: 1, total: 1 };

    pub fn new(covered: u64, total: u64) -> Self {
        debug_assert!(covered <= total);
        Self { covered, total }
    }

    fn parts(&self) -> (u128, u128) {
        if self.total == 0 {
            (1, 1)
        } else {
            (u128::from(self.covered), u128::from(self.total))
        }
    }

    pub fn is_full(&self) -> bool {
        let (n, d) = self.parts();
        n == d
    }

    pub fn as_f64(&self) -> f64 {
        let (n, d) = self.parts();
        n as f64 / d as f64
    }
}

impl PartialEq for CoverageFraction {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for CoverageFraction {}

impl PartialOrd for CoverageFraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CoverageFraction {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = self.parts();
        let (c, d) = other.parts();
        (a * d).cmp(&(c * b))
    }
}

impl fmt::Display for CoverageFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} ({:.1}%)", self.covered, self.total, self.as_f64() * 100.0)
    }
}

/// Coverage state of one executable line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum LineState {
    Covered,
    Uncovered,
    PartiallyCovered { branch_covered: u32, branch_total: u32 },
}

impl LineState {
    /// Builds a state from line hits plus optional `(taken, total)` branch data.
    pub fn from_counts(hits: u64, branches: Option<(u32, u32)>) -> Self {
        match branches {
            Some((taken, total)) if taken > 0 && taken < total => LineState::PartiallyCovered {
                branch_covered: taken,
                branch_total: total,
            },
            _ if hits > 0 => LineState::Covered,
            Some((taken, total)) if total > 0 && taken == total => LineState::Covered,
            _ => LineState::Uncovered,
        }
    }

    /// Covered or partially covered.
    pub fn is_hit(&self) -> bool {
        !matches!(self, LineState::Uncovered)
    }

    pub fn is_fully_covered(&self) -> bool {
        matches!(self, LineState::Covered)
    }

    /// Branches taken, counting a fully covered line as "all of them".
    pub fn branches_taken(&self) -> Option<u32> {
        match self {
            LineState::PartiallyCovered { branch_covered, .. } => Some(*branch_covered),
            _ => None,
        }
    }

    fn rank(&self) -> (u8, u64, u64) {
        match *self {
            LineState::Uncovered => (0, 0, 0),
            LineState::PartiallyCovered { branch_covered, branch_total } => {
                (1, u64::from(branch_covered), u64::from(branch_total))
            }
            LineState::Covered => (2, 0, 0),
        }
    }

    /// The "more covered" of two states, used when reports overlap.
    pub fn merge_max(self, other: LineState) -> LineState {
        match (self, other) {
            (
                LineState::PartiallyCovered { branch_covered: a, branch_total: at },
                LineState::PartiallyCovered { branch_covered: b, branch_total: bt },
            ) if at != bt => {
                // compare taken ratios, larger branch total wins ties
                let lhs = u64::from(a) * u64::from(bt);
                let rhs = u64::from(b) * u64::from(at);
                match lhs.cmp(&rhs) {
                    Ordering::Greater => self,
                    Ordering::Less => other,
                    Ordering::Equal if at > bt => self,
                    Ordering::Equal => other,
                }
            }
            _ => {
                if self.rank() >= other.rank() {
                    self
                } else {
                    other
                }
            }
        }
    }
}

/// A method's line span inside a unit, taken from the coverage report.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodSpan {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<String>,
    pub first_line: u32,
    pub last_line: u32,
}

impl MethodSpan {
    /// `name` or `name(signature)`.
    pub fn display_name(&self) -> String {
        match &self.signature {
            Some(sig) => format!("{}{}", self.name, sig),
            None => self.name.clone(),
        }
    }

    pub fn same_method(&self, other: &MethodSpan) -> bool {
        self.name == other.name && self.signature == other.signature
    }
}

/// Coverage data of a single source unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitCoverage {
    pub unit: SourceUnit,
    #[serde(with = "line_entries")]
    pub lines: BTreeMap<u32, LineState>,
    #[serde(default)]
    pub methods: Vec<MethodSpan>,
}

impl UnitCoverage {
    pub fn new(unit: SourceUnit) -> Self {
        Self { unit, lines: BTreeMap::new(), methods: Vec::new() }
    }

    pub fn line_coverage(&self) -> CoverageFraction {
        fraction_of(self.lines.values())
    }

    pub fn method_coverage(&self, method: &MethodSpan) -> CoverageFraction {
        fraction_of(self.lines.range(method.first_line..=method.last_line).map(|(_, s)| s))
    }

    pub fn find_method(&self, method: &MethodSpan) -> Option<&MethodSpan> {
        self.methods.iter().find(|m| m.same_method(method))
    }

    pub fn set_line(&mut self, line: u32, state: LineState) {
        self.lines
            .entry(line)
            .and_modify(|s| *s = s.merge_max(state))
            .or_insert(state);
    }

    pub fn add_method(&mut self, method: MethodSpan) {
        match self.methods.iter_mut().find(|m| m.same_method(&method)) {
            Some(existing) => {
                existing.first_line = existing.first_line.min(method.first_line);
                existing.last_line = existing.last_line.max(method.last_line);
            }
            None => self.methods.push(method),
        }
        self.methods.sort();
    }

    /// Folds `other` into `self` with merge-by-max on every line.
    pub fn merge(&mut self, other: &UnitCoverage) {
        for (&line, &state) in &other.lines {
            self.set_line(line, state);
        }
        for m in &other.methods {
            self.add_method(m.clone());
        }
    }
}

fn fraction_of<'a>(states: impl Iterator<Item = &'a LineState>) -> CoverageFraction {
    let (mut hit, mut total) = (0u64, 0u64);
    for s in states {
        total += 1;
        if s.is_hit() {
            hit += 1;
        }
    }
    CoverageFraction::new(hit, total)
}

/// Line and branch coverage of one build, keyed by unit name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageSnapshot {
    pub units: BTreeMap<String, UnitCoverage>,
}

impl CoverageSnapshot {
    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn unit(&self, unit_name: &str) -> Option<&UnitCoverage> {
        self.units.get(unit_name)
    }

    /// Looks a unit up by name first, then by file path.
    pub fn find(&self, unit: &SourceUnit) -> Option<&UnitCoverage> {
        self.units
            .get(&unit.unit_name)
            .or_else(|| self.units.values().find(|u| super::paths_match(&u.unit.path, &unit.path)))
    }

    pub fn insert(&mut self, cov: UnitCoverage) {
        match self.units.get_mut(&cov.unit.unit_name) {
            Some(existing) => existing.merge(&cov),
            None => {
                self.units.insert(cov.unit.unit_name.clone(), cov);
            }
        }
    }

    pub fn merge(&mut self, other: &CoverageSnapshot) {
        for cov in other.units.values() {
            self.insert(cov.clone());
        }
    }

    /// Project-wide line coverage; an empty snapshot counts as fully covered.
    pub fn project_line_coverage(&self) -> CoverageFraction {
        fraction_of(self.units.values().flat_map(|u| u.lines.values()))
    }

    pub fn tracked_lines(&self) -> usize {
        self.units.values().map(|u| u.lines.len()).sum()
    }
}

/// Serializes a line map as a list of `{line, state...}` entries so the
/// documents stay readable and avoid numeric map keys.
mod line_entries {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::LineState;

    #[derive(Serialize, Deserialize)]
    struct Entry {
        line: u32,
        #[serde(flatten)]
        state: LineState,
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<u32, LineState>, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = map.iter().map(|(&line, &state)| Entry { line, state }).collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, LineState>, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        Ok(entries.into_iter().map(|e| (e.line, e.state)).collect())
    }
}
