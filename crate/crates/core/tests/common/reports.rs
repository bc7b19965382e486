//! Hand-tallied contents of the committed report fixtures.

use covquest::ingest::{
    parse_coverage, parse_findings, parse_mutations, parse_tests, Artifact, CoverageFile, CoverageFormat, IngestError,
};
use covquest::model::{
    CoverageSnapshot, LineState, MethodSpan, MutantRecord, MutantStatus, SmellFinding, SourceUnit, TestSnapshot,
    UnitCoverage,
};

use super::fixture;

use LineState::{Covered as C, Uncovered as U};

fn partial(taken: u32, total: u32) -> LineState {
    LineState::PartiallyCovered { branch_covered: taken, branch_total: total }
}

fn unit(u: SourceUnit, lines: &[(u32, LineState)], methods: &[(&str, Option<&str>, u32, u32)]) -> UnitCoverage {
    let mut cov = UnitCoverage::new(u);
    for &(l, s) in lines {
        cov.set_line(l, s);
    }
    for &(name, sig, first, last) in methods {
        cov.add_method(MethodSpan { name: name.into(), signature: sig.map(str::to_string), first_line: first, last_line: last });
    }
    cov
}

pub fn artifact(rel: &str) -> Artifact {
    Artifact::read(&fixture(rel)).expect("fixture readable")
}

pub fn expected_lcov() -> CoverageSnapshot {
    let mut s = CoverageSnapshot::default();
    s.insert(unit(
        SourceUnit::from_path("src/main/java/com/acme/Cart.java"),
        &[(1, C), (3, C), (4, partial(1, 2)), (5, C), (7, U), (8, U), (9, U)],
        &[("add", None, 3, 5), ("remove", None, 7, 9)],
    ));
    s.insert(unit(SourceUnit::from_path("src/main/java/com/acme/Price.java"), &[(2, C), (3, C), (4, U)], &[("net", None, 2, 4)]));
    s
}

pub fn expected_cobertura() -> CoverageSnapshot {
    let mut s = CoverageSnapshot::default();
    s.insert(unit(
        SourceUnit::new("com/acme/Inventory.java", "com.acme.Inventory"),
        &[(2, C), (4, C), (5, partial(1, 2)), (8, U), (9, U), (10, U), (14, C)],
        &[("stock", Some("(Ljava/lang/String;)I"), 4, 5), ("restock", Some("(Ljava/lang/String;I)V"), 8, 10)],
    ));
    s.insert(unit(SourceUnit::new("com/acme/Ledger.java", "com.acme.Ledger"), &[(3, C), (4, C)], &[]));
    s
}

fn record(class: &str, path: &str, line: u32, mutator: &str, ordinal: usize, method: &str, status: MutantStatus, d: &str) -> MutantRecord {
    let outer = class.split('$').next().unwrap();
    MutantRecord {
        id: format!("{class}:{line}:{mutator}:{ordinal}"),
        source_unit: SourceUnit::new(path, outer),
        line,
        mutator: format!(
            "org.pitest.mutationtest.engine.gregor.mutators.{}{mutator}",
            if mutator == "PrimitiveReturnsMutator" { "returns." } else { "" }
        ),
        method: Some(method.into()),
        description: d.into(),
        status,
    }
}

pub fn expected_mutants() -> Vec<MutantRecord> {
    use MutantStatus::*;
    let cart = "com/acme/Cart.java";
    vec![
        record("com.acme.Cart", cart, 4, "MathMutator", 0, "add", Killed, "Replaced integer addition with subtraction"),
        record("com.acme.Cart", cart, 4, "ConditionalsBoundaryMutator", 0, "add", Survived, "changed conditional boundary"),
        record("com.acme.Cart", cart, 8, "VoidMethodCallMutator", 0, "remove", NoCoverage, "removed call to com/acme/Cart::log"),
        record("com.acme.Cart", cart, 4, "ConditionalsBoundaryMutator", 1, "add", Survived, "changed conditional boundary"),
        record("com.acme.Cart$Line", cart, 12, "NegateConditionalsMutator", 0, "qty", Survived, "negated conditional"),
        record(
            "com.acme.Price",
            "com/acme/Price.java",
            3,
            "PrimitiveReturnsMutator",
            0,
            "net",
            Killed,
            "replaced int return with 0 for com/acme/Price::net",
        ),
    ]
}

pub fn expected_findings() -> Vec<SmellFinding> {
    let f = |rule: &str, path: &str, start: u32, end: u32, msg: &str| SmellFinding {
        rule_id: rule.into(),
        source_unit: SourceUnit::from_path(path),
        start_line: start,
        end_line: end,
        message: msg.into(),
    };
    vec![
        f("AvoidLiteralsInIfCondition", "src/main/java/com/acme/Cart.java", 4, 4, "Avoid using literals in if statements"),
        f("CognitiveComplexity", "src/main/java/com/acme/Price.java", 2, 9, "The method 'net()' has a cognitive complexity of 16"),
        f("UnusedImports", "src/main/java/com/acme/Cart.java", 1, 1, "Unused import - java.util.List."),
    ]
}

pub const EXPECTED_TESTS: TestSnapshot = TestSnapshot { test_count: 7, failing_count: 2 };

/// Each malformed fixture and the diagnostic it must produce.
pub fn malformed_cases() -> Vec<(&'static str, Result<(), IngestError>)> {
    let lcov = |rel: &str| parse_coverage(&[CoverageFile::new(CoverageFormat::Lcov, artifact(rel))]).map(drop);
    let cob = |rel: &str| parse_coverage(&[CoverageFile::new(CoverageFormat::Cobertura, artifact(rel))]).map(drop);
    vec![
        ("malformed/lcov-bad-hits.info", lcov("malformed/lcov-bad-hits.info")),
        ("malformed/lcov-not-utf8.info", lcov("malformed/lcov-not-utf8.info")),
        ("malformed/cobertura-bad-condition.xml", cob("malformed/cobertura-bad-condition.xml")),
        ("malformed/cobertura-truncated.xml", cob("malformed/cobertura-truncated.xml")),
        ("malformed/mutations-missing-line.xml", parse_mutations(&[artifact("malformed/mutations-missing-line.xml")]).map(drop)),
        ("malformed/findings-no-runs.sarif", parse_findings(&[artifact("malformed/findings-no-runs.sarif")]).map(drop)),
        ("malformed/findings-truncated.sarif", parse_findings(&[artifact("malformed/findings-truncated.sarif")]).map(drop)),
        ("malformed/TEST-unclosed.xml", parse_tests(&[artifact("malformed/TEST-unclosed.xml")]).map(drop)),
        ("malformed/TEST-wrong-root.xml", parse_tests(&[artifact("malformed/TEST-wrong-root.xml")]).map(drop)),
    ]
}

/// Every well-formed fixture parses to its tally and every malformed one
/// fails naming its own file.
pub fn check_all() -> Result<String, String> {
    let lcov = parse_coverage(&[CoverageFile::sniffed(artifact("reports/lcov.info")).map_err(|e| e.to_string())?])
        .map_err(|e| e.to_string())?;
    if lcov != expected_lcov() {
        return Err(format!("lcov.info: got {lcov:?}"));
    }
    let cob = parse_coverage(&[CoverageFile::sniffed(artifact("reports/cobertura.xml")).map_err(|e| e.to_string())?])
        .map_err(|e| e.to_string())?;
    if cob != expected_cobertura() {
        return Err(format!("cobertura.xml: got {cob:?}"));
    }
    let mutants = parse_mutations(&[artifact("reports/mutations.xml")]).map_err(|e| e.to_string())?;
    if mutants.value != expected_mutants() || mutants.warnings.len() != 1 {
        return Err(format!("mutations.xml: got {:?} / {:?}", mutants.value, mutants.warnings));
    }
    let findings = parse_findings(&[artifact("reports/findings.sarif")]).map_err(|e| e.to_string())?;
    if findings.value != expected_findings() || findings.warnings.len() != 1 {
        return Err(format!("findings.sarif: got {:?} / {:?}", findings.value, findings.warnings));
    }
    let tests = parse_tests(&[artifact("reports/TEST-com.acme.CartTest.xml"), artifact("reports/TEST-com.acme.PriceTest.xml")])
        .map_err(|e| e.to_string())?;
    if tests != EXPECTED_TESTS {
        return Err(format!("junit: got {tests:?}"));
    }
    let cases = malformed_cases();
    for (rel, result) in &cases {
        match result {
            Ok(()) => return Err(format!("{rel} parsed without error")),
            Err(e) if !e.file().ends_with(rel) || !e.to_string().contains(rel) => {
                return Err(format!("{rel}: diagnostic does not name the file: {e}"))
            }
            Err(_) => {}
        }
    }
    Ok(format!("5 report formats match their tallies, {} malformed files named", cases.len()))
}
