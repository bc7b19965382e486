//! Parses every report family from the bundled fixtures and prints what
//! the engine sees.
//!
//! ```text
//! cargo run --example parse_reports
//! ```

use std::path::PathBuf;

use covquest::ingest::{parse_coverage, parse_findings, parse_mutations, parse_tests, Artifact, CoverageFile};

fn fixture(rel: &str) -> Artifact {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel);
    Artifact::read(&path).expect("fixture readable")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let coverage = parse_coverage(&[
        CoverageFile::sniffed(fixture("reports/lcov.info"))?,
        CoverageFile::sniffed(fixture("reports/cobertura.xml"))?,
    ])?;
    println!("coverage ({} units):", coverage.units.len());
    for (name, unit) in &coverage.units {
        let f = unit.line_coverage();
        println!("  {name:<28} {}/{} lines hit, {} methods", f.covered, f.total, unit.methods.len());
    }

    let mutants = parse_mutations(&[fixture("reports/mutations.xml")])?;
    println!("mutants ({}):", mutants.value.len());
    for m in &mutants.value {
        println!("  {:?} {}:{} {}", m.status, m.source_unit.unit_name, m.line, m.description);
    }
    for w in &mutants.warnings {
        println!("  warning: {w}");
    }

    let findings = parse_findings(&[fixture("reports/findings.sarif")])?;
    println!("findings ({}):", findings.value.len());
    for f in &findings.value {
        println!("  {} {}:{}-{}", f.rule_id, f.source_unit.path, f.start_line, f.end_line);
    }

    let tests = parse_tests(&[fixture("reports/TEST-com.acme.CartTest.xml"), fixture("reports/TEST-com.acme.PriceTest.xml")])?;
    println!("tests: {} run, {} failing", tests.test_count, tests.failing_count);

    match parse_coverage(&[CoverageFile::sniffed(fixture("malformed/lcov-bad-hits.info"))?]) {
        Err(e) => println!("malformed input is reported as: {e}"),
        Ok(_) => unreachable!("fixture is malformed"),
    }
    Ok(())
}
