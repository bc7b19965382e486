//! JUnit-style `testsuite(s)/testcase` XML.

use super::{parse_xml, IngestError};
use crate::model::TestSnapshot;

pub(super) fn parse(file: &str, text: &str) -> Result<TestSnapshot, IngestError> {
    let doc = parse_xml(file, text)?;
    let root = doc.root_element().tag_name().name();
    if root != "testsuite" && root != "testsuites" {
        return Err(IngestError::Xml { file: file.to_string(), detail: format!("unexpected root <{root}>") });
    }
    let mut snap = TestSnapshot::default();
    for case in doc.descendants().filter(|n| n.has_tag_name("testcase")) {
        snap.test_count += 1;
        if case.children().any(|c| c.has_tag_name("failure") || c.has_tag_name("error")) {
            snap.failing_count += 1;
        }
    }
    Ok(snap)
}
