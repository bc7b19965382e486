//! Cobertura XML: `coverage/packages/package/classes/class` with `lines/line`
//! elements carrying `hits`, `branch` and `condition-coverage`.

use roxmltree::Node;

use super::{parse_xml, IngestError};
use crate::model::{CoverageSnapshot, LineState, MethodSpan, SourceUnit, UnitCoverage};

pub(super) fn parse(file: &str, text: &str) -> Result<CoverageSnapshot, IngestError> {
    let doc = parse_xml(file, text)?;
    let root = doc.root_element();
    if root.tag_name().name() != "coverage" {
        return Err(IngestError::Malformed {
            file: file.to_string(),
            line: doc.text_pos_at(root.range().start).row as usize,
            token: root.tag_name().name().to_string(),
            detail: "root element is not <coverage>".into(),
        });
    }
    let malformed = |node: Node<'_, '_>, token: &str, detail: &str| IngestError::Malformed {
        file: file.to_string(),
        line: doc.text_pos_at(node.range().start).row as usize,
        token: token.to_string(),
        detail: detail.to_string(),
    };

    let mut snapshot = CoverageSnapshot::default();
    for class in root.descendants().filter(|n| n.has_tag_name("class")) {
        let name = class.attribute("name").ok_or_else(|| malformed(class, "class", "missing name"))?;
        let filename = class.attribute("filename").ok_or_else(|| malformed(class, "class", "missing filename"))?;
        // inner classes fold into their outer class
        let outer = name.split('$').next().unwrap_or(name);
        let mut cov = UnitCoverage::new(SourceUnit::new(filename, outer));

        for line in class.descendants().filter(|n| n.has_tag_name("line")) {
            let (number, state) = line_state(line, &malformed)?;
            cov.set_line(number, state);
        }
        for method in class.descendants().filter(|n| n.has_tag_name("method")) {
            let mname = method.attribute("name").ok_or_else(|| malformed(method, "method", "missing name"))?;
            let mut numbers = Vec::new();
            for line in method.descendants().filter(|n| n.has_tag_name("line")) {
                numbers.push(line_state(line, &malformed)?.0);
            }
            if let (Some(&first), Some(&last)) = (numbers.iter().min(), numbers.iter().max()) {
                cov.add_method(MethodSpan {
                    name: mname.to_string(),
                    signature: method.attribute("signature").map(str::to_string),
                    first_line: first,
                    last_line: last,
                });
            }
        }
        snapshot.insert(cov);
    }
    Ok(snapshot)
}

fn line_state<'a, 'i>(
    line: Node<'a, 'i>,
    malformed: &impl Fn(Node<'a, 'i>, &str, &str) -> IngestError,
) -> Result<(u32, LineState), IngestError> {
    let number = line
        .attribute("number")
        .and_then(|n| n.parse::<u32>().ok())
        .filter(|&n| n >= 1)
        .ok_or_else(|| malformed(line, line.attribute("number").unwrap_or("line"), "bad line number"))?;
    let hits = line
        .attribute("hits")
        .unwrap_or("0")
        .parse::<u64>()
        .map_err(|_| malformed(line, line.attribute("hits").unwrap_or(""), "bad hit count"))?;
    let branches = if line.attribute("branch") == Some("true") {
        match line.attribute("condition-coverage") {
            Some(cc) => Some(condition_coverage(cc).ok_or_else(|| malformed(line, cc, "bad condition-coverage"))?),
            None => None,
        }
    } else {
        None
    };
    Ok((number, LineState::from_counts(hits, branches)))
}

/// `"50% (1/2)"` → `(1, 2)`.
fn condition_coverage(s: &str) -> Option<(u32, u32)> {
    let inner = s.split_once('(')?.1.strip_suffix(')')?;
    let (taken, total) = inner.split_once('/')?;
    let (taken, total) = (taken.trim().parse().ok()?, total.trim().parse().ok()?);
    (taken <= total).then_some((taken, total))
}
