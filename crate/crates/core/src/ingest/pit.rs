//! PIT `mutations.xml`.

use std::collections::HashMap;

use super::{parse_xml, IngestError, Parsed};
use crate::model::{MutantRecord, MutantStatus, SourceUnit};

pub(super) fn parse(file: &str, text: &str, out: &mut Parsed<Vec<MutantRecord>>) -> Result<(), IngestError> {
    let doc = parse_xml(file, text)?;
    let mut ordinals: HashMap<(String, u32, String), usize> = HashMap::new();

    for (index, node) in doc.descendants().filter(|n| n.has_tag_name("mutation")).enumerate() {
        let missing = |field: &str| IngestError::MissingField { file: file.to_string(), index, field: field.to_string() };
        let child = |name: &str| {
            node.children()
                .find(|c| c.has_tag_name(name))
                .map(|c| c.text().unwrap_or("").trim().to_string())
        };

        let raw_status = node.attribute("status").ok_or_else(|| missing("status"))?;
        let source_file = child("sourceFile").filter(|s| !s.is_empty()).ok_or_else(|| missing("sourceFile"))?;
        let class = child("mutatedClass").filter(|s| !s.is_empty()).ok_or_else(|| missing("mutatedClass"))?;
        let line = child("lineNumber")
            .and_then(|s| s.parse::<u32>().ok())
            .filter(|&n| n >= 1)
            .ok_or_else(|| missing("lineNumber"))?;
        let mutator = child("mutator").filter(|s| !s.is_empty()).ok_or_else(|| missing("mutator"))?;
        let description = child("description").unwrap_or_default();
        let method = child("mutatedMethod").filter(|s| !s.is_empty());

        let status = match raw_status {
            "KILLED" => MutantStatus::Killed,
            "SURVIVED" => MutantStatus::Survived,
            "NO_COVERAGE" => MutantStatus::NoCoverage,
            other => {
                let msg = format!("{file}: mutation #{index} has status {other}, treated as survived");
                log::warn!("{msg}");
                out.warnings.push(msg);
                MutantStatus::Survived
            }
        };

        let outer = class.split('$').next().unwrap_or(&class).to_string();
        let path = match outer.rfind('.') {
            Some(dot) => format!("{}/{}", outer[..dot].replace('.', "/"), source_file),
            None => source_file.clone(),
        };
        let key = (class.clone(), line, mutator.clone());
        let ordinal = ordinals.entry(key).or_insert(0);
        let id = MutantRecord::make_id(&class, line, &mutator, *ordinal);
        *ordinal += 1;

        out.value.push(MutantRecord {
            id,
            source_unit: SourceUnit::new(&path, &outer),
            line,
            mutator,
            method,
            description,
            status,
        });
    }
    Ok(())
}
