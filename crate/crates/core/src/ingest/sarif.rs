//! The subset of SARIF 2.1.0 that carries located findings.

use serde_json::Value;

use super::{IngestError, Parsed};
use crate::model::{SmellFinding, SourceUnit};

pub(super) fn parse(file: &str, text: &str, out: &mut Parsed<Vec<SmellFinding>>) -> Result<(), IngestError> {
    let log: Value =
        serde_json::from_str(text).map_err(|e| IngestError::Json { file: file.to_string(), detail: e.to_string() })?;
    let runs = log
        .get("runs")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::MissingKey { file: file.to_string(), path: "runs".into() })?;

    for (r, run) in runs.iter().enumerate() {
        let Some(results) = run.get("results") else { continue };
        let results = results
            .as_array()
            .ok_or_else(|| IngestError::MissingKey { file: file.to_string(), path: format!("runs[{r}].results[]") })?;
        for (i, result) in results.iter().enumerate() {
            match finding(result) {
                Some(f) => out.value.push(f),
                None => {
                    let msg = format!("{file}: runs[{r}].results[{i}] has no located region, dropped");
                    log::warn!("{msg}");
                    out.warnings.push(msg);
                }
            }
        }
    }
    Ok(())
}

fn finding(result: &Value) -> Option<SmellFinding> {
    let rule_id = result
        .get("ruleId")
        .or_else(|| result.pointer("/rule/id"))
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())?;
    let message = result.pointer("/message/text").and_then(Value::as_str).unwrap_or_default();
    let physical = result.pointer("/locations/0/physicalLocation")?;
    let uri = physical.pointer("/artifactLocation/uri").and_then(Value::as_str)?;
    let region = physical.get("region")?;
    let start = region.get("startLine").and_then(Value::as_u64).filter(|&l| l >= 1)? as u32;
    let end = region.get("endLine").and_then(Value::as_u64).map_or(start, |e| e as u32).max(start);
    let path = uri.strip_prefix("file://").unwrap_or(uri);

    Some(SmellFinding {
        rule_id: rule_id.to_string(),
        source_unit: SourceUnit::from_path(path),
        start_line: start,
        end_line: end,
        message: message.to_string(),
    })
}
