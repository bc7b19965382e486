//! LCOV tracefile records: `SF`, `FN`, `DA`, `BRDA`, `LF`/`LH`, `end_of_record`.

use std::collections::BTreeMap;

use super::IngestError;
use crate::model::{CoverageSnapshot, LineState, MethodSpan, SourceUnit, UnitCoverage};

#[derive(Default)]
struct Record {
    path: String,
    hits: BTreeMap<u32, u64>,
    branches: BTreeMap<u32, (u32, u32)>,
    functions: Vec<(u32, Option<u32>, String)>,
}

pub(super) fn parse(file: &str, text: &str) -> Result<CoverageSnapshot, IngestError> {
    let mut snapshot = CoverageSnapshot::default();
    let mut current: Option<Record> = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let malformed = |detail: &str| IngestError::Malformed {
            file: file.to_string(),
            line: lineno,
            token: line.to_string(),
            detail: detail.to_string(),
        };

        if line == "end_of_record" {
            let rec = current.take().ok_or_else(|| malformed("end_of_record without SF"))?;
            snapshot.insert(finish(rec));
            continue;
        }
        let (tag, value) = match line.split_once(':') {
            Some(parts) => parts,
            None => return Err(malformed("expected `TAG:value`")),
        };
        match tag {
            "SF" => {
                if current.is_some() {
                    return Err(malformed("SF inside an open record"));
                }
                if value.trim().is_empty() {
                    return Err(malformed("empty source path"));
                }
                current = Some(Record { path: value.trim().to_string(), ..Record::default() });
            }
            "DA" | "BRDA" | "FN" | "FNDA" | "FNF" | "FNH" | "LF" | "LH" | "BRF" | "BRH" => {
                let rec = current.as_mut().ok_or_else(|| malformed("record data before SF"))?;
                let fields: Vec<&str> = value.split(',').map(str::trim).collect();
                match tag {
                    "DA" => {
                        if fields.len() < 2 {
                            return Err(malformed("DA needs line,hits"));
                        }
                        let ln = line_number(fields[0]).ok_or_else(|| malformed("bad line number"))?;
                        let hits: u64 = fields[1].parse().map_err(|_| malformed("bad hit count"))?;
                        let entry = rec.hits.entry(ln).or_insert(0);
                        *entry = (*entry).max(hits);
                    }
                    "BRDA" => {
                        if fields.len() != 4 {
                            return Err(malformed("BRDA needs line,block,branch,taken"));
                        }
                        let ln = line_number(fields[0]).ok_or_else(|| malformed("bad line number"))?;
                        let taken = match fields[3] {
                            "-" => 0,
                            t => t.parse::<u64>().map_err(|_| malformed("bad branch count"))?,
                        };
                        let entry = rec.branches.entry(ln).or_insert((0, 0));
                        entry.1 += 1;
                        if taken > 0 {
                            entry.0 += 1;
                        }
                    }
                    "FN" => {
                        // FN:<start>,<name> or FN:<start>,<end>,<name>
                        let (start, end, name) = match fields.as_slice() {
                            [s, n] => (*s, None, *n),
                            [s, e, n] => (*s, Some(*e), *n),
                            _ => return Err(malformed("FN needs line,name")),
                        };
                        let start = line_number(start).ok_or_else(|| malformed("bad function line"))?;
                        let end = match end {
                            Some(e) => Some(line_number(e).ok_or_else(|| malformed("bad function end"))?),
                            None => None,
                        };
                        rec.functions.push((start, end, name.to_string()));
                    }
                    // summary counters are recomputed from DA/BRDA
                    _ => {
                        if !fields.iter().all(|f| !f.is_empty()) {
                            return Err(malformed("empty field"));
                        }
                    }
                }
            }
            // TN, VER and anything unknown carry nothing we use
            _ => {}
        }
    }
    if let Some(rec) = current {
        snapshot.insert(finish(rec));
    }
    Ok(snapshot)
}

fn line_number(s: &str) -> Option<u32> {
    s.parse::<u32>().ok().filter(|&n| n >= 1)
}

fn finish(rec: Record) -> UnitCoverage {
    let mut cov = UnitCoverage::new(SourceUnit::from_path(&rec.path));
    let lines: std::collections::BTreeSet<u32> = rec.hits.keys().chain(rec.branches.keys()).copied().collect();
    for ln in lines {
        let hits = rec.hits.get(&ln).copied().unwrap_or(0);
        cov.set_line(ln, LineState::from_counts(hits, rec.branches.get(&ln).copied()));
    }

    let mut functions = rec.functions;
    functions.sort_by_key(|f| f.0);
    let last_line = cov.lines.keys().next_back().copied().unwrap_or(0);
    for (i, (start, end, name)) in functions.iter().enumerate() {
        let end = end.unwrap_or_else(|| match functions.get(i + 1) {
            Some(next) if next.0 > *start => next.0 - 1,
            _ => last_line.max(*start),
        });
        cov.add_method(MethodSpan { name: name.clone(), signature: None, first_line: *start, last_line: end.max(*start) });
    }
    cov
}
