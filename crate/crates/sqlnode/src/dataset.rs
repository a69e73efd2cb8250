//! Dataset records: one JSON object per line, optionally preceded by a
//! `{"format": "sqlnode-dataset/1"}` header.
//!
//! ```json
//! {"query_id": "q1", "db_id": "company", "question": "...", "generated_sql": "SELECT ...",
//!  "gold_sql": "SELECT ...", "token_logprobs": [[0, 6, -0.01], [7, 11, -0.4]]}
//! ```
//!
//! Token spans are byte offsets into `generated_sql`.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sqlnode_core::ast::Span;
use sqlnode_core::features::TokenLogprob;

use crate::jsonl::{header_format, DATASET_FORMAT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub query_id: String,
    pub db_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    pub generated_sql: String,
    pub gold_sql: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprobs: Option<Vec<(usize, usize, f64)>>,
}

impl DatasetRecord {
    pub fn validate(&self) -> Result<(), String> {
        for (field, value) in [("query_id", &self.query_id), ("db_id", &self.db_id)] {
            if value.is_empty() {
                return Err(format!("empty {field}"));
            }
        }
        for (field, value) in [("generated_sql", &self.generated_sql), ("gold_sql", &self.gold_sql)] {
            if value.trim().is_empty() {
                return Err(format!("empty {field}"));
            }
        }
        let len = self.generated_sql.len();
        for (i, &(start, end, lp)) in self.token_logprobs.iter().flatten().enumerate() {
            if start >= end || end > len {
                return Err(format!("token_logprobs[{i}]: span {start}..{end} outside generated_sql (length {len})"));
            }
            if !lp.is_finite() {
                return Err(format!("token_logprobs[{i}]: non-finite logprob"));
            }
        }
        Ok(())
    }

    pub fn tokens(&self) -> Option<Vec<TokenLogprob>> {
        self.token_logprobs.as_ref().map(|ts| {
            ts.iter().map(|&(s, e, logprob)| TokenLogprob { span: Span::new(s, e), logprob }).collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MalformedLine {
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for MalformedLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub records: Vec<DatasetRecord>,
    pub malformed: Vec<MalformedLine>,
}

pub fn load_dataset(path: &Path) -> io::Result<Dataset> {
    Ok(parse_dataset(&fs::read_to_string(path)?))
}

pub fn parse_dataset(text: &str) -> Dataset {
    let mut out = Dataset::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 {
            if let Some(format) = header_format(line) {
                if format != DATASET_FORMAT {
                    out.malformed.push(MalformedLine { line: 1, reason: format!("unsupported format `{format}`") });
                }
                continue;
            }
        }
        let parsed = serde_json::from_str::<DatasetRecord>(line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.validate().map(|()| r));
        match parsed {
            Ok(r) => out.records.push(r),
            Err(reason) => out.malformed.push(MalformedLine { line: line_no, reason }),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{"query_id":"q1","db_id":"d","generated_sql":"SELECT a FROM t","gold_sql":"SELECT a FROM t"}"#;

    #[test]
    fn three_valid_lines() {
        let text = [GOOD, &GOOD.replace("q1", "q2"), &GOOD.replace("q1", "q3")].join("\n");
        let ds = parse_dataset(&text);
        assert_eq!(ds.records.len(), 3);
        assert!(ds.malformed.is_empty());
    }

    #[test]
    fn missing_gold_is_reported() {
        let bad = r#"{"query_id":"q2","db_id":"d","generated_sql":"SELECT 1"}"#;
        let ds = parse_dataset(&format!("{{\"format\":\"{DATASET_FORMAT}\"}}\n{GOOD}\n{bad}\n"));
        assert_eq!(ds.records.len(), 1);
        assert_eq!(ds.malformed.len(), 1);
        assert_eq!(ds.malformed[0].line, 3);
        assert!(ds.malformed[0].reason.contains("gold_sql"), "{}", ds.malformed[0]);
    }

    #[test]
    fn token_spans_checked_against_generated_sql() {
        // "SELECT a FROM t" is 15 bytes
        let ok = GOOD.replace("}", r#","token_logprobs":[[0,6,-0.1],[14,15,-2.0]]}"#);
        let past_end = GOOD.replace("}", r#","token_logprobs":[[0,6,-0.1],[14,16,-2.0]]}"#);
        let empty = GOOD.replace("}", r#","token_logprobs":[[3,3,-0.1]]}"#);
        let ds = parse_dataset(&[ok.as_str(), &past_end, &empty].join("\n"));
        assert_eq!(ds.records.len(), 1);
        assert_eq!(ds.records[0].tokens().unwrap()[1].span, Span::new(14, 15));
        assert_eq!(ds.malformed.iter().map(|m| m.line).collect::<Vec<_>>(), [2, 3]);
        assert!(ds.malformed[0].reason.contains("14..16"));
    }

    #[test]
    fn foreign_header_flagged() {
        let ds = parse_dataset(&format!("{{\"format\":\"other/2\"}}\n{GOOD}"));
        assert_eq!(ds.records.len(), 1);
        assert_eq!(ds.malformed[0].line, 1);
    }
}
