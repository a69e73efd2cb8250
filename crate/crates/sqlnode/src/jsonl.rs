//! Line-delimited JSON with a leading header line naming the format.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

pub const DATASET_FORMAT: &str = "sqlnode-dataset/1";
pub const LABELS_FORMAT: &str = "sqlnode-labels/1";
pub const FEATURES_FORMAT: &str = "sqlnode-features/1";
pub const PREDICTIONS_FORMAT: &str = "sqlnode-predictions/1";
pub const SKIPPED_FORMAT: &str = "sqlnode-skipped/1";
pub const REPORT_FORMAT: &str = "sqlnode-report/1";

#[derive(Debug, Serialize)]
struct Header<'a, E: Serialize> {
    format: &'a str,
    #[serde(flatten)]
    extra: E,
}

/// Writes a header line, then one line per record.
pub fn write_jsonl<T: Serialize, E: Serialize>(
    path: &Path,
    format: &str,
    extra: E,
    records: impl IntoIterator<Item = T>,
) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_lines(&mut out, format, extra, records)?;
    out.flush()
}

pub fn write_lines<W: Write, T: Serialize, E: Serialize>(
    out: &mut W,
    format: &str,
    extra: E,
    records: impl IntoIterator<Item = T>,
) -> io::Result<()> {
    serde_json::to_writer(&mut *out, &Header { format, extra })?;
    out.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut *out, &r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Pretty single-document JSON with a `format` field up front.
pub fn write_json<T: Serialize>(path: &Path, format: &str, value: &T) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &Header { format, extra: value })?;
    out.write_all(b"\n")?;
    out.flush()
}

/// The `format` field of a header line, if the line is one.
pub fn header_format(line: &str) -> Option<String> {
    let value: serde_json::Value = serde_json::from_str(line).ok()?;
    let obj = value.as_object()?;
    if obj.contains_key("query_id") {
        return None;
    }
    obj.get("format")?.as_str().map(str::to_owned)
}
