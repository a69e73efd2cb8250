//! Schema files: one JSON document per database.
//!
//! ```json
//! {"db_id": "company", "tables": [{"name": "employee", "columns": [{"name": "salary", "type": "NUMERIC"}]}]}
//! ```
//!
//! `db_id` defaults to the file stem. Column types are declared SQL type
//! names, bucketed into coarse classes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sqlnode_core::schema::{ColumnDef, DataType, Schema, SchemaError, TableDef};

#[derive(Debug, thiserror::Error)]
pub enum SchemaFormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: line {line}, column {column}: {message}")]
    Syntax { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}: {field}: {source}")]
    Invalid { path: PathBuf, field: String, source: SchemaError },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaDoc {
    #[serde(default)]
    format: Option<String>,
    #[serde(default)]
    db_id: Option<String>,
    tables: Vec<TableDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableDoc {
    name: String,
    #[serde(default)]
    columns: Vec<ColumnDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ColumnDoc {
    name: String,
    #[serde(rename = "type", default)]
    data_type: String,
}

pub fn load_schema(path: &Path) -> Result<Schema, SchemaFormatError> {
    let text = fs::read_to_string(path).map_err(|source| SchemaFormatError::Io { path: path.into(), source })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    parse_schema(&text, stem, path)
}

/// Parses schema JSON; `path` is only used in error messages.
pub fn parse_schema(text: &str, default_db_id: &str, path: &Path) -> Result<Schema, SchemaFormatError> {
    let doc: SchemaDoc = serde_json::from_str(text).map_err(|e| SchemaFormatError::Syntax {
        path: path.into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let _ = doc.format;
    let db_id = doc.db_id.unwrap_or_else(|| default_db_id.to_string());
    let invalid = |field: String, source: SchemaError| SchemaFormatError::Invalid { path: path.into(), field, source };
    let mut tables = Vec::with_capacity(doc.tables.len());
    for (t, table) in doc.tables.into_iter().enumerate() {
        let columns = table
            .columns
            .into_iter()
            .map(|c| ColumnDef::new(c.name, DataType::from_declared(&c.data_type)))
            .collect();
        tables.push(TableDef::new(table.name, columns));
        // validate incrementally so errors name the offending entry
        if let Err(e) = Schema::new(db_id.clone(), tables.clone()) {
            return Err(invalid(format!("tables[{t}]"), e));
        }
    }
    Schema::new(db_id, tables).map_err(|e| invalid("tables".into(), e))
}

/// Loads `<dir>/<db_id>.json`.
pub fn load_schema_for(dir: &Path, db_id: &str) -> Result<Schema, SchemaFormatError> {
    load_schema(&dir.join(format!("{db_id}.json")))
}
