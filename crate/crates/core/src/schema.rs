//! Database schemas and the table scope visible at each node of a query.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ast::{NodeKind, SqlNode, TreeIndex};

/// Coarse column type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DataType {
    Numeric,
    Text,
    Date,
    Bool,
    Other,
}

impl DataType {
    pub const ALL: [DataType; 5] = [DataType::Numeric, DataType::Text, DataType::Date, DataType::Bool, DataType::Other];

    /// Buckets a declared SQL type name, following SQLite's affinity rules
    /// with separate date and boolean classes.
    pub fn from_declared(declared: &str) -> DataType {
        let upper = declared.trim().to_ascii_uppercase();
        let has = |needle: &str| upper.contains(needle);
        if upper.is_empty() {
            DataType::Other
        } else if has("BOOL") || upper == "BIT" {
            DataType::Bool
        } else if has("DATE") || has("TIME") || upper == "YEAR" {
            DataType::Date
        } else if has("INT") || has("REAL") || has("FLOA") || has("DOUB") || has("NUM") || has("DEC") {
            DataType::Numeric
        } else if has("CHAR") || has("CLOB") || has("TEXT") || has("STRING") {
            DataType::Text
        } else {
            DataType::Other
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DataType::Numeric => "NUMERIC",
            DataType::Text => "TEXT",
            DataType::Date => "DATE",
            DataType::Bool => "BOOL",
            DataType::Other => "OTHER",
        }
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DataType {
    type Err = core::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(DataType::from_declared(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnDef {
    pub name: String,
    pub data_type: DataType,
}

impl ColumnDef {
    pub fn new(name: impl Into<String>, data_type: DataType) -> Self {
        ColumnDef { name: name.into(), data_type }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableDef {
    pub name: String,
    pub columns: Vec<ColumnDef>,
}

impl TableDef {
    pub fn new(name: impl Into<String>, columns: Vec<ColumnDef>) -> Self {
        TableDef { name: name.into(), columns }
    }

    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        let folded = name.to_lowercase();
        self.columns.iter().find(|c| c.name == folded)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("table name is empty")]
    EmptyTableName,
    #[error("column name is empty in table `{table}`")]
    EmptyColumnName { table: String },
    #[error("duplicate table `{table}`")]
    DuplicateTable { table: String },
    #[error("duplicate column `{column}` in table `{table}`")]
    DuplicateColumn { table: String, column: String },
}

/// An immutable, case-folded database schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    db_id: String,
    tables: Vec<TableDef>,
    table_index: BTreeMap<String, usize>,
    /// Column name to the tables (by index) declaring it.
    column_index: BTreeMap<String, Vec<usize>>,
}

impl Schema {
    /// Builds a schema, folding every name to lowercase. Names must be
    /// non-empty and unique (tables globally, columns within a table).
    pub fn new(db_id: impl Into<String>, tables: Vec<TableDef>) -> Result<Schema, SchemaError> {
        let mut schema = Schema {
            db_id: db_id.into(),
            tables: Vec::with_capacity(tables.len()),
            table_index: BTreeMap::new(),
            column_index: BTreeMap::new(),
        };
        for table in tables {
            let name = table.name.trim().to_lowercase();
            if name.is_empty() {
                return Err(SchemaError::EmptyTableName);
            }
            if schema.table_index.contains_key(&name) {
                return Err(SchemaError::DuplicateTable { table: name });
            }
            let t = schema.tables.len();
            let mut columns: Vec<ColumnDef> = Vec::with_capacity(table.columns.len());
            for column in table.columns {
                let col = column.name.trim().to_lowercase();
                if col.is_empty() {
                    return Err(SchemaError::EmptyColumnName { table: name });
                }
                if columns.iter().any(|c| c.name == col) {
                    return Err(SchemaError::DuplicateColumn { table: name, column: col });
                }
                schema.column_index.entry(col.clone()).or_default().push(t);
                columns.push(ColumnDef { name: col, data_type: column.data_type });
            }
            schema.table_index.insert(name.clone(), t);
            schema.tables.push(TableDef { name, columns });
        }
        Ok(schema)
    }

    pub fn db_id(&self) -> &str {
        &self.db_id
    }

    pub fn tables(&self) -> &[TableDef] {
        &self.tables
    }

    pub fn table(&self, name: &str) -> Option<&TableDef> {
        self.table_index.get(name.to_lowercase().as_str()).map(|&t| &self.tables[t])
    }

    pub fn has_table(&self, name: &str) -> bool {
        self.table(name).is_some()
    }

    /// Whether any table declares a column with this name.
    pub fn has_column(&self, name: &str) -> bool {
        self.column_index.contains_key(name.to_lowercase().as_str())
    }

    pub fn column(&self, table: &str, column: &str) -> Option<&ColumnDef> {
        self.table(table)?.column(column)
    }

    /// Tables declaring a column with this name, in declaration order.
    pub fn tables_with_column(&self, name: &str) -> Vec<&str> {
        self.column_index
            .get(name.to_lowercase().as_str())
            .map(|ts| ts.iter().map(|&t| self.tables[t].name.as_str()).collect())
            .unwrap_or_default()
    }

    /// Whether the name is a table or column anywhere in the schema.
    pub fn has_identifier(&self, name: &str) -> bool {
        let folded = name.to_lowercase();
        self.table_index.contains_key(&folded) || self.column_index.contains_key(&folded)
    }

    /// Every distinct table and column name, sorted.
    pub fn identifiers(&self) -> Vec<&str> {
        let mut names: Vec<&str> =
            self.table_index.keys().chain(self.column_index.keys()).map(String::as_str).collect();
        names.sort_unstable();
        names.dedup();
        names
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

/// What a FROM/JOIN source refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceKind {
    /// A named table; `known` is false when the schema lacks it.
    Table { known: bool },
    /// A subquery, exposing the names of its projections.
    Derived { columns: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScopedSource {
    /// Table name, or the alias for a derived table (empty when unaliased).
    pub name: String,
    pub alias: Option<String>,
    /// 0 for the node's own query level, 1 for the enclosing one, and so on.
    pub level: usize,
    pub kind: SourceKind,
}

impl ScopedSource {
    pub fn is_unknown(&self) -> bool {
        self.kind == SourceKind::Table { known: false }
    }

    /// `name` must already be case-folded.
    pub fn has_column(&self, name: &str, schema: &Schema) -> bool {
        match &self.kind {
            SourceKind::Table { .. } => schema.column(&self.name, name).is_some(),
            SourceKind::Derived { columns } => columns.iter().any(|c| c == name),
        }
    }

    fn column_type(&self, name: &str, schema: &Schema) -> Option<DataType> {
        match self.kind {
            SourceKind::Table { .. } => schema.column(&self.name, name).map(|c| c.data_type),
            SourceKind::Derived { .. } => None,
        }
    }
}

/// Sources visible at one node, innermost level first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScopeFrame {
    pub sources: Vec<ScopedSource>,
}

impl ScopeFrame {
    /// Base table names in scope, innermost first.
    pub fn tables(&self) -> impl Iterator<Item = &str> {
        self.sources.iter().filter(|s| matches!(s.kind, SourceKind::Table { .. })).map(|s| s.name.as_str())
    }

    pub fn has_unknown(&self) -> bool {
        self.sources.iter().any(ScopedSource::is_unknown)
    }

    /// The source a qualifier names: its alias if it has one, otherwise its
    /// table name. Inner levels shadow outer ones.
    pub fn resolve_qualifier(&self, qualifier: &str) -> Option<&ScopedSource> {
        let q = qualifier.to_lowercase();
        self.sources.iter().find(|s| match &s.alias {
            Some(alias) => *alias == q,
            None => !s.name.is_empty() && s.name == q,
        })
    }

    /// Sources exposing a column with this name, across all levels.
    pub fn sources_with_column<'f>(&'f self, name: &str, schema: &'f Schema) -> impl Iterator<Item = &'f ScopedSource> {
        let folded = name.to_lowercase();
        self.sources.iter().filter(move |s| s.has_column(&folded, schema))
    }

    /// Coarse type of a column reference, when it resolves to exactly one
    /// schema column or to several columns sharing a type.
    pub fn column_type(&self, qualifier: Option<&str>, name: &str, schema: &Schema) -> Option<DataType> {
        let folded = name.to_lowercase();
        if let Some(q) = qualifier {
            return self.resolve_qualifier(q)?.column_type(&folded, schema);
        }
        let innermost = self.sources.iter().filter(|s| s.has_column(&folded, schema)).map(|s| s.level).min()?;
        let mut types = self
            .sources
            .iter()
            .filter(|s| s.level == innermost)
            .filter_map(|s| s.column_type(&folded, schema));
        let first = types.next()?;
        types.all(|t| t == first).then_some(first)
    }
}

/// The sources visible at `node_id`: those of its own query level plus
/// enclosing levels for correlated references. A subquery used as a FROM
/// source does not see the query around it.
pub fn resolve_scope(index: &TreeIndex<'_>, node_id: usize, schema: &Schema) -> ScopeFrame {
    let mut frame = ScopeFrame::default();
    for (level, select) in index.scope_chain(node_id).into_iter().enumerate() {
        let select = index.node(select);
        for clause in &select.children {
            match clause.kind {
                NodeKind::From | NodeKind::Join => {
                    for source in &clause.children {
                        if let Some(s) = scoped_source(source, level, schema) {
                            frame.sources.push(s);
                        }
                    }
                }
                _ => {}
            }
        }
        if is_derived_table(index, select.id) {
            break;
        }
    }
    frame
}

/// True iff at least two in-scope sources expose a column with this name.
pub fn column_ambiguous(name: &str, frame: &ScopeFrame, schema: &Schema) -> bool {
    frame.sources_with_column(name, schema).nth(1).is_some()
}

fn scoped_source(node: &SqlNode, level: usize, schema: &Schema) -> Option<ScopedSource> {
    match node.kind {
        NodeKind::Table => {
            let name = node.content()?.to_string();
            let known = schema.has_table(&name);
            Some(ScopedSource { name, alias: node.table_alias().map(Into::into), level, kind: SourceKind::Table { known } })
        }
        NodeKind::Subquery => {
            let alias = node.table_alias().map(String::from);
            let columns = node.children.first().map(projection_names).unwrap_or_default();
            Some(ScopedSource {
                name: alias.clone().unwrap_or_default(),
                alias,
                level,
                kind: SourceKind::Derived { columns },
            })
        }
        _ => None,
    }
}

fn is_derived_table(index: &TreeIndex<'_>, select_id: usize) -> bool {
    let mut parent = index.parent(select_id);
    // set operations put the Select one level further down
    while let Some(p) = parent.filter(|p| matches!(p.kind, NodeKind::Other(_))) {
        parent = index.parent(p.id);
    }
    parent.is_some_and(|p| {
        p.kind == NodeKind::Subquery && index.parent(p.id).is_some_and(|g| matches!(g.kind, NodeKind::From | NodeKind::Join))
    })
}

/// Output column names of a query: aliases, or the names of bare columns.
fn projection_names(query: &SqlNode) -> Vec<String> {
    let mut select = query;
    while select.kind != NodeKind::Select {
        match select.children.first() {
            Some(first) => select = first,
            None => return Vec::new(),
        }
    }
    select
        .children
        .iter()
        .filter_map(|p| match p.kind {
            NodeKind::Alias => p.content.clone(),
            NodeKind::Column => p.content.clone(),
            _ => None,
        })
        .collect()
}
