//! Normalized SQL syntax trees.
//!
//! SQL text is parsed into a tree of [`SqlNode`]s whose shape follows the
//! clause/operator/identifier layering common to SQL transpilers: a `Column`
//! owns `Identifier` children for its qualifier and name, a `Table` owns the
//! `Identifier` of its name plus an optional `TableAlias` leaf, and `ORDER BY`
//! wraps one `Ordered` node per sort key.

mod alias;
mod lexer;
mod parser;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use alias::AliasMap;
pub use parser::parse_sql;

/// Byte range into the original SQL text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn merge(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

/// Accepted SQL dialects. Only the SQLite-compatible subset is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dialect {
    #[default]
    Sqlite,
}

impl FromStr for Dialect {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("sqlite") {
            Ok(Dialect::Sqlite)
        } else {
            Err(ParseError::UnknownDialect(s.into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unsupported construct at byte {position}: {construct}")]
    Unsupported { position: usize, construct: String },
    #[error("unknown dialect `{0}`")]
    UnknownDialect(String),
}

impl ParseError {
    pub(crate) fn syntax(position: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax { position, message: message.into() }
    }

    pub(crate) fn unsupported(position: usize, construct: impl Into<String>) -> Self {
        ParseError::Unsupported { position, construct: construct.into() }
    }

    pub fn position(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { position, .. } | ParseError::Unsupported { position, .. } => Some(*position),
            ParseError::UnknownDialect(_) => None,
        }
    }

    /// True when the query is valid SQL but falls outside the supported subset.
    pub fn is_unsupported(&self) -> bool {
        matches!(self, ParseError::Unsupported { .. })
    }
}

/// Node categories that have no dedicated [`NodeKind`] variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OtherTag {
    Distinct,
    Offset,
    Is,
    Between,
    Case,
    When,
    Else,
    Neg,
    Mod,
    Concat,
    Cast,
    Exists,
    Glob,
    Using,
    Union,
    UnionAll,
    Intersect,
    Except,
}

impl OtherTag {
    pub const ALL: [OtherTag; 18] = [
        OtherTag::Distinct,
        OtherTag::Offset,
        OtherTag::Is,
        OtherTag::Between,
        OtherTag::Case,
        OtherTag::When,
        OtherTag::Else,
        OtherTag::Neg,
        OtherTag::Mod,
        OtherTag::Concat,
        OtherTag::Cast,
        OtherTag::Exists,
        OtherTag::Glob,
        OtherTag::Using,
        OtherTag::Union,
        OtherTag::UnionAll,
        OtherTag::Intersect,
        OtherTag::Except,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OtherTag::Distinct => "distinct",
            OtherTag::Offset => "offset",
            OtherTag::Is => "is",
            OtherTag::Between => "between",
            OtherTag::Case => "case",
            OtherTag::When => "when",
            OtherTag::Else => "else",
            OtherTag::Neg => "neg",
            OtherTag::Mod => "mod",
            OtherTag::Concat => "concat",
            OtherTag::Cast => "cast",
            OtherTag::Exists => "exists",
            OtherTag::Glob => "glob",
            OtherTag::Using => "using",
            OtherTag::Union => "union",
            OtherTag::UnionAll => "union_all",
            OtherTag::Intersect => "intersect",
            OtherTag::Except => "except",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Select,
    From,
    Where,
    GroupBy,
    Having,
    OrderBy,
    Ordered,
    Limit,
    Join,
    Eq,
    Neq,
    Gt,
    Lt,
    Gte,
    Lte,
    Like,
    In,
    And,
    Or,
    Not,
    Add,
    Sub,
    Mul,
    Div,
    Func,
    Agg,
    Column,
    Identifier,
    Literal,
    Star,
    Table,
    TableAlias,
    Subquery,
    Alias,
    Paren,
    Other(OtherTag),
}

impl NodeKind {
    /// Every kind with its own variant, in declaration order. `Other` tags are
    /// not listed individually.
    pub const NAMED: [NodeKind; 35] = [
        NodeKind::Select,
        NodeKind::From,
        NodeKind::Where,
        NodeKind::GroupBy,
        NodeKind::Having,
        NodeKind::OrderBy,
        NodeKind::Ordered,
        NodeKind::Limit,
        NodeKind::Join,
        NodeKind::Eq,
        NodeKind::Neq,
        NodeKind::Gt,
        NodeKind::Lt,
        NodeKind::Gte,
        NodeKind::Lte,
        NodeKind::Like,
        NodeKind::In,
        NodeKind::And,
        NodeKind::Or,
        NodeKind::Not,
        NodeKind::Add,
        NodeKind::Sub,
        NodeKind::Mul,
        NodeKind::Div,
        NodeKind::Func,
        NodeKind::Agg,
        NodeKind::Column,
        NodeKind::Identifier,
        NodeKind::Literal,
        NodeKind::Star,
        NodeKind::Table,
        NodeKind::TableAlias,
        NodeKind::Subquery,
        NodeKind::Alias,
        NodeKind::Paren,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            NodeKind::Select => "Select",
            NodeKind::From => "From",
            NodeKind::Where => "Where",
            NodeKind::GroupBy => "GroupBy",
            NodeKind::Having => "Having",
            NodeKind::OrderBy => "OrderBy",
            NodeKind::Ordered => "Ordered",
            NodeKind::Limit => "Limit",
            NodeKind::Join => "Join",
            NodeKind::Eq => "Eq",
            NodeKind::Neq => "Neq",
            NodeKind::Gt => "Gt",
            NodeKind::Lt => "Lt",
            NodeKind::Gte => "Gte",
            NodeKind::Lte => "Lte",
            NodeKind::Like => "Like",
            NodeKind::In => "In",
            NodeKind::And => "And",
            NodeKind::Or => "Or",
            NodeKind::Not => "Not",
            NodeKind::Add => "Add",
            NodeKind::Sub => "Sub",
            NodeKind::Mul => "Mul",
            NodeKind::Div => "Div",
            NodeKind::Func => "Func",
            NodeKind::Agg => "Agg",
            NodeKind::Column => "Column",
            NodeKind::Identifier => "Identifier",
            NodeKind::Literal => "Literal",
            NodeKind::Star => "Star",
            NodeKind::Table => "Table",
            NodeKind::TableAlias => "TableAlias",
            NodeKind::Subquery => "Subquery",
            NodeKind::Alias => "Alias",
            NodeKind::Paren => "Paren",
            NodeKind::Other(_) => "Other",
        }
    }

    /// Transparent wrappers: skipped by equivalence, labeled like their child.
    pub fn is_wrapper(self) -> bool {
        matches!(self, NodeKind::Alias | NodeKind::Paren)
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            NodeKind::Eq | NodeKind::Neq | NodeKind::Gt | NodeKind::Lt | NodeKind::Gte | NodeKind::Lte
        )
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            NodeKind::Add | NodeKind::Sub | NodeKind::Mul | NodeKind::Div | NodeKind::Other(OtherTag::Mod)
        )
    }

    /// Kinds whose `content` must be present.
    pub fn requires_content(self) -> bool {
        matches!(
            self,
            NodeKind::Identifier
                | NodeKind::Literal
                | NodeKind::Table
                | NodeKind::Column
                | NodeKind::Func
                | NodeKind::Agg
                | NodeKind::TableAlias
                | NodeKind::Alias
        )
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Other(tag) => write!(f, "Other({})", tag.as_str()),
            kind => f.write_str(kind.name()),
        }
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(tag) = s.strip_prefix("Other(").and_then(|r| r.strip_suffix(')')) {
            return OtherTag::ALL
                .iter()
                .find(|t| t.as_str() == tag)
                .map(|t| NodeKind::Other(*t))
                .ok_or_else(|| alloc::format!("unknown node tag `{tag}`"));
        }
        NodeKind::NAMED
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| alloc::format!("unknown node kind `{s}`"))
    }
}

impl Serialize for NodeKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeKind {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiteralKind {
    Number,
    String,
    Null,
    Boolean,
}

/// What an `Identifier` names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IdentRole {
    /// Column name inside a `Column`.
    ColumnName,
    /// Table or alias qualifier inside a `Column` or qualified `Star`.
    Qualifier,
    /// Base table name inside a `Table`.
    TableName,
}

/// Normalizations applied to a node's lexeme at parse time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NodeFlags {
    /// Source lexeme was quoted and the quotes were stripped.
    pub quoted: bool,
    /// Source lexeme differed from `content` only by letter case.
    pub case_folded: bool,
    pub literal: Option<LiteralKind>,
    pub role: Option<IdentRole>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqlNode {
    /// Preorder index within the tree.
    pub id: usize,
    pub kind: NodeKind,
    pub content: Option<String>,
    pub children: Vec<SqlNode>,
    pub span: Span,
    pub depth: usize,
    pub flags: NodeFlags,
}

impl SqlNode {
    pub(crate) fn new(kind: NodeKind, span: Span) -> Self {
        SqlNode { id: 0, kind, content: None, children: Vec::new(), span, depth: 0, flags: NodeFlags::default() }
    }

    pub(crate) fn with_content(mut self, content: impl Into<String>) -> Self {
        self.content = Some(content.into());
        self
    }

    pub(crate) fn with_children(mut self, children: Vec<SqlNode>) -> Self {
        self.children = children;
        self
    }

    pub fn content(&self) -> Option<&str> {
        self.content.as_deref()
    }

    /// `Kind(content)` rendering; qualified columns show `Column(q.name)`.
    pub fn describe(&self) -> String {
        match (self.kind, self.content(), self.qualifier()) {
            (NodeKind::Column, Some(name), Some(q)) => alloc::format!("Column({q}.{name})"),
            (kind, Some(c), _) => alloc::format!("{kind}({c})"),
            (kind, None, _) => alloc::format!("{kind}"),
        }
    }

    /// Preorder enumeration; the i-th element has id i.
    pub fn preorder(&self) -> Vec<&SqlNode> {
        let mut out = Vec::new();
        let mut stack = alloc::vec![self];
        while let Some(node) = stack.pop() {
            out.push(node);
            stack.extend(node.children.iter().rev());
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(SqlNode::node_count).sum::<usize>()
    }

    /// Strips `Alias`/`Paren` wrappers.
    pub fn unwrap_wrappers(&self) -> &SqlNode {
        let mut node = self;
        while node.kind.is_wrapper() {
            match node.children.first() {
                Some(child) => node = child,
                None => break,
            }
        }
        node
    }

    /// The qualifier text of a `Column` or qualified `Star`.
    pub fn qualifier(&self) -> Option<&str> {
        self.children
            .iter()
            .find(|c| c.flags.role == Some(IdentRole::Qualifier))
            .and_then(|c| c.content())
    }

    /// The alias declared on a `Table` or `Subquery` source.
    pub fn table_alias(&self) -> Option<&str> {
        self.children.iter().find(|c| c.kind == NodeKind::TableAlias).and_then(|c| c.content())
    }

    /// Reassigns preorder ids and depths, starting at this node.
    pub(crate) fn renumber(&mut self) {
        fn walk(node: &mut SqlNode, next: &mut usize, depth: usize) {
            node.id = *next;
            node.depth = depth;
            *next += 1;
            for child in &mut node.children {
                walk(child, next, depth + 1);
            }
        }
        let mut next = 0;
        walk(self, &mut next, 0);
    }
}

/// Id-indexed view of a tree with parent links.
#[derive(Debug, Clone)]
pub struct TreeIndex<'a> {
    nodes: Vec<&'a SqlNode>,
    parents: Vec<Option<usize>>,
}

impl<'a> TreeIndex<'a> {
    pub fn new(root: &'a SqlNode) -> Self {
        let nodes = root.preorder();
        let mut parents = alloc::vec![None; nodes.len()];
        for node in &nodes {
            for child in &node.children {
                parents[child.id] = Some(node.id);
            }
        }
        TreeIndex { nodes, parents }
    }

    pub fn root(&self) -> &'a SqlNode {
        self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &'a SqlNode {
        self.nodes[id]
    }

    pub fn nodes(&self) -> &[&'a SqlNode] {
        &self.nodes
    }

    pub fn parent(&self, id: usize) -> Option<&'a SqlNode> {
        self.parents[id].map(|p| self.nodes[p])
    }

    /// Ancestors from the parent up to the root.
    pub fn ancestors(&self, id: usize) -> impl Iterator<Item = &'a SqlNode> + '_ {
        let mut cur = self.parents[id];
        core::iter::from_fn(move || {
            let id = cur?;
            cur = self.parents[id];
            Some(self.nodes[id])
        })
    }

    /// Enclosing `Select` nodes, innermost first. A `Select` node is its own
    /// innermost scope.
    pub fn scope_chain(&self, id: usize) -> Vec<usize> {
        let node = self.nodes[id];
        core::iter::once(node)
            .chain(self.ancestors(id))
            .filter(|n| n.kind == NodeKind::Select)
            .map(|n| n.id)
            .collect()
    }

    /// Position of `id` among its parent's children.
    pub fn sibling_index(&self, id: usize) -> usize {
        self.parent(id)
            .and_then(|p| p.children.iter().position(|c| c.id == id))
            .unwrap_or(0)
    }
}
