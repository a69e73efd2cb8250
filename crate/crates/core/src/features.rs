//! Fixed-length per-node feature vectors.
//!
//! Every node of a generated query gets the same ordered set of features,
//! described by [`FeatureManifest`]: structural position, consistency with
//! the database schema, lexical shape of identifiers, and local context
//! (aggregation, operand types, LIKE patterns, IN lists, literals).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ast::{AliasMap, IdentRole, LiteralKind, NodeKind, OtherTag, Span, SqlNode, TreeIndex};
use crate::schema::{column_ambiguous, resolve_scope, DataType, ScopeFrame, Schema, SourceKind};

/// Levenshtein value for nodes that are not schema identifiers.
pub const LEVENSHTEIN_SENTINEL: f64 = 64.0;

pub const MANIFEST_VERSION: &str = "sqlnode-features/1";

pub type FeatureVector = Vec<f64>;

/// Ordered feature names and their defaults, identified by a hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub version: String,
    pub hash: u64,
    pub names: Vec<String>,
    pub defaults: Vec<f64>,
}

impl FeatureManifest {
    /// The manifest of the vectors produced by [`QueryFeaturizer`].
    pub fn current() -> FeatureManifest {
        let mut names = Vec::with_capacity(FEATURE_COUNT);
        let mut defaults = Vec::with_capacity(FEATURE_COUNT);
        for kind in KIND_VOCAB {
            names.push(alloc::format!("kind={kind}"));
            defaults.push(0.0);
        }
        for kind in KIND_VOCAB {
            names.push(alloc::format!("parent={kind}"));
            defaults.push(0.0);
        }
        names.push("parent=<root>".into());
        defaults.push(0.0);
        for (name, default) in SCALARS {
            names.push((*name).into());
            defaults.push(*default);
        }
        let hash = manifest_hash(&names, &defaults);
        FeatureManifest { version: MANIFEST_VERSION.into(), hash, names, defaults }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// FNV-1a over the version, names and default bit patterns.
pub fn manifest_hash(names: &[String], defaults: &[f64]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= u64::from(b);
            hash = hash.wrapping_mul(PRIME);
        }
    };
    eat(MANIFEST_VERSION.as_bytes());
    for (name, default) in names.iter().zip(defaults) {
        eat(&[0]);
        eat(name.as_bytes());
        eat(&default.to_bits().to_le_bytes());
    }
    hash
}

/// Node kinds with their own one-hot position; `Other(_)` shares the last.
const KIND_VOCAB: [&str; 36] = {
    let mut vocab = [""; 36];
    let mut i = 0;
    while i < 35 {
        vocab[i] = NodeKind::NAMED[i].name();
        i += 1;
    }
    vocab[35] = "Other";
    vocab
};

const KIND_OFFSET: usize = 0;
const PARENT_OFFSET: usize = KIND_OFFSET + KIND_VOCAB.len();
const ROOT_PARENT: usize = PARENT_OFFSET + KIND_VOCAB.len();
const SCALAR_OFFSET: usize = ROOT_PARENT + 1;
pub const FEATURE_COUNT: usize = SCALAR_OFFSET + SCALARS.len();

fn kind_slot(kind: NodeKind) -> usize {
    NodeKind::NAMED.iter().position(|k| *k == kind).unwrap_or(KIND_VOCAB.len() - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
enum F {
    Depth,
    ChildCount,
    SiblingIndex,
    SubtreeSize,
    ScopeDepth,
    ClauseSelect,
    ClauseFrom,
    ClauseJoin,
    ClauseWhere,
    ClauseGroupBy,
    ClauseHaving,
    ClauseOrderBy,
    ClauseLimit,
    IdentValid,
    ColumnInScope,
    QualifierPresent,
    QualifierValid,
    ColumnAmbiguous,
    ProjectionAliasRef,
    TableKnown,
    ScopeUnknownTable,
    ScopeTableCount,
    Levenshtein,
    NameLength,
    NameHasDigit,
    NameHasUnderscore,
    NameAllCaps,
    NameMixedCase,
    NameQuoted,
    NameCaseFolded,
    AggContext,
    InsideAggregate,
    SelectHasAggregate,
    QueryHasGroupBy,
    TypeCompat,
    TypeNumeric,
    TypeText,
    TypeDate,
    TypeBool,
    TypeOther,
    LikeHasPercent,
    LikeHasUnderscore,
    LikePatternLength,
    InListSize,
    InSubquery,
    LiteralNumber,
    LiteralString,
    LiteralNull,
    LiteralBool,
    LiteralLength,
    LiteralMagnitude,
    FuncKnown,
    ProjectionCount,
    HasDistinct,
    JoinHasCondition,
}

const SCALARS: &[(&str, f64)] = &[
    ("depth", 0.0),
    ("child_count", 0.0),
    ("sibling_index", 0.0),
    ("subtree_size", 0.0),
    ("scope_depth", 0.0),
    ("clause=select", 0.0),
    ("clause=from", 0.0),
    ("clause=join", 0.0),
    ("clause=where", 0.0),
    ("clause=group_by", 0.0),
    ("clause=having", 0.0),
    ("clause=order_by", 0.0),
    ("clause=limit", 0.0),
    ("ident_valid", 0.0),
    ("column_in_scope", 0.0),
    ("qualifier_present", 0.0),
    ("qualifier_valid", 0.0),
    ("column_ambiguous", 0.0),
    ("projection_alias_ref", 0.0),
    ("table_known", 0.0),
    ("scope_unknown_table", 0.0),
    ("scope_table_count", 0.0),
    ("levenshtein", LEVENSHTEIN_SENTINEL),
    ("name_length", 0.0),
    ("name_has_digit", 0.0),
    ("name_has_underscore", 0.0),
    ("name_all_caps", 0.0),
    ("name_mixed_case", 0.0),
    ("name_quoted", 0.0),
    ("name_case_folded", 0.0),
    ("agg_context", 0.0),
    ("inside_aggregate", 0.0),
    ("select_has_aggregate", 0.0),
    ("query_has_group_by", 0.0),
    ("type_compat", 0.0),
    ("type=NUMERIC", 0.0),
    ("type=TEXT", 0.0),
    ("type=DATE", 0.0),
    ("type=BOOL", 0.0),
    ("type=OTHER", 0.0),
    ("like_has_percent", 0.0),
    ("like_has_underscore", 0.0),
    ("like_pattern_length", 0.0),
    ("in_list_size", 0.0),
    ("in_subquery", 0.0),
    ("literal=number", 0.0),
    ("literal=string", 0.0),
    ("literal=null", 0.0),
    ("literal=bool", 0.0),
    ("literal_length", 0.0),
    ("literal_magnitude", 0.0),
    ("func_known", 0.0),
    ("projection_count", 0.0),
    ("has_distinct", 0.0),
    ("join_has_condition", 0.0),
];

const _: () = assert!(SCALARS.len() == F::JoinHasCondition as usize + 1);

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let next = (diag + usize::from(ca != *cb)).min(row[j] + 1).min(row[j + 1] + 1);
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("schema has no tables or columns")]
pub struct EmptySchema;

/// Closest table or column name, ties broken by the lexicographically
/// smallest identifier. The name is case-folded before comparison.
pub fn nearest_schema_identifier<'s>(name: &str, schema: &'s Schema) -> Result<(&'s str, usize), EmptySchema> {
    let folded = name.to_lowercase();
    let mut best: Option<(&str, usize)> = None;
    for ident in schema.identifiers() {
        let d = levenshtein(&folded, ident);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((ident, d));
            if d == 0 {
                break;
            }
        }
    }
    best.ok_or(EmptySchema)
}

/// Whether a binary operation's operands have compatible coarse types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeCompat {
    Compatible,
    Incompatible,
    Unknown,
}

impl TypeCompat {
    /// Encoding used in the feature vector; unknown is the neutral 0.
    pub fn code(self) -> f64 {
        match self {
            TypeCompat::Compatible => 1.0,
            TypeCompat::Incompatible => -1.0,
            TypeCompat::Unknown => 0.0,
        }
    }

    fn of(a: Option<DataType>, b: Option<DataType>) -> TypeCompat {
        use DataType::*;
        match (a, b) {
            (Some(a), Some(b)) if a == Other || b == Other => TypeCompat::Unknown,
            (Some(a), Some(b)) if a == b => TypeCompat::Compatible,
            (Some(Date | Text), Some(Date | Text)) | (Some(Bool | Numeric), Some(Bool | Numeric)) => {
                TypeCompat::Compatible
            }
            (Some(_), Some(_)) => TypeCompat::Incompatible,
            _ => TypeCompat::Unknown,
        }
    }

    /// Incompatible if any pair is, compatible if all are.
    fn all(items: impl IntoIterator<Item = TypeCompat>) -> TypeCompat {
        let mut out = TypeCompat::Compatible;
        let mut any = false;
        for c in items {
            any = true;
            match c {
                TypeCompat::Incompatible => return TypeCompat::Incompatible,
                TypeCompat::Unknown => out = TypeCompat::Unknown,
                TypeCompat::Compatible => {}
            }
        }
        if any {
            out
        } else {
            TypeCompat::Unknown
        }
    }
}

/// Compares the coarse types of an operator's operands. Nodes that are not
/// comparisons, arithmetic, LIKE, IN or BETWEEN are `Unknown`.
pub fn operand_type_compat(op: &SqlNode, frame: &ScopeFrame, schema: &Schema) -> TypeCompat {
    let ty = |n: &SqlNode| expr_type(n, frame, schema);
    let kids = &op.children;
    match op.kind {
        k if k.is_comparison() || k == NodeKind::Like || k == NodeKind::Other(OtherTag::Glob) => match kids.as_slice() {
            [l, r] => TypeCompat::of(ty(l), ty(r)),
            _ => TypeCompat::Unknown,
        },
        k if k.is_arithmetic() => {
            let types: Vec<Option<DataType>> = kids.iter().map(ty).collect();
            if types.contains(&Some(DataType::Text)) {
                TypeCompat::Incompatible
            } else if types.iter().all(|t| matches!(t, Some(DataType::Numeric | DataType::Bool))) {
                TypeCompat::Compatible
            } else {
                TypeCompat::Unknown
            }
        }
        NodeKind::In => match kids.split_first() {
            Some((_, [only])) if only.kind == NodeKind::Subquery => TypeCompat::Unknown,
            Some((left, items)) => TypeCompat::all(items.iter().map(|i| TypeCompat::of(ty(left), ty(i)))),
            None => TypeCompat::Unknown,
        },
        NodeKind::Other(OtherTag::Between) => match kids.as_slice() {
            [v, lo, hi] => TypeCompat::all([TypeCompat::of(ty(v), ty(lo)), TypeCompat::of(ty(v), ty(hi))]),
            _ => TypeCompat::Unknown,
        },
        _ => TypeCompat::Unknown,
    }
}

const NUMERIC_FUNCS: &[&str] =
    &["ABS", "LENGTH", "INSTR", "ROUND", "SIGN", "RANDOM", "UNICODE", "JULIANDAY", "UNIXEPOCH", "CAST"];
const TEXT_FUNCS: &[&str] =
    &["UPPER", "LOWER", "SUBSTR", "SUBSTRING", "TRIM", "LTRIM", "RTRIM", "REPLACE", "HEX", "QUOTE", "TYPEOF", "CHAR", "PRINTF", "STRFTIME"];
const DATE_FUNCS: &[&str] = &["DATE", "TIME", "DATETIME"];
const OTHER_FUNCS: &[&str] = &["COALESCE", "IFNULL", "IIF", "NULLIF", "MAX", "MIN", "LIKE", "GLOB", "CHANGES"];

/// Coarse type of an expression, if it can be determined.
pub fn expr_type(node: &SqlNode, frame: &ScopeFrame, schema: &Schema) -> Option<DataType> {
    let node = node.unwrap_wrappers();
    match node.kind {
        NodeKind::Column => frame.column_type(node.qualifier(), node.content()?, schema),
        NodeKind::Literal => match node.flags.literal? {
            LiteralKind::Number => Some(DataType::Numeric),
            LiteralKind::String if looks_like_date(node.content()?) => Some(DataType::Date),
            LiteralKind::String => Some(DataType::Text),
            LiteralKind::Boolean => Some(DataType::Bool),
            LiteralKind::Null => None,
        },
        NodeKind::Add | NodeKind::Sub | NodeKind::Mul | NodeKind::Div => Some(DataType::Numeric),
        NodeKind::Other(OtherTag::Neg | OtherTag::Mod) => Some(DataType::Numeric),
        NodeKind::Other(OtherTag::Concat) => Some(DataType::Text),
        NodeKind::Other(OtherTag::Cast) => Some(DataType::from_declared(node.content()?)),
        NodeKind::Agg => match node.content()? {
            "MIN" | "MAX" => expr_type(node.children.first()?, frame, schema),
            "GROUP_CONCAT" => Some(DataType::Text),
            _ => Some(DataType::Numeric),
        },
        NodeKind::Func => {
            let name = node.content()?;
            if NUMERIC_FUNCS.contains(&name) {
                Some(DataType::Numeric)
            } else if TEXT_FUNCS.contains(&name) {
                Some(DataType::Text)
            } else if DATE_FUNCS.contains(&name) {
                Some(DataType::Date)
            } else {
                None
            }
        }
        k if k.is_comparison() => Some(DataType::Bool),
        NodeKind::And | NodeKind::Or | NodeKind::Not | NodeKind::Like | NodeKind::In => Some(DataType::Bool),
        _ => None,
    }
}

fn looks_like_date(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() >= 10
        && b[..4].iter().all(u8::is_ascii_digit)
        && b[4] == b'-'
        && b[5..7].iter().all(u8::is_ascii_digit)
        && b[7] == b'-'
        && b[8..10].iter().all(u8::is_ascii_digit)
}

/// A token of the generated query with its log-probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenLogprob {
    pub span: Span,
    pub logprob: f64,
}

/// Mean log-probability of the tokens overlapping `span`.
pub fn node_logprob_score(span: Span, tokens: &[TokenLogprob]) -> Option<f64> {
    let (sum, n) = tokens
        .iter()
        .filter(|t| t.span.overlaps(&span))
        .fold((0.0, 0usize), |(s, n), t| (s + t.logprob, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// One training or evaluation row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub query_id: String,
    pub db_id: String,
    pub node_id: usize,
    pub node_kind: NodeKind,
    pub features: FeatureVector,
    pub label: u8,
    pub logprob_score: Option<f64>,
}

/// Per-query state shared by all node featurizations.
#[derive(Debug)]
pub struct QueryFeaturizer<'a> {
    sql: &'a str,
    index: TreeIndex<'a>,
    aliases: AliasMap,
    schema: &'a Schema,
}

impl<'a> QueryFeaturizer<'a> {
    /// `tree` must have been parsed from `sql`.
    pub fn new(sql: &'a str, tree: &'a SqlNode, schema: &'a Schema) -> Self {
        QueryFeaturizer { sql, index: TreeIndex::new(tree), aliases: AliasMap::build(tree), schema }
    }

    pub fn aliases(&self) -> &AliasMap {
        &self.aliases
    }

    /// Feature vectors for every node, indexed by node id.
    pub fn featurize_all(&self) -> Vec<FeatureVector> {
        (0..self.index.len()).map(|id| self.featurize_node(id)).collect()
    }

    pub fn featurize_node(&self, id: usize) -> FeatureVector {
        let node = self.index.node(id);
        let mut v = vec![0.0; FEATURE_COUNT];
        for (slot, (_, default)) in v[SCALAR_OFFSET..].iter_mut().zip(SCALARS) {
            *slot = *default;
        }
        let mut set = |f: F, x: f64| v[SCALAR_OFFSET + f as usize] = x;
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        let frame = resolve_scope(&self.index, id, self.schema);
        let scopes = self.index.scope_chain(id);

        // structure
        set(F::Depth, node.depth as f64);
        set(F::ChildCount, node.children.len() as f64);
        set(F::SiblingIndex, self.index.sibling_index(id) as f64);
        set(F::SubtreeSize, node.node_count() as f64);
        set(F::ScopeDepth, scopes.len().saturating_sub(1) as f64);
        if let Some(clause) = self.clause_of(id) {
            set(clause, 1.0);
        }

        // schema consistency
        let column = self.owning_column(node);
        if let Some(col) = column {
            let name = col.content().unwrap_or_default();
            let folded = name.to_lowercase();
            let qualifier = col.qualifier();
            set(F::QualifierPresent, flag(qualifier.is_some()));
            let in_scope = match qualifier {
                Some(q) => frame.resolve_qualifier(q).is_some_and(|s| s.has_column(&folded, self.schema)),
                None => frame.sources_with_column(&folded, self.schema).next().is_some(),
            };
            set(F::ColumnInScope, flag(in_scope));
            if let Some(q) = qualifier {
                set(F::QualifierValid, flag(frame.resolve_qualifier(q).is_some()));
            } else {
                set(F::ColumnAmbiguous, flag(column_ambiguous(&folded, &frame, self.schema)));
                set(F::ProjectionAliasRef, flag(self.is_projection_alias(&scopes, &folded)));
            }
        }
        if node.kind == NodeKind::Star {
            if let Some(q) = node.qualifier() {
                set(F::QualifierPresent, 1.0);
                set(F::QualifierValid, flag(frame.resolve_qualifier(q).is_some()));
            }
        }
        if node.kind == NodeKind::Table {
            set(F::TableKnown, flag(node.content().is_some_and(|t| self.schema.has_table(t))));
        }
        set(F::ScopeUnknownTable, flag(frame.has_unknown()));
        set(F::ScopeTableCount, frame.tables().count() as f64);
        if let Some(name) = self.schema_name(node, &frame) {
            let valid = self.schema.has_identifier(name);
            set(F::IdentValid, flag(valid));
            let distance = if valid {
                0
            } else {
                nearest_schema_identifier(name, self.schema).map_or(usize::MAX, |(_, d)| d)
            };
            set(F::Levenshtein, (distance as f64).min(LEVENSHTEIN_SENTINEL));
        }

        // lexical shape
        if let Some(ident) = self.name_node(node) {
            let raw = self.lexeme(ident);
            set(F::NameLength, raw.chars().count() as f64);
            set(F::NameHasDigit, flag(raw.chars().any(|c| c.is_ascii_digit())));
            set(F::NameHasUnderscore, flag(raw.contains('_')));
            set(F::NameAllCaps, flag(is_all_caps(raw)));
            set(F::NameMixedCase, flag(is_mixed_case(raw)));
            set(F::NameQuoted, flag(ident.flags.quoted));
            set(F::NameCaseFolded, flag(ident.flags.case_folded));
        }

        // context
        let select = scopes.first().map(|&s| self.index.node(s));
        if let Some(select) = select {
            let has_agg = projections(select).any(contains_aggregate);
            let has_group = select.children.iter().any(|c| c.kind == NodeKind::GroupBy);
            set(F::SelectHasAggregate, flag(has_agg));
            set(F::QueryHasGroupBy, flag(has_group));
            let inside_agg = self.inside_aggregate(id);
            set(F::InsideAggregate, flag(inside_agg));
            if column.is_some() && has_agg && !has_group && !inside_agg && self.in_projection(id, select.id) {
                set(F::AggContext, 1.0);
            }
        }
        set(F::TypeCompat, operand_type_compat(node, &frame, self.schema).code());
        if let Some(t) = expr_type(node, &frame, self.schema) {
            let slot = match t {
                DataType::Numeric => F::TypeNumeric,
                DataType::Text => F::TypeText,
                DataType::Date => F::TypeDate,
                DataType::Bool => F::TypeBool,
                DataType::Other => F::TypeOther,
            };
            set(slot, 1.0);
        }
        if let Some(pattern) = self.like_pattern(node) {
            set(F::LikeHasPercent, flag(pattern.contains('%')));
            set(F::LikeHasUnderscore, flag(pattern.contains('_')));
            set(F::LikePatternLength, pattern.chars().count() as f64);
        }
        if node.kind == NodeKind::In {
            match node.children.get(1) {
                Some(s) if s.kind == NodeKind::Subquery => set(F::InSubquery, 1.0),
                _ => set(F::InListSize, node.children.len().saturating_sub(1) as f64),
            }
        }
        if let (Some(kind), Some(text)) = (node.flags.literal, node.content()) {
            let slot = match kind {
                LiteralKind::Number => F::LiteralNumber,
                LiteralKind::String => F::LiteralString,
                LiteralKind::Null => F::LiteralNull,
                LiteralKind::Boolean => F::LiteralBool,
            };
            set(slot, 1.0);
            set(F::LiteralLength, text.chars().count() as f64);
            if kind == LiteralKind::Number {
                set(F::LiteralMagnitude, magnitude(text));
            }
        }
        match node.kind {
            NodeKind::Agg => set(F::FuncKnown, 1.0),
            NodeKind::Func => set(F::FuncKnown, flag(node.content().is_some_and(is_known_function))),
            NodeKind::Select => {
                set(F::ProjectionCount, projections(node).count() as f64);
                set(F::HasDistinct, flag(node.children.iter().any(|c| c.kind == NodeKind::Other(OtherTag::Distinct))));
            }
            NodeKind::Join => set(F::JoinHasCondition, flag(node.children.len() > 1)),
            _ => {}
        }

        v[KIND_OFFSET + kind_slot(node.kind)] = 1.0;
        match self.index.parent(id) {
            Some(p) => v[PARENT_OFFSET + kind_slot(p.kind)] = 1.0,
            None => v[ROOT_PARENT] = 1.0,
        }
        v
    }

    /// The `Column` a node belongs to: itself, or the column owning a name
    /// or qualifier identifier.
    fn owning_column(&self, node: &'a SqlNode) -> Option<&'a SqlNode> {
        match (node.kind, node.flags.role) {
            (NodeKind::Column, _) => Some(node),
            (NodeKind::Identifier, Some(IdentRole::ColumnName | IdentRole::Qualifier)) => {
                self.index.parent(node.id).filter(|p| p.kind == NodeKind::Column)
            }
            _ => None,
        }
    }

    /// The name checked against the schema, for nodes that name a table or
    /// column. Qualifiers are checked through the table they resolve to.
    fn schema_name<'f>(&'f self, node: &'f SqlNode, frame: &'f ScopeFrame) -> Option<&'f str> {
        match (node.kind, node.flags.role) {
            (NodeKind::Column | NodeKind::Table, _) => node.content(),
            (NodeKind::Identifier, Some(IdentRole::Qualifier)) => {
                let q = node.content()?;
                match frame.resolve_qualifier(q) {
                    Some(s) if matches!(s.kind, SourceKind::Derived { .. }) => None,
                    Some(s) => Some(s.name.as_str()),
                    None => Some(self.aliases.resolve(q)),
                }
            }
            (NodeKind::Identifier, _) => node.content(),
            _ => None,
        }
    }

    /// The identifier whose source text gives a node's name shape.
    fn name_node(&self, node: &'a SqlNode) -> Option<&'a SqlNode> {
        match node.kind {
            NodeKind::Identifier | NodeKind::TableAlias => Some(node),
            NodeKind::Column => node.children.iter().find(|c| c.flags.role == Some(IdentRole::ColumnName)),
            NodeKind::Table => node.children.iter().find(|c| c.flags.role == Some(IdentRole::TableName)),
            _ => None,
        }
    }

    fn lexeme(&self, node: &SqlNode) -> &'a str {
        let raw = self.sql.get(node.span.start..node.span.end).unwrap_or_default();
        raw.trim_matches(|c| matches!(c, '"' | '`' | '[' | ']'))
    }

    fn clause_of(&self, id: usize) -> Option<F> {
        core::iter::once(self.index.node(id)).chain(self.index.ancestors(id)).find_map(|n| {
            Some(match n.kind {
                NodeKind::From => F::ClauseFrom,
                NodeKind::Join => F::ClauseJoin,
                NodeKind::Where => F::ClauseWhere,
                NodeKind::GroupBy => F::ClauseGroupBy,
                NodeKind::Having => F::ClauseHaving,
                NodeKind::OrderBy => F::ClauseOrderBy,
                NodeKind::Limit => F::ClauseLimit,
                NodeKind::Select => F::ClauseSelect,
                _ => return None,
            })
        })
    }

    fn inside_aggregate(&self, id: usize) -> bool {
        self.index
            .ancestors(id)
            .take_while(|n| n.kind != NodeKind::Select)
            .any(|n| n.kind == NodeKind::Agg)
    }

    /// Whether `id` sits in the projection list of `select_id` (not inside
    /// a nested query).
    fn in_projection(&self, id: usize, select_id: usize) -> bool {
        let mut cur = id;
        while let Some(p) = self.index.parent(cur) {
            if p.id == select_id {
                return is_projection(self.index.node(cur));
            }
            if p.kind == NodeKind::Select {
                return false;
            }
            cur = p.id;
        }
        false
    }

    fn is_projection_alias(&self, scopes: &[usize], name: &str) -> bool {
        scopes.first().is_some_and(|&s| {
            projections(self.index.node(s)).any(|p| p.kind == NodeKind::Alias && p.content() == Some(name))
        })
    }

    /// The LIKE pattern text, for a `Like` node or its pattern literal.
    fn like_pattern(&self, node: &'a SqlNode) -> Option<&'a str> {
        let like = match node.kind {
            NodeKind::Like => node,
            NodeKind::Literal => self.index.parent(node.id).filter(|p| {
                p.kind == NodeKind::Like && p.children.get(1).is_some_and(|c| c.id == node.id)
            })?,
            _ => return None,
        };
        let pattern = like.children.get(1)?.unwrap_wrappers();
        (pattern.flags.literal == Some(LiteralKind::String)).then(|| pattern.content()).flatten()
    }
}

fn is_projection(node: &SqlNode) -> bool {
    !matches!(
        node.kind,
        NodeKind::From
            | NodeKind::Join
            | NodeKind::Where
            | NodeKind::GroupBy
            | NodeKind::Having
            | NodeKind::OrderBy
            | NodeKind::Limit
            | NodeKind::Other(OtherTag::Distinct)
    )
}

fn projections(select: &SqlNode) -> impl Iterator<Item = &SqlNode> {
    select.children.iter().filter(|c| is_projection(c))
}

/// Whether an expression calls an aggregate outside any nested query.
fn contains_aggregate(node: &SqlNode) -> bool {
    match node.kind {
        NodeKind::Agg => true,
        NodeKind::Subquery | NodeKind::Select => false,
        _ => node.children.iter().any(contains_aggregate),
    }
}

fn is_known_function(name: &str) -> bool {
    [NUMERIC_FUNCS, TEXT_FUNCS, DATE_FUNCS, OTHER_FUNCS].iter().any(|list| list.contains(&name))
}

fn is_all_caps(s: &str) -> bool {
    s.chars().any(char::is_alphabetic) && !s.chars().any(char::is_lowercase)
}

/// A lowercase letter later followed by an uppercase one.
fn is_mixed_case(s: &str) -> bool {
    s.chars().skip_while(|c| !c.is_lowercase()).any(char::is_uppercase)
}

/// Signed log10(1 + |x|) of a numeric lexeme.
fn magnitude(text: &str) -> f64 {
    let value = match text.strip_prefix("0x") {
        Some(hex) => i64::from_str_radix(hex, 16).map(|v| v as f64).unwrap_or(0.0),
        None => text.parse::<f64>().unwrap_or(0.0),
    };
    libm::copysign(libm::log10(1.0 + libm::fabs(value)), value)
}
