//! Query pairs with errors planted at known sites over a fixed 5-table
//! schema, and the node labels those sites imply.
//!
//! A planted unit is wrong, and so is every ancestor that is not a
//! container the labeler suppresses. Units:
//! - table typo: the Table and its name, plus every column reference
//!   qualified through that table's alias
//! - column swap: the Column and all of its identifiers
//! - literal change: the Literal
//! - operator flip: the comparison (ordering operators only)

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use sqlnode_core::ast::{parse_sql, Dialect, NodeKind, Span, TreeIndex};
use sqlnode_core::label::SUPPRESSIBLE;
use sqlnode_core::schema::{ColumnDef, DataType, Schema, TableDef};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Ty {
    Num,
    Text,
    Date,
}

pub const DB_ID: &str = "planted";

pub const TABLES: [(&str, &[(&str, Ty)]); 5] = [
    ("employee", &[("id", Ty::Num), ("name", Ty::Text), ("salary", Ty::Num), ("dept_id", Ty::Num), ("hired", Ty::Date)]),
    ("department", &[("id", Ty::Num), ("title", Ty::Text), ("budget", Ty::Num), ("city", Ty::Text)]),
    ("project", &[("id", Ty::Num), ("label", Ty::Text), ("dept_id", Ty::Num), ("deadline", Ty::Date), ("cost", Ty::Num)]),
    ("customer", &[("id", Ty::Num), ("full_name", Ty::Text), ("region", Ty::Text), ("credit", Ty::Num)]),
    ("orders", &[("id", Ty::Num), ("customer_id", Ty::Num), ("employee_id", Ty::Num), ("amount", Ty::Num), ("placed", Ty::Date), ("status", Ty::Text)]),
];

/// (left table, left column, right table, right column)
const JOINS: [(usize, usize, usize, usize); 4] = [(0, 3, 1, 0), (2, 2, 1, 0), (4, 1, 3, 0), (4, 2, 0, 0)];

const STRINGS: [&str; 8] = ["north", "south", "open", "closed", "alpha", "beta", "Paris", "Oslo"];
const DATES: [&str; 4] = ["2020-01-01", "2021-06-30", "2019-12-31", "2022-03-15"];
const AGGS: [&str; 4] = ["SUM", "AVG", "MAX", "MIN"];

pub fn schema() -> Schema {
    let tables = TABLES
        .iter()
        .map(|(name, cols)| {
            let cols = cols
                .iter()
                .map(|(c, ty)| {
                    let dt = match ty {
                        Ty::Num => DataType::Numeric,
                        Ty::Text => DataType::Text,
                        Ty::Date => DataType::Date,
                    };
                    ColumnDef::new(*c, dt)
                })
                .collect();
            TableDef::new(*name, cols)
        })
        .collect();
    Schema::new(DB_ID, tables).unwrap()
}

#[derive(Clone, Debug)]
struct Source {
    table: usize,
    /// Replaces the table's name when rendering.
    typo: Option<String>,
}

/// A column reference: `source` indexes the query's sources; `foreign`
/// names a table outside the FROM clause.
#[derive(Clone, Debug, PartialEq)]
struct ColRef {
    source: usize,
    foreign: Option<usize>,
    col: usize,
    swapped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Eq,
    Neq,
    Gt,
    Lt,
    Ge,
    Le,
}

impl Op {
    fn sql(self) -> &'static str {
        match self {
            Op::Eq => "=",
            Op::Neq => "<>",
            Op::Gt => ">",
            Op::Lt => "<",
            Op::Ge => ">=",
            Op::Le => "<=",
        }
    }

    fn ordering(self) -> bool {
        matches!(self, Op::Gt | Op::Lt | Op::Ge | Op::Le)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Lit {
    Num(i64),
    Str(String),
}

impl Lit {
    fn sql(&self) -> String {
        match self {
            Lit::Num(n) => n.to_string(),
            Lit::Str(s) => format!("'{s}'"),
        }
    }
}

#[derive(Clone, Debug)]
struct Cond {
    col: ColRef,
    op: Op,
    lit: Lit,
    flipped: bool,
    changed: bool,
}

#[derive(Clone, Debug)]
enum Proj {
    Col(ColRef),
    Agg(&'static str, ColRef),
    CountStar,
}

#[derive(Clone, Debug)]
struct Query {
    sources: Vec<Source>,
    join_on: Option<(ColRef, ColRef)>,
    proj: Vec<Proj>,
    conds: Vec<Cond>,
    group_by: Option<ColRef>,
    order: Option<(ColRef, bool)>,
    limit: Option<(i64, bool)>,
}

const ALIASES: [&str; 2] = ["a", "b"];

impl Query {
    fn qualified(&self) -> bool {
        self.sources.len() > 1
    }

    fn col_name(&self, c: &ColRef) -> &'static str {
        let table = c.foreign.unwrap_or(self.sources[c.source].table);
        TABLES[table].1[c.col].0
    }

    fn col_ty(&self, c: &ColRef) -> Ty {
        let table = c.foreign.unwrap_or(self.sources[c.source].table);
        TABLES[table].1[c.col].1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SiteKind {
    TableName { source: usize },
    Column { source: usize, swapped: bool },
    Literal,
    Comparison,
}

#[derive(Debug, Clone, Copy)]
struct Site {
    kind: SiteKind,
    span: Span,
    planted: bool,
}

struct Renderer<'q> {
    q: &'q Query,
    sql: String,
    sites: Vec<Site>,
}

impl<'q> Renderer<'q> {
    fn push(&mut self, s: &str) {
        self.sql.push_str(s);
    }

    fn site(&mut self, kind: SiteKind, planted: bool, text: &str) {
        let start = self.sql.len();
        self.push(text);
        self.sites.push(Site { kind, span: Span::new(start, self.sql.len()), planted });
    }

    fn col(&mut self, c: &ColRef) {
        let name = self.q.col_name(c);
        let text = if self.q.qualified() { format!("{}.{name}", ALIASES[c.source]) } else { name.to_owned() };
        self.site(SiteKind::Column { source: c.source, swapped: c.swapped }, c.swapped, &text);
    }

    fn lit(&mut self, lit: &Lit, changed: bool) {
        self.site(SiteKind::Literal, changed, &lit.sql());
    }

    fn render(mut self) -> (String, Vec<Site>) {
        let q = self.q;
        self.push("SELECT ");
        for (i, p) in q.proj.iter().enumerate() {
            if i > 0 {
                self.push(", ");
            }
            match p {
                Proj::Col(c) => self.col(c),
                Proj::Agg(f, c) => {
                    self.push(f);
                    self.push("(");
                    self.col(c);
                    self.push(")");
                }
                Proj::CountStar => self.push("COUNT(*)"),
            }
        }
        self.push(" FROM ");
        for (i, s) in q.sources.iter().enumerate() {
            if i > 0 {
                self.push(" JOIN ");
            }
            let name = s.typo.clone().unwrap_or_else(|| TABLES[s.table].0.to_owned());
            self.site(SiteKind::TableName { source: i }, s.typo.is_some(), &name);
            if q.qualified() {
                self.push(&format!(" AS {}", ALIASES[i]));
            }
        }
        if let Some((l, r)) = &q.join_on {
            self.push(" ON ");
            self.col(l);
            self.push(" = ");
            self.col(r);
        }
        for (i, c) in q.conds.iter().enumerate() {
            self.push(if i == 0 { " WHERE " } else { " AND " });
            let start = self.sql.len();
            self.col(&c.col);
            self.push(&format!(" {} ", c.op.sql()));
            self.lit(&c.lit, c.changed);
            self.sites.push(Site { kind: SiteKind::Comparison, span: Span::new(start, self.sql.len()), planted: c.flipped });
        }
        if let Some(g) = &q.group_by {
            self.push(" GROUP BY ");
            self.col(g);
        }
        if let Some((o, desc)) = &q.order {
            self.push(" ORDER BY ");
            self.col(o);
            self.push(if *desc { " DESC" } else { " ASC" });
        }
        if let Some((n, changed)) = q.limit {
            self.push(" LIMIT ");
            self.lit(&Lit::Num(n), changed);
        }
        (self.sql, self.sites)
    }
}

fn render(q: &Query) -> (String, Vec<Site>) {
    Renderer { q, sql: String::new(), sites: Vec::new() }.render()
}

fn pick_col<R: Rng>(rng: &mut R, q: &Query, want: Option<Ty>) -> ColRef {
    loop {
        let source = rng.gen_range(0..q.sources.len());
        let cols = TABLES[q.sources[source].table].1;
        let col = rng.gen_range(0..cols.len());
        if want.is_none_or(|t| cols[col].1 == t) {
            return ColRef { source, foreign: None, col, swapped: false };
        }
    }
}

fn literal_for<R: Rng>(rng: &mut R, ty: Ty) -> Lit {
    match ty {
        Ty::Num => Lit::Num(rng.gen_range(1..200)),
        Ty::Text => Lit::Str(STRINGS.choose(rng).unwrap().to_string()),
        Ty::Date => Lit::Str(DATES.choose(rng).unwrap().to_string()),
    }
}

fn gen_query<R: Rng>(rng: &mut R) -> Query {
    let mut q = Query {
        sources: Vec::new(),
        join_on: None,
        proj: Vec::new(),
        conds: Vec::new(),
        group_by: None,
        order: None,
        limit: None,
    };
    if rng.gen_bool(0.4) {
        let &(lt, lc, rt, rc) = JOINS.choose(rng).unwrap();
        q.sources = vec![Source { table: lt, typo: None }, Source { table: rt, typo: None }];
        q.join_on = Some((
            ColRef { source: 0, foreign: None, col: lc, swapped: false },
            ColRef { source: 1, foreign: None, col: rc, swapped: false },
        ));
    } else {
        q.sources = vec![Source { table: rng.gen_range(0..TABLES.len()), typo: None }];
    }
    if rng.gen_bool(0.25) {
        let g = pick_col(rng, &q, Some(Ty::Text));
        q.proj.push(Proj::Col(g.clone()));
        q.proj.push(if rng.gen_bool(0.5) {
            Proj::CountStar
        } else {
            Proj::Agg(AGGS.choose(rng).unwrap(), pick_col(rng, &q, Some(Ty::Num)))
        });
        q.group_by = Some(g);
    } else {
        for _ in 0..rng.gen_range(1..=3) {
            let c = pick_col(rng, &q, None);
            if !q.proj.iter().any(|p| matches!(p, Proj::Col(x) if *x == c)) {
                q.proj.push(Proj::Col(c));
            }
        }
    }
    for _ in 0..rng.gen_range(0..=2) {
        let col = pick_col(rng, &q, None);
        let ty = q.col_ty(&col);
        let op = match ty {
            Ty::Text => *[Op::Eq, Op::Neq].choose(rng).unwrap(),
            _ => *[Op::Eq, Op::Gt, Op::Lt, Op::Ge, Op::Le].choose(rng).unwrap(),
        };
        q.conds.push(Cond { lit: literal_for(rng, ty), col, op, flipped: false, changed: false });
    }
    if q.group_by.is_none() && rng.gen_bool(0.3) {
        q.order = Some((pick_col(rng, &q, None), rng.gen_bool(0.5)));
        if rng.gen_bool(0.5) {
            q.limit = Some((rng.gen_range(1..20), false));
        }
    }
    q
}

fn typo<R: Rng>(rng: &mut R, name: &str) -> String {
    let chars: Vec<char> = name.chars().collect();
    let i = rng.gen_range(1..chars.len() - 1);
    let mut out = chars.clone();
    match rng.gen_range(0..4) {
        0 => {
            out.remove(i);
        }
        1 => out.insert(i, chars[i]),
        2 => out.swap(i, i + 1),
        _ => out.push('s'),
    }
    out.into_iter().collect()
}

/// Every mutable column-reference slot of a query.
fn col_slots(q: &mut Query) -> Vec<&mut ColRef> {
    let mut slots: Vec<&mut ColRef> = Vec::new();
    for p in &mut q.proj {
        match p {
            Proj::Col(c) | Proj::Agg(_, c) => slots.push(c),
            Proj::CountStar => {}
        }
    }
    if let Some((l, r)) = &mut q.join_on {
        slots.push(l);
        slots.push(r);
    }
    slots.extend(q.conds.iter_mut().map(|c| &mut c.col));
    slots.extend(q.group_by.as_mut());
    slots.extend(q.order.as_mut().map(|(c, _)| c));
    slots
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    TableTypo,
    ColumnSwap,
    LiteralChange,
    OperatorFlip,
}

/// Applies one mutation of `kind` if the query has a site for it. New
/// names and values never occur in the gold query.
fn mutate<R: Rng>(rng: &mut R, q: &mut Query, kind: Mutation, gold_sql: &str) -> bool {
    let used = |s: &str| gold_sql.split(|c: char| !c.is_alphanumeric() && c != '_' && c != '-').any(|w| w == s);
    match kind {
        Mutation::TableTypo => {
            let i = rng.gen_range(0..q.sources.len());
            if q.sources[i].typo.is_some() {
                return false;
            }
            let name = typo(rng, TABLES[q.sources[i].table].0);
            if used(&name) || TABLES.iter().any(|t| t.0 == name) {
                return false;
            }
            q.sources[i].typo = Some(name);
            true
        }
        Mutation::ColumnSwap => {
            let n_sources = q.sources.len();
            let tables: Vec<usize> = q.sources.iter().map(|s| s.table).collect();
            let mut slots = col_slots(q);
            let Some(slot) = slots.choose_mut(rng) else { return false };
            if slot.swapped {
                return false;
            }
            // a column of the same source, another source, or a table not in scope
            let source = rng.gen_range(0..n_sources);
            let foreign = rng.gen_bool(0.3).then(|| rng.gen_range(0..TABLES.len())).filter(|t| !tables.contains(t));
            let table = foreign.unwrap_or(tables[source]);
            let col = rng.gen_range(0..TABLES[table].1.len());
            if used(TABLES[table].1[col].0) {
                return false;
            }
            **slot = ColRef { source, foreign, col, swapped: true };
            true
        }
        Mutation::LiteralChange => {
            let with_limit = usize::from(q.limit.is_some());
            let n = q.conds.len() + with_limit;
            if n == 0 {
                return false;
            }
            let i = rng.gen_range(0..n);
            if i == q.conds.len() {
                let (old, changed) = q.limit.unwrap();
                let new = rng.gen_range(1..50);
                if changed || new == old || used(&new.to_string()) {
                    return false;
                }
                q.limit = Some((new, true));
                return true;
            }
            let ty = q.col_ty(&q.conds[i].col);
            let cond = &mut q.conds[i];
            let new = literal_for(rng, if ty == Ty::Num { Ty::Num } else { Ty::Text });
            let text = match &new {
                Lit::Num(n) => n.to_string(),
                Lit::Str(s) => s.clone(),
            };
            if cond.changed || new == cond.lit || used(&text) {
                return false;
            }
            cond.lit = new;
            cond.changed = true;
            true
        }
        Mutation::OperatorFlip => {
            let Some(cond) = q.conds.iter_mut().filter(|c| c.op.ordering() && !c.flipped).collect::<Vec<_>>().pop() else {
                return false;
            };
            let choices: Vec<Op> = [Op::Gt, Op::Lt, Op::Ge, Op::Le].into_iter().filter(|&o| o != cond.op).collect();
            cond.op = *choices.choose(rng).unwrap();
            cond.flipped = true;
            true
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedPair {
    pub generated: String,
    pub gold: String,
    pub mutations: Vec<Mutation>,
    /// Expected label of every generated node, by node id.
    pub truth: Vec<u8>,
}

/// A gold query and a copy with 0 to 2 planted errors.
pub fn planted_pair<R: Rng>(rng: &mut R) -> PlantedPair {
    let gold = gen_query(rng);
    let (gold_sql, _) = render(&gold);
    let mut gen = gold.clone();
    let wanted = match rng.gen_range(0..20) {
        0..=2 => 0,
        3..=15 => 1,
        _ => 2,
    };
    let mut mutations = Vec::new();
    let mut attempts = 0;
    while mutations.len() < wanted && attempts < 50 {
        attempts += 1;
        let kind = *[Mutation::TableTypo, Mutation::ColumnSwap, Mutation::ColumnSwap, Mutation::LiteralChange, Mutation::OperatorFlip]
            .choose(rng)
            .unwrap();
        if mutate(rng, &mut gen, kind, &gold_sql) {
            mutations.push(kind);
        }
    }
    let (gen_sql, sites) = render(&gen);
    let truth = truth_labels(&gen, &gen_sql, &sites);
    PlantedPair { generated: gen_sql, gold: gold_sql, mutations, truth }
}

fn truth_labels(q: &Query, sql: &str, sites: &[Site]) -> Vec<u8> {
    let tree = parse_sql(sql, Dialect::Sqlite).unwrap_or_else(|e| panic!("{sql}: {e}"));
    let index = TreeIndex::new(&tree);
    let find = |span: Span, pred: &dyn Fn(NodeKind) -> bool| {
        index
            .nodes()
            .iter()
            .find(|n| n.span == span && pred(n.kind))
            .unwrap_or_else(|| panic!("no node at {span:?} in {sql}"))
    };
    let typo_sources: BTreeSet<usize> =
        q.sources.iter().enumerate().filter(|(_, s)| s.typo.is_some()).map(|(i, _)| i).collect();
    let mut units = BTreeSet::new();
    for site in sites {
        match site.kind {
            SiteKind::TableName { .. } if site.planted => {
                let table = index.nodes().iter().find(|n| n.kind == NodeKind::Table && n.children[0].span == site.span).unwrap();
                units.insert(table.id);
                units.insert(table.children[0].id);
            }
            SiteKind::Column { source, swapped } => {
                let col = find(site.span, &|k| k == NodeKind::Column);
                if swapped {
                    units.insert(col.id);
                    units.extend(col.children.iter().map(|c| c.id));
                } else if q.qualified() && typo_sources.contains(&source) {
                    units.insert(col.id);
                    units.insert(col.children[0].id);
                }
            }
            SiteKind::Literal if site.planted => {
                units.insert(find(site.span, &|k| k == NodeKind::Literal).id);
            }
            SiteKind::Comparison if site.planted => {
                units.insert(find(site.span, &|k| k.is_comparison()).id);
            }
            _ => {}
        }
    }
    let mut truth = vec![0u8; index.len()];
    for &id in &units {
        truth[id] = 1;
        for a in index.ancestors(id) {
            if !SUPPRESSIBLE.contains(&a.kind) {
                truth[a.id] = 1;
            }
        }
    }
    truth
}
