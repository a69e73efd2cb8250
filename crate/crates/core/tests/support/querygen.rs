//! Random query pairs for labeler invariants.

#![allow(dead_code)]

use std::fmt::Write;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use sqlnode_core::ast::{parse_sql, Dialect, SqlNode};
use sqlnode_core::label::{align_and_label, label_with_ablation, Label};

pub const TABLES: [&str; 5] = ["t1", "t2", "t3", "t4", "t5"];
pub const COLUMNS: [&str; 5] = ["id", "name", "age", "city", "score"];
pub const AGGS: [&str; 4] = ["COUNT", "SUM", "MAX", "MIN"];
pub const ALIASES: [&str; 4] = ["a", "b", "c", "d"];
pub const RENAMED: [&str; 4] = ["p", "q", "r", "s"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Col {
    /// Index into the query's sources; `None` leaves it unqualified.
    source: Option<usize>,
    name: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cmp {
    Eq,
    Neq,
    Gt,
    Lt,
    Gte,
    Lte,
}

impl Cmp {
    const ALL: [Cmp; 6] = [Cmp::Eq, Cmp::Neq, Cmp::Gt, Cmp::Lt, Cmp::Gte, Cmp::Lte];

    fn sql(self) -> &'static str {
        match self {
            Cmp::Eq => "=",
            Cmp::Neq => "<>",
            Cmp::Gt => ">",
            Cmp::Lt => "<",
            Cmp::Gte => ">=",
            Cmp::Lte => "<=",
        }
    }

    fn flipped(self) -> Option<Cmp> {
        match self {
            Cmp::Gt => Some(Cmp::Lt),
            Cmp::Lt => Some(Cmp::Gt),
            Cmp::Gte => Some(Cmp::Lte),
            Cmp::Lte => Some(Cmp::Gte),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Col(Col),
    Num(i64),
    Str(usize),
    /// `true` for `+`, `false` for `*`.
    Arith(bool, Box<Operand>, Box<Operand>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Cmp(Cmp, Operand, Operand),
    And(Vec<Cond>),
    Or(Vec<Cond>),
    Like(Col, usize),
    In(Col, Vec<i64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Proj {
    Col(Col),
    Agg(usize, Col),
    Star,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    table: usize,
    aliased: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    distinct: bool,
    projections: Vec<Proj>,
    sources: Vec<Source>,
    join_conds: Vec<Cond>,
    filter: Option<Cond>,
    group_by: Vec<Col>,
    order_by: Vec<(Col, bool)>,
    limit: Option<u32>,
}

pub struct Render<'q> {
    query: &'q Query,
    aliases: &'q [&'static str; 4],
}

impl Render<'_> {
    fn qualifier(&self, source: usize) -> &'static str {
        let i = source % self.query.sources.len();
        let s = &self.query.sources[i];
        if s.aliased {
            self.aliases[i]
        } else {
            TABLES[s.table]
        }
    }

    fn col(&self, out: &mut String, c: &Col) {
        if let Some(s) = c.source {
            write!(out, "{}.", self.qualifier(s)).unwrap();
        }
        out.push_str(COLUMNS[c.name]);
    }

    fn operand(&self, out: &mut String, o: &Operand) {
        match o {
            Operand::Col(c) => self.col(out, c),
            Operand::Num(n) => write!(out, "{n}").unwrap(),
            Operand::Str(s) => write!(out, "'v{s}'").unwrap(),
            Operand::Arith(add, l, r) => {
                out.push('(');
                self.operand(out, l);
                out.push_str(if *add { " + " } else { " * " });
                self.operand(out, r);
                out.push(')');
            }
        }
    }

    fn cond(&self, out: &mut String, c: &Cond) {
        match c {
            Cond::Cmp(op, l, r) => {
                self.operand(out, l);
                write!(out, " {} ", op.sql()).unwrap();
                self.operand(out, r);
            }
            Cond::And(items) | Cond::Or(items) => {
                let sep = if matches!(c, Cond::And(_)) { " AND " } else { " OR " };
                out.push('(');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(sep);
                    }
                    self.cond(out, item);
                }
                out.push(')');
            }
            Cond::Like(col, p) => {
                self.col(out, col);
                write!(out, " LIKE 'p{p}%'").unwrap();
            }
            Cond::In(col, items) => {
                self.col(out, col);
                out.push_str(" IN (");
                let items: Vec<String> = items.iter().map(i64::to_string).collect();
                out.push_str(&items.join(", "));
                out.push(')');
            }
        }
    }

    fn sql(&self) -> String {
        let q = self.query;
        let mut out = String::from("SELECT ");
        if q.distinct {
            out.push_str("DISTINCT ");
        }
        for (i, p) in q.projections.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            match p {
                Proj::Col(c) => self.col(&mut out, c),
                Proj::Agg(f, c) => {
                    write!(out, "{}(", AGGS[*f]).unwrap();
                    self.col(&mut out, c);
                    out.push(')');
                }
                Proj::Star => out.push('*'),
            }
        }
        for (i, s) in q.sources.iter().enumerate() {
            out.push_str(if i == 0 { " FROM " } else { " JOIN " });
            out.push_str(TABLES[s.table]);
            if s.aliased {
                write!(out, " AS {}", self.aliases[i]).unwrap();
            }
            if i > 0 {
                out.push_str(" ON ");
                self.cond(&mut out, &q.join_conds[i - 1]);
            }
        }
        if let Some(f) = &q.filter {
            out.push_str(" WHERE ");
            self.cond(&mut out, f);
        }
        if !q.group_by.is_empty() {
            out.push_str(" GROUP BY ");
            for (i, c) in q.group_by.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                self.col(&mut out, c);
            }
        }
        if !q.order_by.is_empty() {
            out.push_str(" ORDER BY ");
            for (i, (c, desc)) in q.order_by.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                self.col(&mut out, c);
                if *desc {
                    out.push_str(" DESC");
                }
            }
        }
        if let Some(n) = q.limit {
            write!(out, " LIMIT {n}").unwrap();
        }
        out
    }
}

pub fn sql(q: &Query) -> String {
    Render { query: q, aliases: &ALIASES }.sql()
}

pub fn parse(text: &str) -> SqlNode {
    parse_sql(text, Dialect::Sqlite).unwrap_or_else(|e| panic!("{text}: {e}"))
}

pub fn col() -> impl Strategy<Value = Col> {
    (prop::option::of(0..3usize), 0..COLUMNS.len()).prop_map(|(source, name)| Col { source, name })
}

pub fn operand() -> impl Strategy<Value = Operand> {
    let leaf = prop_oneof![
        3 => col().prop_map(Operand::Col),
        2 => (0..4i64).prop_map(Operand::Num),
        1 => (0..3usize).prop_map(Operand::Str),
    ];
    leaf.prop_recursive(2, 6, 2, |inner| {
        (any::<bool>(), inner.clone(), inner).prop_map(|(add, l, r)| Operand::Arith(add, Box::new(l), Box::new(r)))
    })
}

pub fn cond() -> impl Strategy<Value = Cond> {
    let leaf = prop_oneof![
        4 => (prop::sample::select(Cmp::ALL.to_vec()), operand(), operand()).prop_map(|(op, l, r)| Cond::Cmp(op, l, r)),
        1 => (col(), 0..3usize).prop_map(|(c, p)| Cond::Like(c, p)),
        1 => (col(), prop::collection::vec(0..5i64, 1..4)).prop_map(|(c, items)| Cond::In(c, items)),
    ];
    leaf.prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Cond::And),
            prop::collection::vec(inner, 2..4).prop_map(Cond::Or),
        ]
    })
}

pub fn query() -> impl Strategy<Value = Query> {
    let proj = prop_oneof![
        4 => col().prop_map(Proj::Col),
        2 => (0..AGGS.len(), col()).prop_map(|(f, c)| Proj::Agg(f, c)),
        1 => Just(Proj::Star),
    ];
    let source = (0..TABLES.len(), any::<bool>()).prop_map(|(table, aliased)| Source { table, aliased });
    (
        any::<bool>(),
        prop::collection::vec(proj, 1..4),
        prop::collection::vec(source, 1..4),
        prop::collection::vec(cond(), 2),
        prop::option::of(cond()),
        prop::collection::vec(col(), 0..3),
        prop::collection::vec((col(), any::<bool>()), 0..3),
        prop::option::of(1..20u32),
    )
        .prop_map(|(distinct, projections, sources, mut join_conds, filter, group_by, order_by, limit)| {
            join_conds.truncate(sources.len() - 1);
            Query { distinct, projections, sources, join_conds, filter, group_by, order_by, limit }
        })
}

/// A generated query derived from a gold one by a few local edits.
pub fn mutated(gold: &Query, edits: &[(u8, usize)]) -> Query {
    let mut q = gold.clone();
    for &(kind, site) in edits {
        match kind % 10 {
            0 => {
                let n = q.sources.len();
                let s = &mut q.sources[site % n];
                s.table = (s.table + 1) % TABLES.len();
            }
            1 => {
                let n = q.projections.len();
                if let Proj::Col(c) | Proj::Agg(_, c) = &mut q.projections[site % n] {
                    c.name = (c.name + 1) % COLUMNS.len();
                }
            }
            2 => {
                if let Some(Cond::Cmp(_, _, r)) = &mut q.filter {
                    *r = Operand::Num(site as i64 % 7);
                }
            }
            3 => {
                if let Some(Cond::Cmp(op, _, _)) = &mut q.filter {
                    *op = Cmp::ALL[site % Cmp::ALL.len()];
                }
            }
            4 => q.filter = None,
            5 => {
                if q.order_by.is_empty() {
                    q.order_by.push((Col { source: None, name: site % COLUMNS.len() }, site % 2 == 0));
                } else {
                    q.order_by.clear();
                }
            }
            6 => q.limit = if q.limit.is_some() { None } else { Some(site as u32 % 9 + 1) },
            7 => q.distinct = !q.distinct,
            8 => q.projections.rotate_left(1),
            _ => {
                let n = q.projections.len();
                if let Proj::Agg(f, _) = &mut q.projections[site % n] {
                    *f = (*f + 1) % AGGS.len();
                }
            }
        }
    }
    q
}

pub fn swap_operand(o: &Operand) -> Operand {
    match o {
        Operand::Arith(add, l, r) => Operand::Arith(*add, Box::new(swap_operand(r)), Box::new(swap_operand(l))),
        other => other.clone(),
    }
}

/// Swaps operands of symmetric operators and reverses AND/OR operand
/// lists, flipping anti-symmetric comparisons when `flip` is set.
pub fn commute(c: &Cond, flip: bool) -> Cond {
    match c {
        Cond::Cmp(op, l, r) => match (op, op.flipped()) {
            (Cmp::Eq | Cmp::Neq, _) => Cond::Cmp(*op, swap_operand(r), swap_operand(l)),
            (_, Some(f)) if flip => Cond::Cmp(f, swap_operand(r), swap_operand(l)),
            _ => Cond::Cmp(*op, swap_operand(l), swap_operand(r)),
        },
        Cond::And(items) => Cond::And(items.iter().rev().map(|i| commute(i, flip)).collect()),
        Cond::Or(items) => Cond::Or(items.iter().rev().map(|i| commute(i, flip)).collect()),
        other => other.clone(),
    }
}

pub fn commuted(q: &Query, flip: bool) -> Query {
    let mut out = q.clone();
    out.join_conds = q.join_conds.iter().map(|c| commute(c, flip)).collect();
    out.filter = q.filter.as_ref().map(|c| commute(c, flip));
    out
}

pub fn labels(gen: &str, gold: &str) -> Vec<Label> {
    align_and_label(&parse(gen), &parse(gold)).labels().to_vec()
}

pub fn edits() -> impl Strategy<Value = Vec<(u8, usize)>> {
    prop::collection::vec((any::<u8>(), any::<usize>()), 0..4)
}


/// Strategy for a (gold, generated) pair where the generated query is the
/// gold one with up to three local edits.
pub fn query_pair() -> impl Strategy<Value = (Query, Query)> {
    (query(), edits()).prop_map(|(gold, e)| {
        let gen = mutated(&gold, &e);
        (gold, gen)
    })
}

pub fn check_identity(q: &Query) -> Result<(), TestCaseError> {
    let text = sql(q);
    let tree = parse(&text);
    let map = align_and_label(&tree, &tree);
    prop_assert_eq!(map.error_count(), 0, "{}", text);
    Ok(())
}

pub fn check_symmetric_swap(gold: &Query, gen: &Query) -> Result<(), TestCaseError> {
    let gen = sql(gen);
    prop_assert_eq!(labels(&gen, &sql(gold)), labels(&gen, &sql(&commuted(gold, false))));
    Ok(())
}

pub fn check_antisymmetric_flip(gold: &Query, gen: &Query) -> Result<(), TestCaseError> {
    let gen = sql(gen);
    prop_assert_eq!(labels(&gen, &sql(gold)), labels(&gen, &sql(&commuted(gold, true))));
    Ok(())
}

pub fn check_alias_renaming(gold: &Query, gen: &Query, shift: usize) -> Result<(), TestCaseError> {
    let gen = sql(gen);
    let mut renamed = RENAMED;
    renamed.rotate_left(shift % RENAMED.len());
    let gold_renamed = Render { query: gold, aliases: &renamed }.sql();
    prop_assert_eq!(labels(&gen, &sql(gold)), labels(&gen, &gold_renamed));
    Ok(())
}

/// Drops the clauses selected by `drop` (WHERE, GROUP BY, ORDER BY, LIMIT,
/// DISTINCT) from the generated side only.
pub fn check_omission(gold: &Query, drop: [bool; 5]) -> Result<(), TestCaseError> {
    let mut gen = gold.clone();
    if drop[0] {
        gen.filter = None;
    }
    if drop[1] {
        gen.group_by.clear();
    }
    if drop[2] {
        gen.order_by.clear();
    }
    if drop[3] {
        gen.limit = None;
    }
    if drop[4] {
        gen.distinct = false;
    }
    let gen_tree = parse(&sql(&gen));
    let map = align_and_label(&gen_tree, &parse(&sql(gold)));
    prop_assert_eq!(map.len(), gen_tree.node_count());
    prop_assert_eq!(map.error_count(), 0, "{}", sql(&gen));
    Ok(())
}

pub fn check_monotone_rescue(gold: &Query, gen: &Query) -> Result<(), TestCaseError> {
    let gen_tree = parse(&sql(gen));
    let gold_tree = parse(&sql(gold));
    let with = label_with_ablation(&gen_tree, &gold_tree, true).error_ids();
    let without = label_with_ablation(&gen_tree, &gold_tree, false).error_ids();
    prop_assert!(with.iter().all(|id| without.contains(id)), "{:?} not within {:?}", with, without);
    Ok(())
}
