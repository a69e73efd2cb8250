//! The thirteen worked (generated, gold) pairs used as a golden corpus for
//! the labeler, with the nodes each is expected to blame.

use alloc::string::String;
use alloc::vec::Vec;

use super::{label_with_ablation, LabelMap};
use crate::ast::{parse_sql, Dialect, ParseError, SqlNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelingCase {
    pub number: u8,
    pub title: &'static str,
    pub generated: &'static str,
    pub gold: &'static str,
    /// Nodes expected to be blamed, rendered as `Kind(content)`.
    pub blamed: &'static [&'static str],
    /// The listed nodes are alternatives ("X and/or Y"): blaming any of
    /// them counts as a pass.
    pub any_of: bool,
}

pub const LABELING_CASES: [LabelingCase; 13] = [
    LabelingCase {
        number: 1,
        title: "Perfect match",
        generated: "SELECT name FROM people",
        gold: "SELECT name FROM people",
        blamed: &[],
        any_of: false,
    },
    LabelingCase {
        number: 2,
        title: "Content error on table only",
        generated: "SELECT name FROM artists",
        gold: "SELECT name FROM artist",
        blamed: &["Table(artists)", "Identifier(artists)"],
        any_of: false,
    },
    LabelingCase {
        number: 3,
        title: "Content error on literal only",
        generated: "SELECT * FROM t WHERE a = 1",
        gold: "SELECT * FROM t WHERE a = 2",
        blamed: &["Literal(1)"],
        any_of: false,
    },
    LabelingCase {
        number: 4,
        title: "Type error on operator only",
        generated: "SELECT * FROM t WHERE a > 1",
        gold: "SELECT * FROM t WHERE a = 1",
        blamed: &["Gt"],
        any_of: false,
    },
    LabelingCase {
        number: 5,
        title: "Structural insertion blamed",
        generated: "SELECT * FROM t ORDER BY a",
        gold: "SELECT * FROM t",
        blamed: &["OrderBy", "Ordered(ASC)", "Column(a)", "Identifier(a)"],
        any_of: false,
    },
    LabelingCase {
        number: 6,
        title: "Structural omission not blamed",
        generated: "SELECT * FROM t",
        gold: "SELECT * FROM t ORDER BY a",
        blamed: &[],
        any_of: false,
    },
    LabelingCase {
        number: 7,
        title: "Symmetric operator equivalence",
        generated: "SELECT * FROM t WHERE a = b",
        gold: "SELECT * FROM t WHERE b = a",
        blamed: &[],
        any_of: false,
    },
    LabelingCase {
        number: 8,
        title: "Anti-symmetric operator equivalence",
        generated: "SELECT * FROM t WHERE a > b",
        gold: "SELECT * FROM t WHERE b < a",
        blamed: &[],
        any_of: false,
    },
    LabelingCase {
        number: 9,
        title: "Alias names may differ",
        generated: "SELECT x.name FROM artist AS x",
        gold: "SELECT a.name FROM artist AS a",
        blamed: &[],
        any_of: false,
    },
    LabelingCase {
        number: 10,
        title: "Unused alias declaration not an error",
        generated: "SELECT name FROM artist AS a",
        gold: "SELECT name FROM artist",
        blamed: &[],
        any_of: false,
    },
    LabelingCase {
        number: 11,
        title: "Qualified vs. unqualified column",
        generated: "SELECT a.name FROM artist AS a",
        gold: "SELECT name FROM artist",
        blamed: &[],
        any_of: false,
    },
    LabelingCase {
        number: 12,
        title: "Wrong base table is an error",
        generated: "SELECT name FROM albums AS a",
        gold: "SELECT name FROM artist AS a",
        blamed: &["Table(albums)", "Identifier(albums)"],
        any_of: true,
    },
    LabelingCase {
        number: 13,
        title: "Wrong alias used in column is an error",
        generated: "SELECT b.name FROM artist AS a",
        gold: "SELECT a.name FROM artist AS a",
        blamed: &["Column(b.name)", "Identifier(b)"],
        any_of: true,
    },
];

/// Result of labeling one labeling case.
#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub case: LabelingCase,
    pub tree: SqlNode,
    pub labels: LabelMap,
    /// Blamed nodes rendered as `Kind(content)`, in preorder.
    pub blamed: Vec<String>,
}

impl CaseOutcome {
    /// Whether the blamed set matches the listed one exactly.
    pub fn exact(&self) -> bool {
        self.blamed.len() == self.case.blamed.len() && self.blamed.iter().zip(self.case.blamed).all(|(a, b)| a == b)
    }

    /// Pass rule: exact match, or for "and/or" cases at least one listed
    /// node blamed.
    pub fn passes(&self) -> bool {
        if self.case.any_of {
            self.blamed.iter().any(|b| self.case.blamed.contains(&b.as_str()))
        } else {
            self.exact()
        }
    }
}

pub fn run_case(case: &LabelingCase, enable_rescue: bool) -> Result<CaseOutcome, ParseError> {
    let tree = parse_sql(case.generated, Dialect::Sqlite)?;
    let gold = parse_sql(case.gold, Dialect::Sqlite)?;
    let labels = label_with_ablation(&tree, &gold, enable_rescue);
    let nodes = tree.preorder();
    let blamed = labels.error_ids().into_iter().map(|id| nodes[id].describe()).collect();
    Ok(CaseOutcome { case: *case, tree, labels, blamed })
}
