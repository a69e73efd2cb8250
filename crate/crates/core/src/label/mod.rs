//! Per-node correctness labels for a generated query against its gold query.
//!
//! Labeling runs three passes over the generated tree:
//!
//! 1. Contextual alignment. Starting from the two roots, a pair whose
//!    subtrees are recursively equivalent marks the whole generated subtree
//!    correct; otherwise the generated node is marked as an error and every
//!    (generated child, gold child) pair is aligned in turn. Each visit
//!    overwrites the node's previous label, so the last pairing wins.
//! 2. Container suppression. Clause and equality containers still marked as
//!    errors are cleared when the gold tree has a node of the same kind.
//! 3. Rescue. Every node still marked as an error is cleared if it is
//!    recursively equivalent to any gold node.
//!
//! Nodes that are parts of a larger unit inherit that unit's label instead
//! of being aligned on their own: `TableAlias` leaves take their table's
//! label, column qualifiers take their column's label, and `Alias`/`Paren`
//! wrappers take their wrapped child's label.

pub mod cases;
mod equiv;

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ast::{IdentRole, NodeKind, SqlNode};
pub use equiv::{EquivalenceContext, MatchMode, MemoStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Correct,
    Error,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Correct => 0,
            Label::Error => 1,
        }
    }

    pub fn from_u8(value: u8) -> Option<Label> {
        match value {
            0 => Some(Label::Correct),
            1 => Some(Label::Error),
            _ => None,
        }
    }
}

/// The pass that last set a node's label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Initial,
    FirstPass,
    Suppressed,
    Rescued,
    /// Copied from the node this one belongs to.
    Inherited,
}

/// Label and provenance for every node of a generated tree, indexed by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    labels: Vec<Label>,
    provenance: Vec<Provenance>,
}

impl LabelMap {
    fn all_errors(len: usize) -> Self {
        LabelMap { labels: vec![Label::Error; len], provenance: vec![Provenance::Initial; len] }
    }

    fn set(&mut self, id: usize, label: Label, provenance: Provenance) {
        self.labels[id] = label;
        self.provenance[id] = provenance;
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, id: usize) -> Label {
        self.labels[id]
    }

    pub fn provenance(&self, id: usize) -> Provenance {
        self.provenance[id]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Ids labeled as errors, ascending.
    pub fn error_ids(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&id| self.labels[id] == Label::Error).collect()
    }

    pub fn error_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == Label::Error).count()
    }
}

/// Clause and comparison containers that are not blamed when only their
/// children differ.
pub const SUPPRESSIBLE: [NodeKind; 7] = [
    NodeKind::Select,
    NodeKind::From,
    NodeKind::Where,
    NodeKind::GroupBy,
    NodeKind::Having,
    NodeKind::Eq,
    NodeKind::Neq,
];

/// Nodes labeled through another node rather than aligned on their own.
fn inherits_label(node: &SqlNode) -> bool {
    node.kind == NodeKind::TableAlias || node.kind.is_wrapper() || node.flags.role == Some(IdentRole::Qualifier)
}

/// Labels every node of `gen` against `gold` with all passes enabled.
pub fn align_and_label(gen: &SqlNode, gold: &SqlNode) -> LabelMap {
    label_with_ablation(gen, gold, true)
}

/// As [`align_and_label`], optionally skipping the rescue pass.
pub fn label_with_ablation(gen: &SqlNode, gold: &SqlNode, enable_rescue: bool) -> LabelMap {
    Labeler::new(gen, gold).run(enable_rescue).0
}

/// Labeling state for one (generated, gold) pair.
pub struct Labeler<'a> {
    ctx: EquivalenceContext<'a>,
    labels: LabelMap,
}

impl<'a> Labeler<'a> {
    pub fn new(gen: &'a SqlNode, gold: &'a SqlNode) -> Self {
        let ctx = EquivalenceContext::new(gen, gold);
        let labels = LabelMap::all_errors(ctx.gen_index().len());
        Labeler { ctx, labels }
    }

    pub fn run(mut self, enable_rescue: bool) -> (LabelMap, MemoStats) {
        let gen_root = self.ctx.gen_index().root();
        let gold_root = self.ctx.gold_index().root();
        self.align(gen_root, gold_root);
        self.suppress();
        if enable_rescue {
            self.rescue();
        }
        self.inherit(enable_rescue);
        let stats = self.ctx.stats();
        (self.labels, stats)
    }

    fn align(&mut self, gen: &'a SqlNode, gold: &'a SqlNode) {
        let gen = gen.unwrap_wrappers();
        let gold = gold.unwrap_wrappers();
        if self.ctx.recursively_equivalent(gen, gold) {
            for node in gen.preorder() {
                self.labels.set(node.id, Label::Correct, Provenance::FirstPass);
            }
            return;
        }
        self.labels.set(gen.id, Label::Error, Provenance::FirstPass);
        for gen_child in &gen.children {
            for gold_child in &gold.children {
                self.align(gen_child, gold_child);
            }
        }
    }

    fn suppress(&mut self) {
        let gold_has = |kind: NodeKind, ctx: &EquivalenceContext<'a>| {
            ctx.gold_index().nodes().iter().any(|n| n.kind == kind)
        };
        for &node in self.ctx.gen_index().nodes() {
            if self.labels.label(node.id) == Label::Error
                && SUPPRESSIBLE.contains(&node.kind)
                && gold_has(node.kind, &self.ctx)
            {
                self.labels.set(node.id, Label::Correct, Provenance::Suppressed);
            }
        }
    }

    fn rescue(&mut self) {
        let mut by_kind: BTreeMap<NodeKind, Vec<&'a SqlNode>> = BTreeMap::new();
        for &node in self.ctx.gold_index().nodes() {
            if !node.kind.is_wrapper() {
                by_kind.entry(node.kind).or_default().push(node);
            }
        }
        let gen_nodes: Vec<&'a SqlNode> = self.ctx.gen_index().nodes().to_vec();
        for gen in gen_nodes {
            if self.labels.label(gen.id) == Label::Correct || inherits_label(gen) {
                continue;
            }
            let rescued = equiv::comparable_kinds(gen.kind)
                .filter_map(|k| by_kind.get(&k))
                .flatten()
                .any(|gold| self.ctx.recursively_equivalent(gen, gold));
            if rescued {
                self.labels.set(gen.id, Label::Correct, Provenance::Rescued);
            }
        }
    }

    fn inherit(&mut self, enable_rescue: bool) {
        let gold_has_alias = self.ctx.gold_index().nodes().iter().any(|n| n.kind == NodeKind::TableAlias);
        let index = self.ctx.gen_index().clone();
        for &node in index.nodes() {
            let is_alias = node.kind == NodeKind::TableAlias;
            if !is_alias && node.flags.role != Some(IdentRole::Qualifier) {
                continue;
            }
            let Some(owner) = index.parent(node.id) else { continue };
            let label = self.labels.label(owner.id);
            if is_alias && enable_rescue && label == Label::Error && gold_has_alias {
                self.labels.set(node.id, Label::Correct, Provenance::Rescued);
            } else {
                self.labels.set(node.id, label, Provenance::Inherited);
            }
        }
        // wrappers after their contents: reverse preorder visits children first
        for &node in index.nodes().iter().rev() {
            if node.kind.is_wrapper() {
                if let Some(child) = node.children.first() {
                    let label = self.labels.label(child.id);
                    self.labels.set(node.id, label, Provenance::Inherited);
                }
            }
        }
    }
}
