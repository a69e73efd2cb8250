use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::ast::{AliasMap, IdentRole, NodeKind, SqlNode, TreeIndex};

/// How a pair of operator nodes lines up its operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    /// Children correspond in order.
    Direct,
    /// Children correspond in reverse order (`a > b` vs `b < a`).
    Swapped,
    /// Symmetric operator: either order is acceptable.
    Either,
}

impl MatchMode {
    fn allows_direct(self) -> bool {
        matches!(self, MatchMode::Direct | MatchMode::Either)
    }

    fn allows_swapped(self) -> bool {
        matches!(self, MatchMode::Swapped | MatchMode::Either)
    }
}

/// Memo counters, for checking that repeated subexpressions are not
/// re-compared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MemoStats {
    pub hits: usize,
    pub misses: usize,
}

fn anti_symmetric_partner(kind: NodeKind) -> Option<NodeKind> {
    match kind {
        NodeKind::Gt => Some(NodeKind::Lt),
        NodeKind::Lt => Some(NodeKind::Gt),
        NodeKind::Gte => Some(NodeKind::Lte),
        NodeKind::Lte => Some(NodeKind::Gte),
        _ => None,
    }
}

fn is_symmetric(kind: NodeKind) -> bool {
    matches!(kind, NodeKind::Eq | NodeKind::Neq | NodeKind::Add | NodeKind::Mul | NodeKind::And | NodeKind::Or)
}

/// Kinds a gold node may have to be comparable with a generated node of `kind`.
pub(crate) fn comparable_kinds(kind: NodeKind) -> impl Iterator<Item = NodeKind> {
    core::iter::once(kind).chain(anti_symmetric_partner(kind))
}

/// Per-tree data the equivalence rules need: id index, alias map, and the
/// base table each qualifier resolves to in its own scope.
struct Side<'a> {
    index: TreeIndex<'a>,
    aliases: AliasMap,
    resolved: Vec<Option<String>>,
}

impl<'a> Side<'a> {
    fn new(root: &'a SqlNode) -> Self {
        let index = TreeIndex::new(root);
        let aliases = AliasMap::build(root);
        let mut resolved = vec![None; index.len()];
        for node in index.nodes() {
            if node.flags.role == Some(IdentRole::Qualifier) {
                if let Some(q) = node.content() {
                    let scopes = index.scope_chain(node.id);
                    resolved[node.id] = Some(String::from(aliases.resolve_in(q, &scopes)));
                }
            }
        }
        Side { index, aliases, resolved }
    }

    /// Table named by the qualifier child of a `Column` or `Star`.
    fn qualifier_table(&self, node: &SqlNode) -> Option<&str> {
        node.children
            .iter()
            .find(|c| c.flags.role == Some(IdentRole::Qualifier))
            .and_then(|c| self.resolved[c.id].as_deref())
    }

    /// Comparable text of an identifier: qualifiers compare by the table they
    /// resolve to, everything else by content.
    fn identifier_text<'n>(&'n self, node: &'n SqlNode) -> Option<&'n str> {
        if node.flags.role == Some(IdentRole::Qualifier) {
            self.resolved[node.id].as_deref()
        } else {
            node.content()
        }
    }
}

/// Equivalence state for one (generated, gold) pair.
pub struct EquivalenceContext<'a> {
    gen: Side<'a>,
    gold: Side<'a>,
    memo: Vec<Option<bool>>,
    stats: MemoStats,
}

impl<'a> EquivalenceContext<'a> {
    pub fn new(gen: &'a SqlNode, gold: &'a SqlNode) -> Self {
        let gen = Side::new(gen);
        let gold = Side::new(gold);
        let memo = vec![None; gen.index.len() * gold.index.len()];
        EquivalenceContext { gen, gold, memo, stats: MemoStats::default() }
    }

    pub fn gen_index(&self) -> &TreeIndex<'a> {
        &self.gen.index
    }

    pub fn gold_index(&self) -> &TreeIndex<'a> {
        &self.gold.index
    }

    pub fn gen_alias_map(&self) -> &AliasMap {
        &self.gen.aliases
    }

    pub fn gold_alias_map(&self) -> &AliasMap {
        &self.gold.aliases
    }

    pub fn stats(&self) -> MemoStats {
        self.stats
    }

    /// Node-local comparison: kind (or anti-symmetric partner) and content.
    /// `gen` must come from the generated tree and `gold` from the gold tree.
    pub fn shallow_equivalent(&self, gen: &SqlNode, gold: &SqlNode) -> Option<MatchMode> {
        let mode = if gen.kind == gold.kind {
            if is_symmetric(gen.kind) {
                MatchMode::Either
            } else {
                MatchMode::Direct
            }
        } else if anti_symmetric_partner(gen.kind) == Some(gold.kind) {
            MatchMode::Swapped
        } else {
            return None;
        };
        let content_ok = match gen.kind {
            NodeKind::TableAlias => true,
            NodeKind::Column => {
                gen.content() == gold.content()
                    && match (self.gen.qualifier_table(gen), self.gold.qualifier_table(gold)) {
                        (Some(a), Some(b)) => a == b,
                        _ => true,
                    }
            }
            NodeKind::Star => match (self.gen.qualifier_table(gen), self.gold.qualifier_table(gold)) {
                (Some(a), Some(b)) => a == b,
                _ => true,
            },
            NodeKind::Identifier => self.gen.identifier_text(gen) == self.gold.identifier_text(gold),
            NodeKind::Literal => gen.flags.literal == gold.flags.literal && gen.content() == gold.content(),
            _ => gen.content() == gold.content(),
        };
        content_ok.then_some(mode)
    }

    /// Shallow equivalence plus a one-to-one correspondence of children that
    /// are themselves recursively equivalent. `Alias`/`Paren` wrappers on
    /// either side are looked through.
    pub fn recursively_equivalent(&mut self, gen: &SqlNode, gold: &SqlNode) -> bool {
        let gen = gen.unwrap_wrappers();
        let gold = gold.unwrap_wrappers();
        let key = gen.id * self.gold.index.len() + gold.id;
        if let Some(known) = self.memo[key] {
            self.stats.hits += 1;
            return known;
        }
        self.stats.misses += 1;
        let result = self.compare(gen, gold);
        self.memo[key] = Some(result);
        result
    }

    fn compare(&mut self, gen: &SqlNode, gold: &SqlNode) -> bool {
        let Some(mode) = self.shallow_equivalent(gen, gold) else {
            return false;
        };
        match gen.kind {
            // Qualified names are settled by the shallow rule.
            NodeKind::Column | NodeKind::Star | NodeKind::TableAlias => true,
            NodeKind::And | NodeKind::Or => self.unordered(&gen.children, &gold.children),
            NodeKind::Table | NodeKind::Subquery => {
                let g: Vec<&SqlNode> = gen.children.iter().filter(|c| c.kind != NodeKind::TableAlias).collect();
                let h: Vec<&SqlNode> = gold.children.iter().filter(|c| c.kind != NodeKind::TableAlias).collect();
                self.ordered(&g, &h)
            }
            _ => {
                let g: Vec<&SqlNode> = gen.children.iter().collect();
                let h: Vec<&SqlNode> = gold.children.iter().collect();
                if mode.allows_direct() && self.ordered(&g, &h) {
                    return true;
                }
                mode.allows_swapped()
                    && g.len() == 2
                    && h.len() == 2
                    && self.recursively_equivalent(g[0], h[1])
                    && self.recursively_equivalent(g[1], h[0])
            }
        }
    }

    fn ordered(&mut self, gen: &[&SqlNode], gold: &[&SqlNode]) -> bool {
        gen.len() == gold.len() && gen.iter().zip(gold).all(|(g, h)| self.recursively_equivalent(g, h))
    }

    /// Perfect bipartite matching between operand lists (augmenting paths).
    fn unordered(&mut self, gen: &[SqlNode], gold: &[SqlNode]) -> bool {
        if gen.len() != gold.len() {
            return false;
        }
        let n = gen.len();
        let mut adj = vec![Vec::new(); n];
        for (i, g) in gen.iter().enumerate() {
            for (j, h) in gold.iter().enumerate() {
                if self.recursively_equivalent(g, h) {
                    adj[i].push(j);
                }
            }
            if adj[i].is_empty() {
                return false;
            }
        }
        let mut owner: Vec<Option<usize>> = vec![None; n];
        for i in 0..n {
            let mut seen = vec![false; n];
            if !augment(i, &adj, &mut seen, &mut owner) {
                return false;
            }
        }
        true
    }
}

fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
    for &j in &adj[i] {
        if seen[j] {
            continue;
        }
        seen[j] = true;
        if owner[j].is_none_or(|k| augment(k, adj, seen, owner)) {
            owner[j] = Some(i);
            return true;
        }
    }
    false
}
