use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::{NodeKind, SqlNode, TreeIndex};

/// Alias name to base table name, for one query tree.
///
/// Aliases are recorded per scope (the id of the `Select` whose FROM/JOIN
/// declares them) and also merged into a flat view in which deeper scopes
/// override shallower ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasMap {
    entries: BTreeMap<String, String>,
    scopes: BTreeMap<usize, BTreeMap<String, String>>,
    diagnostics: Vec<String>,
}

impl AliasMap {
    /// Collects every `Table` alias declared in a FROM or JOIN source.
    pub fn build(tree: &SqlNode) -> AliasMap {
        let index = TreeIndex::new(tree);
        let mut map = AliasMap::default();
        // (depth of declaring scope, alias, table) in preorder
        let mut flat: Vec<(usize, String, String)> = Vec::new();
        for node in index.nodes() {
            if node.kind != NodeKind::Table {
                continue;
            }
            let (Some(alias), Some(table)) = (node.table_alias(), node.content()) else {
                continue;
            };
            let Some(scope) = declaring_scope(&index, node.id) else {
                continue;
            };
            let scope_map = map.scopes.entry(scope.id).or_default();
            if let Some(previous) = scope_map.insert(alias.into(), table.into()) {
                map.diagnostics.push(alloc::format!(
                    "alias `{alias}` declared twice in one scope (`{previous}` then `{table}`); using `{table}`"
                ));
            }
            flat.push((scope.depth, alias.into(), table.into()));
        }
        flat.sort_by_key(|(depth, _, _)| *depth);
        for (_, alias, table) in flat {
            map.entries.insert(alias, table);
        }
        map
    }

    pub fn get(&self, alias: &str) -> Option<&str> {
        self.entries.get(alias).map(String::as_str)
    }

    /// Base table named by a qualifier; qualifiers that are not aliases are
    /// taken to be table names already.
    pub fn resolve<'a>(&'a self, qualifier: &'a str) -> &'a str {
        self.get(qualifier).unwrap_or(qualifier)
    }

    /// Resolves a qualifier against a chain of scopes, innermost first,
    /// falling back to the flat view.
    pub fn resolve_in<'a>(&'a self, qualifier: &'a str, scopes: &[usize]) -> &'a str {
        scopes
            .iter()
            .find_map(|s| self.scopes.get(s).and_then(|m| m.get(qualifier)))
            .map(String::as_str)
            .unwrap_or_else(|| self.resolve(qualifier))
    }

    /// Aliases declared directly by one scope.
    pub fn scope(&self, select_id: usize) -> Option<&BTreeMap<String, String>> {
        self.scopes.get(&select_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(a, t)| (a.as_str(), t.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }
}

/// The `Select` whose FROM/JOIN clause introduces the source at `id`.
pub(crate) fn declaring_scope<'a>(index: &TreeIndex<'a>, id: usize) -> Option<&'a SqlNode> {
    let parent = index.parent(id)?;
    if !matches!(parent.kind, NodeKind::From | NodeKind::Join) {
        return None;
    }
    index.parent(parent.id).filter(|s| s.kind == NodeKind::Select)
}
