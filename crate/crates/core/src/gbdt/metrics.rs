//! ROC AUC and the per-node-kind evaluation table.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use crate::ast::NodeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("AUC needs both positive and negative labels")]
pub struct SingleClass;

/// Probability that a random positive scores above a random negative,
/// counting ties as one half (the normalized Mann-Whitney U).
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64, SingleClass> {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let positives = labels.iter().filter(|&&y| y != 0).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of positive ranks, ranks 1-based and averaged over ties
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]].total_cmp(&scores[order[i]]).is_eq() {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        let tied_pos = order[i..=j].iter().filter(|&&k| labels[k] != 0).count();
        rank_sum += avg_rank * tied_pos as f64;
        i = j + 1;
    }
    let (p, n) = (positives as f64, negatives as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// One evaluated node: its true label, model score and optional baseline
/// error score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredNode {
    pub kind: NodeKind,
    pub label: u8,
    pub score: f64,
    pub baseline: Option<f64>,
}

/// An AUC cell of the evaluation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum AucCell {
    Value(f64),
    /// Only one class among the rows.
    Undefined,
    /// No rows carried a score.
    Missing,
}

impl AucCell {
    pub fn value(self) -> Option<f64> {
        match self {
            AucCell::Value(v) => Some(v),
            _ => None,
        }
    }

    fn of(scores: &[f64], labels: &[u8]) -> AucCell {
        if scores.is_empty() {
            return AucCell::Missing;
        }
        roc_auc(scores, labels).map_or(AucCell::Undefined, AucCell::Value)
    }
}

impl fmt::Display for AucCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AucCell::Value(v) => write!(f, "{:.2}", v * 100.0),
            AucCell::Undefined => f.write_str("undef"),
            AucCell::Missing => f.write_str("-"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    /// Node kind name, or `All`.
    pub kind: String,
    pub count: usize,
    /// Share of all evaluated nodes.
    pub proportion: f64,
    /// Share of this kind's nodes labeled as errors.
    pub proportion_error: f64,
    pub auc_model: AucCell,
    pub auc_baseline: AucCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalTable {
    pub rows: Vec<EvalRow>,
}

impl EvalTable {
    pub fn row(&self, kind: &str) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.kind == kind)
    }

    /// Fixed-width text rendering, percentages with two decimals.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:>8} {:>9} {:>12} {:>12} {:>15}",
            "Node type", "Count", "Prop.", "Prop. False", "AUC (Model)", "AUC (Logprobs)"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<14} {:>8} {:>9.2} {:>12.2} {:>12} {:>15}",
                r.kind,
                r.count,
                r.proportion * 100.0,
                r.proportion_error * 100.0,
                r.auc_model.to_string(),
                r.auc_baseline.to_string()
            );
        }
        out
    }
}

/// One row per node kind plus an `All` row first. Kind rows are ordered by
/// count, largest first, then by name. The baseline AUC of a row uses only
/// its nodes that carry a baseline score.
pub fn eval_by_kind(nodes: &[ScoredNode]) -> EvalTable {
    let mut groups: BTreeMap<String, Vec<&ScoredNode>> = BTreeMap::new();
    for n in nodes {
        groups.entry(n.kind.name().into()).or_default().push(n);
    }
    let total = nodes.len();
    let all: Vec<&ScoredNode> = nodes.iter().collect();
    let mut rows = alloc::vec![row("All", &all, total)];
    let mut kinds: Vec<(&String, &Vec<&ScoredNode>)> = groups.iter().collect();
    kinds.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then_with(|| a.0.cmp(b.0)));
    rows.extend(kinds.into_iter().map(|(k, g)| row(k, g, total)));
    EvalTable { rows }
}

fn row(kind: &str, group: &[&ScoredNode], total: usize) -> EvalRow {
    let labels: Vec<u8> = group.iter().map(|n| n.label).collect();
    let scores: Vec<f64> = group.iter().map(|n| n.score).collect();
    let (base_scores, base_labels): (Vec<f64>, Vec<u8>) =
        group.iter().filter_map(|n| n.baseline.map(|b| (b, n.label))).unzip();
    let errors = labels.iter().filter(|&&y| y != 0).count();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    EvalRow {
        kind: kind.into(),
        count: group.len(),
        proportion: ratio(group.len(), total),
        proportion_error: ratio(errors, group.len()),
        auc_model: AucCell::of(&scores, &labels),
        auc_baseline: AucCell::of(&base_scores, &base_labels),
    }
}
