//! Label, featurize, train and evaluate over a dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sqlnode_core::ast::{parse_sql, Dialect, NodeKind, ParseError, Span, SqlNode};
use sqlnode_core::features::{node_logprob_score, FeatureManifest, NodeRecord, QueryFeaturizer};
use sqlnode_core::gbdt::{self, eval_by_kind, EvalTable, GbdtConfig, GbdtError, GbdtModel, ScoredNode, TrainWarning};
use sqlnode_core::label::{label_with_ablation, Provenance};
use sqlnode_core::schema::Schema;

use crate::dataset::{Dataset, DatasetRecord};
use crate::schema_file::load_schema_for;
use crate::split::{make_split, Split, SplitError, SplitSpec};

/// One labeled node of a generated query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledNode {
    pub query_id: String,
    pub node_id: usize,
    pub kind: NodeKind,
    pub content: Option<String>,
    pub span: Span,
    pub label: u8,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipStage {
    Load,
    Duplicate,
    Schema,
    GeneratedParse,
    GoldParse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRecord {
    /// Empty for lines that never parsed into a record.
    pub query_id: String,
    pub line: Option<usize>,
    pub stage: SkipStage,
    pub reason: String,
}

pub fn parse_pair(record: &DatasetRecord) -> Result<(SqlNode, SqlNode), SkippedRecord> {
    let skip = |stage, e: ParseError| SkippedRecord {
        query_id: record.query_id.clone(),
        line: None,
        stage,
        reason: e.to_string(),
    };
    let gen = parse_sql(&record.generated_sql, Dialect::Sqlite).map_err(|e| skip(SkipStage::GeneratedParse, e))?;
    let gold = parse_sql(&record.gold_sql, Dialect::Sqlite).map_err(|e| skip(SkipStage::GoldParse, e))?;
    Ok((gen, gold))
}

pub fn labeled_nodes(query_id: &str, gen: &SqlNode, gold: &SqlNode, enable_rescue: bool) -> Vec<LabeledNode> {
    let labels = label_with_ablation(gen, gold, enable_rescue);
    gen.preorder()
        .into_iter()
        .map(|n| LabeledNode {
            query_id: query_id.to_owned(),
            node_id: n.id,
            kind: n.kind,
            content: n.content.clone(),
            span: n.span,
            label: labels.label(n.id).as_u8(),
            provenance: labels.provenance(n.id),
        })
        .collect()
}

/// Labels one record without touching a schema.
pub fn label_record(record: &DatasetRecord, enable_rescue: bool) -> Result<Vec<LabeledNode>, SkippedRecord> {
    let (gen, gold) = parse_pair(record)?;
    Ok(labeled_nodes(&record.query_id, &gen, &gold, enable_rescue))
}

/// Schemas by db_id; a failed load is kept as its error message.
#[derive(Debug, Clone, Default)]
pub struct SchemaStore {
    schemas: BTreeMap<String, Result<Schema, String>>,
}

impl SchemaStore {
    /// Loads `<dir>/<db_id>.json` for every db_id in `db_ids`.
    pub fn load<'a>(dir: &Path, db_ids: impl IntoIterator<Item = &'a str>) -> SchemaStore {
        let unique: BTreeSet<&str> = db_ids.into_iter().collect();
        let schemas = unique
            .into_iter()
            .map(|db| (db.to_owned(), load_schema_for(dir, db).map_err(|e| e.to_string())))
            .collect();
        SchemaStore { schemas }
    }

    pub fn insert(&mut self, schema: Schema) {
        self.schemas.insert(schema.db_id().to_owned(), Ok(schema));
    }

    pub fn get(&self, db_id: &str) -> Result<&Schema, String> {
        match self.schemas.get(db_id) {
            Some(Ok(s)) => Ok(s),
            Some(Err(e)) => Err(e.clone()),
            None => Err(format!("no schema for db_id `{db_id}`")),
        }
    }
}

impl FromIterator<Schema> for SchemaStore {
    fn from_iter<I: IntoIterator<Item = Schema>>(iter: I) -> Self {
        let mut store = SchemaStore::default();
        for s in iter {
            store.insert(s);
        }
        store
    }
}

/// Labeled and featurized nodes of every usable record.
#[derive(Debug, Clone, Default)]
pub struct Prepared {
    pub records_in: usize,
    pub records_labeled: usize,
    pub labels: Vec<LabeledNode>,
    /// Sorted by `(query_id, node_id)`.
    pub nodes: Vec<NodeRecord>,
    pub skipped: Vec<SkippedRecord>,
}

impl Prepared {
    pub fn records_skipped(&self) -> usize {
        self.skipped.len()
    }
}

type RecordOutput = (Vec<LabeledNode>, Vec<NodeRecord>);

fn process(record: &DatasetRecord, schemas: &SchemaStore, enable_rescue: bool) -> Result<RecordOutput, SkippedRecord> {
    let schema = schemas.get(&record.db_id).map_err(|reason| SkippedRecord {
        query_id: record.query_id.clone(),
        line: None,
        stage: SkipStage::Schema,
        reason,
    })?;
    let (gen, gold) = parse_pair(record)?;
    let labels = labeled_nodes(&record.query_id, &gen, &gold, enable_rescue);
    let tokens = record.tokens();
    let featurizer = QueryFeaturizer::new(&record.generated_sql, &gen, schema);
    let nodes = gen
        .preorder()
        .into_iter()
        .zip(featurizer.featurize_all())
        .map(|(n, features)| NodeRecord {
            query_id: record.query_id.clone(),
            db_id: record.db_id.clone(),
            node_id: n.id,
            node_kind: n.kind,
            features,
            label: labels[n.id].label,
            logprob_score: tokens.as_deref().and_then(|t| node_logprob_score(n.span, t)),
        })
        .collect();
    Ok((labels, nodes))
}

/// Labels and featurizes every record in parallel. Malformed dataset lines
/// and later duplicates of a query id count as skipped records.
pub fn prepare(dataset: &Dataset, schemas: &SchemaStore, enable_rescue: bool) -> Prepared {
    let mut skipped: Vec<SkippedRecord> = dataset
        .malformed
        .iter()
        .map(|m| SkippedRecord { query_id: String::new(), line: Some(m.line), stage: SkipStage::Load, reason: m.reason.clone() })
        .collect();
    let mut seen = BTreeSet::new();
    let mut unique = Vec::with_capacity(dataset.records.len());
    for r in &dataset.records {
        if seen.insert(r.query_id.as_str()) {
            unique.push(r);
        } else {
            skipped.push(SkippedRecord {
                query_id: r.query_id.clone(),
                line: None,
                stage: SkipStage::Duplicate,
                reason: "duplicate query_id".into(),
            });
        }
    }
    let outputs: Vec<Result<RecordOutput, SkippedRecord>> =
        unique.par_iter().map(|r| process(r, schemas, enable_rescue)).collect();
    let mut prepared = Prepared { records_in: dataset.records.len() + dataset.malformed.len(), ..Prepared::default() };
    for out in outputs {
        match out {
            Ok((labels, nodes)) => {
                prepared.records_labeled += 1;
                prepared.labels.extend(labels);
                prepared.nodes.extend(nodes);
            }
            Err(s) => skipped.push(s),
        }
    }
    let by_id = |a: &str, ai: usize, b: &str, bi: usize| a.cmp(b).then(ai.cmp(&bi));
    prepared.labels.sort_by(|a, b| by_id(&a.query_id, a.node_id, &b.query_id, b.node_id));
    prepared.nodes.sort_by(|a, b| by_id(&a.query_id, a.node_id, &b.query_id, b.node_id));
    skipped.sort_by(|a, b| (a.line, &a.query_id).cmp(&(b.line, &b.query_id)));
    prepared.skipped = skipped;
    prepared
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub query_id: String,
    pub db_id: String,
    pub node_id: usize,
    pub kind: NodeKind,
    pub split: Side,
    pub label: u8,
    pub probability: f64,
    /// Mean token logprob over the node's span, when the dataset has them.
    pub logprob_score: Option<f64>,
}

impl Prediction {
    pub fn scored(&self) -> ScoredNode {
        ScoredNode {
            kind: self.kind,
            label: self.label,
            score: self.probability,
            // lower logprob means less confident, so negate for an error score
            baseline: self.logprob_score.map(|lp| -lp),
        }
    }
}

/// Run-level counts reported next to the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub records_in: usize,
    pub records_labeled: usize,
    pub records_skipped: usize,
    pub train_queries: usize,
    pub test_queries: usize,
    pub train_nodes: usize,
    pub test_nodes: usize,
    pub split: SplitSpec,
    pub warnings: Vec<TrainWarning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub summary: Summary,
    pub table: EvalTable,
}

impl Report {
    pub fn render(&self) -> String {
        let s = &self.summary;
        let mut out = format!(
            "records: {} in, {} labeled, {} skipped\nsplit: {} ({} train / {} test queries, {} / {} nodes)\n",
            s.records_in, s.records_labeled, s.records_skipped, s.split, s.train_queries, s.test_queries, s.train_nodes, s.test_nodes
        );
        for w in &s.warnings {
            out.push_str(&format!("warning: {w:?}\n"));
        }
        out.push('\n');
        out.push_str(&self.table.render());
        out
    }
}

#[derive(Debug)]
pub struct Experiment {
    pub prepared: Prepared,
    pub split: Split,
    pub model: GbdtModel,
    pub loss_history: Vec<f64>,
    pub predictions: Vec<Prediction>,
    pub report: Report,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("split: {0}")]
    Split(#[from] SplitError),
    #[error("training: {0}")]
    Train(#[from] GbdtError),
}

/// Trains on the train side of `spec` and reports on the test side.
pub fn run_experiment(
    dataset: &Dataset,
    schemas: &SchemaStore,
    spec: &SplitSpec,
    config: &GbdtConfig,
) -> Result<Experiment, ExperimentError> {
    let prepared = prepare(dataset, schemas, true);
    let labeled_ids: BTreeMap<&str, &str> = prepared.nodes.iter().map(|n| (n.query_id.as_str(), n.db_id.as_str())).collect();
    let split = make_split(labeled_ids.iter().map(|(&q, &d)| (q, d)), spec)?;
    let manifest = FeatureManifest::current();
    let (train_rows, train_labels): (Vec<&[f64]>, Vec<u8>) = prepared
        .nodes
        .iter()
        .filter(|n| split.is_train(&n.query_id))
        .map(|n| (n.features.as_slice(), n.label))
        .unzip();
    let trained = gbdt::train(&train_rows, &train_labels, manifest.hash, config)?;
    let model = trained.model;
    let predictions: Vec<Prediction> = prepared
        .nodes
        .par_iter()
        .map(|n| Prediction {
            query_id: n.query_id.clone(),
            db_id: n.db_id.clone(),
            node_id: n.node_id,
            kind: n.node_kind,
            split: if split.is_train(&n.query_id) { Side::Train } else { Side::Test },
            label: n.label,
            probability: gbdt::sigmoid(model.predict_raw(&n.features)),
            logprob_score: n.logprob_score,
        })
        .collect();
    let table = evaluate(&predictions);
    let summary = Summary {
        records_in: prepared.records_in,
        records_labeled: prepared.records_labeled,
        records_skipped: prepared.records_skipped(),
        train_queries: split.train.len(),
        test_queries: split.test.len(),
        train_nodes: train_rows.len(),
        test_nodes: predictions.len() - train_rows.len(),
        split: spec.clone(),
        warnings: trained.warning.into_iter().collect(),
    };
    Ok(Experiment {
        prepared,
        split,
        model,
        loss_history: trained.loss_history,
        predictions,
        report: Report { summary, table },
    })
}

/// Per-kind table over the test side of a prediction dump.
pub fn evaluate(predictions: &[Prediction]) -> EvalTable {
    let scored: Vec<ScoredNode> = predictions.iter().filter(|p| p.split == Side::Test).map(Prediction::scored).collect();
    eval_by_kind(&scored)
}
