//! Files written by a run into its output directory.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use sqlnode_core::features::FeatureManifest;
use sqlnode_core::gbdt::{GbdtModel, MODEL_FORMAT};

use crate::experiment::{Experiment, LabeledNode, Prediction, Prepared, Report};
use crate::jsonl::{
    write_json, write_jsonl, FEATURES_FORMAT, LABELS_FORMAT, PREDICTIONS_FORMAT, REPORT_FORMAT, SKIPPED_FORMAT,
};

pub const LABELS_FILE: &str = "labels.jsonl";
pub const FEATURES_FILE: &str = "features.jsonl";
pub const MANIFEST_FILE: &str = "feature_manifest.json";
pub const MODEL_FILE: &str = "model.json";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const SKIPPED_FILE: &str = "skipped.jsonl";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const REPORT_JSON_FILE: &str = "report.json";

#[derive(Serialize)]
struct Counts {
    records_in: usize,
    records_labeled: usize,
    records_skipped: usize,
}

impl From<&Prepared> for Counts {
    fn from(p: &Prepared) -> Self {
        Counts { records_in: p.records_in, records_labeled: p.records_labeled, records_skipped: p.records_skipped() }
    }
}

#[derive(Serialize)]
struct ManifestRef {
    manifest_hash: u64,
}

pub fn write_labels(path: &Path, labels: &[LabeledNode]) -> io::Result<()> {
    write_jsonl(path, LABELS_FORMAT, (), labels)
}

/// Labels, features, manifest and skip log.
pub fn write_prepared(dir: &Path, prepared: &Prepared) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = FeatureManifest::current();
    write_labels(&dir.join(LABELS_FILE), &prepared.labels)?;
    write_jsonl(
        &dir.join(FEATURES_FILE),
        FEATURES_FORMAT,
        ManifestRef { manifest_hash: manifest.hash },
        &prepared.nodes,
    )?;
    write_pretty(&dir.join(MANIFEST_FILE), &manifest)?;
    write_jsonl(&dir.join(SKIPPED_FILE), SKIPPED_FORMAT, Counts::from(prepared), &prepared.skipped)
}

pub fn write_model(path: &Path, model: &GbdtModel) -> io::Result<()> {
    write_pretty(path, model)
}

pub fn read_model(path: &Path) -> io::Result<GbdtModel> {
    let model: GbdtModel = serde_json::from_str(&fs::read_to_string(path)?)?;
    if model.format != MODEL_FORMAT {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("{}: unsupported model format `{}`", path.display(), model.format),
        ));
    }
    Ok(model)
}

pub fn write_report(dir: &Path, report: &Report) -> io::Result<()> {
    fs::write(dir.join(REPORT_TEXT_FILE), report.render())?;
    write_json(&dir.join(REPORT_JSON_FILE), REPORT_FORMAT, report)
}

pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> io::Result<()> {
    write_jsonl(path, PREDICTIONS_FORMAT, (), predictions)
}

/// Reads a prediction dump written by [`write_predictions`].
pub fn read_predictions(path: &Path) -> io::Result<Vec<Prediction>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, msg: String| io::Error::new(io::ErrorKind::InvalidData, format!("{}:{line}: {msg}", path.display()));
    match lines.next().and_then(|(_, l)| crate::jsonl::header_format(l)) {
        Some(f) if f == PREDICTIONS_FORMAT => {}
        other => return Err(bad(1, format!("expected `{PREDICTIONS_FORMAT}` header, found {other:?}"))),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| bad(i + 1, e.to_string())))
        .collect()
}

/// Everything: prepared data, model, predictions and report.
pub fn write_experiment(dir: &Path, exp: &Experiment) -> io::Result<()> {
    write_prepared(dir, &exp.prepared)?;
    write_model(&dir.join(MODEL_FILE), &exp.model)?;
    write_predictions(&dir.join(PREDICTIONS_FILE), &exp.predictions)?;
    write_report(dir, &exp.report)
}

fn write_pretty<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)
}
