//! Gradient-boosted regression trees with a logistic link.
//!
//! Training starts from the log-odds of the positive rate and adds one
//! least-squares tree per round, fit to the residuals `y - p`. Each leaf
//! predicts its mean residual, scaled by the learning rate.

mod metrics;
mod tree;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use metrics::{eval_by_kind, roc_auc, AucCell, EvalRow, EvalTable, ScoredNode, SingleClass};
pub use tree::{Tree, TreeNode};

pub const MODEL_FORMAT: &str = "sqlnode-gbdt/1";

/// Prevalence is clamped to this distance from 0 and 1 before taking
/// log-odds.
const PREVALENCE_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtConfig {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    /// Stored with the model. Training itself draws no random numbers.
    pub seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig { n_trees: 100, learning_rate: 0.05, max_leaves: 31, min_samples_leaf: 20, seed: 0 }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<(), GbdtError> {
        let invalid = |reason: &str| Err(GbdtError::InvalidConfig(reason.into()));
        if self.n_trees < 1 {
            return invalid("n_trees must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return invalid("learning_rate must be in (0, 1]");
        }
        if self.max_leaves < 2 {
            return invalid("max_leaves must be at least 2");
        }
        if self.min_samples_leaf < 1 {
            return invalid("min_samples_leaf must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GbdtError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("no training rows")]
    Empty,
    #[error("row {row} has {found} features, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("row {row} has label {label}, expected 0 or 1")]
    BadLabel { row: usize, label: u8 },
    #[error("row {row} feature {feature} is not finite")]
    NonFinite { row: usize, feature: usize },
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("feature manifest {found:016x} does not match the model's {expected:016x}")]
    ManifestMismatch { expected: u64, found: u64 },
    #[error("feature vector has {found} values, model expects {expected}")]
    WrongWidth { expected: usize, found: usize },
}

/// Conditions under which training still returns a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainWarning {
    /// Every label was the same; the model predicts that class's clamped
    /// prevalence for every input.
    DegenerateLabels,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub format: String,
    pub config: GbdtConfig,
    pub base_score: f64,
    pub manifest_hash: u64,
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

impl GbdtModel {
    /// Log-odds before the link function.
    pub fn predict_raw(&self, features: &[f64]) -> f64 {
        let lr = self.config.learning_rate;
        self.base_score + self.trees.iter().map(|t| lr * t.predict(features)).sum::<f64>()
    }

    /// Error probability of one node. The caller states which feature
    /// manifest produced the vector.
    pub fn predict_proba(&self, manifest_hash: u64, features: &[f64]) -> Result<f64, GbdtError> {
        self.check_manifest(manifest_hash)?;
        if features.len() != self.n_features {
            return Err(GbdtError::WrongWidth { expected: self.n_features, found: features.len() });
        }
        Ok(sigmoid(self.predict_raw(features)))
    }

    pub fn check_manifest(&self, manifest_hash: u64) -> Result<(), GbdtError> {
        if manifest_hash == self.manifest_hash {
            Ok(())
        } else {
            Err(GbdtError::ManifestMismatch { expected: self.manifest_hash, found: manifest_hash })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub model: GbdtModel,
    /// Mean logistic loss on the training rows before the first tree and
    /// after each round.
    pub loss_history: Vec<f64>,
    pub warning: Option<TrainWarning>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Mean of `log(1 + e^f) - y f`.
pub fn logistic_loss(raw: &[f64], labels: &[u8]) -> f64 {
    let total: f64 = raw
        .iter()
        .zip(labels)
        .map(|(&f, &y)| {
            let softplus = f.max(0.0) + libm::log1p(libm::exp(-libm::fabs(f)));
            softplus - f64::from(y) * f
        })
        .sum();
    total / raw.len() as f64
}

/// Fits a model to `rows` (all of width `n_features`) and 0/1 labels.
/// Deterministic in its inputs.
pub fn train<R: AsRef<[f64]>>(
    rows: &[R],
    labels: &[u8],
    manifest_hash: u64,
    config: &GbdtConfig,
) -> Result<Trained, GbdtError> {
    config.validate()?;
    if rows.is_empty() {
        return Err(GbdtError::Empty);
    }
    if rows.len() != labels.len() {
        return Err(GbdtError::LengthMismatch { rows: rows.len(), labels: labels.len() });
    }
    let n_features = rows[0].as_ref().len();
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != n_features {
            return Err(GbdtError::RaggedRows { row: i, expected: n_features, found: row.len() });
        }
        if let Some(f) = row.iter().position(|x| !x.is_finite()) {
            return Err(GbdtError::NonFinite { row: i, feature: f });
        }
    }
    if let Some(i) = labels.iter().position(|&y| y > 1) {
        return Err(GbdtError::BadLabel { row: i, label: labels[i] });
    }

    let positives = labels.iter().filter(|&&y| y == 1).count();
    let prevalence = (positives as f64 / labels.len() as f64).clamp(PREVALENCE_CLAMP, 1.0 - PREVALENCE_CLAMP);
    let base_score = libm::log(prevalence / (1.0 - prevalence));
    let mut model = GbdtModel {
        format: MODEL_FORMAT.into(),
        config: *config,
        base_score,
        manifest_hash,
        n_features,
        trees: Vec::new(),
    };
    let mut raw = alloc::vec![base_score; rows.len()];
    let mut loss_history = alloc::vec![logistic_loss(&raw, labels)];
    if positives == 0 || positives == labels.len() {
        return Ok(Trained { model, loss_history, warning: Some(TrainWarning::DegenerateLabels) });
    }

    let data = tree::BinnedMatrix::new(rows, n_features);
    let params = tree::GrowParams { max_leaves: config.max_leaves, min_samples_leaf: config.min_samples_leaf };
    let mut residuals = alloc::vec![0.0; rows.len()];
    for _ in 0..config.n_trees {
        for ((r, &f), &y) in residuals.iter_mut().zip(&raw).zip(labels) {
            *r = f64::from(y) - sigmoid(f);
        }
        let (tree, fitted) = tree::grow(&data, &residuals, params);
        for (f, step) in raw.iter_mut().zip(&fitted) {
            *f += config.learning_rate * step;
        }
        model.trees.push(tree);
        loss_history.push(logistic_loss(&raw, labels));
    }
    Ok(Trained { model, loss_history, warning: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config(n_trees: usize, max_leaves: usize, min_samples_leaf: usize) -> GbdtConfig {
        GbdtConfig { n_trees, max_leaves, min_samples_leaf, ..GbdtConfig::default() }
    }

    fn xor_points(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let labels = rows.iter().map(|r| u8::from((r[0] > 0.0) != (r[1] > 0.0))).collect();
        (rows, labels)
    }

    #[test]
    fn defaults_and_validation() {
        let c = GbdtConfig::default();
        assert_eq!((c.n_trees, c.learning_rate, c.max_leaves, c.min_samples_leaf), (100, 0.05, 31, 20));
        assert!(c.validate().is_ok());
        assert!(GbdtConfig { n_trees: 0, ..c }.validate().is_err());
        assert!(GbdtConfig { learning_rate: 0.0, ..c }.validate().is_err());
        assert!(GbdtConfig { learning_rate: 1.5, ..c }.validate().is_err());
        assert!(GbdtConfig { max_leaves: 1, ..c }.validate().is_err());
    }

    #[test]
    fn separable_feature_ranks_perfectly() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64, ((i * 37) % 11) as f64]).collect();
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i >= 60)).collect();
        let trained = train(&rows, &labels, 7, &config(20, 4, 5)).unwrap();
        let scores: Vec<f64> = rows.iter().map(|r| trained.model.predict_proba(7, r).unwrap()).collect();
        assert_eq!(roc_auc(&scores, &labels), Ok(1.0));
        assert!(scores[99] > 0.5);
        assert!(scores.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn xor_is_learned() {
        let (rows, labels) = xor_points(400, 11);
        let trained = train(&rows, &labels, 0, &GbdtConfig { learning_rate: 0.3, ..config(100, 8, 5) }).unwrap();
        let correct = rows
            .iter()
            .zip(&labels)
            .filter(|(r, &y)| u8::from(trained.model.predict_proba(0, r).unwrap() > 0.5) == y)
            .count();
        assert!(correct as f64 / 400.0 > 0.9, "accuracy {correct}/400");
    }

    #[test]
    fn loss_never_increases() {
        let (rows, labels) = xor_points(300, 5);
        let trained = train(&rows, &labels, 0, &config(60, 31, 3)).unwrap();
        assert_eq!(trained.loss_history.len(), 61);
        for w in trained.loss_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn retraining_is_bit_identical() {
        let (rows, labels) = xor_points(200, 3);
        let a = train(&rows, &labels, 1, &config(30, 8, 5)).unwrap();
        let b = train(&rows, &labels, 1, &config(30, 8, 5)).unwrap();
        assert_eq!(a.model, b.model);
        for r in &rows {
            assert_eq!(a.model.predict_raw(r).to_bits(), b.model.predict_raw(r).to_bits());
        }
    }

    #[test]
    fn degenerate_labels_give_constant_model() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let trained = train(&rows, &[0, 0, 0], 0, &GbdtConfig::default()).unwrap();
        assert_eq!(trained.warning, Some(TrainWarning::DegenerateLabels));
        assert!(trained.model.trees.is_empty());
        assert!(trained.model.predict_proba(0, &[5.0]).unwrap() < 0.01);
    }

    #[test]
    fn hand_built_model_sums_scaled_leaves() {
        let tree = Tree {
            nodes: vec![
                TreeNode::Split { feature: 1, threshold: 0.5, left: 1, right: 2 },
                TreeNode::Leaf { value: -2.0 },
                TreeNode::Leaf { value: 3.0 },
            ],
        };
        let model = GbdtModel {
            format: MODEL_FORMAT.into(),
            config: GbdtConfig { learning_rate: 0.1, ..GbdtConfig::default() },
            base_score: 0.25,
            manifest_hash: 9,
            n_features: 2,
            trees: vec![tree.clone(), tree],
        };
        let p = model.predict_proba(9, &[0.0, 1.0]).unwrap();
        let expected = 1.0 / (1.0 + libm::exp(-(0.25 + 0.1 * 3.0 + 0.1 * 3.0)));
        assert!((p - expected).abs() < 1e-15);
        assert_eq!(model.predict_proba(8, &[0.0, 1.0]), Err(GbdtError::ManifestMismatch { expected: 9, found: 8 }));
        assert!(matches!(model.predict_proba(9, &[0.0]), Err(GbdtError::WrongWidth { .. })));
    }

    #[test]
    fn input_validation() {
        let c = GbdtConfig::default();
        assert_eq!(train::<Vec<f64>>(&[], &[], 0, &c), Err(GbdtError::Empty));
        assert!(matches!(train(&[vec![1.0], vec![1.0, 2.0]], &[0, 1], 0, &c), Err(GbdtError::RaggedRows { row: 1, .. })));
        assert!(matches!(train(&[vec![f64::NAN]], &[0], 0, &c), Err(GbdtError::NonFinite { .. })));
        assert!(matches!(train(&[vec![1.0]], &[2], 0, &c), Err(GbdtError::BadLabel { .. })));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }
}
