//! Dataset ingestion, experiment orchestration and file formats for
//! node-level SQL error labeling and prediction.

pub mod artifacts;
pub mod dataset;
pub mod experiment;
pub mod jsonl;
pub mod schema_file;
pub mod split;

pub use dataset::{load_dataset, parse_dataset, Dataset, DatasetRecord};
pub use experiment::{prepare, run_experiment, Experiment, Prediction, Report, SchemaStore};
pub use schema_file::load_schema;
pub use split::{make_split, Split, SplitSpec};
