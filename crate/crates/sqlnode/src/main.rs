use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sqlnode::artifacts::{self, LABELS_FILE, SKIPPED_FILE};
use sqlnode::experiment::{self, label_record, SkippedRecord};
use sqlnode::jsonl::{write_jsonl, write_lines, LABELS_FORMAT, PREDICTIONS_FORMAT, SKIPPED_FORMAT};
use sqlnode::{load_dataset, load_schema, run_experiment, Dataset, DatasetRecord, SchemaStore, SplitSpec};
use sqlnode_core::ast::{parse_sql, Dialect};
use sqlnode_core::features::{FeatureManifest, QueryFeaturizer};
use sqlnode_core::gbdt::GbdtConfig;
use sqlnode_core::label::cases::{run_case, LABELING_CASES};

#[derive(Parser)]
#[command(name = "sqlnode", version, about = "Node-level error labels and predictions for generated SQL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Label the nodes of generated queries against their gold queries.
    Label(LabelArgs),
    /// Label and featurize a dataset.
    Featurize(DataArgs),
    /// Train a model and write predictions and a report.
    Train(TrainArgs),
    /// Annotate one generated query with per-node error probabilities.
    Predict(PredictArgs),
    /// Per-node-kind report from a prediction dump.
    Eval(EvalArgs),
    /// Run the built-in labeling cases.
    CorpusTest(CorpusArgs),
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long, requires = "gold", conflicts_with = "dataset")]
    gen: Option<String>,
    #[arg(long, requires = "gen")]
    gold: Option<String>,
    #[arg(long, required_unless_present = "gen")]
    dataset: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Disable the final rescue pass.
    #[arg(long)]
    no_rescue: bool,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Directory holding one `<db_id>.json` schema file per database.
    #[arg(long)]
    schemas: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// `within:<fraction>[:<seed>]` or `cross:<db>[,<db>...]`.
    #[arg(long, default_value = "within:0.8")]
    split: SplitSpec,
    /// Overrides the split seed and the model config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file with model hyperparameters.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Schema file of the query's database.
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    sql: String,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, default_value = "out/predictions.jsonl")]
    predictions: PathBuf,
    /// Print the table as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CorpusArgs {
    /// Also run every case with the rescue pass disabled.
    #[arg(long)]
    ablation: bool,
}

enum Failure {
    Validation(anyhow::Error),
    Io(anyhow::Error),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.into())
    }
}

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Validation(e.into())
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Label(a) => label(a),
        Command::Featurize(a) => featurize(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::CorpusTest(a) => corpus_test(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_dataset(path: &Path) -> Result<Dataset, Failure> {
    let ds = load_dataset(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::Io)?;
    for m in &ds.malformed {
        eprintln!("{}: skipped {m}", path.display());
    }
    Ok(ds)
}

fn schema_store(dir: &Path, ds: &Dataset) -> Result<SchemaStore, Failure> {
    if !dir.is_dir() {
        return Err(Failure::Io(anyhow!("schema directory {} not found", dir.display())));
    }
    Ok(SchemaStore::load(dir, ds.records.iter().map(|r| r.db_id.as_str())))
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(Failure::Io)
}

fn write_stdout<T: Serialize>(format: &str, records: &[T]) -> Outcome {
    let mut out = io::stdout().lock();
    write_lines(&mut out, format, (), records)?;
    out.flush()?;
    Ok(())
}

fn label(args: LabelArgs) -> Outcome {
    let rescue = !args.no_rescue;
    if let (Some(gen), Some(gold)) = (args.gen, args.gold) {
        let record = DatasetRecord {
            query_id: "cli".into(),
            db_id: String::new(),
            question: None,
            generated_sql: gen,
            gold_sql: gold,
            token_logprobs: None,
        };
        let nodes = label_record(&record, rescue).map_err(|s| invalid(anyhow!("{:?}: {}", s.stage, s.reason)))?;
        return write_stdout(LABELS_FORMAT, &nodes);
    }
    let path = args.dataset.expect("clap requires --dataset without --gen");
    let ds = read_dataset(&path)?;
    let mut labels = Vec::new();
    let mut skipped = Vec::new();
    for r in &ds.records {
        match label_record(r, rescue) {
            Ok(nodes) => labels.extend(nodes),
            Err(s) => skipped.push(s),
        }
    }
    skipped.extend(ds.malformed.iter().map(|m| SkippedRecord {
        query_id: String::new(),
        line: Some(m.line),
        stage: experiment::SkipStage::Load,
        reason: m.reason.clone(),
    }));
    create_dir(&args.out)?;
    artifacts::write_labels(&args.out.join(LABELS_FILE), &labels)?;
    write_jsonl(&args.out.join(SKIPPED_FILE), SKIPPED_FORMAT, (), &skipped)?;
    eprintln!(
        "{} records: {} labeled, {} skipped; {} nodes, {} errors",
        ds.records.len() + ds.malformed.len(),
        ds.records.len() + ds.malformed.len() - skipped.len(),
        skipped.len(),
        labels.len(),
        labels.iter().filter(|n| n.label == 1).count()
    );
    Ok(())
}

fn featurize(args: DataArgs) -> Outcome {
    let ds = read_dataset(&args.dataset)?;
    let store = schema_store(&args.schemas, &ds)?;
    let prepared = experiment::prepare(&ds, &store, true);
    artifacts::write_prepared(&args.out, &prepared)?;
    eprintln!(
        "{} records: {} labeled, {} skipped; {} nodes x {} features",
        prepared.records_in,
        prepared.records_labeled,
        prepared.records_skipped(),
        prepared.nodes.len(),
        FeatureManifest::current().len()
    );
    if prepared.records_labeled == 0 {
        return Err(invalid(anyhow!("no usable records")));
    }
    Ok(())
}

fn train(args: TrainArgs) -> Outcome {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::Io)?;
            serde_json::from_str::<GbdtConfig>(&text).with_context(|| format!("parsing {}", path.display())).map_err(invalid)?
        }
        None => GbdtConfig::default(),
    };
    let mut split = args.split;
    if let Some(seed) = args.seed {
        config.seed = seed;
        split = split.with_seed(seed);
    }
    config.validate().map_err(invalid)?;
    let ds = read_dataset(&args.data.dataset)?;
    let store = schema_store(&args.data.schemas, &ds)?;
    let exp = run_experiment(&ds, &store, &split, &config).map_err(invalid)?;
    artifacts::write_experiment(&args.data.out, &exp)?;
    print!("{}", exp.report.render());
    Ok(())
}

#[derive(Serialize)]
struct NodeProbability<'a> {
    node_id: usize,
    kind: sqlnode_core::ast::NodeKind,
    content: Option<&'a str>,
    span: sqlnode_core::ast::Span,
    text: &'a str,
    probability: f64,
}

fn predict(args: PredictArgs) -> Outcome {
    let model = artifacts::read_model(&args.model)?;
    let schema = load_schema(&args.schema).map_err(|e| match e {
        sqlnode::schema_file::SchemaFormatError::Io { .. } => Failure::Io(e.into()),
        _ => invalid(e),
    })?;
    let tree = parse_sql(&args.sql, Dialect::Sqlite).map_err(invalid)?;
    let manifest = FeatureManifest::current();
    model.check_manifest(manifest.hash).map_err(invalid)?;
    let featurizer = QueryFeaturizer::new(&args.sql, &tree, &schema);
    let mut rows = Vec::new();
    for (node, features) in tree.preorder().into_iter().zip(featurizer.featurize_all()) {
        rows.push(NodeProbability {
            node_id: node.id,
            kind: node.kind,
            content: node.content(),
            span: node.span,
            text: &args.sql[node.span.start..node.span.end],
            probability: model.predict_proba(manifest.hash, &features).map_err(invalid)?,
        });
    }
    write_stdout(PREDICTIONS_FORMAT, &rows)
}

fn eval(args: EvalArgs) -> Outcome {
    let predictions = artifacts::read_predictions(&args.predictions).map_err(|e| match e.kind() {
        io::ErrorKind::InvalidData => invalid(e),
        _ => Failure::Io(e.into()),
    })?;
    let table = experiment::evaluate(&predictions);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&table).map_err(invalid)?);
    } else {
        print!("{}", table.render());
    }
    Ok(())
}

fn corpus_test(args: CorpusArgs) -> Outcome {
    let mut failures = 0;
    for case in &LABELING_CASES {
        let with = run_case(case, true).map_err(invalid)?;
        failures += usize::from(!with.passes());
        let mut line = format!("Ex. {:>2}  {:<4}", case.number, if with.passes() { "pass" } else { "FAIL" });
        if args.ablation {
            let without = run_case(case, false).map_err(invalid)?;
            line.push_str(&format!("  no-rescue {:<4}", if without.passes() { "pass" } else { "FAIL" }));
        }
        line.push_str(&format!("  {}  [{}]", case.title, with.blamed.join(", ")));
        println!("{line}");
    }
    if failures > 0 {
        return Err(invalid(anyhow!("{failures} of {} cases failed", LABELING_CASES.len())));
    }
    Ok(())
}
